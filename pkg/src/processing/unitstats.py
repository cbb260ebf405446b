"""Per-unit ANOVA effect sizes and the cross-unit correlation distribution."""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.core.errors import DataError, DegenerateInputError
from src.ingestion.dataset import AttributeTable, EmbeddingSet
from src.processing.numerics import FTest, anova_columns

logger = logging.getLogger(__name__)

ATTRIBUTES = ("identity", "gender", "viewpoint")
DEFAULT_ALPHA = 0.05
MAX_STORED_DIM = 1024
_STREAM_BINS = 20000


@dataclass(frozen=True)
class UnitProfile:
    """ANOVA results of one unit (or PC) for each attribute analysed so far.

    A ``None`` test means the attribute was not run or the column is constant.
    """

    unit_index: int
    identity: Optional[FTest] = None
    gender: Optional[FTest] = None
    viewpoint: Optional[FTest] = None
    degenerate: bool = False

    def test(self, attribute: str) -> Optional[FTest]:
        if attribute not in ATTRIBUTES:
            raise ValueError(f"Unknown attribute: {attribute!r}")
        return getattr(self, attribute)


@dataclass(frozen=True, eq=False)
class CorrelationProfile:
    """Pairwise Pearson correlations between (non-constant) units."""

    count: int
    median: float
    abs_p95: float
    values: Optional[np.ndarray] = field(default=None, repr=False)
    constant_units: tuple = ()
    histogram: Optional[np.ndarray] = field(default=None, repr=False)
    bin_edges: Optional[np.ndarray] = field(default=None, repr=False)


def bonferroni_threshold(alpha: float, count: int) -> float:
    """Per-test p threshold alpha / count (0.05 / 512 = 9.77e-5)."""
    if count < 1:
        raise ValueError(f"Bonferroni count must be >= 1, got {count}")
    return alpha / count


def anova_profiles(matrix: np.ndarray, attrs: AttributeTable, attribute: str,
                   pooled_error: bool = True) -> List[UnitProfile]:
    """One ANOVA per column of ``matrix`` grouped by ``attribute``."""
    if attribute not in ATTRIBUTES:
        raise ValueError(f"Unknown attribute: {attribute!r}")
    labels = attrs.labels(attribute)
    tests = anova_columns(matrix, labels, pooled_error=pooled_error)
    profiles = []
    for j, test in enumerate(tests):
        profiles.append(UnitProfile(unit_index=j, degenerate=test is None, **{attribute: test}))
    degenerate = [p.unit_index for p in profiles if p.degenerate]
    if degenerate:
        logger.warning(f"{len(degenerate)} constant columns excluded from {attribute} ANOVA: {degenerate[:20]}")
    return profiles


def unit_anova(emb: EmbeddingSet, attrs: AttributeTable, attribute: str,
               pooled_error: bool = True) -> List[UnitProfile]:
    """Per-unit one-way ANOVA for identity, gender or binned viewpoint.

    ``attrs`` must be row-aligned with ``emb`` (see ``AttributeTable.align``).
    """
    _check_aligned(emb, attrs)
    profiles = anova_profiles(emb.descriptors, attrs, attribute, pooled_error=pooled_error)
    logger.info(f"Unit ANOVA ({attribute}): {len(profiles)} units")
    return profiles


def merge_profiles(*runs: Sequence[UnitProfile]) -> List[UnitProfile]:
    """Combine single-attribute runs over the same units into one profile each."""
    merged: Dict[int, UnitProfile] = {}
    for run in runs:
        for profile in run:
            current = merged.get(profile.unit_index, UnitProfile(unit_index=profile.unit_index))
            updates = {a: profile.test(a) for a in ATTRIBUTES if profile.test(a) is not None}
            merged[profile.unit_index] = replace(
                current, degenerate=current.degenerate or profile.degenerate, **updates
            )
    return [merged[k] for k in sorted(merged)]


def profile_units(emb: EmbeddingSet, attrs: AttributeTable,
                  pooled_error: bool = True) -> List[UnitProfile]:
    """Identity, gender and viewpoint ANOVAs for every unit."""
    return merge_profiles(*(unit_anova(emb, attrs, a, pooled_error) for a in ATTRIBUTES))


def significant_fraction(profiles: Sequence[UnitProfile], attribute: str,
                         alpha: float = DEFAULT_ALPHA) -> float:
    """Fraction of non-degenerate units with p below the Bonferroni threshold.

    The threshold divides ``alpha`` by the number of tested units
    (``len(profiles)``).
    """
    if not profiles:
        return 0.0
    threshold = bonferroni_threshold(alpha, len(profiles))
    tests = [p.test(attribute) for p in profiles if not p.degenerate and p.test(attribute) is not None]
    if not tests:
        return 0.0
    return sum(t.p_value < threshold for t in tests) / len(tests)


def effect_size_summary(profiles: Sequence[UnitProfile], attribute: str,
                        alpha: float = DEFAULT_ALPHA) -> Dict[str, float]:
    """Mean, min and max r^2 plus the significant fraction for one attribute."""
    r2 = np.array([p.test(attribute).r_squared for p in profiles
                   if not p.degenerate and p.test(attribute) is not None])
    return {
        "attribute": attribute,
        "units": int(r2.size),
        "mean_r2": float(r2.mean()) if r2.size else float("nan"),
        "min_r2": float(r2.min()) if r2.size else float("nan"),
        "max_r2": float(r2.max()) if r2.size else float("nan"),
        "bonferroni_threshold": bonferroni_threshold(alpha, max(1, len(profiles))),
        "significant_fraction": significant_fraction(profiles, attribute, alpha),
    }


def correlation_profile(emb: EmbeddingSet, max_stored_dim: int = MAX_STORED_DIM,
                        bins: int = 50, block: int = 256) -> CorrelationProfile:
    """Pearson correlation for every pair of non-constant units.

    Above ``max_stored_dim`` units only a fine histogram is kept, and the
    median / 95th percentile of |r| come from it.

    Raises:
        DegenerateInputError: If fewer than two units vary
    """
    data = emb.descriptors
    centered = data - data.mean(axis=0)
    norms = np.sqrt((centered ** 2).sum(axis=0))
    scale = np.abs(data).max(axis=0)
    constant = norms <= np.sqrt(data.shape[0]) * 8 * np.finfo(np.float64).eps * np.maximum(scale, 1e-300)
    constant_units = tuple(int(i) for i in np.flatnonzero(constant))
    if constant_units:
        logger.warning(f"Skipping {len(constant_units)} constant units: {list(constant_units)[:20]}")
    keep = np.flatnonzero(~constant)
    if keep.size < 2:
        raise DegenerateInputError("correlation_profile needs at least two non-constant units")

    z = centered[:, keep] / norms[keep]
    d = keep.size
    count = d * (d - 1) // 2

    if d <= max_stored_dim:
        corr = np.clip(z.T @ z, -1.0, 1.0)
        values = corr[np.triu_indices(d, k=1)]
        hist, edges = np.histogram(values, bins=bins, range=(-1.0, 1.0))
        profile = CorrelationProfile(
            count=count,
            median=float(np.median(values)),
            abs_p95=float(np.quantile(np.abs(values), 0.95)),
            values=values,
            constant_units=constant_units,
            histogram=hist,
            bin_edges=edges,
        )
    else:
        edges = np.linspace(-1.0, 1.0, _STREAM_BINS + 1)
        hist = np.zeros(_STREAM_BINS, dtype=np.int64)
        abs_hist = np.zeros(_STREAM_BINS, dtype=np.int64)
        abs_edges = np.linspace(0.0, 1.0, _STREAM_BINS + 1)
        for start in range(0, d, block):
            stop = min(d, start + block)
            corr = np.clip(z[:, start:stop].T @ z[:, start:], -1.0, 1.0)
            rows, cols = np.triu_indices(stop - start, k=1, m=d - start)
            chunk = corr[rows, cols]
            hist += np.histogram(chunk, bins=edges)[0]
            abs_hist += np.histogram(np.abs(chunk), bins=abs_edges)[0]
        profile = CorrelationProfile(
            count=count,
            median=_histogram_quantile(hist, edges, 0.5),
            abs_p95=_histogram_quantile(abs_hist, abs_edges, 0.95),
            constant_units=constant_units,
            histogram=hist,
            bin_edges=edges,
        )

    logger.info(f"Correlation profile: {count:,} unit pairs, median r={profile.median:.4f}, "
                f"95% of |r| below {profile.abs_p95:.4f}")
    return profile


def _histogram_quantile(hist: np.ndarray, edges: np.ndarray, q: float) -> float:
    cumulative = np.cumsum(hist)
    target = q * cumulative[-1]
    idx = int(np.searchsorted(cumulative, target, side="left"))
    return float(edges[idx + 1])


def _check_aligned(emb: EmbeddingSet, attrs: AttributeTable) -> None:
    if attrs.image_ids != emb.image_ids:
        raise DataError("Attribute table is not aligned with the embedding rows; call attrs.align(emb)")


__all__ = [
    'ATTRIBUTES', 'UnitProfile', 'CorrelationProfile', 'bonferroni_threshold',
    'anova_profiles', 'unit_anova', 'merge_profiles', 'profile_units',
    'significant_fraction', 'effect_size_summary', 'correlation_profile'
]
