"""Identity verification: gallery split, cross-pair cosine scoring, ROC AUC."""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.stats import rankdata
from tqdm import tqdm

from src.core.errors import ConfigError, DataError, DegenerateInputError
from src.ingestion.dataset import AttributeTable, EmbeddingSet
from src.retrieval.subspace import SubspacePlan
from src.utils import make_rng

logger = logging.getLogger(__name__)

ZERO_NORM_POLICIES = ("zero", "error")
DEFAULT_TILE = 1024


@dataclass(frozen=True)
class VerificationSplit:
    """Disjoint galleries A and B of image ids."""

    set_a: Tuple[str, ...]
    set_b: Tuple[str, ...]
    seed: int
    fraction: float = 0.5

    @property
    def comparisons(self) -> int:
        return len(self.set_a) * len(self.set_b)


@dataclass(frozen=True, eq=False)
class ScoreSet:
    """Genuine (same identity) and impostor similarity scores."""

    genuine: np.ndarray
    impostor: np.ndarray
    zero_norm_pairs: int = 0

    @property
    def genuine_count(self) -> int:
        return int(self.genuine.size)

    @property
    def impostor_count(self) -> int:
        return int(self.impostor.size)

    @property
    def total(self) -> int:
        return self.genuine_count + self.impostor_count


def make_split(attrs: AttributeTable, fraction: float, seed: int) -> VerificationSplit:
    """Assign every image independently to A (probability ``fraction``) or B.

    Raises:
        ConfigError: If fraction is not in (0, 1)
        DataError: If either side ends up empty
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"Split fraction must be in (0, 1), got {fraction}")
    ids = attrs.image_ids
    to_a = make_rng(seed).random(len(ids)) < fraction
    set_a = tuple(i for i, a in zip(ids, to_a) if a)
    set_b = tuple(i for i, a in zip(ids, to_a) if not a)
    if not set_a or not set_b:
        raise DataError(f"Split with fraction={fraction}, seed={seed} left one gallery empty")
    logger.info(f"Verification split: |A|={len(set_a)}, |B|={len(set_b)}, "
                f"{len(set_a) * len(set_b):,} comparisons")
    return VerificationSplit(set_a=set_a, set_b=set_b, seed=int(seed), fraction=float(fraction))


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    """Cosine similarity of two non-zero vectors.

    Raises:
        DegenerateInputError: If either vector is zero
    """
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cosine: zero vector")
    return max(-1.0, min(1.0, float(a @ b) / (na * nb)))


def _zero_rows(matrix: np.ndarray, policy: str) -> np.ndarray:
    zero = np.linalg.norm(matrix, axis=1) == 0.0
    if zero.any() and policy == "error":
        raise DegenerateInputError(f"{int(zero.sum())} zero-norm descriptors in this subspace")
    return zero


def _unit_rows(matrix: np.ndarray, policy: str) -> Tuple[np.ndarray, np.ndarray]:
    """L2-normalize rows; zero rows stay zero. Returns (rows, zero mask)."""
    zero = _zero_rows(matrix, policy)
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(zero, 1.0, norms)
    return matrix / safe[:, None], zero


def _full_space_units(xa: np.ndarray, xb: np.ndarray,
                      policy: str) -> Tuple[np.ndarray, np.ndarray]:
    # unit length in the full space, no rescaling after unit deletion
    a, _ = _unit_rows(np.asarray(xa, dtype=np.float64), policy)
    b, _ = _unit_rows(np.asarray(xb, dtype=np.float64), policy)
    return a, b


def _score_tile(block: np.ndarray, gallery: np.ndarray, codes_block: np.ndarray,
                codes_gallery: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.clip(block @ gallery.T, -1.0, 1.0)
    same = codes_block[:, None] == codes_gallery[None, :]
    return scores[same], scores[~same]


def score_matrices(xa: np.ndarray, xb: np.ndarray, codes_a: np.ndarray, codes_b: np.ndarray,
                   renormalize: bool = True, zero_norm_policy: str = "zero",
                   tile_size: int = DEFAULT_TILE, n_jobs: int = 1) -> ScoreSet:
    """Score every row of ``xa`` against every row of ``xb``.

    With ``renormalize`` the scores are cosines in the given space; without,
    raw dot products (inputs are expected to be normalized already).
    Rows that are zero in this space score 0 and are counted either way.
    Tiles of ``tile_size`` A-rows run in a thread pool and are gathered in
    tile order, so the output does not depend on ``n_jobs``.
    """
    if zero_norm_policy not in ZERO_NORM_POLICIES:
        raise ConfigError(f"Unknown zero-norm policy {zero_norm_policy!r}")
    a = np.asarray(xa, dtype=np.float64)
    b = np.asarray(xb, dtype=np.float64)
    if renormalize:
        a, zero_a = _unit_rows(a, zero_norm_policy)
        b, zero_b = _unit_rows(b, zero_norm_policy)
    else:
        zero_a = _zero_rows(a, zero_norm_policy)
        zero_b = _zero_rows(b, zero_norm_policy)
    za, zb = int(zero_a.sum()), int(zero_b.sum())
    zero_pairs = za * b.shape[0] + zb * a.shape[0] - za * zb
    if zero_pairs:
        logger.warning(f"{za + zb} zero-norm descriptors; {zero_pairs} pairs scored as 0")

    starts = range(0, a.shape[0], max(1, int(tile_size)))
    tiles = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_score_tile)(a[s:s + tile_size], b, codes_a[s:s + tile_size], codes_b)
        for s in starts
    )
    genuine = np.concatenate([t[0] for t in tiles]) if tiles else np.empty(0)
    impostor = np.concatenate([t[1] for t in tiles]) if tiles else np.empty(0)
    return ScoreSet(genuine=genuine, impostor=impostor, zero_norm_pairs=zero_pairs)


def _split_arrays(emb: EmbeddingSet, attrs: AttributeTable, split: VerificationSplit):
    xa = emb.rows(split.set_a)
    xb = emb.rows(split.set_b)
    identities = attrs.select(split.set_a + split.set_b).identities
    codes, _ = pd.factorize(identities)
    return xa, xb, codes[: len(split.set_a)], codes[len(split.set_a):]


def score_pairs(emb: EmbeddingSet, attrs: AttributeTable, split: VerificationSplit,
                renormalize: bool = True, zero_norm_policy: str = "zero",
                tile_size: int = DEFAULT_TILE, n_jobs: int = 1) -> ScoreSet:
    """Exhaustive |A| x |B| cosine scoring; genuine iff identities match.

    With ``renormalize=False`` descriptors are L2-normalized once and scored
    by dot product, which in the full space gives the same cosines.

    Raises:
        DataError: If a split id is missing from ``emb`` or ``attrs``
        DegenerateInputError: Zero-norm descriptor under the ``"error"`` policy
    """
    xa, xb, codes_a, codes_b = _split_arrays(emb, attrs, split)
    if not renormalize:
        xa, xb = _full_space_units(xa, xb, zero_norm_policy)
    scores = score_matrices(xa, xb, codes_a, codes_b, renormalize=renormalize,
                            zero_norm_policy=zero_norm_policy, tile_size=tile_size, n_jobs=n_jobs)
    logger.debug(f"Scored {scores.total:,} pairs: {scores.genuine_count:,} genuine")
    return scores


def auc(scores: ScoreSet) -> float:
    """P(genuine > impostor) with ties counted 1/2, by the Mann-Whitney rank sum.

    Raises:
        DegenerateInputError: If either class is empty
    """
    n_pos = scores.genuine_count
    n_neg = scores.impostor_count
    if n_pos == 0 or n_neg == 0:
        raise DegenerateInputError(f"AUC needs both classes (genuine={n_pos}, impostor={n_neg})")
    ranks = rankdata(np.concatenate([scores.genuine, scores.impostor]), method="average")
    u_statistic = float(ranks[:n_pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return u_statistic / (float(n_pos) * float(n_neg))


def ablation_curve(emb: EmbeddingSet, attrs: AttributeTable, split: VerificationSplit,
                   plan: SubspacePlan, renormalize: bool = True, zero_norm_policy: str = "zero",
                   tile_size: int = DEFAULT_TILE, n_jobs: int = 1) -> pd.DataFrame:
    """Verification AUC in every subspace of ``plan``.

    Returns:
        DataFrame with columns size, replicate, auc, zero_norm_pairs in plan order
    """
    if plan.dim != emb.n_units:
        raise ConfigError(f"Plan was drawn for D={plan.dim}, embeddings have D={emb.n_units}")
    xa, xb, codes_a, codes_b = _split_arrays(emb, attrs, split)
    if not renormalize:
        xa, xb = _full_space_units(xa, xb, zero_norm_policy)

    rows = []
    for size, replicate, indices in tqdm(plan, total=len(plan), desc="ablation", disable=None):
        columns = list(indices)
        scores = score_matrices(xa[:, columns], xb[:, columns], codes_a, codes_b,
                                renormalize=renormalize, zero_norm_policy=zero_norm_policy,
                                tile_size=tile_size, n_jobs=n_jobs)
        rows.append({
            "size": size,
            "replicate": replicate,
            "auc": auc(scores),
            "zero_norm_pairs": scores.zero_norm_pairs,
        })

    table = pd.DataFrame(rows, columns=["size", "replicate", "auc", "zero_norm_pairs"])
    logger.info(f"Ablation curve: {len(table)} subspaces over sizes {list(plan.sizes)}")
    return table


def summarize_ablation(table: pd.DataFrame) -> pd.DataFrame:
    """Per-size mean, standard deviation, min and max of the AUC."""
    grouped = table.groupby("size", sort=False)["auc"]
    summary = pd.DataFrame({
        "mean_auc": grouped.mean(),
        "std_auc": grouped.std(ddof=0),
        "min_auc": grouped.min(),
        "max_auc": grouped.max(),
        "replicates": grouped.size(),
    }).reset_index()
    return summary


__all__: List[str] = [
    'VerificationSplit', 'ScoreSet', 'make_split', 'cosine', 'score_matrices',
    'score_pairs', 'auc', 'ablation_curve', 'summarize_ablation'
]
