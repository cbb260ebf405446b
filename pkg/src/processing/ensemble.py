"""Face-space (PCA) analyses of the descriptor ensemble."""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.stats import ks_2samp
from tqdm import tqdm

from src.core.errors import ConfigError, DataError, DegenerateInputError
from src.ingestion.dataset import AttributeTable, EmbeddingSet
from src.processing.decoding import CvFold, fit_lda, fit_regression, predict_cv
from src.processing.numerics import EigenBasis, eigendecompose
from src.processing.unitstats import ATTRIBUTES, UnitProfile, anova_profiles
from src.retrieval.verification import VerificationSplit, auc, score_pairs

logger = logging.getLogger(__name__)

WINDOW_TASKS = ("identity", "gender", "viewpoint")
UNASSIGNED = "none"
ASSIGNMENT_FLOOR = 1e-4


@dataclass(frozen=True, eq=False)
class FaceSpace:
    """PCA basis of the descriptors and every image's factor scores."""

    basis: EigenBasis
    scores: np.ndarray = field(repr=False)
    image_ids: Tuple[str, ...] = field(repr=False)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def nondegenerate(self) -> np.ndarray:
        """Mask of PCs with variance above rounding level."""
        values = self.basis.values
        n = self.scores.shape[0]
        tol = max(n, self.dim) * np.finfo(np.float64).eps * (values[0] if values.size else 0.0)
        return values > tol

    def rotated(self, start: int, stop: int) -> EmbeddingSet:
        """Uncentered descriptor coordinates on PCs [start, stop).

        Over all PCs this is a rotation of the descriptors, so cosines match
        the descriptor space.
        """
        offset = self.basis.mean @ self.basis.vectors[:, start:stop]
        return EmbeddingSet.derived(self.scores[:, start:stop] + offset, self.image_ids)


@dataclass(frozen=True, eq=False)
class DirectionReport:
    """Per-PC |cos| to identity templates, the gender LDA and the yaw regression."""

    identity_similarity: np.ndarray
    gender_similarity: np.ndarray
    viewpoint_similarity: np.ndarray
    flagged_identities: Tuple[str, ...] = ()

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "pc": np.arange(self.identity_similarity.size),
            "identity_similarity": self.identity_similarity,
            "gender_similarity": self.gender_similarity,
            "viewpoint_similarity": self.viewpoint_similarity,
        })


@dataclass(frozen=True, eq=False)
class UnitAlignment:
    """``similarity[u, k]`` = |cos(unit axis u, PC k)|; rows have unit norm."""

    similarity: np.ndarray = field(repr=False)

    def by_assignment(self, assignment: Sequence[str]) -> Dict[str, np.ndarray]:
        """Split every unit's row by the attribute each PC is assigned to."""
        labels = np.asarray(assignment, dtype=object)
        if labels.size != self.similarity.shape[1]:
            raise ValueError(f"Got {labels.size} PC labels for {self.similarity.shape[1]} PCs")
        return {label: self.similarity[:, labels == label]
                for label in (*ATTRIBUTES, UNASSIGNED) if (labels == label).any()}


def build_face_space(emb: EmbeddingSet) -> FaceSpace:
    """PCA of the descriptors; scores are the centered descriptors times the eigenvectors.

    Raises:
        DegenerateInputError: If there are fewer than three images
    """
    if emb.n_images <= 2:
        raise DegenerateInputError(f"Face space needs more than 2 images, got {emb.n_images}")
    basis = eigendecompose(emb.descriptors)
    scores = (emb.descriptors - basis.mean) @ basis.vectors
    logger.info(f"Face space: {basis.dim} PCs from {emb.n_images} images, "
                f"PC1 explains {basis.values[0] / max(basis.values.sum(), 1e-300):.1%}")
    return FaceSpace(basis=basis, scores=scores, image_ids=emb.image_ids)


def explained_variance_ratio(space: FaceSpace) -> np.ndarray:
    total = space.basis.values.sum()
    if total <= 0:
        return np.zeros_like(space.basis.values)
    return space.basis.values / total


def pc_anova(space: FaceSpace, attrs: AttributeTable, attribute: str,
             pooled_error: bool = True) -> List[UnitProfile]:
    """One-way ANOVA of every factor-score column; zero-variance PCs are flagged."""
    if attrs.image_ids != space.image_ids:
        raise DataError("Attribute table is not aligned with the face space rows")
    keep = space.nondegenerate()
    tested = anova_profiles(space.scores[:, keep], attrs, attribute, pooled_error=pooled_error)
    profiles = [UnitProfile(unit_index=k, degenerate=True) for k in range(space.dim)]
    for pc, profile in zip(np.flatnonzero(keep), tested):
        profiles[pc] = UnitProfile(unit_index=int(pc), degenerate=profile.degenerate,
                                   **{attribute: profile.test(attribute)})
    skipped = int((~keep).sum())
    if skipped:
        logger.warning(f"{skipped} zero-variance PCs flagged in {attribute} ANOVA")
    logger.info(f"PC ANOVA ({attribute}): {int(keep.sum())} PCs tested")
    return profiles


def _window_metric(space: FaceSpace, attrs: AttributeTable, task: str, start: int, stop: int,
                   split: Optional[VerificationSplit], folds: Optional[Sequence[CvFold]],
                   priors: str) -> float:
    if task == "identity":
        return auc(score_pairs(space.rotated(start, stop), attrs, split))
    return predict_cv(space.scores[:, start:stop], attrs, folds, task, priors=priors).metric


def sliding_window_predict(space: FaceSpace, attrs: AttributeTable, window: int, task: str,
                           split: Optional[VerificationSplit] = None,
                           folds: Optional[Sequence[CvFold]] = None, step: int = 1,
                           priors: str = "empirical", n_jobs: int = 1) -> pd.DataFrame:
    """Task metric on PC windows [s, s + window) for s = 0, step, 2*step, ...

    Identity uses verification AUC on ``split`` over the uncentered PC
    coordinates; gender and viewpoint use cross-validated decoding of the
    factor scores on ``folds``.

    Returns:
        DataFrame with columns start, stop, metric (start 0-based, stop exclusive)
    """
    if task not in WINDOW_TASKS:
        raise ConfigError(f"Unknown window task {task!r}; expected one of {WINDOW_TASKS}")
    if not 1 <= window <= space.dim:
        raise ConfigError(f"Window {window} outside [1, {space.dim}]")
    if step < 1:
        raise ConfigError(f"Window step must be >= 1, got {step}")
    if task == "identity" and split is None:
        raise ConfigError("Identity windows need a verification split")
    if task != "identity" and folds is None:
        raise ConfigError(f"{task} windows need cross-validation folds")

    starts = list(range(0, space.dim - window + 1, step))
    metrics = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_window_metric)(space, attrs, task, s, s + window, split, folds, priors)
        for s in tqdm(starts, desc=f"{task} windows", disable=None)
    )
    table = pd.DataFrame({
        "start": starts,
        "stop": [s + window for s in starts],
        "metric": metrics,
    })
    table.insert(0, "task", task)
    logger.info(f"Sliding windows ({task}): {len(starts)} windows of {window} PCs")
    return table


def _abs_cos_to_pcs(space: FaceSpace, direction: np.ndarray, name: str) -> np.ndarray:
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        raise DegenerateInputError(f"{name} direction has zero norm")
    return np.clip(np.abs(space.basis.vectors.T @ (direction / norm)), 0.0, 1.0)


def attribute_directions(space: FaceSpace, emb: EmbeddingSet, attrs: AttributeTable,
                         priors: str = "empirical") -> DirectionReport:
    """Similarity of every PC to the identity templates and attribute directions.

    Templates are per-identity mean descriptors minus the global mean; the
    identity score of a PC is the mean |cos| over templates. Gender and yaw
    directions come from LDA and regression fit on all descriptors.
    """
    if attrs.image_ids != emb.image_ids:
        raise DataError("Attribute table is not aligned with the embedding rows")
    frame = pd.DataFrame(emb.descriptors)
    templates = frame.groupby(attrs.identities, sort=True).mean()
    centered = templates.to_numpy() - space.basis.mean
    norms = np.linalg.norm(centered, axis=1)
    zero = norms <= np.finfo(np.float64).eps * max(1.0, float(np.abs(space.basis.mean).max()))
    flagged = tuple(str(i) for i in templates.index[zero])
    if flagged:
        logger.warning(f"{len(flagged)} identity templates coincide with the global mean: {list(flagged)[:10]}")
    unit_templates = centered[~zero] / norms[~zero, None]
    if unit_templates.size:
        identity_similarity = np.abs(unit_templates @ space.basis.vectors).mean(axis=0)
    else:
        identity_similarity = np.zeros(space.dim)

    gender = fit_lda(emb.descriptors, attrs.genders, priors=priors)
    viewpoint = fit_regression(emb.descriptors, attrs.yaws)
    return DirectionReport(
        identity_similarity=np.clip(identity_similarity, 0.0, 1.0),
        gender_similarity=_abs_cos_to_pcs(space, gender.weight, "gender"),
        viewpoint_similarity=_abs_cos_to_pcs(space, viewpoint.weight, "viewpoint"),
        flagged_identities=flagged,
    )


def unit_pc_alignment(space: FaceSpace) -> UnitAlignment:
    """|cos| between every unit axis and every PC: the absolute eigenvector entries."""
    return UnitAlignment(similarity=np.abs(space.basis.vectors))


def assign_pcs(profiles: Sequence[UnitProfile], floor: float = ASSIGNMENT_FLOOR) -> np.ndarray:
    """Label each PC with the attribute of largest r^2, or ``"none"`` below ``floor``."""
    labels = np.full(len(profiles), UNASSIGNED, dtype=object)
    for i, profile in enumerate(profiles):
        if profile.degenerate:
            continue
        effects = {a: profile.test(a).r_squared for a in ATTRIBUTES if profile.test(a) is not None}
        if not effects:
            continue
        best = max(effects, key=lambda a: (effects[a], -ATTRIBUTES.index(a)))
        if effects[best] >= floor:
            labels[i] = best
    return labels


def alignment_overlap(alignment: UnitAlignment, assignment: Sequence[str]) -> pd.DataFrame:
    """Per-unit two-sample KS tests between the similarity distributions of
    PCs assigned to different attributes.

    Returns:
        DataFrame with columns unit, first, second, statistic, p_value
    """
    groups = {k: v for k, v in alignment.by_assignment(assignment).items() if k != UNASSIGNED}
    rows = []
    for first, second in combinations([a for a in ATTRIBUTES if a in groups], 2):
        a, b = groups[first], groups[second]
        for unit in range(alignment.similarity.shape[0]):
            result = ks_2samp(a[unit], b[unit])
            rows.append({"unit": unit, "first": first, "second": second,
                         "statistic": float(result.statistic), "p_value": float(result.pvalue)})
    table = pd.DataFrame(rows, columns=["unit", "first", "second", "statistic", "p_value"])
    if table.empty:
        logger.warning("Fewer than two attributes have assigned PCs; no overlap tests run")
    return table


__all__ = [
    'FaceSpace', 'DirectionReport', 'UnitAlignment', 'build_face_space',
    'explained_variance_ratio', 'pc_anova', 'sliding_window_predict',
    'attribute_directions', 'unit_pc_alignment', 'assign_pcs', 'alignment_overlap'
]
