"""Linear read-out of gender (LDA) and yaw (pseudo-inverse regression).

Cross-validation holds out whole identities, and permutation tests shuffle
every unit independently to build the null distribution.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from src.core.errors import ConfigError, DegenerateInputError
from src.ingestion.dataset import AttributeTable, EmbeddingSet
from src.processing.numerics import pseudo_inverse
from src.retrieval.subspace import SubspacePlan
from src.utils import make_rng

logger = logging.getLogger(__name__)

TASKS = ("gender", "viewpoint")
PRIOR_MODES = ("empirical", "equal")
RIDGE_SCALE = 1e-6
_SINGULAR_COND = 1e12

Matrix = Union[np.ndarray, EmbeddingSet]


@dataclass(frozen=True, eq=False)
class LdaModel:
    """Two-class linear discriminant: class_labels[1] iff x.w - threshold > 0."""

    weight: np.ndarray
    threshold: float
    class_labels: Tuple[str, str]
    ridge: float = 0.0

    def decision(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weight - self.threshold

    def predict(self, X: np.ndarray) -> np.ndarray:
        labels = np.array(self.class_labels, dtype=object)
        return labels[(self.decision(X) > 0).astype(int)]


@dataclass(frozen=True, eq=False)
class RegressionModel:
    """Linear model y = X.w + bias."""

    weight: np.ndarray
    bias: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weight + self.bias


@dataclass(frozen=True, eq=False)
class CvFold:
    """Identities held out together with their train/test row indices."""

    held_out_identities: frozenset
    train_index: np.ndarray = field(repr=False)
    test_index: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class DecodeResult:
    """Pooled cross-validated metric and the per-image predictions."""

    task: str
    metric: float
    predictions: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class PermutationResult:
    """Observed statistic, add-one p-value and the null distribution."""

    observed: float
    p_value: float
    null: np.ndarray = field(repr=False)
    higher_is_better: bool = True

    @property
    def overlap(self) -> bool:
        """True if any null statistic reaches the observed value."""
        if self.higher_is_better:
            return bool((self.null >= self.observed).any())
        return bool((self.null <= self.observed).any())


def _as_matrix(data: Matrix) -> np.ndarray:
    if isinstance(data, EmbeddingSet):
        return data.descriptors
    matrix = np.asarray(data, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    return matrix


def fit_lda(X: np.ndarray, labels: Sequence, priors: str = "empirical") -> LdaModel:
    """Fisher LDA with a pooled within-class covariance.

    weight = S^-1 (mu_1 - mu_0), S = S_w / (N - 2). The threshold is the
    projected midpoint of the class means shifted by log(pi_1 / pi_0) for
    empirical priors. A ridge of 1e-6 * trace(S_w) / K is added to a singular
    S_w.

    Raises:
        DegenerateInputError: If only one class is present
    """
    if priors not in PRIOR_MODES:
        raise ConfigError(f"Unknown LDA prior mode {priors!r}")
    x = _as_matrix(X)
    y = np.asarray(labels, dtype=object)
    classes = sorted(pd.unique(y))
    if len(classes) < 2:
        raise DegenerateInputError(f"LDA needs two classes, got {classes}")
    if len(classes) > 2:
        raise ValueError(f"LDA here is two-class, got {len(classes)} classes")

    n, k = x.shape
    mask1 = y == classes[1]
    x0, x1 = x[~mask1], x[mask1]
    mu0, mu1 = x0.mean(axis=0), x1.mean(axis=0)
    d0, d1 = x0 - mu0, x1 - mu1
    scatter = d0.T @ d0 + d1.T @ d1

    ridge = 0.0
    trace = float(np.trace(scatter))
    with np.errstate(divide="ignore", invalid="ignore"):
        condition = np.linalg.cond(scatter)
    if trace == 0.0 or not condition <= _SINGULAR_COND:
        ridge = RIDGE_SCALE * trace / k if trace > 0 else RIDGE_SCALE
        scatter = scatter + ridge * np.eye(k)
        logger.debug(f"Singular within-class scatter; ridge {ridge:.3g} added")

    covariance = scatter / max(n - 2, 1)
    weight = np.linalg.solve(covariance, mu1 - mu0)
    threshold = float(weight @ (mu0 + mu1) / 2.0)
    if priors == "empirical":
        threshold -= math.log(x1.shape[0] / x0.shape[0])
    return LdaModel(weight=weight, threshold=threshold,
                    class_labels=(str(classes[0]), str(classes[1])), ridge=ridge)


def fit_regression(X: np.ndarray, y: Sequence[float]) -> RegressionModel:
    """Minimum-norm least squares with a bias column, via the pseudo-inverse."""
    x = _as_matrix(X)
    target = np.asarray(y, dtype=np.float64)
    augmented = np.hstack([x, np.ones((x.shape[0], 1))])
    coef = pseudo_inverse(augmented) @ target
    return RegressionModel(weight=coef[:-1], bias=float(coef[-1]))


def make_identity_folds(attrs: AttributeTable, held_out_count: int, seed: int) -> List[CvFold]:
    """Shuffle identities once and hold out consecutive blocks of them.

    Raises:
        ConfigError: If held_out_count <= 0 or not below the identity count
    """
    if held_out_count <= 0:
        raise ConfigError(f"held_out_count must be positive, got {held_out_count}")
    identities = attrs.identities
    unique = np.array(sorted(pd.unique(identities)), dtype=object)
    if held_out_count >= unique.size:
        raise ConfigError(f"held_out_count={held_out_count} must be below the {unique.size} identities")

    order = unique[make_rng(seed).permutation(unique.size)]
    folds = []
    for start in range(0, order.size, held_out_count):
        block = frozenset(order[start:start + held_out_count])
        in_block = np.fromiter((i in block for i in identities), dtype=bool, count=identities.size)
        folds.append(CvFold(held_out_identities=block,
                            train_index=np.flatnonzero(~in_block),
                            test_index=np.flatnonzero(in_block)))
    logger.info(f"{len(folds)} identity folds of up to {held_out_count} identities")
    return folds


def _check_no_leak(fold: CvFold, identities: np.ndarray) -> None:
    train_ids = set(identities[fold.train_index])
    assert not (train_ids & set(identities[fold.test_index])), "test identity leaked into training"


def predict_gender_cv(data: Matrix, attrs: AttributeTable, folds: Sequence[CvFold],
                      priors: str = "empirical") -> DecodeResult:
    """Per-fold LDA; returns pooled accuracy and every image's prediction.

    Raises:
        DegenerateInputError: If a fold's training images hold one gender only
    """
    x = _as_matrix(data)
    genders = attrs.genders
    identities = attrs.identities
    predictions = np.empty(x.shape[0], dtype=object)
    for fold in folds:
        _check_no_leak(fold, identities)
        model = fit_lda(x[fold.train_index], genders[fold.train_index], priors=priors)
        predictions[fold.test_index] = model.predict(x[fold.test_index])
    accuracy = float(np.mean(predictions == genders))
    return DecodeResult(task="gender", metric=accuracy, predictions=predictions)


def predict_viewpoint_cv(data: Matrix, attrs: AttributeTable, folds: Sequence[CvFold]) -> DecodeResult:
    """Per-fold yaw regression; returns pooled mean absolute error in degrees."""
    x = _as_matrix(data)
    yaws = attrs.yaws
    identities = attrs.identities
    predictions = np.empty(x.shape[0], dtype=np.float64)
    for fold in folds:
        _check_no_leak(fold, identities)
        model = fit_regression(x[fold.train_index], yaws[fold.train_index])
        predictions[fold.test_index] = model.predict(x[fold.test_index])
    mae = float(np.mean(np.abs(predictions - yaws)))
    return DecodeResult(task="viewpoint", metric=mae, predictions=predictions)


def predict_cv(data: Matrix, attrs: AttributeTable, folds: Sequence[CvFold], task: str,
               priors: str = "empirical") -> DecodeResult:
    """Dispatch to the gender or viewpoint decoder."""
    if task == "gender":
        return predict_gender_cv(data, attrs, folds, priors=priors)
    if task == "viewpoint":
        return predict_viewpoint_cv(data, attrs, folds)
    raise ConfigError(f"Unknown decoding task {task!r}; expected one of {TASKS}")


def chance_level(attrs: AttributeTable, folds: Sequence[CvFold], task: str) -> float:
    """Cross-validated score of a decoder that ignores the descriptors.

    Gender: majority training class. Viewpoint: mean training yaw.
    """
    if task == "gender":
        genders = attrs.genders
        predictions = np.empty(len(genders), dtype=object)
        for fold in folds:
            counts = pd.Series(genders[fold.train_index]).value_counts()
            majority = sorted(counts[counts == counts.max()].index)[0]
            predictions[fold.test_index] = majority
        return float(np.mean(predictions == genders))
    if task == "viewpoint":
        yaws = attrs.yaws
        predictions = np.empty(len(yaws))
        for fold in folds:
            predictions[fold.test_index] = yaws[fold.train_index].mean()
        return float(np.mean(np.abs(predictions - yaws)))
    raise ConfigError(f"Unknown decoding task {task!r}; expected one of {TASKS}")


def permutation_test(predict_fn: Callable[[np.ndarray], float], data: Matrix, n_perm: int,
                     seed: int, higher_is_better: bool = True, n_jobs: int = 1) -> PermutationResult:
    """Compare ``predict_fn(X)`` against a null where each unit column is shuffled.

    Permutation ``i`` draws from the stream ``(seed, i)``. The p-value is
    (1 + #{null >= observed}) / (1 + n_perm) for accuracy-type statistics
    and uses <= when ``higher_is_better`` is False.

    Raises:
        ConfigError: If n_perm < 1
    """
    if n_perm < 1:
        raise ConfigError(f"n_perm must be >= 1, got {n_perm}")
    x = _as_matrix(data)
    observed = float(predict_fn(x))

    def _one(index: int) -> float:
        shuffled = make_rng(seed, index).permuted(x, axis=0)
        return float(predict_fn(shuffled))

    null = np.array(Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_one)(i) for i in tqdm(range(n_perm), desc="permutations", disable=None)
    ))
    if higher_is_better:
        extreme = int((null >= observed).sum())
    else:
        extreme = int((null <= observed).sum())
    p_value = (1 + extreme) / (1 + n_perm)
    logger.info(f"Permutation test: observed={observed:.4f}, p={p_value:.4g} ({n_perm} permutations)")
    return PermutationResult(observed=observed, p_value=p_value, null=null,
                             higher_is_better=higher_is_better)


def ablation_decode(data: Matrix, attrs: AttributeTable, folds: Sequence[CvFold],
                    plan: SubspacePlan, task: str, priors: str = "empirical",
                    n_jobs: int = 1) -> pd.DataFrame:
    """Cross-validated gender accuracy or yaw MAE in every subspace of ``plan``."""
    x = _as_matrix(data)
    if plan.dim != x.shape[1]:
        raise ConfigError(f"Plan was drawn for D={plan.dim}, data has D={x.shape[1]}")

    def _one(size: int, replicate: int, indices: Tuple[int, ...]) -> dict:
        result = predict_cv(x[:, list(indices)], attrs, folds, task, priors=priors)
        return {"size": size, "replicate": replicate, "metric": result.metric}

    rows = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_one)(size, rep, idx)
        for size, rep, idx in tqdm(plan, total=len(plan), desc=f"decode {task}", disable=None)
    )
    table = pd.DataFrame(rows, columns=["size", "replicate", "metric"])
    table.insert(0, "task", task)
    return table


__all__ = [
    'TASKS', 'LdaModel', 'RegressionModel', 'CvFold', 'DecodeResult', 'PermutationResult',
    'fit_lda', 'fit_regression', 'make_identity_folds', 'predict_gender_cv',
    'predict_viewpoint_cv', 'predict_cv', 'chance_level', 'permutation_test', 'ablation_decode'
]
