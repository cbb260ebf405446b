"""Tests for verification scoring and AUC."""
import itertools

import numpy as np
import pytest

from src.core.errors import ConfigError, DegenerateInputError
from src.ingestion.dataset import EmbeddingSet, make_attributes
from src.retrieval.subspace import make_plan
from src.retrieval.verification import (
    ScoreSet, VerificationSplit, ablation_curve, auc, cosine, make_split,
    score_matrices, score_pairs, summarize_ablation
)


def _scores(genuine, impostor):
    return ScoreSet(genuine=np.asarray(genuine, dtype=float), impostor=np.asarray(impostor, dtype=float))


def test_cosine_examples():
    """Orthogonal, parallel and zero-vector cases."""
    assert cosine([1, 0], [0, 1]) == 0.0
    assert cosine([1, 1], [2, 2]) == pytest.approx(1.0)
    assert -1.0 <= cosine([1, 2, 3], [-1, -2, -3.0000001]) <= 1.0
    with pytest.raises(DegenerateInputError):
        cosine([0, 0], [1, 0])


@pytest.mark.parametrize("genuine,impostor,expected", [
    ([0.9, 0.8], [0.1, 0.2, 0.3], 1.0),
    ([0.5], [0.5], 0.5),
    ([0.9, 0.1], [0.5], 0.5),
    ([0.9, 0.5], [0.5, 0.1], 0.875),
    ([0.9, 0.4], [0.5, 0.1], 0.75),
])
def test_auc_examples(genuine, impostor, expected):
    """Hand-computed AUC values with ties counted as one half."""
    assert auc(_scores(genuine, impostor)) == pytest.approx(expected, abs=1e-12)


def test_auc_matches_brute_force():
    """Rank-sum AUC equals the pairwise count over random tied sets."""
    for seed in range(200):
        gen = np.random.default_rng(seed)
        genuine = gen.integers(0, 6, size=gen.integers(1, 12)) / 5.0
        impostor = gen.integers(0, 6, size=gen.integers(1, 12)) / 5.0
        wins = sum(1.0 if g > i else 0.5 if g == i else 0.0
                   for g, i in itertools.product(genuine, impostor))
        expected = wins / (len(genuine) * len(impostor))
        assert auc(_scores(genuine, impostor)) == pytest.approx(expected, abs=1e-12)


def test_auc_invariant_to_monotone_transform(rng):
    """AUC depends only on the ordering of scores."""
    genuine = rng.normal(0.5, 0.2, 50)
    impostor = rng.normal(0.0, 0.2, 80)
    base = auc(_scores(genuine, impostor))
    assert auc(_scores(np.exp(3 * genuine), np.exp(3 * impostor))) == pytest.approx(base, abs=1e-12)


def test_auc_swap_symmetry(rng):
    """Swapping the classes gives 1 - AUC."""
    genuine = rng.normal(0.3, 0.2, 40)
    impostor = rng.normal(0.0, 0.2, 30)
    assert auc(_scores(impostor, genuine)) == pytest.approx(1.0 - auc(_scores(genuine, impostor)))


def test_auc_requires_both_classes():
    """Empty genuine or impostor sets are degenerate."""
    with pytest.raises(DegenerateInputError):
        auc(_scores([], [0.1]))
    with pytest.raises(DegenerateInputError):
        auc(_scores([0.1], []))


def test_score_counts(tiny_attributes):
    """Genuine plus impostor equals |A| x |B|."""
    emb = EmbeddingSet(np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.1, 0.9]]), list("xyzw"))
    split = VerificationSplit(set_a=("x", "z"), set_b=("y", "w"), seed=0)
    scores = score_pairs(emb, tiny_attributes, split)
    assert scores.genuine_count == 2
    assert scores.impostor_count == 2
    assert scores.total == split.comparisons
    assert auc(scores) == 1.0


def test_scoring_is_tile_and_thread_invariant(rng):
    """Tile size and thread count do not change the score arrays."""
    xa = rng.standard_normal((37, 6))
    xb = rng.standard_normal((23, 6))
    codes_a = rng.integers(0, 5, 37)
    codes_b = rng.integers(0, 5, 23)
    one = score_matrices(xa, xb, codes_a, codes_b, tile_size=1000, n_jobs=1)
    threaded = score_matrices(xa, xb, codes_a, codes_b, tile_size=1000, n_jobs=2)
    assert one.genuine.tobytes() == threaded.genuine.tobytes()
    tiled = score_matrices(xa, xb, codes_a, codes_b, tile_size=4, n_jobs=2)
    np.testing.assert_allclose(tiled.genuine, one.genuine, atol=1e-12)
    np.testing.assert_allclose(tiled.impostor, one.impostor, atol=1e-12)


def test_zero_norm_policy(rng):
    """Zero rows score 0 under 'zero' and raise under 'error'."""
    xa = np.array([[0.0, 0.0], [1.0, 0.0]])
    xb = np.array([[1.0, 1.0], [0.0, 1.0]])
    codes = np.array([0, 1])
    scores = score_matrices(xa, xb, codes, codes, zero_norm_policy="zero")
    assert scores.zero_norm_pairs == 2
    assert 0.0 in scores.genuine
    with pytest.raises(DegenerateInputError):
        score_matrices(xa, xb, codes, codes, zero_norm_policy="error")
    with pytest.raises(ConfigError):
        score_matrices(xa, xb, codes, codes, zero_norm_policy="skip")


def test_split_deterministic_and_covering(small_dataset):
    """Same seed gives the same split; A and B partition the images."""
    attrs = small_dataset.attributes
    first = make_split(attrs, 0.5, seed=4)
    second = make_split(attrs, 0.5, seed=4)
    assert first == second
    assert set(first.set_a).isdisjoint(first.set_b)
    assert set(first.set_a) | set(first.set_b) == set(attrs.image_ids)
    assert make_split(attrs, 0.5, seed=5) != first


def test_split_rejects_bad_fraction(tiny_attributes):
    """Fractions outside (0, 1) are configuration errors."""
    with pytest.raises(ConfigError):
        make_split(tiny_attributes, 1.0, seed=0)


def test_ablation_curve_on_planted_identity(small_dataset):
    """Full-space AUC is high and the curve has one row per plan entry."""
    emb, attrs = small_dataset.embeddings, small_dataset.attributes
    split = make_split(attrs, 0.5, seed=2)
    plan = make_plan(emb.n_units, [16, 4, 1], 3, seed=2)
    table = ablation_curve(emb, attrs, split, plan)
    assert list(table.columns) == ["size", "replicate", "auc", "zero_norm_pairs"]
    assert len(table) == 9
    full = table.loc[table["size"] == 16, "auc"]
    assert (full > 0.8).all()
    assert full.nunique() == 1
    assert table["auc"].between(0.0, 1.0).all()

    summary = summarize_ablation(table)
    assert list(summary["size"]) == [16, 4, 1]
    assert summary["replicates"].tolist() == [3, 3, 3]
    assert summary.loc[0, "mean_auc"] >= summary.loc[2, "mean_auc"]


def test_ablation_without_renormalization(small_dataset):
    """Full-space scores agree with and without renormalization."""
    emb, attrs = small_dataset.embeddings, small_dataset.attributes
    split = make_split(attrs, 0.5, seed=2)
    plan = make_plan(emb.n_units, [16], 1, seed=0)
    with_norm = ablation_curve(emb, attrs, split, plan, renormalize=True)
    without = ablation_curve(emb, attrs, split, plan, renormalize=False)
    assert with_norm.loc[0, "auc"] == pytest.approx(without.loc[0, "auc"], abs=1e-6)


def test_score_pairs_without_renormalization_is_cosine(small_dataset):
    """Normalizing once in the full space gives the cosines, whatever the descriptor scale."""
    emb, attrs = small_dataset.embeddings, small_dataset.attributes
    scaled = EmbeddingSet(emb.descriptors * 10.0, emb.image_ids)
    split = make_split(attrs, 0.5, seed=2)
    cosines = score_pairs(scaled, attrs, split, renormalize=True)
    dots = score_pairs(scaled, attrs, split, renormalize=False)
    np.testing.assert_allclose(dots.genuine, cosines.genuine, atol=1e-12)
    np.testing.assert_allclose(dots.impostor, cosines.impostor, atol=1e-12)
    assert auc(dots) == auc(cosines)
    assert np.abs(dots.impostor).max() < 1.0


def test_zero_rows_counted_without_renormalization():
    """Rows that vanish in a subspace are counted even when scores are raw dot products."""
    xa = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    xb = np.array([[0.6, 0.8, 0.0], [0.0, 0.6, 0.8]])
    codes = np.array([0, 1])
    scores = score_matrices(xa[:, :2], xb[:, :2], codes, codes, renormalize=False)
    assert scores.zero_norm_pairs == 2
    assert scores.genuine.tolist() == [0.0, 0.0]
    with pytest.raises(DegenerateInputError):
        score_matrices(xa[:, :2], xb[:, :2], codes, codes, renormalize=False,
                       zero_norm_policy="error")


def test_ablation_plan_dimension_mismatch(small_dataset):
    """A plan drawn for another D is rejected."""
    emb, attrs = small_dataset.embeddings, small_dataset.attributes
    split = make_split(attrs, 0.5, seed=2)
    with pytest.raises(ConfigError):
        ablation_curve(emb, attrs, split, make_plan(8, [4], 1, seed=0))


def test_single_identity_has_no_impostors():
    """All images of one identity give no impostor pairs."""
    attrs = make_attributes(["a", "b", "c", "d"], ["p"] * 4, ["M"] * 4, [0, 0, 0, 0])
    emb = EmbeddingSet(np.eye(4)[:, :3] + 0.1, list("abcd"))
    scores = score_pairs(emb, attrs, VerificationSplit(("a", "b"), ("c", "d"), seed=0))
    assert scores.impostor_count == 0
    with pytest.raises(DegenerateInputError):
        auc(scores)
