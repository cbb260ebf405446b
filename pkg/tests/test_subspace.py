"""Tests for random subspace plans and projection."""
import numpy as np
import pytest

from src.core.errors import ConfigError
from src.ingestion.dataset import EmbeddingSet
from src.retrieval.subspace import FULL_GRID_SIZES, SubspacePlan, make_plan, project


def test_full_size_plan():
    """size == D yields the full index set."""
    plan = make_plan(512, [512], 1, seed=3)
    assert plan.samples[(512, 0)] == tuple(range(512))


def test_full_grid_shape():
    """Nine sizes x 50 replicates, each sample sorted, distinct and in range."""
    plan = make_plan(512, FULL_GRID_SIZES, 50, seed=1)
    assert len(plan) == 9 * 50
    for size, _, indices in plan:
        assert len(indices) == size
        assert len(set(indices)) == size
        assert list(indices) == sorted(indices)
        assert 0 <= indices[0] and indices[-1] < 512


def test_plan_deterministic_and_json_replayable():
    """Same seed gives byte-identical plans; JSON replays the plan."""
    a = make_plan(64, [32, 8, 2], 5, seed=42)
    b = make_plan(64, [32, 8, 2], 5, seed=42)
    assert a.to_json() == b.to_json()
    assert SubspacePlan.from_json(a.to_json()) == a
    assert make_plan(64, [32, 8, 2], 5, seed=43).to_json() != a.to_json()


def test_sample_independent_of_other_sizes():
    """A (size, replicate) sample does not depend on the rest of the grid."""
    a = make_plan(100, [10], 3, seed=9)
    b = make_plan(100, [50, 10], 3, seed=9)
    assert a.samples[(10, 2)] == b.samples[(10, 2)]


def test_plan_errors():
    """Sizes outside [1, D] and replicates < 1 raise."""
    with pytest.raises(ConfigError):
        make_plan(8, [16], 1, seed=0)
    with pytest.raises(ConfigError):
        make_plan(8, [0], 1, seed=0)
    with pytest.raises(ConfigError):
        make_plan(8, [4], 0, seed=0)


def test_sampling_uniformity():
    """Each unit appears in size-k samples with frequency k/D within 3 sigma."""
    d, k, reps = 20, 5, 2000
    plan = make_plan(d, [k], reps, seed=5)
    counts = np.zeros(d)
    for _, _, indices in plan:
        counts[list(indices)] += 1
    p = k / d
    sigma = np.sqrt(reps * p * (1 - p))
    assert np.all(np.abs(counts - reps * p) < 3.5 * sigma)


def test_project(rng):
    """Full projection is identity; single index keeps one column; ids unchanged."""
    emb = EmbeddingSet(rng.standard_normal((5, 2)), list("abcde"))
    full = project(emb, [0, 1])
    np.testing.assert_array_equal(full.descriptors, emb.descriptors)
    first = project(emb, [0])
    assert first.descriptors.shape == (5, 1)
    np.testing.assert_array_equal(first.descriptors[:, 0], emb.descriptors[:, 0])
    assert first.image_ids == emb.image_ids


def test_project_composition(rng):
    """Nested projections equal a single composed projection."""
    emb = EmbeddingSet(rng.standard_normal((6, 10)), list("abcdef"))
    outer = [1, 3, 4, 7, 9]
    inner = [0, 2, 4]
    twice = project(project(emb, outer), inner)
    once = project(emb, [outer[i] for i in inner])
    np.testing.assert_array_equal(twice.descriptors, once.descriptors)


def test_project_errors(rng):
    """Duplicate or out-of-range indices raise."""
    emb = EmbeddingSet(rng.standard_normal((4, 3)), list("abcd"))
    with pytest.raises(ConfigError):
        project(emb, [0, 0])
    with pytest.raises(ConfigError):
        project(emb, [3])
