"""Tests for the synthetic embedding generator and noise calibration."""
import json
from dataclasses import replace

import numpy as np
import pytest

from src.core.errors import ConfigError, UnreachableTargetError
from src.ingestion.dataset import load_attributes, load_embeddings, save_attributes, save_embeddings
from src.ingestion.synthgen import (
    SynthSpec, calibrate, generate, mean_identity_r2, write_ground_truth
)
from src.retrieval.verification import auc, make_split, score_pairs


def _identity_auc(data, seed=0):
    split = make_split(data.attributes, 0.5, seed=seed)
    return auc(score_pairs(data.embeddings, data.attributes, split))


def test_shapes_and_labels(small_dataset, small_spec):
    """N = identities x images, both genders present, yaws within range."""
    emb, attrs = small_dataset.embeddings, small_dataset.attributes
    assert emb.n_images == 240
    assert emb.n_units == small_spec.dim
    assert attrs.n_identities == 40
    assert set(attrs.genders) == {"M", "F"}
    assert np.all(np.abs(attrs.yaws) <= 90)
    assert attrs.image_ids == emb.image_ids


def test_planted_directions_are_orthonormal(small_dataset):
    """Gender and view directions are unit length and orthogonal."""
    truth = small_dataset.truth
    g, v = truth.gender_direction, truth.view_direction
    assert np.linalg.norm(g) == pytest.approx(1.0)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert abs(g @ v) < 1e-12


def test_generation_is_deterministic(small_spec):
    """Same spec, same bytes."""
    a = generate(small_spec).embeddings.descriptors
    b = generate(small_spec).embeddings.descriptors
    assert a.tobytes() == b.tobytes()
    c = generate(replace(small_spec, seed=12)).embeddings.descriptors
    assert not np.array_equal(a, c)


def test_noiseless_identities_verify_perfectly():
    """Without noise, gender or yaw, same-identity images are identical."""
    spec = SynthSpec(dim=16, n_identities=20, images_per_identity=(4, 4), sigma_identity=1.0,
                     sigma_gender=0.0, sigma_view=0.0, sigma_noise=0.0, seed=1)
    assert _identity_auc(generate(spec)) == 1.0


def test_no_identity_signal_gives_chance_auc():
    """With sigma_identity = 0 identity cannot be verified."""
    spec = SynthSpec(dim=16, n_identities=40, images_per_identity=(6, 6), sigma_identity=0.0,
                     sigma_gender=0.0, sigma_view=0.0, sigma_noise=1.0, seed=2)
    assert _identity_auc(generate(spec)) == pytest.approx(0.5, abs=0.05)


def test_sigma_rescales_one_component(small_spec):
    """Changing sigma_view only changes the view component."""
    base = generate(small_spec)
    bigger = generate(replace(small_spec, sigma_view=2 * small_spec.sigma_view))
    diff = bigger.embeddings.descriptors - base.embeddings.descriptors
    expected = np.outer(base.attributes.yaws / 90.0, base.truth.view_direction) * small_spec.sigma_view
    np.testing.assert_allclose(diff, expected, atol=1e-5)


def test_identity_rank_restricts_centroids():
    """With identity_rank set, noise-free descriptors minus gender and yaw live in that subspace."""
    spec = SynthSpec(dim=10, n_identities=12, images_per_identity=(2, 2), sigma_noise=0.0,
                     identity_rank=3, seed=4)
    data = generate(spec)
    basis = data.truth.identity_basis
    assert basis.shape == (3, 10)
    attrs = data.attributes
    sign = np.where(attrs.genders == "M", 1.0, -1.0)
    residual = (data.embeddings.descriptors
                - spec.sigma_gender * np.outer(sign, data.truth.gender_direction)
                - spec.sigma_view * np.outer(attrs.yaws / 90.0, data.truth.view_direction))
    outside = residual - residual @ basis.T @ basis
    assert np.abs(outside).max() < 1e-5


def test_multiple_directions():
    """Several planted directions combine into a unit-norm axis."""
    spec = SynthSpec(dim=12, n_identities=10, gender_direction_count=3, view_direction_count=2, seed=5)
    truth = generate(spec).truth
    assert truth.gender_directions.shape == (3, 12)
    assert np.linalg.norm(truth.gender_direction) == pytest.approx(1.0)
    assert np.linalg.norm(truth.view_direction) == pytest.approx(1.0)


@pytest.mark.parametrize("changes", [
    {"dim": 1},
    {"n_identities": 1},
    {"images_per_identity": (3, 2)},
    {"sigma_noise": -1.0},
    {"sigma_identity": 0.0, "sigma_gender": 0.0, "sigma_view": 0.0, "sigma_noise": 0.0},
    {"identity_rank": 0},
    {"dim": 4, "identity_rank": 3},
])
def test_invalid_specs(changes):
    """Out-of-range parameters are configuration errors."""
    with pytest.raises(ConfigError):
        replace(SynthSpec(), **changes).validate()


def test_from_config_overrides():
    """Settings sections build specs; overrides win and unknown keys are ignored."""
    spec = SynthSpec.from_config({"dim": 32, "images_per_identity": [2, 5], "colour": "red"}, seed=9)
    assert spec.dim == 32
    assert spec.images_per_identity == (2, 5)
    assert spec.seed == 9


def test_calibration_hits_target(small_spec):
    """Calibrated noise gives mean identity r2 within 0.02 of 0.69, reproducibly."""
    template = replace(small_spec, sigma_gender=0.3, sigma_view=0.3)
    first = calibrate(0.69, template)
    second = calibrate(0.69, template)
    assert first.sigma_noise == second.sigma_noise
    data = generate(first)
    r2 = mean_identity_r2(data.embeddings.descriptors, data.attributes.identities)
    assert r2 == pytest.approx(0.69, abs=0.02)


def test_calibration_unreachable():
    """A yaw term larger than identity keeps r2 below a high target even without noise."""
    spec = SynthSpec(dim=8, n_identities=30, images_per_identity=(6, 6), sigma_identity=0.2,
                     sigma_gender=0.0, sigma_view=5.0, sigma_noise=0.1, seed=3)
    with pytest.raises(UnreachableTargetError):
        calibrate(0.95, spec)


def test_calibration_rejects_bad_target(small_spec):
    """Targets must be strictly inside (0, 1)."""
    with pytest.raises(ConfigError):
        calibrate(1.0, small_spec)


def test_round_trip_through_files(tmp_path, small_dataset):
    """float32 data and attributes survive the on-disk formats exactly."""
    emb_path = save_embeddings(small_dataset.embeddings, tmp_path / "e.bin")
    attr_path = save_attributes(small_dataset.attributes, tmp_path / "a.csv")
    emb = load_embeddings(emb_path)
    attrs = load_attributes(attr_path, embeddings=emb)
    assert emb.descriptors.tobytes() == small_dataset.embeddings.descriptors.tobytes()
    np.testing.assert_array_equal(attrs.yaws, small_dataset.attributes.yaws)

    truth_path = write_ground_truth(small_dataset.truth, tmp_path / "truth.json")
    payload = json.loads(truth_path.read_text())
    assert payload["spec"]["dim"] == 16
    assert len(payload["gender_directions"][0]) == 16
