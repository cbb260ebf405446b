"""Test configuration and fixtures."""
import pytest
import sys
from pathlib import Path

import numpy as np

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.ingestion.dataset import make_attributes  # noqa: E402
from src.ingestion.synthgen import SynthSpec, generate  # noqa: E402


@pytest.fixture
def samples_dir():
    """Return the golden sample directory."""
    return Path(__file__).parent.parent / "data" / "samples"


@pytest.fixture
def rng():
    """Seeded generator for test data."""
    return np.random.default_rng(20240101)


@pytest.fixture(scope="session")
def small_spec():
    """Desk-scale spec small enough for per-test generation."""
    return SynthSpec(dim=16, n_identities=40, images_per_identity=(6, 6),
                     sigma_identity=1.0, sigma_gender=0.8, sigma_view=0.8,
                     sigma_noise=0.5, seed=11)


@pytest.fixture(scope="session")
def small_dataset(small_spec):
    """Synthetic dataset with planted identity, gender and yaw structure."""
    return generate(small_spec)


@pytest.fixture
def tiny_attributes():
    """Four images of two identities."""
    return make_attributes(
        image_ids=["x", "y", "z", "w"],
        identities=["id1", "id1", "id2", "id2"],
        genders=["M", "M", "F", "F"],
        yaws=[0.0, 20.0, -40.0, 80.0],
    )


@pytest.fixture
def write_csv(tmp_path):
    """Write text to a CSV file under tmp_path and return its path."""
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write
