"""Synthetic embedding sets with planted identity, gender and yaw structure.

    descriptor = centroid[identity] + sign(gender) * sigma_gender * v_gender
                 + (yaw / 90) * sigma_view * v_view + sigma_noise * noise

Every random draw is taken from a single Philox stream in a fixed order that
does not depend on the sigmas, so changing a sigma rescales a component
without changing the others.
"""
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from src.core.errors import ConfigError, UnreachableTargetError
from src.ingestion.dataset import AttributeTable, EmbeddingSet, make_attributes
from src.processing.numerics import anova_columns
from src.utils import make_rng, write_json

logger = logging.getLogger(__name__)

YAW_SCALE = 90.0
CALIBRATION_TOLERANCE = 0.02
_MAX_BISECTIONS = 60
_MAX_NOISE = 1e6


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic dataset."""

    dim: int = 128
    n_identities: int = 300
    images_per_identity: Tuple[int, int] = (10, 10)
    sigma_identity: float = 1.0
    sigma_gender: float = 0.6
    sigma_view: float = 0.4
    sigma_noise: float = 0.65
    gender_direction_count: int = 1
    view_direction_count: int = 1
    identity_rank: Optional[int] = None
    seed: int = 0

    def validate(self) -> None:
        """Validate the spec.

        Raises:
            ConfigError: If any field is out of range
        """
        if self.dim < 2:
            raise ConfigError(f"dim must be >= 2, got {self.dim}")
        if self.n_identities < 2:
            raise ConfigError(f"n_identities must be >= 2, got {self.n_identities}")
        low, high = self.images_per_identity
        if low < 1 or high < low:
            raise ConfigError(f"images_per_identity must satisfy 1 <= min <= max, got {self.images_per_identity}")
        sigmas = self.sigmas
        for name, value in sigmas.items():
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be finite and non-negative, got {value}")
        if not any(v > 0 for v in sigmas.values()):
            raise ConfigError("At least one sigma must be positive")
        if self.gender_direction_count < 1 or self.view_direction_count < 1:
            raise ConfigError("Direction counts must be >= 1")
        if self.identity_rank is not None and self.identity_rank < 1:
            raise ConfigError(f"identity_rank must be >= 1, got {self.identity_rank}")
        if self.planted_rank > self.dim:
            raise ConfigError(f"{self.planted_rank} planted directions do not fit in dim={self.dim}")

    @property
    def sigmas(self) -> Dict[str, float]:
        return {
            "sigma_identity": float(self.sigma_identity),
            "sigma_gender": float(self.sigma_gender),
            "sigma_view": float(self.sigma_view),
            "sigma_noise": float(self.sigma_noise),
        }

    @property
    def planted_rank(self) -> int:
        return self.gender_direction_count + self.view_direction_count + (self.identity_rank or 0)

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["images_per_identity"] = list(self.images_per_identity)
        return payload

    @classmethod
    def from_config(cls, section: Dict[str, Any], **overrides: Any) -> "SynthSpec":
        """Build from the ``synth`` settings section; unknown keys are ignored."""
        known = {f for f in cls.__dataclass_fields__}
        values = {k: v for k, v in {**section, **overrides}.items() if k in known and v is not None}
        if "images_per_identity" in values:
            values["images_per_identity"] = tuple(int(v) for v in values["images_per_identity"])
        return cls(**values)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Planted directions (rows are unit vectors in descriptor space)."""

    gender_directions: np.ndarray = field(repr=False)
    view_directions: np.ndarray = field(repr=False)
    identity_basis: Optional[np.ndarray] = field(default=None, repr=False)
    spec: Optional[SynthSpec] = None

    @property
    def gender_direction(self) -> np.ndarray:
        """Combined gender axis, sum of the planted directions over sqrt(count)."""
        return self.gender_directions.sum(axis=0) / math.sqrt(self.gender_directions.shape[0])

    @property
    def view_direction(self) -> np.ndarray:
        return self.view_directions.sum(axis=0) / math.sqrt(self.view_directions.shape[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.to_dict() if self.spec else None,
            "gender_directions": self.gender_directions.tolist(),
            "view_directions": self.view_directions.tolist(),
            "identity_basis": None if self.identity_basis is None else self.identity_basis.tolist(),
        }


@dataclass(frozen=True, eq=False)
class SynthDataset:
    embeddings: EmbeddingSet
    attributes: AttributeTable
    truth: GroundTruth


@dataclass(frozen=True, eq=False)
class _Draw:
    """Unscaled random components of one dataset."""

    signal_parts: Dict[str, np.ndarray]
    noise: np.ndarray
    identity_index: np.ndarray
    genders: np.ndarray
    yaws: np.ndarray
    truth: GroundTruth


def _draw(spec: SynthSpec) -> _Draw:
    rng = make_rng(spec.seed)
    d = spec.dim

    raw = rng.standard_normal((d, spec.planted_rank))
    q, r = np.linalg.qr(raw)
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    g_count, v_count = spec.gender_direction_count, spec.view_direction_count
    gender_dirs = q[:, :g_count].T
    view_dirs = q[:, g_count:g_count + v_count].T
    identity_basis = q[:, g_count + v_count:].T if spec.identity_rank else None

    low, high = spec.images_per_identity
    counts = rng.integers(low, high + 1, size=spec.n_identities)
    gender_flags = rng.random(spec.n_identities) < 0.5
    if gender_flags.all() or not gender_flags.any():
        gender_flags[0] = not gender_flags[0]

    if identity_basis is None:
        centroids = rng.standard_normal((spec.n_identities, d))
    else:
        centroids = rng.standard_normal((spec.n_identities, spec.identity_rank)) @ identity_basis

    identity_index = np.repeat(np.arange(spec.n_identities), counts)
    n = identity_index.size
    yaws = rng.uniform(-YAW_SCALE, YAW_SCALE, size=n)
    noise = rng.standard_normal((n, d))

    truth = GroundTruth(gender_directions=gender_dirs, view_directions=view_dirs,
                        identity_basis=identity_basis)
    sign = np.where(gender_flags[identity_index], 1.0, -1.0)
    parts = {
        "sigma_identity": centroids[identity_index],
        "sigma_gender": sign[:, None] * truth.gender_direction[None, :],
        "sigma_view": (yaws / YAW_SCALE)[:, None] * truth.view_direction[None, :],
    }
    genders = np.where(gender_flags[identity_index], "M", "F")
    return _Draw(signal_parts=parts, noise=noise, identity_index=identity_index,
                 genders=genders, yaws=yaws, truth=truth)


def _assemble(draw: _Draw, spec: SynthSpec, sigma_noise: Optional[float] = None) -> np.ndarray:
    sigmas = spec.sigmas
    if sigma_noise is not None:
        sigmas["sigma_noise"] = sigma_noise
    matrix = sigmas["sigma_noise"] * draw.noise
    for name, part in draw.signal_parts.items():
        matrix = matrix + sigmas[name] * part
    # float32 values survive the binary format unchanged
    return matrix.astype(np.float32).astype(np.float64)


def generate(spec: SynthSpec) -> SynthDataset:
    """Draw one dataset; returns embeddings, attributes and planted directions."""
    spec.validate()
    draw = _draw(spec)
    matrix = _assemble(draw, spec)
    n = matrix.shape[0]
    image_ids = [f"img{i:06d}" for i in range(n)]
    identities = [f"id{i:05d}" for i in draw.identity_index]
    emb = EmbeddingSet(matrix, tuple(image_ids))
    attrs = make_attributes(image_ids, identities, draw.genders, draw.yaws)
    truth = replace(draw.truth, spec=spec)
    logger.info(f"Generated {n} images of {spec.n_identities} identities in D={spec.dim} (seed={spec.seed})")
    return SynthDataset(embeddings=emb, attributes=attrs, truth=truth)


def mean_identity_r2(matrix: np.ndarray, identities: np.ndarray) -> float:
    """Mean identity r^2 over the non-constant columns of ``matrix``."""
    tests = [t for t in anova_columns(matrix, identities) if t is not None]
    if not tests:
        return 0.0
    return float(np.mean([t.r_squared for t in tests]))


def calibrate(target_r2: float, template: SynthSpec,
              tolerance: float = CALIBRATION_TOLERANCE) -> SynthSpec:
    """Bisect sigma_noise until the mean per-unit identity r^2 is within ``tolerance``.

    The measurement uses the template's own draw, so ``generate`` on the
    returned spec reproduces the measured data exactly.

    Raises:
        ConfigError: If target_r2 is not in (0, 1)
        UnreachableTargetError: If no noise level reaches the target
    """
    if not 0.0 < target_r2 < 1.0:
        raise ConfigError(f"target_r2 must be in (0, 1), got {target_r2}")
    template.validate()
    draw = _draw(template)
    identities = draw.identity_index

    def measure(sigma_noise: float) -> float:
        return mean_identity_r2(_assemble(draw, template, sigma_noise), identities)

    ceiling = measure(0.0)
    if ceiling < target_r2 - tolerance:
        raise UnreachableTargetError(
            f"Target r2={target_r2} unreachable: noise-free data only reaches {ceiling:.4f}")
    if abs(ceiling - target_r2) <= tolerance:
        return replace(template, sigma_noise=0.0)

    low, high = 0.0, max(template.sigma_noise, 1e-3)
    while measure(high) > target_r2:
        high *= 2.0
        if high > _MAX_NOISE:
            raise UnreachableTargetError(
                f"Target r2={target_r2} unreachable: noise up to {_MAX_NOISE:g} keeps r2 above it")

    for step in range(_MAX_BISECTIONS):
        mid = 0.5 * (low + high)
        r2 = measure(mid)
        logger.debug(f"Calibration step {step}: sigma_noise={mid:.6g}, r2={r2:.4f}")
        if abs(r2 - target_r2) <= tolerance:
            logger.info(f"Calibrated sigma_noise={mid:.6g} for identity r2={r2:.4f} (target {target_r2})")
            return replace(template, sigma_noise=float(mid))
        if r2 > target_r2:
            low = mid
        else:
            high = mid
    raise UnreachableTargetError(f"Calibration to r2={target_r2} did not converge")


def write_ground_truth(truth: GroundTruth, path: Union[str, Path]) -> Path:
    """JSON sidecar with the spec and the planted directions."""
    return write_json(path, truth.to_dict())


__all__ = [
    'SynthSpec', 'GroundTruth', 'SynthDataset', 'generate', 'calibrate',
    'mean_identity_r2', 'write_ground_truth'
]
