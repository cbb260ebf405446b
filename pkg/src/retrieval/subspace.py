"""Random unit subspaces for ablation experiments."""
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from src.core.errors import ConfigError
from src.ingestion.dataset import EmbeddingSet
from src.utils import make_rng

logger = logging.getLogger(__name__)

FULL_GRID_SIZES = (512, 256, 128, 64, 32, 16, 8, 4, 2)


@dataclass(frozen=True)
class SubspacePlan:
    """Seeded grid of random unit subsets, one per (size, replicate)."""

    dim: int
    sizes: Tuple[int, ...]
    replicates: int
    seed: int
    samples: Dict[Tuple[int, int], Tuple[int, ...]] = field(repr=False)

    def __iter__(self) -> Iterator[Tuple[int, int, Tuple[int, ...]]]:
        """Yield (size, replicate, indices) in plan order."""
        for size in self.sizes:
            for replicate in range(self.replicates):
                yield size, replicate, self.samples[(size, replicate)]

    def __len__(self) -> int:
        return len(self.sizes) * self.replicates

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "sizes": list(self.sizes),
            "replicates": self.replicates,
            "seed": self.seed,
            "samples": [
                {"size": size, "replicate": rep, "indices": list(indices)}
                for size, rep, indices in self
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SubspacePlan":
        payload = json.loads(text)
        samples = {
            (int(s["size"]), int(s["replicate"])): tuple(int(i) for i in s["indices"])
            for s in payload["samples"]
        }
        return cls(
            dim=int(payload["dim"]),
            sizes=tuple(int(s) for s in payload["sizes"]),
            replicates=int(payload["replicates"]),
            seed=int(payload["seed"]),
            samples=samples,
        )


def _partial_fisher_yates(dim: int, size: int, rng: np.random.Generator) -> Tuple[int, ...]:
    """First ``size`` entries of a Fisher-Yates shuffle of range(dim), sorted."""
    pool = np.arange(dim)
    for i in range(size):
        j = int(rng.integers(i, dim))
        pool[i], pool[j] = pool[j], pool[i]
    return tuple(sorted(int(v) for v in pool[:size]))


def make_plan(dim: int, sizes: Sequence[int], replicates: int, seed: int) -> SubspacePlan:
    """Draw ``replicates`` random unit subsets for every size.

    Each (size, replicate) uses its own Philox stream keyed by the pair, so a
    sample does not depend on which other samples exist.

    Raises:
        ConfigError: If a size exceeds ``dim`` or is < 1, or replicates < 1
    """
    sizes = tuple(int(s) for s in sizes)
    if replicates < 1:
        raise ConfigError(f"replicates must be >= 1, got {replicates}")
    bad = [s for s in sizes if s < 1 or s > dim]
    if bad:
        raise ConfigError(f"Subspace sizes {bad} outside [1, {dim}]")

    samples = {}
    for size in sizes:
        for replicate in range(replicates):
            rng = make_rng(seed, size, replicate)
            samples[(size, replicate)] = _partial_fisher_yates(dim, size, rng)

    logger.info(f"Subspace plan: D={dim}, sizes={list(sizes)}, replicates={replicates}, seed={seed}")
    return SubspacePlan(dim=dim, sizes=sizes, replicates=int(replicates), seed=int(seed), samples=samples)


def project(emb: EmbeddingSet, sample: Sequence[int]) -> EmbeddingSet:
    """Keep only the unit columns in ``sample``; image ids are unchanged.

    Raises:
        ConfigError: On duplicate or out-of-range indices
    """
    indices = [int(i) for i in sample]
    if len(set(indices)) != len(indices):
        raise ConfigError(f"Duplicate unit indices in sample: {indices}")
    bad = [i for i in indices if i < 0 or i >= emb.n_units]
    if bad:
        raise ConfigError(f"Unit indices {bad} outside [0, {emb.n_units})")
    return project_matrix(emb.descriptors, indices, emb.image_ids)


def project_matrix(matrix: np.ndarray, indices: Sequence[int], image_ids: Sequence[str]) -> EmbeddingSet:
    """Column subset of ``matrix`` as an EmbeddingSet (no re-validation)."""
    return EmbeddingSet.derived(np.asarray(matrix)[:, list(indices)], image_ids)


__all__: List[str] = ['FULL_GRID_SIZES', 'SubspacePlan', 'make_plan', 'project', 'project_matrix']
