"""Pydantic schemas for CLI run configuration and error output."""
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

COMMANDS = (
    "synth", "verify", "ablate", "anova", "correlate", "decode-gender", "decode-view",
    "pca", "windows", "directions", "alignment", "report",
)
DATA_FREE_COMMANDS = ("synth", "report")

Command = Literal[
    "synth", "verify", "ablate", "anova", "correlate", "decode-gender", "decode-view",
    "pca", "windows", "directions", "alignment", "report",
]


class RunConfig(BaseModel):
    """Fully resolved configuration of one CLI command."""

    command: Command
    embeddings: Optional[Path] = Field(None, description="Embedding file (binary or CSV)")
    attributes: Optional[Path] = Field(None, description="Attribute CSV")
    seed: int = Field(0, ge=0, description="Master seed recorded in every artifact")
    out: Path = Field(Path("./outputs"), description="Output root; artifacts go to <out>/<command>")
    plots: bool = False
    profile: Optional[Literal["paper"]] = None
    threads: int = Field(1, ge=1, description="Worker threads; outputs do not depend on it")

    # subspace plan
    sizes: List[int] = Field(default_factory=lambda: [128, 64, 32, 16, 8, 4, 2])
    replicates: int = Field(50, ge=1)

    # verification
    split_fraction: float = Field(0.5, gt=0, lt=1)
    renormalize: bool = True
    zero_norm_policy: Literal["zero", "error"] = "zero"
    tile_size: int = Field(1024, ge=1)

    # statistics
    alpha: float = Field(0.05, gt=0, lt=1)
    pooled_error: bool = True
    max_stored_correlations_dim: int = Field(1024, ge=2)
    histogram_bins: int = Field(50, ge=1)

    # decoding
    held_out: int = Field(300, ge=1, description="Identities held out per fold")
    permutations: int = Field(1000, ge=1)
    lda_priors: Literal["empirical", "equal"] = "empirical"

    # face space
    window: int = Field(30, ge=1)
    window_step: int = Field(1, ge=1)
    assignment_floor: float = Field(1e-4, ge=0)

    # synthetic data
    dataset_format: Literal["binary", "csv"] = "binary"
    csv_float_format: str = "%.9g"
    synth: Dict[str, Any] = Field(default_factory=dict)
    calibrate: Optional[float] = Field(None, gt=0, lt=1, description="Target mean identity r^2")

    @field_validator('sizes')
    @classmethod
    def sizes_must_be_positive(cls, v):
        if not v:
            raise ValueError('At least one subspace size is required')
        if any(s < 1 for s in v):
            raise ValueError(f'Subspace sizes must be >= 1, got {v}')
        return v

    @model_validator(mode='after')
    def inputs_required(self):
        if self.command not in DATA_FREE_COMMANDS and (self.embeddings is None or self.attributes is None):
            raise ValueError(f'{self.command} needs --embeddings and --attributes')
        return self

    @property
    def out_dir(self) -> Path:
        return self.out / self.command


class ErrorResponse(BaseModel):
    """Error schema written to error.json and stdout."""

    error: str
    detail: Optional[str] = None
    exit_code: int
    row: Optional[int] = None
    ids: Optional[List[str]] = None


__all__ = ['COMMANDS', 'RunConfig', 'ErrorResponse']
