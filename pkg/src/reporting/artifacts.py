"""Deterministic CSV/JSON/SVG artifacts and the per-command manifest."""
import logging
import platform
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd

from src.utils import dump_json, sha256_file

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
CSV_FLOAT_FORMAT = "%.17g"
TRACKED_PACKAGES = ("numpy", "pandas", "scipy", "joblib", "pydantic", "matplotlib", "PyYAML")


def package_versions(packages: Sequence[str] = TRACKED_PACKAGES) -> Dict[str, Optional[str]]:
    """Installed versions of the numeric stack (None if missing)."""
    versions: Dict[str, Optional[str]] = {"python": platform.python_version()}
    for name in packages:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


class ArtifactWriter:
    """Writes the artifacts of one command into ``out_dir`` and remembers them.

    CSV floats use 17 significant digits and ``\\n`` line endings; JSON is
    key-sorted. Two runs with the same inputs produce identical bytes.
    """

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._artifacts: List[str] = []

    @property
    def artifacts(self) -> List[str]:
        return sorted(self._artifacts)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def _track(self, name: str) -> Path:
        if name not in self._artifacts:
            self._artifacts.append(name)
        return self.path(name)

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self._track(name)
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        logger.debug(f"Wrote {len(frame)} rows to {path}")
        return path

    def write_json(self, name: str, payload: Any) -> Path:
        path = self._track(name)
        path.write_text(dump_json(payload), encoding="utf-8")
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self._track(name)
        path.write_text(text, encoding="utf-8")
        return path

    def register(self, name: str) -> Path:
        """Track a file written by someone else (plots, binary embeddings)."""
        return self._track(name)

    def write_manifest(self, command: str, config: Dict[str, Any], seed: int,
                       inputs: Sequence[Union[str, Path]] = ()) -> Path:
        """``manifest.json``: command, resolved config, seed, versions, input hashes."""
        manifest = {
            "command": command,
            "seed": seed,
            "config": config,
            "versions": package_versions(),
            "inputs": {str(p): sha256_file(p) for p in inputs},
            "artifacts": self.artifacts,
        }
        path = self.path(MANIFEST_NAME)
        path.write_text(dump_json(manifest), encoding="utf-8")
        logger.info(f"{command}: {len(self._artifacts)} artifacts in {self.out_dir}")
        return path


__all__ = ['ArtifactWriter', 'package_versions', 'MANIFEST_NAME']
