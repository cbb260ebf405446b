"""Utility functions for FaceCode."""
import hashlib
import json
import logging
import sys
from pathlib import Path
from logging.handlers import RotatingFileHandler
from typing import Any, Union

import numpy as np


def setup_logging(log_dir: str = "./logs", level: str = "INFO",
                  max_bytes: int = 10485760, backup_count: int = 5) -> None:
    """Configure logging with file rotation and console output.

    Args:
        log_dir: Directory for log files
        level: Logging level (DEBUG, INFO, WARNING, ERROR)
        max_bytes: Maximum log file size before rotation
        backup_count: Number of backup files to keep
    """
    # Create log directory
    log_path = Path(log_dir)
    log_path.mkdir(parents=True, exist_ok=True)

    # Configure root logger
    logger = logging.getLogger()
    logger.setLevel(getattr(logging, level.upper()))

    # Remove existing handlers
    logger.handlers = []

    # Console handler (stderr keeps stdout free for the error JSON)
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, level.upper()))
    console_format = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    console_handler.setFormatter(console_format)
    logger.addHandler(console_handler)

    # File handler with rotation
    file_handler = RotatingFileHandler(
        log_path / 'facecode.log',
        maxBytes=max_bytes,
        backupCount=backup_count
    )
    file_handler.setLevel(logging.DEBUG)
    file_format = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s'
    )
    file_handler.setFormatter(file_format)
    logger.addHandler(file_handler)

    logger.info(f"Logging configured: level={level}, dir={log_dir}")


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for the stream identified by ``(seed, *key)``.

    Philox is counter based; the spawn key selects an independent stream, so
    a replicate or permutation draws the same numbers whatever order or
    thread it runs in.
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def sha256_file(path: Union[str, Path], chunk_size: int = 1 << 20) -> str:
    """Hex SHA-256 of a file's contents."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(chunk_size), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dump_json(payload: Any) -> str:
    """Canonical JSON text: sorted keys, fixed indent, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n"


def write_json(path: Union[str, Path], payload: Any) -> Path:
    """Write canonical JSON to ``path`` and return it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(payload), encoding='utf-8')
    return path


__all__ = [
    'setup_logging',
    'make_rng',
    'sha256_file',
    'dump_json',
    'write_json'
]
