"""Core initialization."""
from .config import CONFIG, load_config, get_section, PROJECT_ROOT, DATA_DIR, LOGS_DIR
from .errors import (
    FaceCodeError, ConfigError, DataError,
    DegenerateInputError, UnreachableTargetError
)

__all__ = [
    'CONFIG', 'load_config', 'get_section', 'PROJECT_ROOT', 'DATA_DIR', 'LOGS_DIR',
    'FaceCodeError', 'ConfigError', 'DataError',
    'DegenerateInputError', 'UnreachableTargetError'
]
