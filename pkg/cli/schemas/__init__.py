"""CLI schemas initialization."""
from .run import COMMANDS, RunConfig, ErrorResponse

__all__ = ['COMMANDS', 'RunConfig', 'ErrorResponse']
