"""Synthetic tasks, run configuration and the benchmark runner."""

from .benchmark import CellResult, RunReport, run_benchmark
from .config import ConfigError, RunConfig, load_config
from .tasks import SyntheticConfig, generate_synthetic_tasks

__all__ = [
    "CellResult",
    "ConfigError",
    "RunConfig",
    "RunReport",
    "SyntheticConfig",
    "generate_synthetic_tasks",
    "load_config",
    "run_benchmark",
]
