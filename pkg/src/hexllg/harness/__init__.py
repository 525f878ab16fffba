"""Configuration, drivers, verification suite and file formats for the simulator."""

from .config import SCHEMA_VERSION, ConfigError, RunConfig, config_from_dict, read_config, write_config
from .convergence import run_convergence
from .simulate import run_simulate
from .verify import run_verify

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "RunConfig",
    "config_from_dict",
    "read_config",
    "write_config",
    "run_convergence",
    "run_simulate",
    "run_verify",
]
