"""Deterministic discrete-event simulator of an unstructured P2P overlay.

Combines a k-random-walk search protocol with utility-ranked "power peer"
routing for low-availability (dry) regions, and a Q-learning-driven
replication scheme that spreads Reed-Solomon erasure-coded blocks of
popular objects onto well-provisioned peers.  Ships with plain-random-walk
and path-replication baselines plus an experiment harness that writes
interval metrics as CSV and renders comparison figures to files.
"""

from .config import ConfigError, ExperimentConfig, parse_config_file
from .engine import RunResult, Simulation, run_experiment

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config_file",
    "RunResult",
    "Simulation",
    "run_experiment",
]
