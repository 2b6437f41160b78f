"""Python front end for the dmeg core. Configs are dicts in the CLI's JSON layout."""

import json

from . import _core
from ._core import ConfigError, NumericError, clipped_bce, constraint_certificate, theorem_rates

__all__ = [
    "ConfigError",
    "NumericError",
    "canonical_config",
    "clipped_bce",
    "config_hash",
    "constraint_certificate",
    "run",
    "sweep",
    "theorem_rates",
    "trajectory_csv",
]


def canonical_config(config):
    return json.loads(_core.canonical_config(json.dumps(config)))


def config_hash(config):
    return _core.config_hash(json.dumps(config))


def run(config, out_dir=None):
    """Runs config["algorithm"] and returns the list of run summaries."""
    return json.loads(_core.run(json.dumps(config), str(out_dir) if out_dir else ""))


def sweep(config):
    return json.loads(_core.sweep(json.dumps(config)))


def trajectory_csv(config):
    return _core.trajectory_csv(json.dumps(config))
