"""Pseudo-label debiasing for few-shot crisis tweet classification."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import ConfigError, DecrisisError, run_cell as _run_cell

__version__ = "0.1.0"


def run_cell(config_yaml, strategy_index, labels_per_class, seed):
    """Runs one (strategy, k, seed) cell; returns (summary dict, metrics CSV text)."""
    summary, csv = _run_cell(config_yaml, strategy_index, labels_per_class, seed)
    return _json.loads(summary), csv
