"""Python access to the straggler simulator."""

import json
from os import PathLike
from pathlib import Path

from . import _straggler
from ._straggler import (
    ConfigError,
    __version__,
    canonical_config,
    config_hash,
    default_config,
    expected_stragglers,
    fit_pareto,
)

__all__ = [
    "ConfigError",
    "__version__",
    "canonical_config",
    "config_hash",
    "default_config",
    "evaluate",
    "expected_stragglers",
    "fit_pareto",
    "load_config_text",
    "simulate",
]


def load_config_text(path: str | PathLike) -> str:
    return Path(path).read_text()


def simulate(config: str = "", *, policy: str = "", checkpoint: str | PathLike = "",
             out_dir: str | PathLike = "") -> dict:
    """Run one simulation from config text and return the report as a dict.

    With ``out_dir`` the run is also written there (report, series, config, manifest).
    """
    text = _straggler.simulate(config, policy, str(checkpoint), str(out_dir))
    return json.loads(text)


def evaluate(run_dir: str | PathLike) -> tuple[bool, list[str]]:
    return _straggler.evaluate(Path(run_dir))
