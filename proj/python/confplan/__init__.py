"""Python access to the confplan planners, calibration tools and experiment harness."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Iterable, Mapping

from ._confplan import (
    AcpState,
    ConfigError,
    PlotError,
    QuantileTable,
    build_quantile_table,
    conformal_rank,
    default_data_file,
    exchangeability_gate,
    ks_distance,
    quantile_threshold,
    render_plot,
)
from . import _confplan

__all__ = [
    "AcpState",
    "ConfigError",
    "PlotError",
    "QuantileTable",
    "build_quantile_table",
    "conformal_rank",
    "default_data_file",
    "exchangeability_gate",
    "ks_distance",
    "quantile_threshold",
    "render_plot",
    "resolve_experiment",
    "run_experiment",
    "verify",
    "scenario_dir",
]


def scenario_dir() -> Path:
    """Directory holding the bundled experiment specs."""
    return Path(os.environ.get("CONFPLAN_SCENARIO_DIR", _confplan.DEFAULT_SCENARIO_DIR))


def _load(spec: str | os.PathLike | Mapping[str, Any], base_dir: str | os.PathLike | None):
    if isinstance(spec, Mapping):
        return json.dumps(spec), str(base_dir or Path.cwd())
    path = Path(spec)
    if not path.is_absolute() and not path.exists():
        path = scenario_dir() / path
    return path.read_text(), str(base_dir or path.resolve().parent)


def _overrides(overrides: Mapping[str, Any] | None) -> list[tuple[str, str]]:
    return [(k, json.dumps(v)) for k, v in (overrides or {}).items()]


def resolve_experiment(spec, overrides=None, base_dir=None) -> dict:
    """Parse and validate an experiment spec and return it with all defaults filled in."""
    text, base = _load(spec, base_dir)
    return json.loads(_confplan._experiment_resolved(text, base, _overrides(overrides)))


def run_experiment(spec, overrides=None, jobs: int = 1, output_dir=None, base_dir=None) -> dict:
    """Run an experiment spec (path or dict); returns the contents of report.json.

    ``overrides`` maps dotted config paths to values, e.g. ``{"test_trials": 10}``.
    """
    text, base = _load(spec, base_dir)
    out = _confplan._run_experiment(text, base, _overrides(overrides), int(jobs),
                                    str(output_dir) if output_dir else "")
    return json.loads(out)


def verify(criteria: Iterable[int] = (), seed: int = 20240601, jobs: int = 1,
           scenarios=None) -> list[dict]:
    """Run the acceptance criteria and return one dict per criterion."""
    rows = _confplan._verify(str(scenarios or scenario_dir()), int(seed), int(jobs),
                             [int(c) for c in criteria])
    return [json.loads(r) for r in rows]
