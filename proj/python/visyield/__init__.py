"""Rare-event failure probability estimation and yield optimization.

Configs are plain dicts with the same schema as the command-line JSON files;
``version`` defaults to the current schema version when omitted.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Mapping

from . import _core
from ._core import ConfigError, ContractViolation, InitializationError, SimulationError, Testbench

__all__ = [
    "ConfigError",
    "ContractViolation",
    "InitializationError",
    "SimulationError",
    "Testbench",
    "bench",
    "run",
    "optimize",
    "estimate",
    "compare",
    "optimize_to",
    "load_config",
]

Config = Mapping[str, Any]


def _text(config: Config) -> str:
    data = dict(config)
    data.setdefault("version", _core.config_version)
    return json.dumps(data)


def load_config(path: str | Path) -> dict:
    """Reads a JSON config file into a dict."""
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def bench(spec: Config) -> Testbench:
    """Builds a testbench from a bench spec, e.g. {"kind": "axis", "dim": 18, "axis": 0, "threshold": 4}."""
    return _core.bench_from_config(json.dumps({"version": _core.config_version, "bench": dict(spec)}))


def run(config: Config, seed: int = 1, threads: int | None = None) -> dict:
    """Runs the config's single method for one seed and returns the run report."""
    return json.loads(_core.run_one(_text(config), seed, threads))


def optimize(config: Config, threads: int | None = None) -> list[dict]:
    """Runs yield optimization for every mode and seed; returns one trace per run."""
    return [json.loads(t) for t in _core.optimize(_text(config), threads)]


def _command(name: str, config: Config, output, seeds, threads) -> int:
    out = None if output is None else str(output)
    seed_list = None if seeds is None else [int(s) for s in seeds]
    return _core.command(name, _text(config), out, seed_list, threads)


def estimate(config: Config, output: str | Path | None = None, seeds: Iterable[int] | None = None,
             threads: int | None = None) -> int:
    """Same as `vis_yield estimate`; returns the exit code (0 converged, 2 otherwise)."""
    return _command("estimate", config, output, seeds, threads)


def compare(config: Config, output: str | Path | None = None, seeds: Iterable[int] | None = None,
            threads: int | None = None) -> int:
    """Same as `vis_yield compare`."""
    return _command("compare", config, output, seeds, threads)


def optimize_to(config: Config, output: str | Path | None = None, seeds: Iterable[int] | None = None,
                threads: int | None = None) -> int:
    """Same as `vis_yield optimize`: writes traces and a summary below `output`."""
    return _command("optimize", config, output, seeds, threads)
