"""Preset catalogue and a single entry point for both algorithms."""

from __future__ import annotations

import dataclasses
from typing import Optional, Union

from evcsl.ga import GA_PRESETS, GaConfig, run_ga
from evcsl.model import Instance
from evcsl.run import Budget, RunResult
from evcsl.vns import VNS_PRESETS, VnsConfig, run_vns

PRESETS = {**GA_PRESETS, **VNS_PRESETS}

AlgoConfig = Union[GaConfig, VnsConfig]


def algorithm_of(config: AlgoConfig) -> str:
    return "ga" if isinstance(config, GaConfig) else "vns"


def resolve(preset: Optional[str] = None, algo: Optional[str] = None,
            overrides: Optional[dict] = None) -> tuple[str, AlgoConfig]:
    """(label, config) from a preset name and/or explicit field overrides."""
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        base = PRESETS[preset]
        if algo is not None and algo != algorithm_of(base):
            raise ValueError(f"preset {preset} is not a {algo} configuration")
        label = preset
    elif algo == "ga":
        base, label = GaConfig(), "custom"
    elif algo == "vns":
        base, label = VnsConfig(), "custom"
    else:
        raise ValueError("need a preset or an algorithm (ga|vns)")
    if overrides:
        names = {f.name for f in dataclasses.fields(base)}
        unknown = set(overrides) - names
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        base = dataclasses.replace(base, **overrides)
        if label != "custom":
            label = f"{label}*"
    return label, base


def solve(instance: Instance, config: AlgoConfig, seed: int, budget: Budget,
          preset: str = "custom") -> RunResult:
    if isinstance(config, GaConfig):
        return run_ga(instance, config, seed, budget, preset)
    if isinstance(config, VnsConfig):
        return run_vns(instance, config, seed, budget, preset)
    raise TypeError(f"not an algorithm config: {config!r}")


def solve_preset(instance: Instance, preset: str, seed: int, budget: Budget) -> RunResult:
    label, config = resolve(preset)
    return solve(instance, config, seed, budget, label)
