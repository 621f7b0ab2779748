"""Run and solve outcomes, plus the per-iteration event log."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Any

import numpy as np


@dataclass
class RunReport:
    """Outcome of one run (one restart of FP or AFP, or one stage of the two-stage controller)."""

    run: int
    feasible: bool
    iterations: int
    stop_reason: str
    wall_seconds: float
    objective: float | None = None
    point: np.ndarray | None = None
    final_relaxed: np.ndarray | None = None
    final_integral: np.ndarray | None = None
    final_fractionality: float = float("nan")
    phase: str = "single"
    perturbations: int = 0
    delta_norm: float | None = None
    p_h: float | None = None

    @property
    def budget_used(self) -> int:
        # a run always costs at least one iteration so budget-driven loops terminate
        return max(1, self.iterations)


@dataclass
class SolveReport:
    instance: str
    algorithm: str
    status: str = "ok"
    runs: list[RunReport] = field(default_factory=list)
    best_point: np.ndarray | None = None
    best_objective: float | None = None
    iterations: int = 0
    wall_seconds: float = 0.0
    events: list[dict[str, Any]] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.best_point is not None

    def offer(self, point: np.ndarray, objective: float) -> bool:
        if self.best_objective is None or objective < self.best_objective:
            self.best_point = point.copy()
            self.best_objective = objective
            return True
        return False


def _plain(value: Any) -> Any:
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if np.isfinite(v) else str(v)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_events(events: list[dict[str, Any]], fh: IO[str]) -> None:
    """Write events as line-delimited JSON records."""
    for ev in events:
        fh.write(json.dumps({k: _plain(v) for k, v in ev.items()}, sort_keys=True))
        fh.write("\n")


def read_events(fh: IO[str]) -> list[dict[str, Any]]:
    return [json.loads(line) for line in fh if line.strip()]
