"""Pieces shared by the FP and AFP engines."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import SolverConfig
from .lp import LpSolution, LpStatus, solve_relaxation
from .model import MipInstance, SolutionPair, is_integral, is_mip_feasible


@dataclass
class Relaxation:
    """Solved LP relaxation; ``z_star`` feeds the projection normalization."""

    solution: LpSolution

    @property
    def status(self) -> LpStatus:
        return self.solution.status

    @property
    def feasible(self) -> bool:
        return self.solution.status is LpStatus.OPTIMAL

    @property
    def x(self) -> np.ndarray:
        return self.solution.x

    @property
    def z_star(self) -> float:
        return self.solution.objective


def relax(inst: MipInstance) -> Relaxation:
    return Relaxation(solve_relaxation(inst))


def relaxation_failure(relaxation: Relaxation) -> str:
    if relaxation.status is LpStatus.INFEASIBLE:
        return "relaxation infeasible"
    if relaxation.status is LpStatus.UNBOUNDED:
        return "relaxation unbounded"
    return f"relaxation {relaxation.status.value}"


def feasible_point(inst: MipInstance, x: np.ndarray, active: np.ndarray, cfg: SolverConfig) -> np.ndarray | None:
    """A point integral on ``active`` and inside P, derived from ``x``; None when there is none.

    Active coordinates are snapped to the nearest integer when that keeps the
    point inside P; otherwise the unsnapped point is returned.
    """
    if not is_integral(x, active, cfg.eps_int):
        return None
    snapped = np.array(x, dtype=float)
    snapped[active] = np.round(snapped[active])
    # the certificate is checked against the full integer set of this (possibly restricted) problem
    restricted = inst if np.array_equal(np.sort(active), inst.integers) else _with_integers(inst, active)
    for cand in (snapped, np.asarray(x, dtype=float)):
        if is_mip_feasible(restricted, cand, cfg.eps_feas, cfg.eps_int):
            return cand.copy()
    return None


def _with_integers(inst: MipInstance, active: np.ndarray) -> MipInstance:
    return MipInstance(
        name=inst.name, objective=inst.objective, A=inst.A, sense=inst.sense, rhs=inst.rhs,
        lower=inst.lower, upper=inst.upper, integers=np.asarray(active, dtype=np.int64),
        var_names=inst.var_names, row_names=inst.row_names,
        objective_offset=inst.objective_offset, maximize=inst.maximize,
    )


def pair_feasible(inst: MipInstance, pair: SolutionPair, cfg: SolverConfig) -> np.ndarray | None:
    return feasible_point(inst, pair.relaxed, pair.active, cfg)


def integral_key(x: np.ndarray, active: np.ndarray) -> bytes:
    return np.round(np.asarray(x)[active]).astype(np.int64).tobytes()


class Deadline:
    def __init__(self, seconds: float | None):
        self.start = time.perf_counter()
        self.limit = seconds

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def expired(self) -> bool:
        return self.limit is not None and self.elapsed() >= self.limit
