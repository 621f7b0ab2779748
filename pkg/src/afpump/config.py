"""Run parameters shared by the FP and AFP engines."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .model import EPS_FEAS, EPS_INT
from .moves import DEFAULT_AFP_MOVES, MoveKind, MoveParams
from .projection import ProjectionConfig, QualityNorm


@dataclass(frozen=True)
class SolverConfig:
    n_total: int = 5000
    n_run: int = 150
    stall: int = 70
    alpha0: float = 1.0
    alpha_decay: float = 0.9
    quality_norm: QualityNorm = QualityNorm.RELAXED_OPTIMUM
    moves: tuple[MoveKind, ...] = DEFAULT_AFP_MOVES
    move_params: MoveParams = field(default_factory=MoveParams)
    p_h0: float = 0.7
    alpha_h: float = 1.0
    # False keeps the Metropolis normalization pinned at 1 for every run
    calibrate: bool = True
    stop_at_first_feasible: bool = False
    time_limit: float | None = None
    # wall-clock cap on a whole solve (all runs); None means no cap
    solve_time_limit: float | None = None
    eps_int: float = EPS_INT
    eps_feas: float = EPS_FEAS

    def __post_init__(self) -> None:
        if self.n_total < 0 or self.n_run < 1 or self.stall < 1:
            raise ValueError("iteration budgets must be positive")
        if not 0.0 <= self.alpha0 <= 1.0 or not 0.0 < self.alpha_decay < 1.0:
            raise ValueError("alpha0 must be in [0, 1] and alpha_decay in (0, 1)")
        if not 0.0 < self.p_h0 < 1.0 or self.alpha_h <= 0.0:
            raise ValueError("p_h0 must be in (0, 1) and alpha_h positive")

    def run_config(self, deadline) -> "SolverConfig":
        """Copy whose per-run time limit never outlasts the solve deadline."""
        if deadline.limit is None:
            return self
        left = max(0.0, deadline.limit - deadline.elapsed())
        limit = left if self.time_limit is None else min(self.time_limit, left)
        return replace(self, time_limit=limit)

    def projection(self, z_star: float | None) -> ProjectionConfig:
        return ProjectionConfig(
            alpha0=self.alpha0, alpha_decay=self.alpha_decay, quality_norm=self.quality_norm, z_star=z_star,
        )

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)
