"""The projection LP: distance to an integral point blended with the scaled objective."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lp import Basis, LpProblem, LpSolution, LpStatus, solve_lp
from .model import LE, MipInstance, SolutionPair

ALPHA_FLOOR = 1e-12


class QualityNorm(enum.Enum):
    COEFF_NORM = "coeff"
    RELAXED_OPTIMUM = "zstar"


class ProjectionError(RuntimeError):
    """The projection LP failed although the relaxation was feasible."""


@dataclass(frozen=True)
class ProjectionConfig:
    alpha0: float = 1.0
    alpha_decay: float = 0.9
    quality_norm: QualityNorm = QualityNorm.RELAXED_OPTIMUM
    z_star: float | None = None
    # None means sqrt(|active|)
    delta_norm: float | None = None

    def quality_scale(self, inst: MipInstance) -> float:
        """Denominator of the objective term; 0 disables the term."""
        cnorm = float(np.linalg.norm(inst.objective))
        if cnorm == 0.0:
            return 0.0
        if self.quality_norm is QualityNorm.COEFF_NORM:
            return cnorm
        if self.z_star is None:
            raise ValueError("z_star must be set for the relaxed-optimum normalization")
        return max(abs(self.z_star), 1.0)


def advance_alpha(alpha: float, cfg: ProjectionConfig | None = None) -> float:
    decay = cfg.alpha_decay if cfg is not None else 0.9
    nxt = decay * alpha
    return 0.0 if nxt < ALPHA_FLOOR else nxt


def build_projection(inst: MipInstance, x_tilde: np.ndarray, active: np.ndarray, alpha: float,
                     cfg: ProjectionConfig) -> LpProblem:
    """LP over ``(x, d)`` with one auxiliary ``d_i >= |x_i - x_tilde_i|`` per active index.

    Columns ``n .. n+len(active)-1`` are the auxiliaries, in the order of
    ``active``. Of the two linearization rows, the one implied by the
    variable bounds (``x_tilde_i`` sitting on a bound) is left out.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    active = np.asarray(active, dtype=np.int64)
    n, m, k = inst.num_vars, inst.num_rows, active.size
    xt = np.asarray(x_tilde, dtype=float)[active]
    lo, hi = inst.lower[active], inst.upper[active]

    q = cfg.quality_scale(inst)
    obj_x = inst.objective * (alpha / q) if q > 0 else np.zeros(n)
    dnorm = cfg.delta_norm if cfg.delta_norm is not None else np.sqrt(k)
    obj_d = np.full(k, (1.0 - alpha) / dnorm) if k else np.zeros(0)

    up_rows = np.flatnonzero(xt < hi)  # x_i - d_i <= xt_i
    dn_rows = np.flatnonzero(xt > lo)  # -x_i - d_i <= -xt_i
    r_up, r_dn = up_rows.size, dn_rows.size
    rows = np.concatenate([np.arange(r_up), np.arange(r_up), r_up + np.arange(r_dn), r_up + np.arange(r_dn)])
    cols = np.concatenate([active[up_rows], n + up_rows, active[dn_rows], n + dn_rows])
    vals = np.concatenate([np.ones(r_up), -np.ones(r_up), -np.ones(r_dn), -np.ones(r_dn)])
    aux_A = sp.csr_matrix((vals, (rows, cols)), shape=(r_up + r_dn, n + k))
    base = sp.hstack([inst.A, sp.csr_matrix((m, k))], format="csr")
    A = sp.vstack([base, aux_A], format="csr")

    d_hi = np.maximum(hi - xt, xt - lo)
    start_at_upper = np.zeros(n + k, dtype=bool)
    start_at_upper[n:] = np.isfinite(d_hi)
    return LpProblem(
        objective=np.concatenate([obj_x, obj_d]),
        A=A,
        sense=inst.sense + (LE,) * (r_up + r_dn),
        rhs=np.concatenate([inst.rhs, xt[up_rows], -xt[dn_rows]]),
        lower=np.concatenate([inst.lower, np.zeros(k)]),
        upper=np.concatenate([inst.upper, d_hi]),
        start_at_upper=start_at_upper,
    )


def solve_projection(inst: MipInstance, x_tilde: np.ndarray, active: np.ndarray, alpha: float,
                     cfg: ProjectionConfig, warm: Basis | None = None) -> LpSolution:
    lp = build_projection(inst, x_tilde, active, alpha, cfg)
    # the row count depends on which linearization rows were dropped
    if warm is not None and len(warm.basic) != lp.num_rows:
        warm = None
    sol = solve_lp(lp, warm)
    if sol.status is LpStatus.INFEASIBLE:
        raise ProjectionError("projection LP infeasible over a feasible polyhedron")
    if sol.status is not LpStatus.OPTIMAL:
        raise ProjectionError(f"projection LP ended with status {sol.status.value}")
    return sol


def project(inst: MipInstance, x_tilde: np.ndarray, active: np.ndarray, alpha: float,
            cfg: ProjectionConfig, warm: Basis | None = None) -> SolutionPair:
    """Project ``x_tilde`` onto the LP polyhedron and pair the result with it."""
    sol = solve_projection(inst, x_tilde, active, alpha, cfg, warm)
    x_bar = sol.x[: inst.num_vars].copy()
    pair = SolutionPair.build(inst, x_bar, np.asarray(x_tilde, dtype=float), active, basis=sol.basis)
    pair.aux_sum = float(sol.x[inst.num_vars:].sum())
    pair.lp_iterations = sol.iterations
    return pair
