"""Bounded-variable primal revised simplex.

Rows are turned into equalities with one slack per row (``a.x + s = b``),
the slack bounds encoding the row sense. Phase 1 minimizes the sum of
bound infeasibilities of the basic variables from any starting basis, so
cold starts and warm starts share one code path. The basis inverse is kept
dense and refactored periodically; this is meant for problems with at most
a few thousand nonzeros.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .model import EQ, GE, LE, MipInstance

logger = logging.getLogger(__name__)

PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 100
DEGENERATE_LIMIT = 50


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITER_LIMIT = "iteration_limit"


class LpError(RuntimeError):
    pass


@dataclass(frozen=True)
class Basis:
    """Warm-start token: basic column indices and the nonbasic-at-upper flags."""

    basic: tuple[int, ...]
    at_upper: tuple[bool, ...]


@dataclass
class LpProblem:
    objective: np.ndarray
    A: sp.csr_matrix
    sense: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    # boxed nonbasic columns flagged here start at their upper bound on a cold start
    start_at_upper: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.objective = np.asarray(self.objective, dtype=float)
        self.A = sp.csr_matrix(self.A, dtype=float)
        n = self.objective.shape[0]
        if self.A.shape[0] == 0:
            self.A = sp.csr_matrix((0, n))
        m = self.A.shape[0]
        self.sense = tuple(self.sense)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.A.shape[1] != n or len(self.sense) != m or self.rhs.shape != (m,):
            raise LpError("inconsistent LP dimensions")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise LpError("bound vectors have wrong length")
        if not np.all(np.isfinite(self.objective)):
            raise LpError("objective must be finite")

    @classmethod
    def from_instance(cls, inst: MipInstance) -> "LpProblem":
        return cls(inst.objective, inst.A, inst.sense, inst.rhs, inst.lower, inst.upper)

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float = float("nan")
    basis: Basis | None = None
    iterations: int = 0
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _slack_bounds(sense: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray]:
    m = len(sense)
    lo = np.zeros(m)
    hi = np.zeros(m)
    for i, s in enumerate(sense):
        if s == LE:
            hi[i] = np.inf
        elif s == GE:
            lo[i] = -np.inf
        elif s != EQ:
            raise LpError(f"unknown row sense {s!r}")
    return lo, hi


class _Simplex:
    def __init__(self, problem: LpProblem, max_iter: int | None):
        self.p = problem
        n, m = problem.num_vars, problem.num_rows
        self.n, self.m = n, m
        self.N = n + m
        self.M = np.hstack([problem.A.toarray(), np.eye(m)])
        slo, shi = _slack_bounds(problem.sense)
        self.lo = np.concatenate([problem.lower, slo])
        self.hi = np.concatenate([problem.upper, shi])
        self.cost = np.concatenate([problem.objective, np.zeros(m)])
        self.b = problem.rhs
        self.fixed = self.lo == self.hi
        self.max_iter = max_iter if max_iter is not None else 50 * (self.N + m) + 1000
        self.iterations = 0

    def _nonbasic_value(self, j: int, at_upper: bool) -> float:
        lo, hi = self.lo[j], self.hi[j]
        if at_upper and np.isfinite(hi):
            return hi
        if np.isfinite(lo):
            return lo
        if np.isfinite(hi):
            return hi
        return 0.0

    def _start(self, warm: Basis | None) -> None:
        n, m, N = self.n, self.m, self.N
        at_upper = np.zeros(N, dtype=bool)
        basic = None
        if warm is not None and len(warm.basic) == m and len(warm.at_upper) == N:
            basic = np.array(warm.basic, dtype=np.int64)
            at_upper = np.array(warm.at_upper, dtype=bool)
            if np.unique(basic).size != m or (m and (basic.min() < 0 or basic.max() >= N)):
                basic = None
        if basic is None:
            basic = np.arange(n, N, dtype=np.int64)
            if self.p.start_at_upper is not None:
                at_upper[:n] = np.asarray(self.p.start_at_upper, dtype=bool)
        self.x = np.array([self._nonbasic_value(j, at_upper[j]) for j in range(N)])
        self.basic = basic
        self.is_basic = np.zeros(N, dtype=bool)
        self.is_basic[basic] = True
        if not self._refactor():
            # singular warm basis
            self.basic = np.arange(n, N, dtype=np.int64)
            self.is_basic[:] = False
            self.is_basic[self.basic] = True
            self._refactor()

    def _refactor(self) -> bool:
        self.since_refactor = 0
        if self.m == 0:
            self.Binv = np.zeros((0, 0))
            return True
        B = self.M[:, self.basic]
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(Binv)) or np.abs(Binv).max(initial=0.0) > 1e12:
            return False
        self.Binv = Binv
        self.x[self.basic] = 0.0
        resid = self.b - self.M @ self.x
        self.x[self.basic] = Binv @ resid
        self.since_refactor = 0
        return True

    def run(self, warm: Basis | None) -> LpSolution:
        self._start(warm)
        bland = False
        degenerate = 0
        verified = False
        lo, hi = self.lo, self.hi
        while True:
            if self.iterations >= self.max_iter:
                return self._finish(LpStatus.ITER_LIMIT)
            basic = self.basic
            xb = self.x[basic]
            below = xb < lo[basic] - PRIMAL_TOL
            above = xb > hi[basic] + PRIMAL_TOL
            phase1 = bool(below.any() or above.any())
            if phase1:
                g = above.astype(float) - below.astype(float)
                d = -((g @ self.Binv) @ self.M)
            else:
                y = self.cost[basic] @ self.Binv
                d = self.cost - y @ self.M
            x = self.x
            movable = ~self.is_basic & ~self.fixed
            inc = movable & (d < -DUAL_TOL) & (x < hi - PRIMAL_TOL)
            dec = movable & (d > DUAL_TOL) & (x > lo + PRIMAL_TOL)
            cand = inc | dec
            if not cand.any():
                if not verified and self.since_refactor > 0:
                    # re-derive basic values from a fresh factorization before declaring
                    self._refactor()
                    verified = True
                    continue
                return self._finish(LpStatus.INFEASIBLE if phase1 else LpStatus.OPTIMAL)
            verified = False
            if bland:
                j = int(np.flatnonzero(cand)[0])
            else:
                score = np.where(cand, np.abs(d), -1.0)
                j = int(np.argmax(score))
            sigma = 1.0 if inc[j] else -1.0
            alpha = self.Binv @ self.M[:, j]
            rate = -sigma * alpha
            r, t_ratio, target = self._ratio_test(xb, rate, below, above, phase1, bland)
            t_flip = hi[j] - lo[j]
            self.iterations += 1
            if t_flip <= t_ratio:
                if not np.isfinite(t_flip):
                    if phase1:
                        logger.debug("unbounded phase-1 ray; treating as numerical failure")
                        return self._finish(LpStatus.ITER_LIMIT)
                    return self._finish(LpStatus.UNBOUNDED)
                self.x[basic] = xb + rate * t_flip
                self.x[j] = hi[j] if sigma > 0 else lo[j]
                degenerate = 0
                bland = False
                continue
            t = max(t_ratio, 0.0)
            self.x[basic] = xb + rate * t
            self.x[j] += sigma * t
            leaving = basic[r]
            self.x[leaving] = target
            self._pivot(r, j, alpha)
            if t <= 1e-12:
                degenerate += 1
                if degenerate > DEGENERATE_LIMIT:
                    bland = True
            else:
                degenerate = 0
                bland = False

    def _ratio_test(self, xb, rate, below, above, phase1, bland):
        basic = self.basic
        lo = self.lo[basic]
        hi = self.hi[basic]
        dec = rate < -PIVOT_TOL
        inc = rate > PIVOT_TOL
        bound = np.full(self.m, np.nan)
        if phase1:
            bound = np.where(dec & above, hi, bound)
            bound = np.where(dec & ~above & ~below, lo, bound)
            bound = np.where(inc & below, lo, bound)
            bound = np.where(inc & ~below & ~above, hi, bound)
        else:
            bound = np.where(dec, lo, bound)
            bound = np.where(inc, hi, bound)
        valid = np.isfinite(bound)
        if not valid.any():
            return -1, np.inf, np.nan
        idx = np.flatnonzero(valid)
        step = np.abs(rate[idx])
        gap = np.where(rate[idx] < 0, xb[idx] - bound[idx], bound[idx] - xb[idx])
        ratios = np.maximum(gap, 0.0) / step
        if bland:
            best = ratios.min()
            ties = idx[ratios <= best + 1e-12]
            r = int(ties[np.argmin(basic[ties])])
        else:
            # Harris two-pass: largest pivot among steps within the relaxed minimum
            relaxed = (np.maximum(gap, 0.0) + PRIMAL_TOL) / step
            tmax = relaxed.min()
            ok = ratios <= tmax
            k = np.flatnonzero(ok)[np.argmax(step[ok])]
            r = int(idx[k])
        k = int(np.flatnonzero(idx == r)[0])
        return r, float(ratios[k]), float(bound[r])

    def _pivot(self, r: int, j: int, alpha: np.ndarray) -> None:
        leaving = self.basic[r]
        piv = alpha[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row
        self.basic[r] = j
        self.is_basic[leaving] = False
        self.is_basic[j] = True
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            if not self._refactor():
                raise LpError("basis became singular")

    def _finish(self, status: LpStatus) -> LpSolution:
        n = self.n
        at_upper = tuple(bool(v) for v in (~self.is_basic & np.isfinite(self.hi) & (self.x >= self.hi) & (self.hi > self.lo)))
        basis = Basis(tuple(int(k) for k in self.basic), at_upper)
        if status is not LpStatus.OPTIMAL:
            return LpSolution(status, basis=basis, iterations=self.iterations)
        x = np.clip(self.x[:n], self.p.lower, self.p.upper)
        y = self.cost[self.basic] @ self.Binv if self.m else np.zeros(0)
        rc = self.p.objective - (self.p.A.T @ y if self.m else 0.0)
        return LpSolution(
            status,
            x=x,
            objective=float(self.p.objective @ x),
            basis=basis,
            iterations=self.iterations,
            duals=y,
            reduced_costs=np.asarray(rc, dtype=float),
        )


def solve_lp(problem: LpProblem, warm: Basis | None = None, *, max_iter: int | None = None) -> LpSolution:
    """Minimize ``problem.objective`` over the problem's polyhedron.

    ``warm`` is a basis returned by a previous solve on a problem with the
    same dimensions; bounds and right-hand sides may differ.
    """
    solver = _Simplex(problem, max_iter)
    try:
        return solver.run(warm)
    except LpError:
        if warm is None:
            raise
        logger.debug("warm start failed, retrying cold")
        return _Simplex(problem, max_iter).run(None)


def solve_relaxation(inst: MipInstance) -> LpSolution:
    """Solve the LP relaxation of ``inst`` (integrality dropped)."""
    return solve_lp(LpProblem.from_instance(inst))


def dual_objective(problem: LpProblem, y: np.ndarray) -> float:
    """Lagrangian dual value at row multipliers ``y`` (``-inf`` when y is not dual-feasible).

    For any ``y`` this bounds the optimum from below, which is what the
    weak-duality checks rely on.
    """
    y = np.asarray(y, dtype=float)
    for yi, s in zip(y, problem.sense):
        if (s == LE and yi > DUAL_TOL) or (s == GE and yi < -DUAL_TOL):
            return -np.inf
    rc = problem.objective - problem.A.T @ y
    total = float(problem.rhs @ y)
    for dj, lj, uj in zip(rc, problem.lower, problem.upper):
        if dj > 0:
            if not np.isfinite(lj):
                if dj > DUAL_TOL:
                    return -np.inf
                continue
            total += dj * lj
        elif dj < 0:
            if not np.isfinite(uj):
                if dj < -DUAL_TOL:
                    return -np.inf
                continue
            total += dj * uj
    return total
