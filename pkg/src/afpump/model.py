"""In-memory MIP model, points, and solution pairs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

EPS_INT = 1e-6
EPS_FEAS = 1e-6

LE, GE, EQ = "L", "G", "E"
SENSES = (LE, GE, EQ)


class ModelError(ValueError):
    """Raised when an instance or point violates the model invariants."""


def make_point(values: Iterable[float], num_vars: int | None = None) -> np.ndarray:
    """Validate and copy ``values`` into a dense float vector.

    NaN and infinite entries are rejected.
    """
    p = np.array(values, dtype=float).ravel()
    if num_vars is not None and p.shape[0] != num_vars:
        raise ModelError(f"point has {p.shape[0]} entries, expected {num_vars}")
    if not np.all(np.isfinite(p)):
        raise ModelError("point contains non-finite entries")
    return p


@dataclass(frozen=True, eq=False)
class MipInstance:
    """min c.x  s.t.  A x (<=|>=|=) b,  lower <= x <= upper,  x_i integer for i in I.

    Bounds are kept explicit rather than folded into ``A``. Maximization
    problems are stored negated; ``maximize`` records the original sense
    so reported objectives and MPS output can be translated back.
    """

    name: str
    objective: np.ndarray
    A: sp.csr_matrix
    sense: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integers: np.ndarray
    var_names: tuple[str, ...] = ()
    row_names: tuple[str, ...] = ()
    objective_offset: float = 0.0
    maximize: bool = False
    binaries: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.objective, dtype=float).ravel()
        A = sp.csr_matrix(self.A, dtype=float)
        n = c.shape[0]
        if A.shape[1] != n and A.shape[0] > 0:
            raise ModelError(f"A has {A.shape[1]} columns, objective has {n} entries")
        if A.shape[0] == 0:
            A = sp.csr_matrix((0, n))
        m = A.shape[0]
        sense = tuple(self.sense)
        if len(sense) != m:
            raise ModelError("row_sense length differs from number of rows")
        if any(s not in SENSES for s in sense):
            raise ModelError(f"unknown row sense in {set(sense) - set(SENSES)}")
        b = np.asarray(self.rhs, dtype=float).ravel()
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if b.shape[0] != m or lo.shape[0] != n or hi.shape[0] != n:
            raise ModelError("dimension mismatch in rhs or bounds")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(b))):
            raise ModelError("objective and rhs must be finite")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise ModelError("lower bound exceeds upper bound")
        ints = np.unique(np.asarray(self.integers, dtype=np.int64).ravel())
        if ints.size and (ints[0] < 0 or ints[-1] >= n):
            raise ModelError("integer index out of range")
        if ints.size and not (np.all(np.isfinite(lo[ints])) and np.all(np.isfinite(hi[ints]))):
            bad = ints[~(np.isfinite(lo[ints]) & np.isfinite(hi[ints]))]
            raise ModelError(f"unbounded integer variables: {bad.tolist()[:10]}")
        A.sum_duplicates()
        A.sort_indices()
        for name, value in (("objective", c), ("A", A), ("sense", sense), ("rhs", b),
                            ("lower", lo), ("upper", hi), ("integers", ints)):
            object.__setattr__(self, name, value)
        for arr in (c, b, lo, hi, ints):
            arr.setflags(write=False)
        if not self.var_names:
            object.__setattr__(self, "var_names", tuple(f"x{j}" for j in range(n)))
        if not self.row_names:
            object.__setattr__(self, "row_names", tuple(f"r{i}" for i in range(m)))
        if len(self.var_names) != n or len(self.row_names) != m:
            raise ModelError("name list length mismatch")
        binaries = ints[(lo[ints] == 0.0) & (hi[ints] == 1.0)]
        binaries.setflags(write=False)
        object.__setattr__(self, "binaries", binaries)

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def is_binary(self) -> bool:
        """True when every discrete variable is 0/1 (a mixed-binary program)."""
        return self.binaries.size == self.integers.size

    def report_objective(self, value: float) -> float:
        """Translate an internal (minimization) objective value to the original sense."""
        return -value if self.maximize else value

    def evaluate(self, x: np.ndarray) -> float:
        return float(self.objective @ x) + self.objective_offset

    def with_bounds(self, lower: np.ndarray, upper: np.ndarray, name: str | None = None) -> "MipInstance":
        return MipInstance(
            name=name or self.name, objective=self.objective, A=self.A, sense=self.sense,
            rhs=self.rhs, lower=lower, upper=upper, integers=self.integers,
            var_names=self.var_names, row_names=self.row_names,
            objective_offset=self.objective_offset, maximize=self.maximize,
        )

    def fixed(self, indices: Sequence[int], values: Sequence[float]) -> "MipInstance":
        """Copy of the instance with ``x[indices]`` fixed (lower = upper = value)."""
        lo = self.lower.copy()
        hi = self.upper.copy()
        idx = np.asarray(indices, dtype=np.int64)
        vals = np.asarray(values, dtype=float)
        lo[idx] = vals
        hi[idx] = vals
        return self.with_bounds(lo, hi)

    def structurally_equal(self, other: "MipInstance") -> bool:
        return (
            self.name == other.name
            and self.maximize == other.maximize
            and self.objective_offset == other.objective_offset
            and self.sense == other.sense
            and self.var_names == other.var_names
            and self.row_names == other.row_names
            and np.array_equal(self.objective, other.objective)
            and np.array_equal(self.rhs, other.rhs)
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
            and np.array_equal(self.integers, other.integers)
            and self.A.shape == other.A.shape
            and (self.A != other.A).nnz == 0
        )


def row_activity(inst: MipInstance, p: np.ndarray) -> np.ndarray:
    return inst.A @ p


def lp_violation(inst: MipInstance, p: np.ndarray) -> float:
    """Largest violation of any row or variable bound at ``p`` (0 when p is in P)."""
    p = np.asarray(p, dtype=float)
    if p.shape != (inst.num_vars,):
        raise ModelError(f"point has shape {p.shape}, expected ({inst.num_vars},)")
    worst = 0.0
    if inst.num_vars:
        worst = max(float(np.max(inst.lower - p, initial=0.0)), float(np.max(p - inst.upper, initial=0.0)))
    if inst.num_rows:
        act = inst.A @ p
        sense = np.array(inst.sense)
        diff = act - inst.rhs
        viol = np.where(sense == LE, diff, np.where(sense == GE, -diff, np.abs(diff)))
        worst = max(worst, float(np.max(viol, initial=0.0)))
    return worst


def fractionality(relaxed: np.ndarray, integral: np.ndarray, active: np.ndarray) -> float:
    """L1 distance between the two points restricted to the ``active`` coordinates."""
    relaxed = np.asarray(relaxed, dtype=float)
    integral = np.asarray(integral, dtype=float)
    if relaxed.shape != integral.shape:
        raise ModelError("points differ in dimension")
    active = np.asarray(active, dtype=np.int64)
    return float(np.abs(relaxed[active] - integral[active]).sum())


def integrality_gap(p: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Per-coordinate distance to the nearest integer on ``active``."""
    v = np.asarray(p, dtype=float)[np.asarray(active, dtype=np.int64)]
    return np.abs(v - np.round(v))


def is_integral(p: np.ndarray, active: np.ndarray, eps_int: float = EPS_INT) -> bool:
    return bool(np.all(integrality_gap(p, active) <= eps_int))


def is_mip_feasible(inst: MipInstance, p: np.ndarray, eps_feas: float = EPS_FEAS,
                    eps_int: float = EPS_INT) -> bool:
    p = np.asarray(p, dtype=float)
    if p.shape != (inst.num_vars,) or not np.all(np.isfinite(p)):
        return False
    return lp_violation(inst, p) <= eps_feas and is_integral(p, inst.integers, eps_int)


@dataclass
class SolutionPair:
    """A relaxed point (in P) and an integral point, with their fractionality."""

    relaxed: np.ndarray
    integral: np.ndarray
    active: np.ndarray
    fractionality: float
    objective_value: float
    basis: object = None
    aux_sum: float | None = None
    lp_iterations: int = 0

    @classmethod
    def build(cls, inst: MipInstance, relaxed: np.ndarray, integral: np.ndarray,
              active: np.ndarray, basis: object = None) -> "SolutionPair":
        active = np.asarray(active, dtype=np.int64)
        return cls(
            relaxed=relaxed,
            integral=integral,
            active=active,
            fractionality=fractionality(relaxed, integral, active),
            objective_value=float(inst.objective @ relaxed),
            basis=basis,
        )

    def snapped(self) -> np.ndarray:
        """Relaxed point with the active coordinates rounded to integers."""
        x = self.relaxed.copy()
        x[self.active] = np.round(x[self.active])
        return x
