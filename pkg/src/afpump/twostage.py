"""Hard-variable fixing: bootstrap, then alternate stage-1 and stage-2 runs.

Stage 1 enforces integrality only on the hard set H. Stage 2 fixes H at the
stage-1 values and enforces integrality on the remaining discrete variables.
The size of H shrinks after stage-1 failures and stage-2 successes and grows
after stage-2 failures.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from .afp import AnnealState, afp_run
from .common import Deadline, Relaxation, relax, relaxation_failure
from .config import SolverConfig
from .fp import fp_run
from .model import MipInstance, is_mip_feasible
from .report import RunReport, SolveReport


class Phase(enum.Enum):
    BOOTSTRAP = "bootstrap"
    STAGE1 = "stage1"
    STAGE2 = "stage2"


class Outcome(enum.Enum):
    STAGE1_INFEASIBLE = "stage1_infeasible"
    STAGE2_INFEASIBLE = "stage2_infeasible"
    STAGE2_FEASIBLE = "stage2_feasible"


def shrink(n: int) -> int:
    """ceil(0.8 * n) in exact integer arithmetic."""
    return (4 * n + 4) // 5


def grow(n: int) -> int:
    """ceil(1.2 * n) in exact integer arithmetic."""
    return (6 * n + 4) // 5


@dataclass
class HardFixState:
    """Infeasibility ranks and the current hard set.

    ``ranks`` is indexed by variable; only entries of ``integers`` ever change.
    """

    integers: np.ndarray
    ranks: np.ndarray
    hard: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    n_h: int = 0
    phase: Phase = Phase.BOOTSTRAP

    @classmethod
    def for_instance(cls, inst: MipInstance) -> HardFixState:
        return cls(integers=inst.integers.copy(), ranks=np.zeros(inst.num_vars, dtype=np.int64))

    @property
    def easy(self) -> np.ndarray:
        return np.setdiff1d(self.integers, self.hard)

    def top(self, n: int) -> np.ndarray:
        """The ``n`` discrete variables of highest rank; ties go to the lower index."""
        idx = self.integers
        order = np.lexsort((idx, -self.ranks[idx]))
        return np.sort(idx[order[:n]])


def update_ranks(state: HardFixState, x_bar: np.ndarray, candidates: np.ndarray | None = None,
                 eps_int: float = 1e-6) -> HardFixState:
    """Increment the rank of every candidate discrete variable that is fractional in ``x_bar``."""
    idx = state.integers if candidates is None else np.asarray(candidates, dtype=np.int64)
    vals = np.asarray(x_bar, dtype=float)[idx]
    frac = np.abs(vals - np.round(vals)) > eps_int
    state.ranks[idx[frac]] += 1
    return state


def bootstrap_hard_set(state: HardFixState) -> bool:
    """Set H to every variable with a positive rank; False when there is none."""
    pos = state.integers[state.ranks[state.integers] > 0]
    if pos.size == 0:
        return False
    state.hard = np.sort(pos)
    state.n_h = int(pos.size)
    state.phase = Phase.STAGE1
    return True


def resize_hard_set(state: HardFixState, outcome: Outcome) -> HardFixState:
    if state.n_h <= 0:
        raise ValueError("resize_hard_set needs n_h > 0")
    if outcome is Outcome.STAGE2_INFEASIBLE:
        n = min(grow(state.n_h), state.integers.size)
    else:
        n = shrink(state.n_h)
    state.n_h = max(1, n)
    state.hard = state.top(state.n_h)
    state.phase = Phase.STAGE1
    return state


def fix_hard(inst: MipInstance, hard: np.ndarray, values: np.ndarray) -> MipInstance:
    """Copy of ``inst`` with ``lower = upper = round(value)`` on the hard set."""
    fixed = inst.fixed(hard, np.round(np.asarray(values, dtype=float)[hard]))
    if not np.array_equal(fixed.lower[hard], fixed.upper[hard]):
        raise AssertionError("stage-2 fixing left a hard variable free")
    return fixed


def twostage_solve(inst: MipInstance, cfg: SolverConfig, rng: np.random.Generator, *,
                   algorithm: str = "afp", initial_hard: np.ndarray | None = None) -> SolveReport:
    """Run the two-stage controller under the shared ``n_t`` budget.

    ``initial_hard`` skips the bootstrap and starts stage 1 with that hard set.
    """
    if algorithm not in ("afp", "fp"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    start = time.perf_counter()
    report = SolveReport(instance=inst.name, algorithm=f"{algorithm}-2stage")
    if cfg.n_total == 0:
        return report
    relaxation = relax(inst)
    if not relaxation.feasible:
        report.status = relaxation_failure(relaxation)
        report.wall_seconds = time.perf_counter() - start
        return report

    anneal = AnnealState(p_h=cfg.p_h0, alpha_h=cfg.alpha_h)
    hf = HardFixState.for_instance(inst)
    if initial_hard is not None:
        hf.hard = np.sort(np.asarray(initial_hard, dtype=np.int64))
        hf.n_h = int(hf.hard.size)
        hf.phase = Phase.STAGE1
    remaining = cfg.n_total
    run_index = 0
    deadline = Deadline(cfg.solve_time_limit)

    def run(target: MipInstance, active: np.ndarray, relax_: Relaxation, phase: Phase) -> RunReport:
        nonlocal remaining, run_index
        report.events.append({"phase": phase.value, "run": run_index, "move": "stage",
                              "n_h": hf.n_h, "hard_size": int(hf.hard.size)})
        run_cfg = cfg.run_config(deadline)
        if algorithm == "afp":
            out = afp_run(target, run_cfg, anneal, rng, relaxation=relax_, active=active,
                          max_iterations=remaining, run_index=run_index, events=report.events,
                          phase=phase.value)
            out.delta_norm = anneal.delta_norm
            out.p_h = anneal.p_h
            anneal.end_run(out.feasible, cfg.calibrate)
        else:
            out = fp_run(target, run_cfg, rng, relaxation=relax_, active=active,
                         max_iterations=remaining, run_index=run_index, events=report.events,
                         phase=phase.value)
        report.runs.append(out)
        remaining -= out.budget_used
        report.iterations += out.budget_used
        run_index += 1
        return out

    def record(point: np.ndarray) -> bool:
        if not is_mip_feasible(inst, point, cfg.eps_feas, cfg.eps_int):
            raise AssertionError("reported point failed the feasibility certificate")
        report.offer(point, float(inst.objective @ point))
        return cfg.stop_at_first_feasible

    while remaining > 0 and not deadline.expired():
        if hf.phase is Phase.BOOTSTRAP:
            out = run(inst, inst.integers, relaxation, Phase.BOOTSTRAP)
            if out.feasible:
                if record(out.point):
                    break
                continue
            update_ranks(hf, out.final_relaxed, inst.integers, cfg.eps_int)
            bootstrap_hard_set(hf)
            continue

        out = run(inst, hf.hard, relaxation, Phase.STAGE1)
        if not out.feasible:
            update_ranks(hf, out.final_relaxed, hf.hard, cfg.eps_int)
            resize_hard_set(hf, Outcome.STAGE1_INFEASIBLE)
            continue
        if remaining <= 0 or deadline.expired():
            break
        easy = hf.easy
        fixed = fix_hard(inst, hf.hard, out.point)
        hf.phase = Phase.STAGE2
        fixed_relax = relax(fixed)
        if not fixed_relax.feasible:
            report.events.append({"phase": Phase.STAGE2.value, "run": run_index, "move": "stage",
                                  "n_h": hf.n_h, "hard_size": int(hf.hard.size),
                                  "status": relaxation_failure(fixed_relax)})
            resize_hard_set(hf, Outcome.STAGE2_INFEASIBLE)
            continue
        out2 = run(fixed, easy, fixed_relax, Phase.STAGE2)
        if out2.feasible:
            stop = record(out2.point)
            resize_hard_set(hf, Outcome.STAGE2_FEASIBLE)
            if stop:
                break
        else:
            update_ranks(hf, out2.final_relaxed, easy, cfg.eps_int)
            resize_hard_set(hf, Outcome.STAGE2_INFEASIBLE)
    report.wall_seconds = time.perf_counter() - start
    return report
