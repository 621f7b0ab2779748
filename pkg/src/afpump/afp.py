"""Annealed feasibility pump: Metropolis-guided moves between solution pairs."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .common import Deadline, Relaxation, pair_feasible, relax, relaxation_failure
from .config import SolverConfig
from .model import MipInstance, SolutionPair
from .moves import NoCandidates, apply_move, available_moves
from .projection import advance_alpha, project
from .report import RunReport, SolveReport


def acceptance_probability(delta: float, alpha: float, delta_norm: float) -> float:
    if delta <= 0.0:
        return 1.0
    if alpha <= 0.0:
        return 0.0
    return math.exp(-(delta / delta_norm) / alpha)


def metropolis_accept(delta: float, alpha: float, delta_norm: float, rng: np.random.Generator) -> bool:
    """Accept improving moves always, worsening ones with probability exp(-(delta/norm)/alpha)."""
    if delta_norm <= 0.0:
        raise ValueError("delta_norm must be positive")
    if delta <= 0.0:
        return True
    if alpha <= 0.0:
        return False
    return bool(rng.random() <= acceptance_probability(delta, alpha, delta_norm))


def calibrate_delta_norm(delta_max: float, alpha_h: float, p_h: float) -> float:
    """Normalization under which the worst move is accepted with probability p_h at alpha_h.

    With no worsening move observed (``delta_max == 0``) the normalization stays 1.
    """
    if not 0.0 < p_h < 1.0:
        raise ValueError("p_h must lie in (0, 1)")
    if delta_max <= 0.0:
        return 1.0
    return delta_max / (alpha_h * -math.log(p_h))


def update_ph(p_h: float, feasible_found: bool) -> float:
    if not 0.0 < p_h < 1.0:
        raise ValueError("p_h must lie in (0, 1)")
    return 0.9 * p_h if feasible_found else math.sqrt(p_h)


@dataclass
class AnnealState:
    p_h: float = 0.7
    alpha_h: float = 1.0
    delta_norm: float = 1.0
    delta_max: float = 0.0
    calibrated: bool = False
    feasible_found_prev_run: bool = False

    def observe(self, delta: float) -> None:
        # the worst move is tracked only until the first calibration
        if not self.calibrated and delta > self.delta_max:
            self.delta_max = delta

    def end_run(self, feasible: bool, calibrate: bool = True) -> None:
        self.feasible_found_prev_run = feasible
        if not calibrate:
            return
        self.p_h = update_ph(self.p_h, feasible)
        if self.delta_max > 0.0:
            self.delta_norm = calibrate_delta_norm(self.delta_max, self.alpha_h, self.p_h)
            self.calibrated = True


def initial_integral(inst: MipInstance, relaxation: Relaxation, active: np.ndarray,
                     rng: np.random.Generator) -> np.ndarray:
    """Uniform random integers on ``active`` and relaxation values elsewhere."""
    x = relaxation.x.copy()
    lo = inst.lower[active]
    hi = inst.upper[active]
    x[active] = lo + np.floor(rng.random(active.size) * (hi - lo + 1.0))
    return x


def afp_run(inst: MipInstance, cfg: SolverConfig, state: AnnealState, rng: np.random.Generator, *,
            relaxation: Relaxation | None = None, active: np.ndarray | None = None,
            max_iterations: int | None = None, run_index: int = 0, events: list | None = None,
            phase: str = "single") -> RunReport:
    """One annealing run from a random integral point.

    Each iteration shuffles the move list and projects candidates until one
    passes the Metropolis test or the list is exhausted; alpha decays once
    per iteration either way.
    """
    relaxation = relaxation or relax(inst)
    active = inst.integers if active is None else np.asarray(active, dtype=np.int64)
    budget = cfg.n_run if max_iterations is None else min(cfg.n_run, max_iterations)
    clock = Deadline(cfg.time_limit)
    log = events if events is not None else []
    pcfg = cfg.projection(relaxation.z_star)

    def finish(point, iterations, reason, pair):
        obj = float(inst.objective @ point) if point is not None else None
        return RunReport(
            run=run_index, feasible=point is not None, iterations=iterations, stop_reason=reason,
            wall_seconds=clock.elapsed(), objective=obj, point=point,
            final_relaxed=pair.relaxed, final_integral=pair.integral,
            final_fractionality=pair.fractionality, phase=phase,
        )

    alpha = cfg.alpha0
    if active.size == 0:
        pair = SolutionPair.build(inst, relaxation.x.copy(), relaxation.x.copy(), active)
        return finish(pair_feasible(inst, pair, cfg), 0, "feasible", pair)
    pair = project(inst, initial_integral(inst, relaxation, active, rng), active, alpha, pcfg)
    point = pair_feasible(inst, pair, cfg)
    if point is not None:
        return finish(point, 0, "feasible", pair)

    kinds = available_moves(inst, active, cfg.moves)
    best = pair.fractionality
    since_best = 0
    it = 0
    while it < budget:
        if clock.expired():
            return finish(None, it, "time", pair)
        it += 1
        for k in rng.permutation(len(kinds)):
            kind = kinds[k]
            try:
                x_new, _ = apply_move(kind, inst, pair, rng, cfg.move_params)
            except NoCandidates:
                continue
            cand = project(inst, x_new, active, alpha, pcfg, warm=pair.basis)
            delta = cand.fractionality - pair.fractionality
            if delta > 0.0:
                state.observe(delta)
            point = pair_feasible(inst, cand, cfg)
            # an integral relaxed point ends the run whatever the Metropolis draw would say
            accepted = point is not None or metropolis_accept(delta, alpha, state.delta_norm, rng)
            log.append({
                "phase": phase, "run": run_index, "iter": it, "alpha": alpha, "move": kind.value,
                "delta": delta, "delta_normalized": delta / state.delta_norm, "accepted": accepted,
                "fractionality": cand.fractionality if accepted else pair.fractionality,
                "quality": cand.objective_value if accepted else pair.objective_value,
            })
            if accepted:
                pair = cand
                break
        alpha = advance_alpha(alpha, pcfg)
        if point is not None:
            return finish(point, it, "feasible", pair)
        if pair.fractionality < best - cfg.eps_int:
            best, since_best = pair.fractionality, 0
        else:
            since_best += 1
        if since_best >= cfg.stall:
            return finish(None, it, "stall", pair)
    return finish(None, it, "iterations", pair)


def afp_solve(inst: MipInstance, cfg: SolverConfig, rng: np.random.Generator,
              state: AnnealState | None = None) -> SolveReport:
    """Repeat AFP runs under the global iteration budget, recalibrating after each run."""
    start = time.perf_counter()
    report = SolveReport(instance=inst.name, algorithm="afp")
    if cfg.n_total == 0:
        return report
    relaxation = relax(inst)
    if not relaxation.feasible:
        report.status = relaxation_failure(relaxation)
        report.wall_seconds = time.perf_counter() - start
        return report
    state = state or AnnealState(p_h=cfg.p_h0, alpha_h=cfg.alpha_h)
    remaining = cfg.n_total
    run_index = 0
    deadline = Deadline(cfg.solve_time_limit)
    while remaining > 0 and not deadline.expired():
        run = afp_run(inst, cfg.run_config(deadline), state, rng, relaxation=relaxation,
                      max_iterations=remaining, run_index=run_index, events=report.events)
        run.delta_norm = state.delta_norm
        run.p_h = state.p_h
        report.runs.append(run)
        remaining -= run.budget_used
        report.iterations += run.budget_used
        run_index += 1
        state.end_run(run.feasible, cfg.calibrate)
        if run.feasible:
            report.offer(run.point, run.objective)
            if cfg.stop_at_first_feasible:
                break
    report.wall_seconds = time.perf_counter() - start
    return report
