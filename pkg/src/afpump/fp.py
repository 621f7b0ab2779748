"""Classic feasibility pump with cycle detection and weak/strong perturbation."""

from __future__ import annotations

import logging
import time

import numpy as np

from .common import Deadline, Relaxation, feasible_point, integral_key, pair_feasible, relax, relaxation_failure
from .config import SolverConfig
from .model import MipInstance, SolutionPair
from .moves import (
    NoCandidates,
    randomized_round,
    strong_perturb_binary,
    strong_perturb_domain,
    weak_perturb_binary,
    weak_perturb_domain,
)
from .projection import advance_alpha, project
from .report import RunReport, SolveReport

logger = logging.getLogger(__name__)


def _perturb(inst: MipInstance, pair: SolutionPair, active: np.ndarray, rng: np.random.Generator,
             cfg: SolverConfig, weak: bool) -> tuple[np.ndarray, str]:
    binary = bool(np.isin(active, inst.binaries).all())
    weak_fn, strong_fn = (weak_perturb_binary, strong_perturb_binary) if binary else (
        weak_perturb_domain, strong_perturb_domain)
    if weak:
        try:
            x, _ = weak_fn(inst, pair, active, rng, cfg.move_params)
            return x, "weak"
        except NoCandidates:
            pass
    x, _ = strong_fn(inst, pair, active, rng, cfg.move_params)
    return x, "strong"


def fp_run(inst: MipInstance, cfg: SolverConfig, rng: np.random.Generator, *,
           relaxation: Relaxation | None = None, active: np.ndarray | None = None,
           max_iterations: int | None = None, run_index: int = 0, events: list | None = None,
           phase: str = "single") -> RunReport:
    """One feasibility-pump run starting from the relaxation optimum."""
    relaxation = relaxation or relax(inst)
    active = inst.integers if active is None else np.asarray(active, dtype=np.int64)
    budget = cfg.n_run if max_iterations is None else min(cfg.n_run, max_iterations)
    clock = Deadline(cfg.time_limit)
    log = events if events is not None else []
    pcfg = cfg.projection(relaxation.z_star)

    def finish(feasible, point, iterations, reason, pair, perturbations):
        obj = float(inst.objective @ point) if point is not None else None
        return RunReport(
            run=run_index, feasible=feasible, iterations=iterations, stop_reason=reason,
            wall_seconds=clock.elapsed(), objective=obj, point=point,
            final_relaxed=pair.relaxed if pair is not None else None,
            final_integral=pair.integral if pair is not None else None,
            final_fractionality=pair.fractionality if pair is not None else float("nan"),
            phase=phase, perturbations=perturbations,
        )

    x_bar = relaxation.x.copy()
    x_tilde, _ = randomized_round(inst, x_bar, active, rng, cfg.move_params)
    pair = SolutionPair.build(inst, x_bar, x_tilde, active)
    point = pair_feasible(inst, pair, cfg)
    if point is None:
        point = feasible_point(inst, x_tilde, active, cfg)
    if point is not None:
        return finish(True, point, 0, "feasible", pair, 0)

    alpha = cfg.alpha0
    visited = {integral_key(x_tilde, active)}
    prev_key = integral_key(x_tilde, active)
    best = pair.fractionality
    since_best = 0
    basis = None
    perturbations = 0
    it = 0
    while it < budget:
        if clock.expired():
            return finish(False, None, it, "time", pair, perturbations)
        it += 1
        pair = project(inst, x_tilde, active, alpha, pcfg, warm=basis)
        basis = pair.basis
        ev = {"phase": phase, "run": run_index, "iter": it, "alpha": alpha,
              "fractionality": pair.fractionality, "quality": pair.objective_value,
              "move": "project", "accepted": True}
        alpha = advance_alpha(alpha, pcfg)
        point = pair_feasible(inst, pair, cfg)
        if point is not None:
            log.append(ev)
            return finish(True, point, it, "feasible", pair, perturbations)
        if pair.fractionality < best - cfg.eps_int:
            best, since_best = pair.fractionality, 0
        else:
            since_best += 1
        if since_best >= cfg.stall:
            log.append(ev)
            return finish(False, None, it, "stall", pair, perturbations)

        x_tilde, _ = randomized_round(inst, pair.relaxed, active, rng, cfg.move_params)
        point = feasible_point(inst, x_tilde, active, cfg)
        if point is not None:
            log.append(ev)
            return finish(True, point, it, "feasible", pair, perturbations)
        key = integral_key(x_tilde, active)
        if key in visited:
            rounded = SolutionPair.build(inst, pair.relaxed, x_tilde, active)
            x_tilde, kind = _perturb(inst, rounded, active, rng, cfg, weak=(key == prev_key))
            ev["perturbation"] = kind
            perturbations += 1
            key = integral_key(x_tilde, active)
        visited.add(key)
        prev_key = key
        log.append(ev)
    return finish(False, None, it, "iterations", pair, perturbations)


def fp_solve(inst: MipInstance, cfg: SolverConfig, rng: np.random.Generator) -> SolveReport:
    """Repeat FP runs until the global iteration budget is spent."""
    start = time.perf_counter()
    report = SolveReport(instance=inst.name, algorithm="fp")
    if cfg.n_total == 0:
        return report
    relaxation = relax(inst)
    if not relaxation.feasible:
        report.status = relaxation_failure(relaxation)
        report.wall_seconds = time.perf_counter() - start
        return report
    remaining = cfg.n_total
    run_index = 0
    deadline = Deadline(cfg.solve_time_limit)
    while remaining > 0 and not deadline.expired():
        run = fp_run(inst, cfg.run_config(deadline), rng, relaxation=relaxation,
                     max_iterations=remaining, run_index=run_index, events=report.events)
        report.runs.append(run)
        remaining -= run.budget_used
        report.iterations += run.budget_used
        run_index += 1
        if run.feasible:
            report.offer(run.point, run.objective)
            if cfg.stop_at_first_feasible:
                break
    report.wall_seconds = time.perf_counter() - start
    return report
