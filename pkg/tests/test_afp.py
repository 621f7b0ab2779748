import math

import numpy as np
import pytest

from afpump.afp import (
    AnnealState,
    acceptance_probability,
    afp_run,
    afp_solve,
    calibrate_delta_norm,
    initial_integral,
    metropolis_accept,
    update_ph,
)
from afpump.common import relax
from afpump.config import SolverConfig
from afpump.instances import annealing_fixture, coupled_integers, knapsack_cover, set_partition
from afpump.model import MipInstance, is_mip_feasible
from oracles import binomial_within


def accept_count(dhat, alpha, n=100_000, seed=0):
    rng = np.random.default_rng(seed)
    return sum(metropolis_accept(dhat, alpha, 1.0, rng) for _ in range(n))


def test_metropolis_examples():
    rng = np.random.default_rng(0)
    assert all(metropolis_accept(-0.3, a, 1.0, rng) for a in (0.0, 0.5, 1.0))
    assert not metropolis_accept(0.1, 0.0, 1.0, rng)
    assert acceptance_probability(0.2, 0.5, 1.0) == pytest.approx(math.exp(-0.4))
    assert acceptance_probability(0.4, 0.5, 2.0) == pytest.approx(math.exp(-0.4))


def test_metropolis_rate_matches_exponent():
    k = accept_count(0.2, 0.5, n=20_000, seed=3)
    assert binomial_within(k, 20_000, math.exp(-0.4))


def test_metropolis_rejects_non_positive_norm():
    with pytest.raises(ValueError):
        metropolis_accept(0.1, 0.5, 0.0, np.random.default_rng(0))


def test_calibration_example_and_inverse():
    assert calibrate_delta_norm(10.0, 1.0, 0.7) == pytest.approx(10.0 / -math.log(0.7))
    assert calibrate_delta_norm(10.0, 1.0, 0.7) == pytest.approx(28.037, abs=1e-3)
    norm = calibrate_delta_norm(3.5, 0.8, 0.42)
    assert acceptance_probability(3.5, 0.8, norm) == pytest.approx(0.42, abs=1e-12)
    assert calibrate_delta_norm(1.0, 1.0, 1 - 1e-9) > 1e8
    assert calibrate_delta_norm(0.0, 1.0, 0.7) == 1.0


def test_ph_schedule():
    assert update_ph(0.7, False) == pytest.approx(0.836660, abs=1e-6)
    assert update_ph(0.7, True) == pytest.approx(0.63)
    p = 0.7
    for _ in range(40):
        q = update_ph(p, False)
        assert p < q < 1.0
        p = q
    with pytest.raises(ValueError):
        update_ph(1.0, True)


def test_anneal_state_tracks_worst_move_until_calibrated():
    s = AnnealState()
    s.observe(2.0)
    s.observe(5.0)
    s.observe(1.0)
    assert s.delta_max == 5.0 and s.delta_norm == 1.0
    s.end_run(False)
    assert s.p_h == pytest.approx(math.sqrt(0.7))
    assert s.delta_norm == pytest.approx(calibrate_delta_norm(5.0, 1.0, math.sqrt(0.7)))
    s.observe(50.0)
    assert s.delta_max == 5.0


def test_initial_integral_draws_inside_bounds():
    inst, _ = coupled_integers(20, 2, seed=9)
    rel = relax(inst)
    x = initial_integral(inst, rel, inst.integers, np.random.default_rng(0))
    assert np.all(x == np.round(x)) and np.all(x >= inst.lower) and np.all(x <= inst.upper)


def test_pure_lp_run_is_immediately_feasible():
    inst = MipInstance(name="lp", objective=np.array([1.0]), A=np.array([[1.0]]), sense=("G",), rhs=np.array([0.5]),
                       lower=np.zeros(1), upper=np.ones(1), integers=np.array([], dtype=int))
    run = afp_run(inst, SolverConfig(), AnnealState(), np.random.default_rng(0))
    assert run.feasible and run.iterations == 0


def _by_iter(events, run=0):
    out = {}
    for e in events:
        if e.get("run") == run and "iter" in e and e.get("move") != "stage":
            out.setdefault(e["iter"], []).append(e)
    return out


def test_event_log_laws_on_hard_fixture():
    inst, _ = annealing_fixture()
    rep = afp_solve(inst, SolverConfig(n_total=200), np.random.default_rng(2))
    cand = [e for e in rep.events if "delta" in e]
    assert cand
    # improving or neutral candidates are always accepted
    assert all(e["accepted"] for e in cand if e["delta"] <= 0)
    for run in {e["run"] for e in cand}:
        iters = _by_iter(rep.events, run)
        keys = sorted(iters)
        for a, b in zip(keys, keys[1:]):
            assert iters[b][0]["alpha"] == pytest.approx(0.9 * iters[a][0]["alpha"]) or iters[b][0]["alpha"] == 0.0
        for k in keys:
            group = iters[k]
            # at most one acceptance per iteration, and it is the last candidate tried
            assert sum(e["accepted"] for e in group) <= 1
            if any(e["accepted"] for e in group):
                assert group[-1]["accepted"]


def test_exhausted_move_list_keeps_pair():
    inst, _ = annealing_fixture()
    rep = afp_solve(inst, SolverConfig(n_total=150), np.random.default_rng(2))
    iters = _by_iter(rep.events, 0)
    current = None
    exhausted = 0
    for k in sorted(iters):
        group = iters[k]
        for e in group:
            if not e["accepted"] and current is not None:
                # a rejected candidate leaves the logged pair untouched
                assert e["fractionality"] == current
            if e["accepted"]:
                current = e["fractionality"]
        exhausted += not any(e["accepted"] for e in group)
    assert exhausted > 0


def test_zero_temperature_is_strict_descent():
    inst, _ = annealing_fixture()
    rep = afp_solve(inst, SolverConfig(n_total=150, alpha0=0.0), np.random.default_rng(0))
    assert not any(e["accepted"] and e["delta"] > 0 for e in rep.events if "delta" in e)


def test_first_run_uses_unit_norm_and_ph_follows_outcomes():
    inst, _ = knapsack_cover(15, seed=4)
    rep = afp_solve(inst, SolverConfig(n_total=200), np.random.default_rng(0))
    assert rep.runs[0].delta_norm == 1.0
    p = 0.7
    for run in rep.runs:
        assert run.p_h == pytest.approx(p)
        p = update_ph(p, run.feasible)


def test_calibration_switch_pins_norm():
    inst, _ = annealing_fixture()
    rep = afp_solve(inst, SolverConfig(n_total=300, calibrate=False), np.random.default_rng(0))
    assert all(r.delta_norm == 1.0 and r.p_h == 0.7 for r in rep.runs)


@pytest.mark.parametrize("make", [lambda: set_partition(12, 20, seed=1), lambda: coupled_integers(12, 2, seed=8)])
@pytest.mark.parametrize("seed", range(3))
def test_accounting_and_certificates(make, seed):
    inst, _ = make()
    cfg = SolverConfig(n_total=250, n_run=60)
    rep = afp_solve(inst, cfg, np.random.default_rng(seed))
    assert rep.iterations == sum(r.budget_used for r in rep.runs) <= cfg.n_total
    for r in rep.runs:
        assert r.iterations <= cfg.n_run
        if r.feasible:
            assert is_mip_feasible(inst, r.point)


def test_seed_determinism():
    inst, _ = annealing_fixture()
    a = afp_solve(inst, SolverConfig(n_total=120), np.random.default_rng(11))
    b = afp_solve(inst, SolverConfig(n_total=120), np.random.default_rng(11))
    assert a.events == b.events


def test_stop_at_first_feasible_matches_budget_run_prefix():
    inst, _ = set_partition(18, 35, seed=2)
    full = afp_solve(inst, SolverConfig(n_total=400), np.random.default_rng(3))
    short = afp_solve(inst, SolverConfig(n_total=400, stop_at_first_feasible=True), np.random.default_rng(3))
    assert full.feasible == short.feasible
    k = len(short.runs)
    assert [r.feasible for r in full.runs[:k]] == [r.feasible for r in short.runs]
    assert short.events == full.events[: len(short.events)]


def _quartile_bad_moves(events, run):
    it = _by_iter(events, run)
    last = max(it)
    q = last / 4
    bad = [e for g in it.values() for e in g if e["accepted"] and e["delta"] > 0]
    return sum(e["iter"] <= q for e in bad), sum(e["iter"] > last - q for e in bad)


def test_annealing_shape_contrast():
    inst, _ = annealing_fixture()
    calibrated = afp_solve(inst, SolverConfig(n_total=300), np.random.default_rng(1))
    assert calibrated.runs[1].delta_norm > 1.0
    first, last = _quartile_bad_moves(calibrated.events, 1)
    assert first > last
    pinned = afp_solve(inst, SolverConfig(n_total=150, calibrate=False), np.random.default_rng(1))
    assert pinned.runs[0].stop_reason == "stall"
