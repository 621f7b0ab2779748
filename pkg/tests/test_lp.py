import numpy as np
import pytest

from afpump.lp import LpProblem, LpStatus, dual_objective, solve_lp, solve_relaxation
from afpump.model import MipInstance
from conftest import random_lp
from oracles import vertex_enumeration


def test_single_variable_bounded_by_row():
    sol = solve_lp(LpProblem([-1.0], [[1.0]], ("L",), [3.0], [0.0], [5.0]))
    assert sol.status is LpStatus.OPTIMAL
    assert sol.x[0] == pytest.approx(3.0)
    assert sol.objective == pytest.approx(-3.0)


def test_contradictory_rows_are_infeasible():
    sol = solve_lp(LpProblem([1.0], [[1.0], [1.0]], ("G", "L"), [2.0, 1.0], [-np.inf], [np.inf]))
    assert sol.status is LpStatus.INFEASIBLE


def test_unbounded_ray():
    sol = solve_lp(LpProblem([-1.0, 0.0], [[1.0, -1.0]], ("L",), [1.0], [0.0, 0.0], [np.inf, np.inf]))
    assert sol.status is LpStatus.UNBOUNDED


def test_no_rows():
    sol = solve_lp(LpProblem([1.0, -2.0], np.zeros((0, 2)), (), np.zeros(0), [-1.0, 0.0], [1.0, 3.0]))
    assert sol.optimal
    assert sol.x.tolist() == [-1.0, 3.0]


def test_knapsack_relaxation_matches_hand_simplex():
    # max 5 x1 + 4 x2, 6 x1 + 4 x2 <= 9, x binary: x2 = 1 first (ratio 1), then x1 = 5/6
    inst = MipInstance(name="k", objective=np.array([-5.0, -4.0]), A=np.array([[6.0, 4.0]]), sense=("L",),
                       rhs=np.array([9.0]), lower=np.zeros(2), upper=np.ones(2), integers=np.arange(2))
    sol = solve_relaxation(inst)
    assert sol.x == pytest.approx([5.0 / 6.0, 1.0], abs=1e-12)
    assert sol.objective == pytest.approx(-(4.0 + 25.0 / 6.0), abs=1e-12)


@pytest.mark.parametrize("seed", range(60))
def test_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(1000 + seed)
    p = random_lp(rng)
    sol = solve_lp(p)
    status, value = vertex_enumeration(p)
    assert sol.status is status
    if status is LpStatus.OPTIMAL:
        assert sol.objective == pytest.approx(value, abs=1e-7)


@pytest.mark.parametrize("seed", range(40))
def test_optimal_points_respect_bounds_and_rows(seed):
    p = random_lp(np.random.default_rng(seed))
    sol = solve_lp(p)
    if not sol.optimal:
        return
    x = sol.x
    assert np.all(x >= p.lower - 1e-9) and np.all(x <= p.upper + 1e-9)
    act = p.A @ x
    for a, s, b in zip(act, p.sense, p.rhs):
        tol = 1e-7 * (1 + abs(b))
        if s == "L":
            assert a <= b + tol
        elif s == "G":
            assert a >= b - tol
        else:
            assert abs(a - b) <= tol


@pytest.mark.parametrize("seed", range(40))
def test_weak_duality(seed):
    p = random_lp(np.random.default_rng(500 + seed))
    sol = solve_lp(p)
    if not sol.optimal or sol.duals is None:
        return
    assert dual_objective(p, sol.duals) <= sol.objective + 1e-7
    # the reported duals certify optimality here, so the bound is tight
    assert dual_objective(p, sol.duals) == pytest.approx(sol.objective, abs=1e-6)


def test_dual_objective_rejects_wrong_sign():
    p = LpProblem([1.0], [[1.0]], ("L",), [1.0], [0.0], [2.0])
    assert dual_objective(p, np.array([1.0])) == -np.inf


@pytest.mark.parametrize("seed", range(30))
def test_warm_start_from_optimal_basis_needs_at_most_one_pivot(seed):
    p = random_lp(np.random.default_rng(900 + seed))
    sol = solve_lp(p)
    if not sol.optimal:
        return
    again = solve_lp(p, sol.basis)
    assert again.status is LpStatus.OPTIMAL
    assert again.iterations <= 1
    assert again.objective == pytest.approx(sol.objective, abs=1e-9)


@pytest.mark.parametrize("seed", range(30))
def test_warm_start_never_changes_status(seed):
    rng = np.random.default_rng(seed)
    p = random_lp(rng)
    sol = solve_lp(p)
    if sol.basis is None:
        return
    # perturb the right-hand side and reuse the old basis
    q = LpProblem(p.objective, p.A, p.sense, p.rhs + rng.normal(scale=0.5, size=p.num_rows), p.lower, p.upper)
    cold, warm = solve_lp(q), solve_lp(q, sol.basis)
    assert cold.status is warm.status
    if cold.optimal:
        assert warm.objective == pytest.approx(cold.objective, abs=1e-7)


def test_deterministic():
    p = random_lp(np.random.default_rng(7))
    a, b = solve_lp(p), solve_lp(p)
    assert a.status is b.status and a.iterations == b.iterations
    if a.optimal:
        assert np.array_equal(a.x, b.x)


def test_iteration_limit_status():
    rng = np.random.default_rng(11)
    n = 6
    A = rng.uniform(1, 2, size=(6, n))
    p = LpProblem(-np.ones(n), A, ("L",) * 6, np.ones(6) * 5, np.zeros(n), np.full(n, 10.0))
    full = solve_lp(p)
    assert full.optimal and full.iterations > 2
    capped = solve_lp(p, max_iter=2)
    assert capped.status is LpStatus.ITER_LIMIT
    assert capped.iterations == 2 and capped.basis is not None
    # the capped basis is a valid warm start and leads to the same optimum
    resumed = solve_lp(p, capped.basis)
    assert resumed.objective == pytest.approx(full.objective, abs=1e-9)
