"""Small generated instances that are feasible by construction.

Each generator plants a known integral solution (returned alongside the
instance) and builds constraints around it, so tests and the end-to-end
suite can rely on feasibility without an exact MIP solver.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .model import EQ, GE, LE, MipInstance


def set_partition(n_elements: int, n_sets: int, seed: int, name: str | None = None):
    rng = np.random.default_rng(seed)
    elements = rng.permutation(n_elements)
    # planted partition
    cuts = np.sort(rng.choice(np.arange(1, n_elements), size=max(1, n_elements // 3) - 1, replace=False))
    blocks = np.split(elements, cuts)
    columns = [set(b.tolist()) for b in blocks]
    while len(columns) < n_sets:
        size = int(rng.integers(2, max(3, n_elements // 2)))
        columns.append(set(rng.choice(n_elements, size=size, replace=False).tolist()))
    order = rng.permutation(len(columns))
    columns = [columns[k] for k in order]
    planted = np.zeros(len(columns))
    planted[np.argsort(order)[: len(blocks)]] = 1.0
    rows, cols = [], []
    for j, col in enumerate(columns):
        for e in col:
            rows.append(e)
            cols.append(j)
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_elements, len(columns)))
    cost = np.array([len(c) + rng.integers(0, 5) for c in columns], dtype=float)
    n = len(columns)
    inst = MipInstance(
        name=name or f"setpart_{n_elements}x{n}_{seed}", objective=cost, A=A, sense=(EQ,) * n_elements,
        rhs=np.ones(n_elements), lower=np.zeros(n), upper=np.ones(n), integers=np.arange(n),
    )
    return inst, planted


def knapsack_cover(n: int, seed: int, name: str | None = None):
    """Two knapsack rows, their cover cuts, and a minimum-cardinality row."""
    rng = np.random.default_rng(seed)
    planted = (rng.random(n) < 0.4).astype(float)
    planted[rng.integers(n)] = 1.0
    rows, senses, rhs = [], [], []
    for _ in range(2):
        w = rng.integers(5, 40, size=n).astype(float)
        cap = float(w @ planted + rng.integers(0, 6))
        rows.append(w)
        senses.append(LE)
        rhs.append(cap)
        # covers built from items outside the planted set plus a few inside
        for _ in range(3):
            order = rng.permutation(n)
            cover, total = [], 0.0
            for i in order:
                cover.append(i)
                total += w[i]
                if total > cap:
                    break
            if total > cap:
                row = np.zeros(n)
                row[cover] = 1.0
                if row @ planted <= len(cover) - 1:
                    rows.append(row)
                    senses.append(LE)
                    rhs.append(len(cover) - 1.0)
    k = int(planted.sum())
    rows.append(np.ones(n))
    senses.append(GE)
    rhs.append(float(k))
    profit = rng.integers(1, 30, size=n).astype(float)
    inst = MipInstance(
        name=name or f"knapcover_{n}_{seed}", objective=-profit, A=np.array(rows), sense=tuple(senses),
        rhs=np.array(rhs), lower=np.zeros(n), upper=np.ones(n), integers=np.arange(n),
    )
    return inst, planted


def coupled_integers(n: int, n_rows: int, seed: int, upper: int = 10, name: str | None = None):
    """General integers tied by a few small-coefficient equality rows and some inequalities."""
    rng = np.random.default_rng(seed)
    planted = rng.integers(0, upper + 1, size=n).astype(float)
    A_eq = rng.integers(0, 3, size=(n_rows, n)).astype(float)
    A_eq[A_eq.sum(axis=1) == 0, 0] = 1.0
    b_eq = A_eq @ planted
    A_le = rng.integers(-2, 4, size=(n_rows, n)).astype(float)
    b_le = A_le @ planted + rng.integers(0, 4, size=n_rows)
    A = np.vstack([A_eq, A_le])
    cost = rng.integers(-5, 6, size=n).astype(float)
    inst = MipInstance(
        name=name or f"coupled_{n}x{n_rows}_{seed}", objective=cost, A=A,
        sense=(EQ,) * n_rows + (LE,) * n_rows, rhs=np.concatenate([b_eq, b_le]),
        lower=np.zeros(n), upper=np.full(n, float(upper)), integers=np.arange(n),
    )
    return inst, planted


def facility_location(n_fac: int, n_cust: int, seed: int, name: str | None = None):
    """Binary open decisions with continuous flows; capacities leave one planted plan feasible."""
    rng = np.random.default_rng(seed)
    demand = rng.integers(1, 10, size=n_cust).astype(float)
    planted_open = np.zeros(n_fac)
    planted_open[rng.choice(n_fac, size=max(1, n_fac // 2), replace=False)] = 1.0
    cap = np.full(n_fac, demand.sum() / planted_open.sum() * 1.2)
    nx = n_fac * n_cust
    n = n_fac + nx

    def flow(i, j):
        return n_fac + i * n_cust + j

    rows, cols, vals, senses, rhs = [], [], [], [], []
    r = 0
    for j in range(n_cust):
        for i in range(n_fac):
            rows.append(r)
            cols.append(flow(i, j))
            vals.append(1.0)
        senses.append(EQ)
        rhs.append(demand[j])
        r += 1
    for i in range(n_fac):
        for j in range(n_cust):
            rows.append(r)
            cols.append(flow(i, j))
            vals.append(1.0)
        rows.append(r)
        cols.append(i)
        vals.append(-cap[i])
        senses.append(LE)
        rhs.append(0.0)
        r += 1
    A = sp.csr_matrix((vals, (rows, cols)), shape=(r, n))
    cost = np.concatenate([rng.integers(20, 60, size=n_fac), rng.integers(1, 10, size=nx)]).astype(float)
    upper = np.concatenate([np.ones(n_fac), np.repeat(demand[None, :], n_fac, axis=0).ravel()])
    inst = MipInstance(
        name=name or f"facility_{n_fac}x{n_cust}_{seed}", objective=cost, A=A, sense=tuple(senses),
        rhs=np.array(rhs), lower=np.zeros(n), upper=upper, integers=np.arange(n_fac),
    )
    planted = np.zeros(n)
    planted[:n_fac] = planted_open
    share = demand / planted_open.sum()
    for i in np.flatnonzero(planted_open):
        for j in range(n_cust):
            planted[flow(i, j)] = share[j]
    return inst, planted


def market_split(n: int, n_rows: int, seed: int, coeff: int = 20, name: str | None = None):
    """Binary equality system with larger coefficients; hard for rounding-based heuristics."""
    rng = np.random.default_rng(seed)
    planted = (rng.random(n) < 0.5).astype(float)
    A = rng.integers(1, coeff, size=(n_rows, n)).astype(float)
    b = A @ planted
    inst = MipInstance(
        name=name or f"msplit_{n}x{n_rows}_{seed}", objective=np.zeros(n), A=A, sense=(EQ,) * n_rows,
        rhs=b, lower=np.zeros(n), upper=np.ones(n), integers=np.arange(n),
    )
    return inst, planted


def hard_pair_instance(n_easy: int = 6, seed: int = 0):
    """Two binaries carry all the integrality trouble; the rest are integral at every LP vertex.

    ``h0 = h1`` and ``2*h0 + 2*h1 >= 1`` with a cost on ``h`` put both hard
    binaries at 1/4 in the relaxation; the only integral choice is
    ``h0 = h1 = 1``. The easy binaries sit in ``x_a + x_b <= 1`` rows whose
    vertices are integral, with distinct rewards so ties never arise.
    """
    rng = np.random.default_rng(seed)
    n = 2 + n_easy
    rows, senses, rhs = [], [], []
    r = np.zeros(n)
    r[0], r[1] = 1.0, -1.0
    rows.append(r)
    senses.append(EQ)
    rhs.append(0.0)
    r = np.zeros(n)
    r[0] = r[1] = 2.0
    rows.append(r)
    senses.append(GE)
    rhs.append(1.0)
    for k in range(0, n_easy - 1, 2):
        r = np.zeros(n)
        r[2 + k] = r[3 + k] = 1.0
        rows.append(r)
        senses.append(LE)
        rhs.append(1.0)
    rewards = rng.permutation(np.arange(1, n_easy + 1)).astype(float)
    cost = np.concatenate([[1.0, 1.0], -rewards])
    inst = MipInstance(
        name=f"hardpair_{n}_{seed}", objective=cost, A=np.array(rows), sense=tuple(senses),
        rhs=np.array(rhs), lower=np.zeros(n), upper=np.ones(n), integers=np.arange(n),
    )
    planted = np.zeros(n)
    planted[:2] = 1.0
    for k in range(0, n_easy - 1, 2):
        planted[2 + k] = 1.0
    if n_easy % 2:
        planted[n - 1] = 1.0
    return inst, planted


def stagnation_instance(big: float = 1e5, small: float = 1e-3):
    """Tiny objective norm, an unbounded continuous variable, and a large objective value.

    With the coefficient-norm scaling the objective term dominates the
    distance term until alpha is tiny; with the relaxed-optimum scaling
    the two terms are balanced.
    """
    A = np.array([[2.0, 2.0, 0.0], [big, big, -1.0]])
    inst = MipInstance(
        name="stagnation", objective=np.array([0.0, 0.0, small]), A=A, sense=(GE, LE),
        rhs=np.array([1.0, 0.0]), lower=np.zeros(3), upper=np.array([1.0, 1.0, np.inf]),
        integers=np.array([0, 1]),
    )
    planted = np.array([1.0, 0.0, big])
    return inst, planted


def end_to_end_suite():
    """The ten planted fixtures used by the end-to-end feasibility criterion."""
    return [
        set_partition(12, 20, seed=1),
        set_partition(18, 35, seed=2),
        set_partition(24, 50, seed=3),
        knapsack_cover(15, seed=4),
        knapsack_cover(30, seed=5),
        knapsack_cover(50, seed=6),
        coupled_integers(5, 1, seed=7),
        coupled_integers(12, 2, seed=8),
        coupled_integers(20, 2, seed=9),
        facility_location(5, 8, seed=10),
    ]


def annealing_fixture():
    """Market-split instance on which runs last long enough to show the annealing shape."""
    return market_split(30, 3, seed=0)
