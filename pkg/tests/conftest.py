import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from afpump.lp import LpProblem  # noqa: E402
from afpump.model import MipInstance  # noqa: E402


def random_lp(rng: np.random.Generator, max_vars: int = 6, max_rows: int = 6, open_bounds: bool = True) -> LpProblem:
    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(1, max_rows + 1))
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    sense = tuple(rng.choice(["L", "G", "E"], p=[0.5, 0.3, 0.2], size=m))
    x0 = rng.uniform(-3, 3, size=n)
    b = np.round(A @ x0 + rng.uniform(-1, 3, size=m) * (rng.random(m) < 0.9), 2)
    lo = np.round(rng.uniform(-5, 0, size=n), 1)
    hi = np.round(rng.uniform(0, 5, size=n), 1)
    if open_bounds and rng.random() < 0.3:
        lo[rng.integers(n)] = -np.inf
    if open_bounds and rng.random() < 0.3:
        hi[rng.integers(n)] = np.inf
    c = rng.integers(-4, 5, size=n).astype(float)
    return LpProblem(c, A, sense, b, lo, hi)


def binary_instance(A, sense, rhs, c, name="toy") -> MipInstance:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    return MipInstance(name=name, objective=np.asarray(c, dtype=float), A=A, sense=tuple(sense),
                       rhs=np.asarray(rhs, dtype=float), lower=np.zeros(n), upper=np.ones(n),
                       integers=np.arange(n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def projection_fixture(rng: np.random.Generator):
    """Small all-integer instance with <= rows, a box, and an integral target point.

    Returns ``(inst, x_tilde, A_le, b_le)``; the polyhedron always contains 0.
    """
    n = int(rng.integers(1, 4))
    m = int(rng.integers(1, 4))
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    b = rng.integers(0, 4, size=m).astype(float)
    upper = np.full(n, 2.0 if n <= 2 else 1.0)
    inst = MipInstance(name="proj", objective=rng.integers(-3, 4, size=n).astype(float), A=A,
                       sense=("L",) * m, rhs=b, lower=np.zeros(n), upper=upper, integers=np.arange(n))
    x_tilde = rng.integers(0, upper.astype(int) + 1).astype(float)
    return inst, x_tilde, A, b


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
