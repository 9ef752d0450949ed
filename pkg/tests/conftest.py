import numpy as np
import pytest

from acscalc.expr import Evaluator
from acscalc.structures import builtin


@pytest.fixture(scope="session")
def twist4():
    return builtin("twist4")


@pytest.fixture(scope="session")
def pullback4():
    return builtin("pullback4")


@pytest.fixture(scope="session")
def flat():
    return builtin("flat")


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


def fd_partial(f, x, i, h=1e-5):
    """Central difference of f along coordinate i (1-based)."""
    e = np.zeros_like(x)
    e[i - 1] = h
    return (f(x + e) - f(x - e)) / (2 * h)


def numeric_n(J, i, k, x):
    """N(d_i, d_k) at x from the operator matrix alone, with finite differences."""
    M = lambda p: J.values(Evaluator(p[None, :]))[0]  # noqa: E731
    JXi = lambda p: M(p)[:, i - 1]  # noqa: E731
    JXk = lambda p: M(p)[:, k - 1]  # noqa: E731
    DJXi = np.stack([fd_partial(JXi, x, q) for q in range(1, J.n + 1)], axis=1)
    DJXk = np.stack([fd_partial(JXk, x, q) for q in range(1, J.n + 1)], axis=1)
    br_JJ = DJXk @ JXi(x) - DJXi @ JXk(x)
    br_X_JY = DJXk[:, i - 1]
    br_JX_Y = -DJXi[:, k - 1]
    return br_JJ - M(x) @ br_X_JY - M(x) @ br_JX_Y
