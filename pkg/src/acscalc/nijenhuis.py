"""Nijenhuis tensor, its squares, and the scalar functionals built from them.

Coordinate indices are 1-based. Functions taking ``(i, k, ...)`` work on the
coordinate frame d/dx_i with duals dx^i.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .acs import AcsField, j_apply, j_form1, rho, rhobar
from .calculus import CalculusError, Form, VecField, coord_field, dx, interior, lie_bracket, pair
from .expr import I, Const, Evaluator, Expr, diff, sum_exprs

__all__ = [
    "NijenhuisComponents",
    "n_def",
    "n_coord",
    "n_squared",
    "jn_squared",
    "k_func",
    "l_func",
    "k_func_fields",
    "l_func_fields",
    "hbar",
    "hbar_def",
    "ell",
    "WeakSquares",
    "weak_squares",
    "dual_pair_forms",
]

QUARTER = Const(0.25)


def n_def(J: AcsField, X: VecField, Y: VecField) -> VecField:
    """N(X,Y) = [JX,JY] - J[X,JY] - J[JX,Y] - [X,Y]."""
    if X.n != J.n or Y.n != J.n:
        raise CalculusError(f"dimension mismatch with J of dimension {J.n}")
    JX, JY = j_apply(J, X), j_apply(J, Y)
    return (
        lie_bracket(JX, JY)
        - j_apply(J, lie_bracket(X, JY))
        - j_apply(J, lie_bracket(JX, Y))
        - lie_bracket(X, Y)
    )


def n_squared(J: AcsField, X: VecField, Z: VecField, Y: VecField) -> VecField:
    """Strong square N(N(X,Z), Y)."""
    return n_def(J, n_def(J, X, Z), Y)


def jn_squared(J: AcsField, X: VecField, Z: VecField, Y: VecField) -> VecField:
    return j_apply(J, n_squared(J, X, Z, Y))


@dataclass(frozen=True)
class NijenhuisComponents:
    """Entries ``N[i, k, r] = dx^r(N(d_i, d_k))`` (1-based)."""

    n: int
    entries: tuple  # entries[i][k][r], 0-based storage

    def __getitem__(self, idx: tuple[int, int, int]) -> Expr:
        i, k, r = idx
        return self.entries[i - 1][k - 1][r - 1]

    def trace(self, i: int) -> Expr:
        """sum_k N[i, k, k]."""
        return sum_exprs(self[i, k, k] for k in range(1, self.n + 1))

    def values(self, ev: Evaluator) -> np.ndarray:
        n = self.n
        out = np.zeros((ev.m, n, n, n), dtype=complex)
        for i in range(n):
            for k in range(n):
                for r in range(n):
                    out[:, i, k, r] = ev(self.entries[i][k][r])
        return out


def n_coord(J: AcsField) -> NijenhuisComponents:
    """Components from the closed coordinate formula in the entries of J.

    N_ik^r = sum_p J_i^p (d_p J_k^r - d_k J_p^r) - J_k^p (d_p J_i^r - d_i J_p^r).
    Antisymmetry in (i, k) is built in: the lower triangle is the negated upper.
    """
    n = J.n
    E = J.entry
    zero = Const(0)
    out = [[[zero] * n for _ in range(n)] for _ in range(n)]
    for i in range(1, n + 1):
        for k in range(i + 1, n + 1):
            for r in range(1, n + 1):
                terms = []
                for p in range(1, n + 1):
                    terms.append(E(i, p) * (diff(E(k, r), p) - diff(E(p, r), k)))
                    terms.append(-(E(k, p) * (diff(E(i, r), p) - diff(E(p, r), i))))
                v = sum_exprs(terms)
                out[i - 1][k - 1][r - 1] = v
                out[k - 1][i - 1][r - 1] = -v
    return NijenhuisComponents(n, tuple(tuple(tuple(row) for row in plane) for plane in out))


def _four_terms(J: AcsField, X, Z, Y, W, Zd: Form, Wd: Form, with_j: bool) -> Expr:
    def term(dual: Form, A: VecField, B: VecField, C: VecField) -> Expr:
        v = lie_bracket(n_def(J, A, B), C)
        if with_j:
            v = j_apply(J, v)
        return pair(dual, [v])

    return QUARTER * sum_exprs(
        [term(Wd, X, Z, Y), term(Wd, Y, Z, X), term(Zd, X, W, Y), term(Zd, Y, W, X)]
    )


def k_func_fields(J, X, Z, Y, W, Z_dual: Form, W_dual: Form) -> Expr:
    """K(X,Z,Y,W) with caller-supplied duals of Z and W."""
    return _four_terms(J, X, Z, Y, W, Z_dual, W_dual, with_j=False)


def l_func_fields(J, X, Z, Y, W, Z_dual: Form, W_dual: Form) -> Expr:
    return _four_terms(J, X, Z, Y, W, Z_dual, W_dual, with_j=True)


def _frame(J: AcsField, *idx: int) -> list[VecField]:
    return [coord_field(i, J.n) for i in idx]


# [N(d_a, d_b), d_c] (optionally with J applied) per structure; the frame
# functionals below reuse each of these n^3 fields many times.
_FRAME_TERMS: "weakref.WeakKeyDictionary[AcsField, dict]" = weakref.WeakKeyDictionary()


def _frame_term(J: AcsField, a: int, b: int, c: int, with_j: bool) -> VecField:
    cache = _FRAME_TERMS.setdefault(J, {})
    key = (a, b, c, with_j)
    if key not in cache:
        A, B, C = _frame(J, a, b, c)
        v = lie_bracket(n_def(J, A, B), C)
        cache[key] = j_apply(J, v) if with_j else v
    return cache[key]


def _frame_four_terms(J: AcsField, i: int, k: int, j: int, l: int, with_j: bool) -> Expr:
    t = lambda a, b, c, r: _frame_term(J, a, b, c, with_j)[r]  # noqa: E731
    return QUARTER * sum_exprs([t(i, k, j, l), t(j, k, i, l), t(i, l, j, k), t(j, l, i, k)])


def k_func(J: AcsField, i: int, k: int, j: int, l: int) -> Expr:
    """K(d_i, d_k, d_j, d_l) on the coordinate frame with duals dx^k, dx^l."""
    return _frame_four_terms(J, i, k, j, l, with_j=False)


def l_func(J: AcsField, i: int, k: int, j: int, l: int) -> Expr:
    return _frame_four_terms(J, i, k, j, l, with_j=True)


def hbar(J: AcsField, i: int, k: int, comps: NijenhuisComponents | None = None) -> Expr:
    """Intermediate square hbar(d_i, d_k) = -d_i N_ik^k."""
    comps = comps or n_coord(J)
    return -diff(comps[i, k, k], i)


def hbar_def(J: AcsField, i: int, k: int) -> Expr:
    """hbar(d_i, d_k) = dx^k([N(d_i, d_k), d_i]) through brackets."""
    Xi, Xk = _frame(J, i, k)
    return pair(dx(k, J.n), [lie_bracket(n_def(J, Xi, Xk), Xi)])


def ell(J: AcsField, i: int, k: int) -> Expr:
    """ell(d_i, d_k) = dx^k(J [N(d_i, d_k), d_i])."""
    Xi, Xk = _frame(J, i, k)
    return pair(dx(k, J.n), [j_apply(J, lie_bracket(n_def(J, Xi, Xk), Xi))])


@dataclass(frozen=True)
class WeakSquares:
    s_i: tuple[Expr, ...]
    s: Expr
    t: Expr

    def at(self, point: Sequence[float]) -> tuple[list[complex], complex, complex]:
        ev = Evaluator(np.asarray(point, dtype=float)[None, :])
        return [complex(ev(e)[0]) for e in self.s_i], complex(ev(self.s)[0]), complex(ev(self.t)[0])


def weak_squares(J: AcsField) -> WeakSquares:
    """S_i = sum_k hbar(d_i,d_k), S = sum_i S_i, T = sum_{i,k} ell(d_i,d_k)."""
    n = J.n
    comps = n_coord(J)
    s_i = tuple(sum_exprs(hbar(J, i, k, comps) for k in range(1, n + 1)) for i in range(1, n + 1))
    t = sum_exprs(ell(J, i, k) for i in range(1, n + 1) for k in range(1, n + 1))
    return WeakSquares(s_i, sum_exprs(s_i), t)


# The dual-form side: 2-forms built from rho, rhobar and contractions.


def dual_pair_forms(J: AcsField, j: int, l: int):
    """(rhobar i(d_j) rho (dx^l + i J dx^l), rho i(d_j) rhobar (dx^l - i J dx^l))."""
    n = J.n
    base = dx(l, n)
    jb = j_form1(J, base)
    plus = base + jb * I
    minus = base - jb * I
    Yj = coord_field(j, n)
    g_plus = rhobar(J, interior(Yj, rho(J, plus)))
    g_minus = rho(J, interior(Yj, rhobar(J, minus)))
    return g_plus, g_minus
