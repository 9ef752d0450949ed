"""Almost-complex structures on a chart and the type decomposition of forms.

Index convention: ``J.entry(i, r)`` is the r-th coordinate of ``J d/dx_i``,
so ``(JX)^r = sum_p J.entry(p, r) X^p`` and, for a 1-form,
``(J zeta)_i = sum_r J.entry(i, r) zeta_r``.  In operator (column) form the
matrix ``M[r][i] = J.entry(i, r)`` acts on component vectors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calculus import (
    CalculusError,
    Form,
    VecField,
    dx,
    ext_d,
    form_sum,
    wedge,
)
from .expr import I, ONE, ZERO, Const, Evaluator, Expr, as_expr, sum_exprs

__all__ = [
    "AcsError",
    "AcsField",
    "ValidationReport",
    "SHIFTS",
    "standard",
    "conjugate_standard",
    "validate",
    "project_vec",
    "j_apply",
    "j_form1",
    "project_form",
    "bigrade",
    "comp_d",
    "rho",
    "rhobar",
    "del_",
    "delbar",
]

HALF = Const(0.5)
SHIFTS = ((2, -1), (1, 0), (0, 1), (-1, 2))


class AcsError(ValueError):
    pass


class AcsField:
    """Field of endomorphisms J given by expression entries ``J_i^r``.

    Caches of the projected coordinate 1-forms and their wedge products live
    on the instance; they depend only on J.
    """

    def __init__(self, entries: Sequence[Sequence]):
        rows = [tuple(as_expr(e) for e in row) for row in entries]
        n = len(rows)
        if n < 2 or n % 2:
            raise AcsError(f"almost-complex structures need even dimension >= 2, got {n}")
        if any(len(r) != n for r in rows):
            raise AcsError("J must be a square matrix")
        self.n = n
        self.entries: tuple[tuple[Expr, ...], ...] = tuple(rows)
        self._dx_proj: dict[tuple[int, str], Form] = {}
        self._basis: dict[tuple[tuple[int, ...], tuple[str, ...]], Form] = {}

    def entry(self, i: int, r: int) -> Expr:
        """J_i^r = dx^r(J d/dx_i), 1-based."""
        return self.entries[i - 1][r - 1]

    def operator_matrix(self) -> list[list[Expr]]:
        n = self.n
        return [[self.entry(i, r) for i in range(1, n + 1)] for r in range(1, n + 1)]

    @classmethod
    def from_operator(cls, M: Sequence[Sequence[Expr]]) -> "AcsField":
        n = len(M)
        return cls([[M[r][i] for r in range(n)] for i in range(n)])

    def values(self, ev: Evaluator) -> np.ndarray:
        """Operator matrices at the evaluator's points, shape (m, n, n)."""
        n = self.n
        out = np.empty((ev.m, n, n), dtype=complex)
        for i in range(n):
            for r in range(n):
                out[:, r, i] = ev(self.entries[i][r])
        return out

    # projections of the coordinate coframe, cached

    def dx_projection(self, i: int, kind: str) -> Form:
        key = (i, kind)
        if key not in self._dx_proj:
            self._dx_proj[key] = project_form1(self, dx(i, self.n), kind)
        return self._dx_proj[key]

    def basis_wedge(self, index: tuple[int, ...], kinds: tuple[str, ...]) -> Form:
        """Wedge of the projected coframe elements ``proj_{kinds[l]} dx^{index[l]}``."""
        key = (index, kinds)
        cached = self._basis.get(key)
        if cached is not None:
            return cached
        if len(index) == 1:
            out = self.dx_projection(index[0], kinds[0])
        else:
            out = wedge(self.basis_wedge(index[:-1], kinds[:-1]), self.dx_projection(index[-1], kinds[-1]))
        self._basis[key] = out
        return out


def standard(n: int) -> AcsField:
    """Constant J0 with J0 d/dx_{2a-1} = d/dx_{2a} and J0 d/dx_{2a} = -d/dx_{2a-1}."""
    if n < 2 or n % 2:
        raise AcsError(f"almost-complex structures need even dimension >= 2, got {n}")
    M = [[ZERO] * n for _ in range(n)]
    for a in range(0, n, 2):
        M[a + 1][a] = ONE
        M[a][a + 1] = Const(-1)
    return AcsField.from_operator(M)


def _matmul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    return [[sum_exprs(A[r][p] * B[p][c] for p in range(k)) for c in range(m)] for r in range(n)]


def conjugate_standard(A, A_inv, points=None, tol: float = 1e-10) -> AcsField:
    """J with operator matrix ``A_inv . J0 . A``; J^2 = -1 wherever A_inv A = 1.

    ``points`` (an (m, n) array) is used to check that ``A_inv`` inverts ``A``.
    """
    A = [[as_expr(e) for e in row] for row in A]
    A_inv = [[as_expr(e) for e in row] for row in A_inv]
    n = len(A)
    if n % 2 or n < 2:
        raise AcsError(f"almost-complex structures need even dimension >= 2, got {n}")
    if any(len(r) != n for r in A) or len(A_inv) != n or any(len(r) != n for r in A_inv):
        raise AcsError("A and A_inv must be n x n")
    if points is not None:
        ev = Evaluator(points)
        prod = _matmul(A, A_inv)
        for r in range(n):
            for c in range(n):
                err = np.max(np.abs(ev(prod[r][c]) - (1.0 if r == c else 0.0)))
                if err >= tol:
                    raise AcsError(f"A . A_inv differs from the identity by {err:.3g} at entry ({r + 1},{c + 1})")
    J0 = standard(n).operator_matrix()
    return AcsField.from_operator(_matmul(_matmul(A_inv, J0), A))


@dataclass(frozen=True)
class ValidationReport:
    samples: int
    max_square_residual: float
    max_trace: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_square_residual < self.tol and self.max_trace < self.tol


def pointwise_square_residual(J: AcsField, ev: Evaluator) -> tuple[np.ndarray, np.ndarray]:
    """Per-point max |J^2 + 1| and |trace J|."""
    M = J.values(ev)
    sq = M @ M + np.eye(J.n)[None, :, :]
    return np.abs(sq).max(axis=(1, 2)), np.abs(np.trace(M, axis1=1, axis2=2))


def validate(J: AcsField, points, tol: float) -> ValidationReport:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != J.n:
        raise AcsError(f"points have dimension {pts.shape[1]}, J has {J.n}")
    sq, tr = pointwise_square_residual(J, Evaluator(pts))
    return ValidationReport(len(pts), float(sq.max()), float(tr.max()), tol)


def _check_dim(J: AcsField, n: int):
    if J.n != n:
        raise CalculusError(f"dimension mismatch: J is {J.n}, argument is {n}")


def j_apply(J: AcsField, X: VecField) -> VecField:
    _check_dim(J, X.n)
    n = J.n
    return VecField(sum_exprs(J.entry(p, r) * X[p] for p in range(1, n + 1)) for r in range(1, n + 1))


def j_form1(J: AcsField, zeta: Form) -> Form:
    """(J zeta)(V) = zeta(JV) for a 1-form zeta."""
    if zeta.degree != 1:
        raise AcsError(f"J acts on 1-forms only, got degree {zeta.degree}")
    _check_dim(J, zeta.n)
    n = J.n
    return Form(
        n, 1, {(i,): sum_exprs(J.entry(i, r) * zeta[r] for r in range(1, n + 1)) for i in range(1, n + 1)}
    )


def project_vec(J: AcsField, X: VecField, kind: str) -> VecField:
    """(1,0) part 1/2 (X - i JX) or (0,1) part 1/2 (X + i JX)."""
    sign = _sign(kind)
    JX = j_apply(J, X)
    return VecField(HALF * (x + sign * I * jx) for x, jx in zip(X.components, JX.components))


def _sign(kind: str) -> int:
    if kind == "10":
        return -1
    if kind == "01":
        return 1
    raise AcsError(f"type must be '10' or '01', got {kind!r}")


def project_form1(J: AcsField, zeta: Form, kind: str) -> Form:
    sign = _sign(kind)
    Jz = j_form1(J, zeta)
    keys = sorted(set(zeta.coeffs) | set(Jz.coeffs))
    return Form(zeta.n, 1, {k: HALF * (zeta[k] + sign * I * Jz[k]) for k in keys})


def project_form(J: AcsField, a: Form, p: int, q: int) -> Form:
    """The (p, q) component of a form of degree p + q."""
    _check_dim(J, a.n)
    k = a.degree
    if p < 0 or q < 0 or p + q != k:
        raise AcsError(f"bidegree ({p},{q}) does not match degree {k}")
    if k == 0:
        return a
    parts: list[Form] = []
    for spots in itertools.combinations(range(k), p):
        kinds = tuple("10" if s in spots else "01" for s in range(k))
        for index, c in a.coeffs.items():
            parts.append(J.basis_wedge(index, kinds) * c)
    return form_sum(parts, a.n, k) if parts else Form.zero(a.n, k)


def bigrade(J: AcsField, a: Form) -> dict[tuple[int, int], Form]:
    k = a.degree
    return {(p, k - p): project_form(J, a, p, k - p) for p in range(k, -1, -1)}


def comp_d(J: AcsField, a: Form, shift: tuple[int, int]) -> Form:
    """Bidegree ``shift`` component of the exterior derivative."""
    shift = tuple(shift)
    if shift not in SHIFTS:
        raise AcsError(f"shift must be one of {SHIFTS}, got {shift}")
    k = a.degree
    if k >= a.n:
        raise CalculusError(f"exterior derivative of a degree-{k} form on an {a.n}-chart")
    parts = []
    for (p, q), comp in bigrade(J, a).items():
        tp, tq = p + shift[0], q + shift[1]
        if tp < 0 or tq < 0 or not comp.coeffs:
            continue
        parts.append(project_form(J, ext_d(comp), tp, tq))
    return form_sum(parts, a.n, k + 1) if parts else Form.zero(a.n, k + 1)


def rho(J: AcsField, a: Form) -> Form:
    return comp_d(J, a, (2, -1))


def rhobar(J: AcsField, a: Form) -> Form:
    return comp_d(J, a, (-1, 2))


def del_(J: AcsField, a: Form) -> Form:
    return comp_d(J, a, (1, 0))


def delbar(J: AcsField, a: Form) -> Form:
    return comp_d(J, a, (0, 1))
