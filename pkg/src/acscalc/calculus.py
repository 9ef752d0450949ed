"""Exterior calculus on a single coordinate chart.

Indices are 1-based throughout, matching the coordinate names ``x1 .. xn``:
``coord_field(2, n)`` is the field d/dx2 and ``dx(2, n)`` its dual 1-form.
Forms store one coefficient per strictly increasing index tuple and are
evaluated with the determinant convention, so ``(dx1^dx2)(u, v) =
u1*v2 - u2*v1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .expr import ONE, ZERO, Evaluator, Expr, as_expr, diff, evaluate, sum_exprs

__all__ = [
    "CalculusError",
    "Chart",
    "VecField",
    "Form",
    "coord_field",
    "dx",
    "function_form",
    "lie_bracket",
    "wedge",
    "ext_d",
    "interior",
    "pair",
    "eval_form",
    "form_values",
]


class CalculusError(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    n: int
    box: tuple[tuple[float, float], ...] = ()
    tol: float = 1e-9

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise CalculusError(f"chart dimension must be even and >= 2, got {self.n}")
        if not self.box:
            object.__setattr__(self, "box", tuple((-1.0, 1.0) for _ in range(self.n)))
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if len(box) != self.n or any(lo >= hi for lo, hi in box):
            raise CalculusError("box must hold n intervals with lo < hi")
        object.__setattr__(self, "box", box)

    def contains(self, point: Sequence[float]) -> bool:
        return len(point) == self.n and all(lo <= x <= hi for x, (lo, hi) in zip(point, self.box))

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        return lo + (hi - lo) * rng.random((m, self.n))


class VecField:
    """Vector field with (possibly complex) expression components."""

    __slots__ = ("components",)

    def __init__(self, components: Iterable):
        self.components: tuple[Expr, ...] = tuple(as_expr(c) for c in components)

    @property
    def n(self) -> int:
        return len(self.components)

    def __getitem__(self, r: int) -> Expr:
        return self.components[r - 1]

    def __repr__(self):
        return f"VecField({[str(c) for c in self.components]})"

    def _check(self, other: "VecField"):
        if other.n != self.n:
            raise CalculusError(f"dimension mismatch: {self.n} vs {other.n}")

    def __add__(self, other: "VecField") -> "VecField":
        self._check(other)
        return VecField(a + b for a, b in zip(self.components, other.components))

    def __sub__(self, other: "VecField") -> "VecField":
        self._check(other)
        return VecField(a - b for a, b in zip(self.components, other.components))

    def __neg__(self) -> "VecField":
        return VecField(-a for a in self.components)

    def __mul__(self, f) -> "VecField":
        f = as_expr(f)
        return VecField(f * a for a in self.components)

    __rmul__ = __mul__

    def apply(self, f: Expr) -> Expr:
        """Directional derivative X(f)."""
        return sum_exprs(c * diff(f, p) for p, c in enumerate(self.components, 1))


def coord_field(i: int, n: int) -> VecField:
    if not 1 <= i <= n:
        raise CalculusError(f"index {i} out of range 1..{n}")
    return VecField(ONE if r == i else ZERO for r in range(1, n + 1))


def lie_bracket(X: VecField, Y: VecField) -> VecField:
    X._check(Y)
    return VecField(X.apply(Y[r]) - Y.apply(X[r]) for r in range(1, X.n + 1))


def _perm_sign(seq: Sequence[int]) -> int:
    sign = 1
    s = list(seq)
    for a in range(len(s)):
        for b in range(a + 1, len(s)):
            if s[a] > s[b]:
                sign = -sign
    return sign


class Form:
    """A k-form sum_I a_I dx^I with I strictly increasing."""

    __slots__ = ("n", "degree", "coeffs")

    def __init__(self, n: int, degree: int, coeffs: Mapping[tuple[int, ...], Expr] | None = None):
        if not 0 <= degree:
            raise CalculusError(f"negative degree {degree}")
        self.n = n
        self.degree = degree
        clean: dict[tuple[int, ...], Expr] = {}
        for key, c in (coeffs or {}).items():
            key = tuple(key)
            if len(key) != degree or any(a >= b for a, b in zip(key, key[1:])):
                raise CalculusError(f"bad index tuple {key} for degree {degree}")
            if key and not (1 <= key[0] and key[-1] <= n):
                raise CalculusError(f"index tuple {key} out of range 1..{n}")
            c = as_expr(c)
            if not (c.op == "const" and c.val == 0):
                clean[key] = c
        self.coeffs = dict(sorted(clean.items()))

    @classmethod
    def zero(cls, n: int, degree: int) -> "Form":
        return cls(n, degree)

    def __getitem__(self, key) -> Expr:
        if isinstance(key, int):
            key = (key,)
        return self.coeffs.get(tuple(key), ZERO)

    def __repr__(self):
        terms = ", ".join(f"{k}: {v}" for k, v in self.coeffs.items())
        return f"Form(n={self.n}, degree={self.degree}, {{{terms}}})"

    def _check(self, other: "Form"):
        if other.n != self.n or other.degree != self.degree:
            raise CalculusError("forms of different shape")

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        keys = sorted(set(self.coeffs) | set(other.coeffs))
        return Form(self.n, self.degree, {k: self[k] + other[k] for k in keys})

    def __sub__(self, other: "Form") -> "Form":
        self._check(other)
        keys = sorted(set(self.coeffs) | set(other.coeffs))
        return Form(self.n, self.degree, {k: self[k] - other[k] for k in keys})

    def __neg__(self) -> "Form":
        return Form(self.n, self.degree, {k: -v for k, v in self.coeffs.items()})

    def __mul__(self, f) -> "Form":
        f = as_expr(f)
        return Form(self.n, self.degree, {k: f * v for k, v in self.coeffs.items()})

    __rmul__ = __mul__


def dx(i: int, n: int) -> Form:
    if not 1 <= i <= n:
        raise CalculusError(f"index {i} out of range 1..{n}")
    return Form(n, 1, {(i,): ONE})


def function_form(f, n: int) -> Form:
    return Form(n, 0, {(): as_expr(f)})


def form_sum(forms: Sequence[Form], n: int, degree: int) -> Form:
    buckets: dict[tuple[int, ...], list[Expr]] = {}
    for a in forms:
        if a.n != n or a.degree != degree:
            raise CalculusError("forms of different shape")
        for k, v in a.coeffs.items():
            buckets.setdefault(k, []).append(v)
    return Form(n, degree, {k: sum_exprs(v) for k, v in buckets.items()})


def wedge(a: Form, b: Form) -> Form:
    if a.n != b.n:
        raise CalculusError("forms live on different charts")
    k = a.degree + b.degree
    if k > a.n:
        return Form.zero(a.n, k)
    buckets: dict[tuple[int, ...], list[Expr]] = {}
    for I, ca in a.coeffs.items():
        for J, cb in b.coeffs.items():
            if set(I) & set(J):
                continue
            merged = I + J
            term = ca * cb
            if _perm_sign(merged) < 0:
                term = -term
            buckets.setdefault(tuple(sorted(merged)), []).append(term)
    return Form(a.n, k, {key: sum_exprs(v) for key, v in buckets.items()})


def ext_d(a: Form) -> Form:
    if a.degree >= a.n:
        raise CalculusError(f"exterior derivative of a degree-{a.degree} form on an {a.n}-chart")
    buckets: dict[tuple[int, ...], list[Expr]] = {}
    for I, c in a.coeffs.items():
        for i in range(1, a.n + 1):
            if i in I:
                continue
            dc = diff(c, i)
            if dc is ZERO:
                continue
            pos = sum(1 for j in I if j < i)
            buckets.setdefault(tuple(sorted(I + (i,))), []).append(-dc if pos % 2 else dc)
    return Form(a.n, a.degree + 1, {key: sum_exprs(v) for key, v in buckets.items()})


def interior(Y: VecField, a: Form) -> Form:
    """Contraction into the first slot: (i(Y)a)(v2..vk) = a(Y, v2..vk)."""
    if a.degree == 0:
        raise CalculusError("interior product of a 0-form")
    if Y.n != a.n:
        raise CalculusError(f"dimension mismatch: {Y.n} vs {a.n}")
    buckets: dict[tuple[int, ...], list[Expr]] = {}
    for I, c in a.coeffs.items():
        for pos, i in enumerate(I):
            term = Y[i] * c
            if pos % 2:
                term = -term
            buckets.setdefault(I[:pos] + I[pos + 1 :], []).append(term)
    return Form(a.n, a.degree - 1, {key: sum_exprs(v) for key, v in buckets.items()})


def _det(rows: list[list[Expr]]) -> Expr:
    k = len(rows)
    terms = []
    for perm in itertools.permutations(range(k)):
        t = ONE
        for col, row in enumerate(perm):
            t = t * rows[row][col]
        terms.append(t if _perm_sign(perm) > 0 else -t)
    return sum_exprs(terms)


def pair(a: Form, vectors: Sequence[VecField]) -> Expr:
    """Symbolic value of ``a(v1, .., vk)``."""
    if len(vectors) != a.degree:
        raise CalculusError(f"degree-{a.degree} form needs {a.degree} vectors, got {len(vectors)}")
    for v in vectors:
        if v.n != a.n:
            raise CalculusError(f"dimension mismatch: {v.n} vs {a.n}")
    if a.degree == 0:
        return a[()]
    terms = []
    for I, c in a.coeffs.items():
        rows = [[v[i] for v in vectors] for i in I]
        terms.append(c * _det(rows))
    return sum_exprs(terms)


def eval_form(a: Form, vectors: Sequence[VecField], point: Sequence[float]) -> complex:
    return evaluate(pair(a, vectors), point)


def form_values(ev: Evaluator, a: Form) -> dict[tuple[int, ...], np.ndarray]:
    """Coefficient values of ``a`` over the evaluator's points (all keys)."""
    keys = itertools.combinations(range(1, a.n + 1), a.degree)
    return {k: ev(a[k]) for k in keys}
