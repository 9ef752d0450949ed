"""Identity catalog and residual harness.

Every identity is evaluated by computing both sides through separate
operation pipelines at seeded sample points, with seeded random polynomial
test fields and forms. Tier ``derived-chain`` identities decide the suite's
overall verdict; tier ``as-stated`` identities are measured and reported only.
"""

from __future__ import annotations

import itertools
import zlib
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .acs import (
    SHIFTS,
    AcsField,
    comp_d,
    del_,
    delbar,
    j_apply,
    j_form1,
    pointwise_square_residual,
    project_form,
    project_form1,
    project_vec,
    rho,
    rhobar,
)
from .calculus import (
    Chart,
    Form,
    VecField,
    coord_field,
    ext_d,
    form_sum,
    function_form,
    interior,
    lie_bracket,
    pair,
)
from .expr import I, Const, Evaluator, Expr, ExprError, Var, ipow, sum_exprs
from .nijenhuis import (
    dual_pair_forms,
    ell,
    hbar,
    hbar_def,
    k_func,
    l_func,
    n_coord,
    n_def,
    n_squared,
    weak_squares,
)

__all__ = [
    "TIER1",
    "TIER2",
    "SuiteConfig",
    "IdentityReport",
    "SuiteReport",
    "CATALOG",
    "catalog_ids",
    "sample_points",
    "random_poly",
    "random_field",
    "random_form",
    "check_identity",
    "run_suite",
]

TIER1 = "derived-chain"
TIER2 = "as-stated"


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 42
    points: int = 50
    degree: int = 2
    tol: float = 1e-9
    box: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("points must be >= 1")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.degree < 0:
            raise ValueError("field degree must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class IdentityReport:
    id: str
    statement: str
    tier: str
    samples: int
    max_abs_residual: float | None
    max_rel_residual: float | None
    passed: bool
    note: str = ""


@dataclass
class SuiteReport:
    structure: str
    dim: int
    identities: list[IdentityReport] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.identities if r.tier == TIER1)

    def get(self, identity_id: str) -> IdentityReport:
        for r in self.identities:
            if r.id == identity_id:
                return r
        raise KeyError(identity_id)

    def to_dict(self) -> dict:
        return {
            "structure": self.structure,
            "dim": self.dim,
            "passed": self.passed,
            "identities": [asdict(r) for r in self.identities],
        }


# ---------------------------------------------------------------------------
# random test objects


def _monomials(n: int, degree: int) -> list[Expr]:
    out = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(1, n + 1), total):
            m: Expr = Const(1)
            for v in sorted(set(combo)):
                m = m * ipow(Var(v), combo.count(v))
            out.append(m)
    return out


def random_poly(rng: np.random.Generator, n: int, degree: int) -> Expr:
    """Polynomial of total degree <= ``degree`` with U[-1, 1] coefficients."""
    mons = _monomials(n, degree)
    coeffs = rng.uniform(-1.0, 1.0, len(mons))
    return sum_exprs(Const(float(c)) * m for c, m in zip(coeffs, mons))


def random_field(rng: np.random.Generator, n: int, degree: int) -> VecField:
    return VecField(random_poly(rng, n, degree) for _ in range(n))


def random_form(rng: np.random.Generator, n: int, k: int, degree: int) -> Form:
    return Form(n, k, {I_: random_poly(rng, n, degree) for I_ in itertools.combinations(range(1, n + 1), k)})


def sample_points(J: AcsField, chart: Chart, config: SuiteConfig) -> np.ndarray:
    """Seeded points in the box at which J squares to -1 within tolerance."""
    if config.box is not None:
        chart = Chart(chart.n, config.box)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0]))
    kept: list[np.ndarray] = []
    for _ in range(100):
        cand = chart.sample(rng, config.points)
        sq, tr = pointwise_square_residual(J, Evaluator(cand))
        kept.extend(cand[(sq < config.tol) & (tr < config.tol)])
        if len(kept) >= config.points:
            return np.array(kept[: config.points])
    raise ValueError("could not find enough sample points where J^2 = -1 holds")


# ---------------------------------------------------------------------------
# evaluation context


class _Context:
    def __init__(self, J: AcsField, ev: Evaluator, rng: np.random.Generator, degree: int, integrable):
        self.J = J
        self.n = J.n
        self.ev = ev
        self.rng = rng
        self.degree = degree
        self.integrable = integrable

    def field(self) -> VecField:
        return random_field(self.rng, self.n, self.degree)

    def poly(self) -> Expr:
        return random_poly(self.rng, self.n, self.degree)

    def real_form1(self) -> Form:
        return random_form(self.rng, self.n, 1, self.degree)

    def form01(self) -> Form:
        return project_form1(self.J, self.real_form1(), "01")

    def form10(self) -> Form:
        return project_form1(self.J, self.real_form1(), "10")

    def vec(self, V: VecField) -> np.ndarray:
        return np.array([self.ev(c) for c in V.components])

    def coeffs(self, a: Form) -> np.ndarray:
        keys = list(itertools.combinations(range(1, a.n + 1), a.degree))
        return np.array([self.ev(a[k]) for k in keys])

    def val(self, e: Expr) -> np.ndarray:
        return self.ev(e)


Pairs = list[tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class Identity:
    id: str
    statement: str
    tier: str
    run: Callable[[_Context], Pairs | None]


CATALOG: dict[str, Identity] = {}


def _identity(identity_id: str, tier: str, statement: str):
    def register(fn):
        CATALOG[identity_id] = Identity(identity_id, statement, tier, fn)
        return fn

    return register


def catalog_ids() -> list[str]:
    return list(CATALOG)


# --- bracket of projected fields


@_identity("L2.1", TIER1, "pi01[pi10 X, pi10 Y] = -1/4 pi01 N(X,Y) and pi10[pi01 X, pi01 Y] = -1/4 pi10 N(X,Y)")
def _l21(c: _Context) -> Pairs:
    J = c.J
    X, Y = c.field(), c.field()
    N = n_def(J, X, Y)
    out = []
    for kind, other in (("10", "01"), ("01", "10")):
        br = lie_bracket(project_vec(J, X, kind), project_vec(J, Y, kind))
        out.append((c.vec(project_vec(J, br, other)), c.vec(project_vec(J, N, other) * Const(-0.25))))
    return out


# --- N against the bidegree components of d


@_identity("L2.2a", TIER1, "delbar f(N(X,Y)) = -4 (del^2 f)(X,Y), del^2 f = pi20 d(del f)")
def _l22a(c: _Context) -> Pairs:
    J, n = c.J, c.n
    f = function_form(c.poly(), n)
    X, Y = c.field(), c.field()
    lhs = pair(delbar(J, f), [n_def(J, X, Y)])
    rhs = Const(-4) * pair(project_form(J, ext_d(del_(J, f)), 2, 0), [X, Y])
    return [(c.val(lhs), c.val(rhs))]


@_identity("L2.2b", TIER1, "del f(N(X,Y)) = -4 (delbar^2 f)(X,Y), delbar^2 f = pi02 d(delbar f)")
def _l22b(c: _Context) -> Pairs:
    J, n = c.J, c.n
    f = function_form(c.poly(), n)
    X, Y = c.field(), c.field()
    lhs = pair(del_(J, f), [n_def(J, X, Y)])
    rhs = Const(-4) * pair(project_form(J, ext_d(delbar(J, f)), 0, 2), [X, Y])
    return [(c.val(lhs), c.val(rhs))]


@_identity("L2.2c", TIER1, "omega(N(X,Y)) = 4 (rho omega)(X,Y) for a (0,1)-form omega")
def _l22c(c: _Context) -> Pairs:
    J = c.J
    omega = c.form01()
    X, Y = c.field(), c.field()
    lhs = pair(omega, [n_def(J, X, Y)])
    rhs = Const(4) * pair(rho(J, omega), [X, Y])
    return [(c.val(lhs), c.val(rhs))]


@_identity("L2.2d", TIER1, "theta(N(X,Y)) = 4 (rhobar theta)(X,Y) for a (1,0)-form theta")
def _l22d(c: _Context) -> Pairs:
    J = c.J
    theta = c.form10()
    X, Y = c.field(), c.field()
    lhs = pair(theta, [n_def(J, X, Y)])
    rhs = Const(4) * pair(rhobar(J, theta), [X, Y])
    return [(c.val(lhs), c.val(rhs))]


@_identity("L4.2", TIER1, "omega(JX) = -i omega(X) for (0,1)-forms; theta(JX) = i theta(X) for (1,0)-forms")
def _l42(c: _Context) -> Pairs:
    J = c.J
    omega, theta = c.form01(), c.form10()
    X = c.field()
    JX = j_apply(J, X)
    return [
        (c.val(pair(omega, [JX])), -1j * c.val(pair(omega, [X]))),
        (c.val(pair(theta, [JX])), 1j * c.val(pair(theta, [X]))),
    ]


# --- first-type dual forms (measured only)


def _t31_setup(c: _Context):
    J = c.J
    X, Z, Y = c.field(), c.field(), c.field()
    return X, Z, Y, n_squared(J, X, Z, Y), lie_bracket(n_def(J, X, Z), Y)


@_identity("T3.1a", TIER2, "omega(N^2(X,Z;Y)) = omega([N(X,Z),Y]) for a (0,1)-form omega")
def _t31a(c: _Context) -> Pairs:
    omega = c.form01()
    _, _, _, N2, br = _t31_setup(c)
    return [(c.val(pair(omega, [N2])), c.val(pair(omega, [br])))]


@_identity("T3.1b", TIER2, "omega(JN^2(X,Z;Y)) = -i omega([N(X,Z),Y]) for a (0,1)-form omega")
def _t31b(c: _Context) -> Pairs:
    omega = c.form01()
    _, _, _, N2, br = _t31_setup(c)
    return [(c.val(pair(omega, [j_apply(c.J, N2)])), -1j * c.val(pair(omega, [br])))]


@_identity("T3.1c", TIER2, "theta(N^2(X,Z;Y)) = theta([N(X,Z),Y]) for a (1,0)-form theta")
def _t31c(c: _Context) -> Pairs:
    theta = c.form10()
    _, _, _, N2, br = _t31_setup(c)
    return [(c.val(pair(theta, [N2])), c.val(pair(theta, [br])))]


@_identity("T3.1d", TIER2, "theta(JN^2(X,Z;Y)) = i theta([N(X,Z),Y]) for a (1,0)-form theta")
def _t31d(c: _Context) -> Pairs:
    theta = c.form10()
    _, _, _, N2, br = _t31_setup(c)
    return [(c.val(pair(theta, [j_apply(c.J, N2)])), 1j * c.val(pair(theta, [br])))]


@_identity("T3.1e", TIER2, "zeta(N^2(X,Z;Y)) = zeta([N(X,Z),Y]) for a real 1-form zeta")
def _t31e(c: _Context) -> Pairs:
    zeta = c.real_form1()
    _, _, _, N2, br = _t31_setup(c)
    return [(c.val(pair(zeta, [N2])), c.val(pair(zeta, [br])))]


@_identity("T3.1f", TIER2, "zeta(JN^2(X,Z;Y)) = (J zeta)([N(X,Z),Y]) for a real 1-form zeta")
def _t31f(c: _Context) -> Pairs:
    zeta = c.real_form1()
    _, _, _, N2, br = _t31_setup(c)
    return [(c.val(pair(zeta, [j_apply(c.J, N2)])), c.val(pair(j_form1(c.J, zeta), [br])))]


# --- coordinate identities


@_identity("TRACE", TIER1, "sum_k N_ik^k = 0 for every i")
def _trace(c: _Context) -> Pairs:
    comps = n_coord(c.J)
    zero = np.zeros(c.ev.m)
    return [(c.val(comps.trace(i)), zero) for i in range(1, c.n + 1)]


@_identity("T3.2", TIER1, "S_i = sum_k hbar(d_i,d_k) = 0 for every i, and S = sum_i S_i = 0")
def _t32(c: _Context) -> Pairs:
    n = c.n
    zero = np.zeros(c.ev.m)
    s_i = [sum_exprs(hbar_def(c.J, i, k) for k in range(1, n + 1)) for i in range(1, n + 1)]
    return [(c.val(s), zero) for s in s_i] + [(c.val(sum_exprs(s_i)), zero)]


# --- second-type dual forms


def _t41_setup(c: _Context):
    X, Z, Y = c.field(), c.field(), c.field()
    return X, Z, Y, n_squared(c.J, X, Z, Y)


def _chain_bar(J, Y, omega):
    """rhobar i(Y) rho omega."""
    return rhobar(J, interior(Y, rho(J, omega)))


def _chain(J, Y, theta):
    """rho i(Y) rhobar theta."""
    return rho(J, interior(Y, rhobar(J, theta)))


@_identity("T4.1a", TIER1, "omega(N^2(X,Z;Y)) = -16 (rhobar i(Y) rho omega)(X,Z) for a (0,1)-form omega")
def _t41a(c: _Context) -> Pairs:
    omega = c.form01()
    X, Z, Y, N2 = _t41_setup(c)
    return [(c.val(pair(omega, [N2])), -16 * c.val(pair(_chain_bar(c.J, Y, omega), [X, Z])))]


@_identity("T4.1b", TIER1, "omega(JN^2(X,Z;Y)) = 16 i (rhobar i(Y) rho omega)(X,Z) for a (0,1)-form omega")
def _t41b(c: _Context) -> Pairs:
    omega = c.form01()
    X, Z, Y, N2 = _t41_setup(c)
    return [(c.val(pair(omega, [j_apply(c.J, N2)])), 16j * c.val(pair(_chain_bar(c.J, Y, omega), [X, Z])))]


@_identity("T4.1c", TIER1, "theta(N^2(X,Z;Y)) = -16 (rho i(Y) rhobar theta)(X,Z) for a (1,0)-form theta")
def _t41c(c: _Context) -> Pairs:
    theta = c.form10()
    X, Z, Y, N2 = _t41_setup(c)
    return [(c.val(pair(theta, [N2])), -16 * c.val(pair(_chain(c.J, Y, theta), [X, Z])))]


@_identity("T4.1d", TIER1, "theta(JN^2(X,Z;Y)) = -16 i (rho i(Y) rhobar theta)(X,Z) for a (1,0)-form theta")
def _t41d(c: _Context) -> Pairs:
    theta = c.form10()
    X, Z, Y, N2 = _t41_setup(c)
    return [(c.val(pair(theta, [j_apply(c.J, N2)])), -16j * c.val(pair(_chain(c.J, Y, theta), [X, Z])))]


def _real_split(J, zeta):
    Jz = j_form1(J, zeta)
    return zeta + Jz * I, zeta - Jz * I


@_identity(
    "T4.1e",
    TIER1,
    "zeta(N^2(X,Z;Y)) = -8 {rhobar i(Y) rho (zeta + i J zeta) + rho i(Y) rhobar (zeta - i J zeta)}(X,Z)",
)
def _t41e(c: _Context) -> Pairs:
    zeta = c.real_form1()
    X, Z, Y, N2 = _t41_setup(c)
    plus, minus = _real_split(c.J, zeta)
    rhs = pair(_chain_bar(c.J, Y, plus), [X, Z]) + pair(_chain(c.J, Y, minus), [X, Z])
    return [(c.val(pair(zeta, [N2])), -8 * c.val(rhs))]


@_identity(
    "T4.1f",
    TIER1,
    "zeta(JN^2(X,Z;Y)) = 8 i {rhobar i(Y) rho (zeta + i J zeta) - rho i(Y) rhobar (zeta - i J zeta)}(X,Z)",
)
def _t41f(c: _Context) -> Pairs:
    zeta = c.real_form1()
    X, Z, Y, N2 = _t41_setup(c)
    plus, minus = _real_split(c.J, zeta)
    rhs = pair(_chain_bar(c.J, Y, plus), [X, Z]) - pair(_chain(c.J, Y, minus), [X, Z])
    return [(c.val(pair(zeta, [j_apply(c.J, N2)])), 8j * c.val(rhs))]


class _DualTable:
    """Values of G(j,l)(d_i,d_k) for G = rhobar i(d_j) rho (dx^l + i J dx^l) and its partner."""

    def __init__(self, c: _Context):
        n = c.n
        self.plus = np.zeros((n + 1, n + 1, n + 1, n + 1, c.ev.m), dtype=complex)
        self.minus = np.zeros_like(self.plus)
        frame = [None] + [coord_field(i, n) for i in range(1, n + 1)]
        for j in range(1, n + 1):
            for l in range(1, n + 1):
                gp, gm = dual_pair_forms(c.J, j, l)
                for i in range(1, n + 1):
                    for k in range(1, n + 1):
                        self.plus[j, l, i, k] = c.val(pair(gp, [frame[i], frame[k]]))
                        self.minus[j, l, i, k] = c.val(pair(gm, [frame[i], frame[k]]))

    def real(self, j, l, i, k):
        return self.plus[j, l, i, k] + self.minus[j, l, i, k]

    def imag(self, j, l, i, k):
        return self.plus[j, l, i, k] - self.minus[j, l, i, k]


@_identity("T4.3", TIER2, "dual forms of K, L, hbar, ell, S_i, S, T through rhobar i(d) rho (dx +- i J dx)")
def _t43(c: _Context) -> Pairs:
    J, n = c.J, c.n
    D = _DualTable(c)
    out = []
    rng = range(1, n + 1)
    for i, k, j, l in itertools.product(rng, rng, rng, rng):
        k_rhs = -2 * (D.real(j, l, i, k) + D.real(i, l, j, k) + D.real(j, k, i, l) + D.real(i, k, j, l))
        l_rhs = 2j * (D.imag(j, l, i, k) + D.imag(i, l, j, k) + D.imag(j, k, i, l) + D.imag(i, k, j, l))
        out.append((c.val(k_func(J, i, k, j, l)), k_rhs))
        out.append((c.val(l_func(J, i, k, j, l)), l_rhs))
    comps = n_coord(J)
    for i, k in itertools.product(rng, rng):
        out.append((c.val(hbar(J, i, k, comps)), -8 * D.real(i, k, i, k)))
        out.append((c.val(ell(J, i, k)), 8j * D.imag(i, k, i, k)))
    ws = weak_squares(J)
    for i in rng:
        out.append((c.val(ws.s_i[i - 1]), -8 * sum(D.real(i, k, i, k) for k in rng)))
    out.append((c.val(ws.s), -8 * sum(D.real(i, k, i, k) for i in rng for k in rng)))
    out.append((c.val(ws.t), 8j * sum(D.imag(i, k, i, k) for i in rng for k in rng)))
    return out


@_identity("C4.4", TIER2, "sum identities of the dual-form terms over the coordinate frame vanish")
def _c44(c: _Context) -> Pairs:
    n = c.n
    D = _DualTable(c)
    rng = range(1, n + 1)
    zero = np.zeros(c.ev.m)
    out = [(sum(D.real(i, k, i, k) for k in rng), zero) for i in rng]
    out.append((sum(D.plus[i, k, i, k] for i in rng for k in rng), zero))
    out.append((sum(D.minus[i, k, i, k] for i in rng for k in rng), zero))
    return out


@_identity("TLING", TIER2, "T = sum_{i,k} ell(d_i,d_k) = 0")
def _tling(c: _Context) -> Pairs:
    return [(c.val(weak_squares(c.J).t), np.zeros(c.ev.m))]


# --- structural identities


@_identity("TENS", TIER1, "rho(f omega) = f rho omega and rhobar(f theta) = f rhobar theta")
def _tens(c: _Context) -> Pairs:
    J = c.J
    f = c.poly()
    omega, theta = c.form01(), c.form10()
    return [
        (c.coeffs(rho(J, omega * f)), c.coeffs(rho(J, omega) * f)),
        (c.coeffs(rhobar(J, theta * f)), c.coeffs(rhobar(J, theta) * f)),
    ]


@_identity("DSUM", TIER1, "rhobar + delbar + del + rho = d on forms of degree 0..2")
def _dsum(c: _Context) -> Pairs:
    J, n = c.J, c.n
    out = []
    for k in range(0, min(2, n - 1) + 1):
        a = random_form(c.rng, n, k, c.degree)
        total = form_sum([comp_d(J, a, s) for s in SHIFTS], n, k + 1)
        out.append((c.coeffs(total), c.coeffs(ext_d(a))))
    return out


@_identity("NAT", TIER1, "N = 0 identically on structures declared integrable")
def _nat(c: _Context) -> Pairs | None:
    if not c.integrable:
        return None
    J = c.J
    comps = n_coord(J)
    zero = np.zeros((c.n, c.ev.m))
    X, Y = c.field(), c.field()
    out = [(c.vec(n_def(J, X, Y)), zero)]
    for i in range(1, c.n + 1):
        for k in range(i + 1, c.n + 1):
            out.append((np.array([c.val(comps[i, k, r]) for r in range(1, c.n + 1)]), zero))
    return out


# ---------------------------------------------------------------------------
# driver


def _residuals(pairs: Pairs) -> tuple[float, float]:
    max_abs = max_rel = 0.0
    for lhs, rhs in pairs:
        lhs, rhs = np.broadcast_arrays(np.asarray(lhs), np.asarray(rhs))
        if not (np.all(np.isfinite(lhs)) and np.all(np.isfinite(rhs))):
            raise FloatingPointError("non-finite value")
        diff = np.abs(lhs - rhs)
        scale = 1.0 + np.maximum(np.abs(lhs), np.abs(rhs))
        max_abs = max(max_abs, float(diff.max(initial=0.0)))
        max_rel = max(max_rel, float((diff / scale).max(initial=0.0)))
    return max_abs, max_rel


def _identity_rng(seed: int, identity_id: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(identity_id.encode())]))


def check_identity(
    identity_id: str,
    J: AcsField,
    config: SuiteConfig,
    chart: Chart | None = None,
    integrable: bool | None = None,
    points: np.ndarray | None = None,
) -> IdentityReport:
    try:
        ident = CATALOG[identity_id]
    except KeyError:
        raise KeyError(f"unknown identity {identity_id!r}") from None
    if points is None:
        points = sample_points(J, chart or Chart(J.n), config)
    ctx = _Context(J, Evaluator(points), _identity_rng(config.seed, identity_id), config.degree, integrable)
    base = dict(id=ident.id, statement=ident.statement, tier=ident.tier)
    try:
        pairs = ident.run(ctx)
        if pairs is None:
            return IdentityReport(
                **base, samples=0, max_abs_residual=0.0, max_rel_residual=0.0, passed=True,
                note="not applicable: structure is not declared integrable",
            )
        max_abs, max_rel = _residuals(pairs)
    except (ExprError, FloatingPointError, ZeroDivisionError) as exc:
        return IdentityReport(
            **base, samples=len(points), max_abs_residual=None, max_rel_residual=None, passed=False,
            note=f"evaluation failed: {exc}",
        )
    return IdentityReport(
        **base, samples=len(points), max_abs_residual=max_abs, max_rel_residual=max_rel, passed=max_rel < config.tol
    )


def run_suite(
    J: AcsField,
    config: SuiteConfig,
    chart: Chart | None = None,
    name: str = "",
    integrable: bool | None = None,
    ids: Sequence[str] | None = None,
) -> SuiteReport:
    points = sample_points(J, chart or Chart(J.n), config)
    report = SuiteReport(name, J.n)
    for identity_id in ids or catalog_ids():
        report.identities.append(check_identity(identity_id, J, config, integrable=integrable, points=points))
    return report
