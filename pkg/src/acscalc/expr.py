"""Scalar expressions over chart coordinates.

Expressions are immutable, hash-consed trees: two structurally identical
trees are the same Python object, so identity comparison is structural
comparison and shared subtrees are evaluated and differentiated once.

Grammar accepted by :func:`parse`::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' uint)?
    base   := number | 'i' | 'x'uint | '(' expr ')'
            | ('sin'|'cos'|'exp') '(' expr ')' | '-' base

Unary minus binds tighter than ``^``, so ``-x1^2`` reads as ``(-x1)^2``.
"""

from __future__ import annotations

import cmath
import math
import weakref
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Expr",
    "ExprError",
    "ParseError",
    "EvalError",
    "Evaluator",
    "Const",
    "Var",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "IntPow",
    "Sin",
    "Cos",
    "Exp",
    "ZERO",
    "ONE",
    "I",
    "const",
    "as_expr",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "ipow",
    "sin",
    "cos",
    "exp",
    "sum_exprs",
    "parse",
    "evaluate",
    "diff",
    "to_str",
    "max_var",
]

DIV_EPS = 1e-300


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class EvalError(ExprError):
    pass


_UNARY = ("neg", "sin", "cos", "exp")
_BINARY = ("add", "sub", "mul", "div")
_INTERN: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


class Expr:
    """A node of the expression tree. Build through the factory functions."""

    __slots__ = ("op", "val", "args", "_dcache", "__weakref__")

    op: str
    val: complex | int | None
    args: tuple["Expr", ...]

    def __new__(cls, op: str, val=None, args: tuple = ()):
        key = (op, val, args)
        node = _INTERN.get(key)
        if node is None:
            node = object.__new__(cls)
            node.op = op
            node.val = val
            node.args = args
            node._dcache = {}
            _INTERN[key] = node
        return node

    def __reduce__(self):
        return (Expr, (self.op, self.val, self.args))

    # Identity is structural equality because of interning.
    __hash__ = object.__hash__

    def __repr__(self) -> str:
        return f"Expr({to_str(self)!r})"

    def __str__(self) -> str:
        return to_str(self)

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k: int):
        return ipow(self, k)


# ---------------------------------------------------------------------------
# raw node constructors (no simplification)


def Const(value: complex | float | int) -> Expr:
    v = complex(value)
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        raise ExprError(f"non-finite constant {value!r}")
    # fold signed zeros so 0.0 and -0.0 intern to one node
    v = complex(v.real + 0.0, v.imag + 0.0)
    return Expr("const", v)


def Var(index: int) -> Expr:
    if index < 1:
        raise ExprError(f"variable index must be >= 1, got {index}")
    return Expr("var", int(index))


def Neg(a: Expr) -> Expr:
    return Expr("neg", None, (a,))


def Add(a: Expr, b: Expr) -> Expr:
    return Expr("add", None, (a, b))


def Sub(a: Expr, b: Expr) -> Expr:
    return Expr("sub", None, (a, b))


def Mul(a: Expr, b: Expr) -> Expr:
    return Expr("mul", None, (a, b))


def Div(a: Expr, b: Expr) -> Expr:
    return Expr("div", None, (a, b))


def IntPow(a: Expr, k: int) -> Expr:
    if k < 0:
        raise ExprError(f"negative exponent {k}")
    return Expr("pow", int(k), (a,))


def Sin(a: Expr) -> Expr:
    return Expr("sin", None, (a,))


def Cos(a: Expr) -> Expr:
    return Expr("cos", None, (a,))


def Exp(a: Expr) -> Expr:
    return Expr("exp", None, (a,))


ZERO = Const(0)
ONE = Const(1)
I = Const(1j)
# module-level strong refs keep these interned for the process lifetime
_MINUS_ONE = Const(-1)


# ---------------------------------------------------------------------------
# simplifying constructors


def const(value) -> Expr:
    return Const(value)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return Const(complex(x))
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def _is(e: Expr, v: complex) -> bool:
    return e.op == "const" and e.val == v


def neg(a: Expr) -> Expr:
    if a.op == "const":
        return Const(-a.val)
    if a.op == "neg":
        return a.args[0]
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return Const(a.val + b.val)
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if b.op == "neg":
        return Sub(a, b.args[0])
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return Const(a.val - b.val)
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    if b.op == "neg":
        return Add(a, b.args[0])
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return Const(a.val * b.val)
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if _is(a, -1):
        return neg(b)
    if _is(b, -1):
        return neg(a)
    if b.op == "const":
        a, b = b, a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if b.op == "const" and abs(b.val) < DIV_EPS:
        raise ExprError("division by constant zero")
    if _is(a, 0):
        return ZERO
    if _is(b, 1):
        return a
    if a.op == "const" and b.op == "const":
        return Const(a.val / b.val)
    return Div(a, b)


def ipow(a: Expr, k: int) -> Expr:
    if k < 0:
        raise ExprError(f"negative exponent {k}")
    if k == 0:
        return ONE
    if k == 1:
        return a
    if a.op == "const":
        return Const(_cpow(a.val, k))
    return IntPow(a, k)


def sin(a: Expr) -> Expr:
    if a.op == "const":
        return Const(cmath.sin(a.val))
    return Sin(a)


def cos(a: Expr) -> Expr:
    if a.op == "const":
        return Const(cmath.cos(a.val))
    return Cos(a)


def exp(a: Expr) -> Expr:
    if a.op == "const":
        return Const(cmath.exp(a.val))
    return Exp(a)


def sum_exprs(terms: Iterable[Expr]) -> Expr:
    """Sum as a balanced tree, keeping depth logarithmic."""
    items = [t for t in terms if not _is(t, 0)]
    if not items:
        return ZERO
    while len(items) > 1:
        nxt = [add(items[j], items[j + 1]) for j in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def _cpow(v, k: int):
    result = 1.0 + 0j if isinstance(v, complex) else 1.0
    base = v
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


# ---------------------------------------------------------------------------
# differentiation


def diff(e: Expr, i: int) -> Expr:
    """Exact partial derivative with respect to ``x{i}`` (1-based)."""
    if i < 1:
        raise ExprError(f"variable index must be >= 1, got {i}")
    order = _postorder(e, lambda node: i not in node._dcache)
    for node in order:
        node._dcache[i] = _diff_node(node, i)
    return e._dcache[i]


def _diff_node(node: Expr, i: int) -> Expr:
    op = node.op
    if op == "const":
        return ZERO
    if op == "var":
        return ONE if node.val == i else ZERO
    a = node.args[0]
    da = a._dcache[i]
    if op == "neg":
        return neg(da)
    if op == "sin":
        return mul(cos(a), da)
    if op == "cos":
        return neg(mul(sin(a), da))
    if op == "exp":
        return mul(node, da)
    if op == "pow":
        k = node.val
        if k == 0:
            return ZERO
        return mul(mul(Const(k), ipow(a, k - 1)), da)
    b = node.args[1]
    db = b._dcache[i]
    if op == "add":
        return add(da, db)
    if op == "sub":
        return sub(da, db)
    if op == "mul":
        return add(mul(da, b), mul(a, db))
    if op == "div":
        return div(sub(mul(da, b), mul(a, db)), ipow(b, 2))
    raise AssertionError(op)


def _postorder(root: Expr, needed) -> list[Expr]:
    """Children-first ordering of the nodes for which ``needed`` holds."""
    out: list[Expr] = []
    seen: set[int] = set()
    stack: list[tuple[Expr, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            out.append(node)
            continue
        if id(node) in seen or not needed(node):
            continue
        seen.add(id(node))
        stack.append((node, True))
        for child in node.args:
            stack.append((child, False))
    return out


# ---------------------------------------------------------------------------
# evaluation


class Evaluator:
    """Vectorised evaluation of expressions at a fixed batch of points.

    Values of every visited node are cached, so evaluating many expressions
    that share subtrees costs one numpy operation per distinct node.
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2:
            raise ValueError("points must be a (m, n) array")
        self.points = pts
        self.m, self.dim = pts.shape
        self._cache: dict[Expr, np.ndarray | complex] = {}

    def __call__(self, e: Expr) -> np.ndarray:
        cache = self._cache
        for node in _postorder(e, lambda node: node not in cache):
            cache[node] = self._eval_node(node)
        val = cache[e]
        out = np.broadcast_to(np.asarray(val, dtype=complex), (self.m,))
        if not np.all(np.isfinite(out)):
            raise EvalError(f"non-finite value of {_short(e)}")
        return out

    def _eval_node(self, node: Expr):
        op = node.op
        if op == "const":
            return node.val
        if op == "var":
            if node.val > self.dim:
                raise EvalError(f"variable x{node.val} out of range for dimension {self.dim}")
            return self.points[:, node.val - 1].astype(complex)
        c = self._cache
        a = c[node.args[0]]
        with np.errstate(all="ignore"):
            if op == "neg":
                return -a
            if op == "sin":
                return np.sin(a)
            if op == "cos":
                return np.cos(a)
            if op == "exp":
                out = np.exp(a)
                if not np.all(np.isfinite(out)):
                    raise EvalError(f"overflow in {_short(node)}")
                return out
            if op == "pow":
                return _cpow(a, node.val)
            b = c[node.args[1]]
            if op == "add":
                return a + b
            if op == "sub":
                return a - b
            if op == "mul":
                return a * b
            if op == "div":
                if np.any(np.abs(b) < DIV_EPS):
                    raise EvalError(f"division by zero in {_short(node)}")
                return a / b
        raise AssertionError(op)


def evaluate(e: Expr, point: Sequence[float]) -> complex:
    """Value of ``e`` at a single real point."""
    return complex(Evaluator(np.asarray(point, dtype=float)[None, :])(e)[0])


def max_var(e: Expr) -> int:
    return max((n.val for n in _postorder(e, lambda n: True) if n.op == "var"), default=0)


# ---------------------------------------------------------------------------
# printing


_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "pow": 3}


def _fmt_real(x: float) -> str:
    s = repr(float(x))
    if s in ("inf", "-inf", "nan"):
        raise ExprError("non-finite constant")
    return s


def _fmt_const(v: complex) -> str:
    re, im = v.real, v.imag
    if im == 0:
        return _fmt_real(re) if re >= 0 else f"(-{_fmt_real(-re)})"
    imag = "i" if im == 1 else f"{_fmt_real(abs(im))}*i"
    if re == 0:
        return imag if im > 0 else f"(-{imag})"
    sign = "+" if im > 0 else "-"
    return f"({_fmt_real(re)}{sign}{imag})"


def to_str(e: Expr) -> str:
    """Render in the DSL; ``parse(to_str(e))`` evaluates equal to ``e``."""
    memo: dict[Expr, tuple[str, int]] = {}
    for node in _postorder(e, lambda n: n not in memo):
        memo[node] = _render(node, memo)
    return memo[e][0]


def _render(node: Expr, memo) -> tuple[str, int]:
    op = node.op
    if op == "const":
        return _fmt_const(node.val), 4
    if op == "var":
        return f"x{node.val}", 4
    if op in ("sin", "cos", "exp"):
        return f"{op}({memo[node.args[0]][0]})", 4
    if op == "neg":
        s, p = memo[node.args[0]]
        return (f"-{s}" if p >= 4 else f"-({s})"), 4
    if op == "pow":
        s, p = memo[node.args[0]]
        return (f"{s}^{node.val}" if p >= 4 and not s.startswith("-") else f"({s})^{node.val}"), 3
    prec = _PREC[op]
    (ls, lp), (rs, rp) = memo[node.args[0]], memo[node.args[1]]
    if lp < prec:
        ls = f"({ls})"
    if rp <= prec:
        rs = f"({rs})"
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[op]
    return f"{ls} {sym} {rs}", prec


def _short(e: Expr, limit: int = 80) -> str:
    s = to_str(e)
    return s if len(s) <= limit else s[: limit - 3] + "..."


# ---------------------------------------------------------------------------
# parsing


class _Parser:
    def __init__(self, src: str, dim: int):
        self.src = src
        self.dim = dim
        self.pos = 0

    def _skip(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def _error(self, msg: str, pos: int | None = None):
        where = self.pos if pos is None else pos
        if where >= len(self.src):
            msg = f"{msg} (end of input)"
        raise ParseError(msg, where)

    def _expect(self, ch: str):
        if self._peek() != ch:
            self._error(f"expected {ch!r}")
        self.pos += 1

    def parse(self) -> Expr:
        e = self.expr()
        if self._peek():
            self._error(f"unexpected {self.src[self.pos]!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self._peek() in ("+", "-"):
            op = self.src[self.pos]
            self.pos += 1
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self._peek() in ("*", "/"):
            op = self.src[self.pos]
            self.pos += 1
            rhs = self.factor()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def factor(self) -> Expr:
        e = self.base()
        if self._peek() == "^":
            self.pos += 1
            self._skip()
            start = self.pos
            if self._peek() == "-":
                self._error("negative exponent")
            k = self._uint()
            if k is None:
                self._error("expected non-negative integer exponent", start)
            e = IntPow(e, k)
        return e

    def _uint(self) -> int | None:
        start = self.pos
        while self.pos < len(self.src) and self.src[self.pos].isdigit():
            self.pos += 1
        return int(self.src[start : self.pos]) if self.pos > start else None

    def base(self) -> Expr:
        ch = self._peek()
        if not ch:
            self._error("unexpected end of input")
        if ch == "-":
            self.pos += 1
            return Neg(self.base())
        if ch == "(":
            self.pos += 1
            e = self.expr()
            self._expect(")")
            return e
        if ch.isdigit() or ch == ".":
            return self._number()
        if ch.isalpha():
            start = self.pos
            while self.pos < len(self.src) and self.src[self.pos].isalpha():
                self.pos += 1
            word = self.src[start : self.pos]
            if word == "i":
                return I
            if word == "x":
                k = self._uint()
                if k is None:
                    self._error("expected variable index", self.pos)
                if not 1 <= k <= self.dim:
                    raise ParseError(f"variable x{k} out of range 1..{self.dim}", start)
                return Var(k)
            if word in ("sin", "cos", "exp"):
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return {"sin": Sin, "cos": Cos, "exp": Exp}[word](arg)
            self._error(f"unknown identifier {word!r}", start)
        self._error(f"unexpected {ch!r}")

    def _number(self) -> Expr:
        src, start = self.src, self.pos
        j = start
        while j < len(src) and (src[j].isdigit() or src[j] == "."):
            j += 1
        if j < len(src) and src[j] in "eE":
            k = j + 1
            if k < len(src) and src[k] in "+-":
                k += 1
            if k < len(src) and src[k].isdigit():
                while k < len(src) and src[k].isdigit():
                    k += 1
                j = k
        try:
            value = float(src[start:j])
        except ValueError:
            self._error(f"malformed number {src[start:j]!r}", start)
        self.pos = j
        return Const(value)


def parse(src: str, dim: int) -> Expr:
    """Parse a DSL string whose variables are ``x1 .. x{dim}``."""
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    return _Parser(src, dim).parse()
