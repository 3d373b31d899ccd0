"""Exact partial derivatives of expressions, plus a finite-difference oracle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from . import expr as ex
from .taylor import TJet, basis

MAX_JET_ORDER = 4
DEFAULT_FD_STEP = 1e-5
# working precision of the finite-difference stencil; removes cancellation
# so only the O(h^2) truncation error remains
FD_DPS = 40


def variable_names(n: int) -> list[str]:
    return [f"x{i}" for i in range(1, n + 1)] + [f"y{i}" for i in range(1, n + 1)]


def _var_position(name: str, n: int) -> int:
    kind, idx = name[0], int(name[1:])
    if kind not in "xy" or not 1 <= idx <= n:
        raise ex.IndexOutOfRangeError(name, n)
    return (idx - 1) if kind == "x" else (n + idx - 1)


def canonical(multi_index: Sequence, n: int) -> tuple[str, ...]:
    """Sorted variable tuple, e.g. ``('y2', 'x1') -> ('x1', 'y2')``."""
    names = variable_names(n)
    pos = sorted(_var_position(v, n) if isinstance(v, str) else int(v) for v in multi_index)
    return tuple(names[p] for p in pos)


def taylor_eval(e: ex.Expr, x: Sequence[float], y: Sequence[float], order: int, max_order: int | None = None) -> TJet:
    """Evaluate ``e`` as a truncated Taylor jet in the 2n variables (x, y)."""
    n = len(x)
    if len(y) != n:
        raise ValueError("x and y must have the same length")
    if ex.max_index(e) > n:
        raise ex.IndexOutOfRangeError(f"index {ex.max_index(e)}", n)
    max_order = order if max_order is None else max_order
    m = 2 * n
    point = list(x) + list(y)
    memo: dict = {}

    def ev(node: ex.Expr) -> TJet:
        if node in memo:
            return memo[node]
        if isinstance(node, ex.Num):
            val = TJet.constant(node.value, order, m, max_order)
        elif isinstance(node, ex.Var):
            v = (node.index - 1) if node.kind == "x" else (n + node.index - 1)
            val = TJet.variable(v, point[v], order, m, max_order)
        elif isinstance(node, ex.Neg):
            val = -ev(node.arg)
        elif isinstance(node, ex.BinOp):
            a, b = ev(node.left), ev(node.right)
            if node.op == "+":
                val = a + b
            elif node.op == "-":
                val = a - b
            elif node.op == "*":
                val = a * b
            else:
                if b.value == 0:
                    raise ex.DomainError("division by zero", node)
                val = a / b
        elif isinstance(node, ex.Pow):
            a = ev(node.base)
            q = node.exponent
            if q.denominator == 1 and q >= 0:
                val = _int_power(a, int(q))
            elif a.value == 0 or (q.denominator != 1 and a.value < 0):
                raise ex.DomainError("power outside its domain", node)
            else:
                val = a.power(q)
        elif isinstance(node, ex.Func):
            a = ev(node.arg)
            if node.name == "sqrt":
                if a.value < 0 or (a.value == 0 and order > 0):
                    raise ex.DomainError("sqrt outside its differentiable domain", node)
                val = a.sqrt()
            else:
                val = getattr(a, node.name)()
        else:
            raise TypeError(f"not an expression node: {node!r}")
        memo[node] = val
        return val

    return ev(e)


def _int_power(a: TJet, k: int) -> TJet:
    result = a.like(1.0)
    base = a
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


@dataclass
class Jet:
    """Value and partial derivatives of a scalar expression at a point.

    ``partials`` is keyed by canonical (sorted) variable-name tuples; the
    empty tuple holds the value.
    """

    n: int
    order: int
    value: float
    partials: dict = field(default_factory=dict)

    def partial(self, *variables) -> float:
        key = canonical(variables, self.n)
        if len(key) > self.order:
            raise ValueError(f"jet only holds partials up to order {self.order}")
        return self.partials[key]

    def gradient(self) -> np.ndarray:
        return np.array([self.partial(v) for v in variable_names(self.n)])


def jet_from_taylor(t: TJet, n: int) -> Jet:
    if t.shape != ():
        raise ValueError("Jet holds scalar fields only")
    names = variable_names(n)
    b = basis(t.nvars, t.max_order)
    parts = t.partials()
    partials = {}
    for i in range(parts.shape[0]):
        key = tuple(names[v] for v in range(t.nvars) for _ in range(int(b.exps[i, v])))
        partials[key] = float(parts[i])
    return Jet(n=n, order=t.order, value=float(parts[0]), partials=partials)


def eval_jet(e: ex.Expr, p, order: int) -> Jet:
    """All partials of ``e`` at ``p`` up to total ``order`` (0..4), exactly."""
    if not 0 <= order <= MAX_JET_ORDER:
        raise ValueError(f"order must be in 0..{MAX_JET_ORDER}")
    x, y = _xy(p)
    return jet_from_taylor(taylor_eval(e, x, y, order), len(x))


def _xy(p):
    if hasattr(p, "x") and hasattr(p, "y"):
        return list(p.x), list(p.y)
    x, y = p
    return list(x), list(y)


def finite_difference(e: ex.Expr, p, multi_index: Sequence, h: float = DEFAULT_FD_STEP) -> float:
    """Nested central-difference estimate of a partial derivative.

    Each derivative direction contributes one central difference with step
    ``h``, so the truncation error is O(h^2) for total order up to 3. The
    stencil is evaluated in ``FD_DPS``-digit arithmetic. Raises DomainError
    when a stencil point is inadmissible or the stencil straddles a pole or
    branch point of the expression.
    """
    x, y = _xy(p)
    n = len(x)
    key = canonical(multi_index, n)
    if len(key) > 3:
        raise ValueError("finite_difference supports total order <= 3")
    if h <= 0:
        raise ValueError("step must be positive")
    if not key:
        return float(ex.evaluate(e, x, y))
    positions = [_var_position(v, n) for v in key]
    with mpmath.workdps(FD_DPS):
        hm = mpmath.mpf(h)
        base = [mpmath.mpf(v) for v in list(x) + list(y)]
        total = mpmath.mpf(0)
        stencil = []
        for signs in itertools.product((1, -1), repeat=len(positions)):
            pt = list(base)
            for s, v in zip(signs, positions):
                pt[v] += s * hm
            stencil.append(pt)
            total += int(np.prod(signs)) * ex.evaluate(e, pt[:n], pt[n:], lib=mpmath)
        _check_stencil(e, [base] + stencil, n)
        return float(total / (2 * hm) ** len(positions))


def _check_stencil(e: ex.Expr, points, n: int) -> None:
    # a denominator or sqrt/power argument changing sign inside the stencil
    # means the stencil straddles a singularity
    for node in ex.walk(e):
        if isinstance(node, ex.BinOp) and node.op == "/":
            arg, what = node.right, "stencil crosses a pole"
        elif isinstance(node, ex.Func) and node.name == "sqrt":
            arg, what = node.arg, "stencil crosses a branch point"
        elif isinstance(node, ex.Pow) and (node.exponent.denominator != 1 or node.exponent < 0):
            arg, what = node.base, "stencil crosses a singular point"
        else:
            continue
        signs = {mpmath.sign(ex.evaluate(arg, pt[:n], pt[n:], lib=mpmath)) for pt in points}
        if len(signs) > 1:
            raise ex.DomainError(what, node)
