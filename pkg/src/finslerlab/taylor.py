"""Truncated multivariate Taylor arithmetic on tensor-valued coefficients.

A :class:`TJet` holds the Taylor coefficients ``c_alpha`` of a tensor field
``f(p + h) = sum_alpha c_alpha h^alpha`` truncated at total degree ``order``.
Coefficients live in one array of shape ``(M, *shape)`` where the leading
axis enumerates monomials in graded order, so every lower-order jet is a
prefix of a higher-order one.

Products are Cauchy products over precomputed monomial pair tables;
differentiation drops the order by one. This is the forward-mode engine
behind both :func:`finslerlab.jets.eval_jet` and the connection pipeline.
"""

from __future__ import annotations

import math
import string
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np


class MonomialBasis:
    """Monomials of total degree <= ``max_order`` in ``nvars`` variables."""

    def __init__(self, nvars: int, max_order: int):
        self.nvars = nvars
        self.max_order = max_order
        exps = [np.zeros(nvars, dtype=np.int64)]
        for deg in range(1, max_order + 1):
            for combo in combinations_with_replacement(range(nvars), deg):
                e = np.zeros(nvars, dtype=np.int64)
                for v in combo:
                    e[v] += 1
                exps.append(e)
        self.exps = np.array(exps).reshape(len(exps), nvars)
        self.degrees = self.exps.sum(axis=1)
        self._radix = max_order + 1
        self.codes = self.exps @ (self._radix ** np.arange(nvars, dtype=np.int64))
        self._order_of_codes = np.argsort(self.codes)
        self._sorted_codes = self.codes[self._order_of_codes]
        self.factorials = np.array(
            [math.prod(math.factorial(int(a)) for a in e) for e in self.exps], dtype=float
        )
        self._pairs: dict = {}
        self._derivs: dict = {}

    def count(self, order: int) -> int:
        """Number of monomials with degree <= order (a prefix length)."""
        return int(np.searchsorted(self.degrees, order, side="right"))

    def index_of_codes(self, codes: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(self._sorted_codes, codes)
        return self._order_of_codes[pos]

    def index(self, exponent) -> int:
        code = int(np.dot(np.asarray(exponent, dtype=np.int64), self._radix ** np.arange(self.nvars)))
        return int(self.index_of_codes(np.array([code]))[0])

    def pairs(self, order: int):
        """Pair table ``(I, J, starts)`` for Cauchy products truncated at ``order``.

        Pairs are sorted by output monomial; ``np.add.reduceat`` over
        ``starts`` yields exactly ``count(order)`` output rows.
        """
        if order not in self._pairs:
            cnt = self.count(order)
            I_parts, J_parts, L_parts = [], [], []
            for i in range(cnt):
                cj = self.count(order - int(self.degrees[i]))
                J = np.arange(cj)
                L = self.index_of_codes(self.codes[i] + self.codes[:cj])
                I_parts.append(np.full(cj, i))
                J_parts.append(J)
                L_parts.append(L)
            I = np.concatenate(I_parts)
            J = np.concatenate(J_parts)
            L = np.concatenate(L_parts)
            perm = np.argsort(L, kind="stable")
            I, J, L = I[perm], J[perm], L[perm]
            starts = np.flatnonzero(np.r_[True, L[1:] != L[:-1]])
            self._pairs[order] = (I, J, starts)
        return self._pairs[order]

    def derivative_table(self, var: int, order: int):
        """Source indices and factors for d/d(var) of an order-``order`` jet."""
        key = (var, order)
        if key not in self._derivs:
            cnt = self.count(order - 1)
            shifted = self.codes[:cnt] + self._radix**var
            src = self.index_of_codes(shifted)
            factor = (self.exps[:cnt, var] + 1).astype(float)
            self._derivs[key] = (src, factor)
        return self._derivs[key]


@lru_cache(maxsize=None)
def basis(nvars: int, max_order: int) -> MonomialBasis:
    return MonomialBasis(nvars, max_order)


def _bshape(arr: np.ndarray, ndim: int) -> np.ndarray:
    # append singleton axes so coefficient tensors broadcast elementwise
    return arr.reshape(arr.shape + (1,) * (ndim - arr.ndim))


class TJet:
    """Truncated Taylor expansion of a tensor field around a point."""

    __array_priority__ = 1000

    def __init__(self, coeffs: np.ndarray, order: int, nvars: int, max_order: int):
        self.coeffs = coeffs
        self.order = order
        self.nvars = nvars
        self.max_order = max_order

    # -- construction -----------------------------------------------------
    @property
    def basis(self) -> MonomialBasis:
        return basis(self.nvars, self.max_order)

    @classmethod
    def constant(cls, value, order: int, nvars: int, max_order: int) -> "TJet":
        value = np.asarray(value, dtype=float)
        cnt = basis(nvars, max_order).count(order)
        coeffs = np.zeros((cnt,) + value.shape)
        coeffs[0] = value
        return cls(coeffs, order, nvars, max_order)

    @classmethod
    def variable(cls, var: int, value: float, order: int, nvars: int, max_order: int) -> "TJet":
        jet = cls.constant(value, order, nvars, max_order)
        if order >= 1:
            jet.coeffs[1 + var] = 1.0
        return jet

    def like(self, value) -> "TJet":
        return TJet.constant(value, self.order, self.nvars, self.max_order)

    @property
    def shape(self) -> tuple:
        return self.coeffs.shape[1:]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    def truncate(self, order: int) -> "TJet":
        if order >= self.order:
            return self
        if order < 0:
            raise ValueError("negative jet order")
        return TJet(self.coeffs[: self.basis.count(order)], order, self.nvars, self.max_order)

    def partials(self) -> np.ndarray:
        """All partial derivatives, indexed like ``coeffs``."""
        fac = self.basis.factorials[: self.coeffs.shape[0]]
        return self.coeffs * _bshape(fac, self.coeffs.ndim)

    # -- algebra ----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, TJet):
            k = min(self.order, other.order)
            return self.truncate(k), other.truncate(k)
        return self, None

    def __add__(self, other):
        if isinstance(other, TJet):
            a, b = self._coerce(other)
            return TJet(a.coeffs + b.coeffs, a.order, self.nvars, self.max_order)
        coeffs = self.coeffs.copy()
        coeffs[0] = coeffs[0] + other
        return TJet(coeffs, self.order, self.nvars, self.max_order)

    __radd__ = __add__

    def __neg__(self):
        return TJet(-self.coeffs, self.order, self.nvars, self.max_order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TJet):
            return self._cauchy(other, None)
        other = np.asarray(other, dtype=float)
        return TJet(self.coeffs * other, self.order, self.nvars, self.max_order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TJet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return TJet(self.coeffs[(slice(None),) + idx], self.order, self.nvars, self.max_order)

    def transpose(self, *axes) -> "TJet":
        return TJet(
            self.coeffs.transpose((0,) + tuple(a + 1 for a in axes)), self.order, self.nvars, self.max_order
        )

    def _cauchy(self, other: "TJet", subscripts: str | None) -> "TJet":
        k = min(self.order, other.order)
        I, J, starts = self.basis.pairs(k)
        a = self.coeffs[I]
        b = other.coeffs[J]
        if subscripts is None:
            nd = max(a.ndim, b.ndim)
            prod = _bshape(a, nd) * _bshape(b, nd) if a.ndim != b.ndim else a * b
        else:
            ins, out = subscripts.split("->")
            sa, sb = ins.split(",")
            f = _free_letter(subscripts)
            prod = np.einsum(f"{f}{sa},{f}{sb}->{f}{out}", a, b)
        return TJet(np.add.reduceat(prod, starts, axis=0), k, self.nvars, self.max_order)

    # -- differentiation ---------------------------------------------------
    def d(self, var: int) -> "TJet":
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, factor = self.basis.derivative_table(var, self.order)
        coeffs = self.coeffs[src] * _bshape(factor, self.coeffs.ndim)
        return TJet(coeffs, self.order - 1, self.nvars, self.max_order)

    def grad(self, variables) -> "TJet":
        """Stack ``d(v)`` for ``v`` in ``variables`` along a new leading tensor axis."""
        parts = [self.d(v).coeffs for v in variables]
        return TJet(np.stack(parts, axis=1), self.order - 1, self.nvars, self.max_order)

    # -- nonlinear functions (elementwise) ----------------------------------
    def compose(self, taylor_coeffs) -> "TJet":
        """Apply f elementwise given ``taylor_coeffs[k] = f^(k)(value)/k!``."""
        h = TJet(self.coeffs.copy(), self.order, self.nvars, self.max_order)
        h.coeffs[0] = 0.0
        res = self.like(taylor_coeffs[self.order])
        for k in range(self.order - 1, -1, -1):
            res = res * h + taylor_coeffs[k]
        return res

    def reciprocal(self) -> "TJet":
        a0 = self.value
        if np.any(a0 == 0):
            raise ZeroDivisionError("reciprocal of jet with zero value")
        return self.compose([(-1.0) ** k * a0 ** (-(k + 1)) for k in range(self.order + 1)])

    def power(self, q) -> "TJet":
        """Elementwise ``self ** q`` for rational ``q`` (fractions.Fraction or int)."""
        a0 = self.value
        coeffs = []
        binom = 1.0
        for k in range(self.order + 1):
            if k > 0:
                binom *= (float(q) - (k - 1)) / k
            if binom == 0.0:
                coeffs.append(np.zeros_like(a0))
            else:
                coeffs.append(binom * np.asarray(a0, dtype=float) ** (float(q) - k))
        return self.compose(coeffs)

    def sqrt(self) -> "TJet":
        from fractions import Fraction

        return self.power(Fraction(1, 2))

    def exp(self) -> "TJet":
        e0 = np.exp(self.value)
        return self.compose([e0 / math.factorial(k) for k in range(self.order + 1)])

    def sin(self) -> "TJet":
        a0 = self.value
        return self.compose([np.sin(a0 + k * np.pi / 2) / math.factorial(k) for k in range(self.order + 1)])

    def cos(self) -> "TJet":
        a0 = self.value
        return self.compose([np.cos(a0 + k * np.pi / 2) / math.factorial(k) for k in range(self.order + 1)])

    def __repr__(self) -> str:
        return f"TJet(shape={self.shape}, order={self.order}, nvars={self.nvars})"


def _free_letter(subscripts: str) -> str:
    for ch in string.ascii_letters:
        if ch not in subscripts:
            return ch
    raise ValueError("no free einsum letter")


def einsum(subscripts: str, *operands):
    """Einsum over jets and plain arrays.

    Jets are combined pairwise with Cauchy products; plain arrays act as
    constants. Intermediate results keep only the indices still needed.
    """
    ins, out = subscripts.replace(" ", "").split("->")
    specs = ins.split(",")
    if len(specs) != len(operands):
        raise ValueError("operand count does not match subscripts")
    items = sorted(zip(specs, operands), key=lambda it: not isinstance(it[1], TJet))
    if not isinstance(items[0][1], TJet):
        return np.einsum(subscripts, *operands)
    acc_spec, acc = items[0]
    for pos in range(1, len(items)):
        spec, op = items[pos]
        rest = [s for s, _ in items[pos + 1 :]]
        keep = _keep_letters(acc_spec + spec, rest, out)
        sub = f"{acc_spec},{spec}->{keep}"
        if isinstance(op, TJet):
            acc = acc._cauchy(op, sub)
        else:
            f = _free_letter(sub)
            coeffs = np.einsum(f"{f}{acc_spec},{spec}->{f}{keep}", acc.coeffs, np.asarray(op, dtype=float))
            acc = TJet(coeffs, acc.order, acc.nvars, acc.max_order)
        acc_spec = keep
    if acc_spec != out:
        f = _free_letter(subscripts)
        coeffs = np.einsum(f"{f}{acc_spec}->{f}{out}", acc.coeffs)
        acc = TJet(coeffs, acc.order, acc.nvars, acc.max_order)
    return acc


def _keep_letters(current: str, remaining: list[str], out: str) -> str:
    needed = set(out).union(*remaining)
    kept: list[str] = []
    for ch in current:
        if ch in needed and ch not in kept:
            kept.append(ch)
    return "".join(kept)


def stack(jets, axis: int = 0) -> TJet:
    """Stack equally shaped jets along a new tensor axis."""
    k = min(j.order for j in jets)
    jets = [j.truncate(k) for j in jets]
    first = jets[0]
    return TJet(np.stack([j.coeffs for j in jets], axis=axis + 1), k, first.nvars, first.max_order)


def inv(mat: TJet) -> TJet:
    """Inverse of a matrix-valued jet via the nilpotent Neumann series."""
    x0 = mat.value
    x0inv = np.linalg.inv(x0)
    h = TJet(mat.coeffs.copy(), mat.order, mat.nvars, mat.max_order)
    h.coeffs[0] = 0.0
    t = -einsum("ij,jk->ik", x0inv, h)
    term = mat.like(x0inv)
    acc = term
    for _ in range(mat.order):
        term = einsum("ij,jk->ik", t, term)
        acc = acc + term
    return acc
