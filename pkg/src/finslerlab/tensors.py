"""Pointwise tensor algebra: Kulkarni-Nomizu products, curvature combinations and operators.

Every function accepts plain arrays; the contraction helpers also accept
Taylor jets so the same formulas feed the h-covariant derivative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from . import taylor
from .taylor import TJet

SYMMETRY_TOL = 1e-10

SYMMETRIES = ("antisym(1,2)", "antisym(3,4)", "pairsym((1,2),(3,4))", "sym(1,2)", "totally-sym")
RIEMANN_LIKE = ("antisym(1,2)", "antisym(3,4)", "pairsym((1,2),(3,4))")


class SymmetryError(ValueError):
    """Declared symmetry does not hold on the supplied components."""


def _einsum(subscripts: str, *ops):
    if any(isinstance(op, TJet) for op in ops):
        return taylor.einsum(subscripts, *ops)
    return np.einsum(subscripts, *ops)


def _arr(t) -> np.ndarray:
    return t.components if isinstance(t, TensorAtPoint) else np.asarray(t, dtype=float)


def symmetry_residual(T: np.ndarray, sym: str) -> float:
    """Largest absolute violation of a named symmetry."""
    T = np.asarray(T)
    if sym == "antisym(1,2)":
        return float(np.abs(T + np.swapaxes(T, 0, 1)).max())
    if sym == "antisym(3,4)":
        return float(np.abs(T + np.swapaxes(T, 2, 3)).max())
    if sym == "pairsym((1,2),(3,4))":
        return float(np.abs(T - T.transpose(2, 3, 0, 1)).max())
    if sym == "sym(1,2)":
        return float(np.abs(T - np.swapaxes(T, 0, 1)).max())
    if sym == "totally-sym":
        return max(float(np.abs(T - T.transpose(pm)).max()) for pm in permutations(range(T.ndim)))
    raise ValueError(f"unknown symmetry {sym!r}")


@dataclass(frozen=True)
class TensorAtPoint:
    """Dense component array with index variance and declared symmetries.

    ``variance`` is a string with one letter per slot, ``'d'`` for covariant
    (down) and ``'u'`` for contravariant. Declared symmetries are checked on
    construction, relative to the size of the components.
    """

    components: np.ndarray
    variance: str = ""
    symmetries: tuple = ()
    name: str = ""
    tol: float = field(default=SYMMETRY_TOL, repr=False, compare=False)

    def __post_init__(self):
        comps = np.array(self.components, dtype=float)
        object.__setattr__(self, "components", comps)
        variance = self.variance or "d" * comps.ndim
        object.__setattr__(self, "variance", variance)
        object.__setattr__(self, "symmetries", tuple(self.symmetries))
        if len(variance) != comps.ndim or set(variance) - set("ud"):
            raise ValueError("variance needs one 'u' or 'd' per slot")
        if comps.ndim and len(set(comps.shape)) != 1:
            raise ValueError(f"components must be n^rank, got shape {comps.shape}")
        scale = 1.0 + (float(np.abs(comps).max()) if comps.size else 0.0)
        for sym in self.symmetries:
            if sym not in SYMMETRIES:
                raise ValueError(f"unknown symmetry {sym!r}")
            need = 2 if sym in ("sym(1,2)", "antisym(1,2)") else (4 if sym != "totally-sym" else 1)
            if comps.ndim < need:
                raise ValueError(f"symmetry {sym} needs rank >= {need}")
            res = symmetry_residual(comps, sym)
            if res > self.tol * scale:
                raise SymmetryError(f"{self.name or 'tensor'}: {sym} violated by {res:.3e}")

    @property
    def rank(self) -> int:
        return self.components.ndim

    @property
    def n(self) -> int:
        return self.components.shape[0]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "variance": self.variance,
            "symmetries": list(self.symmetries),
            "shape": list(self.components.shape),
            "data": [float(v) for v in self.components.ravel()],
        }

    @classmethod
    def from_json(cls, d: dict) -> "TensorAtPoint":
        comps = np.array(d["data"], dtype=float).reshape(d["shape"])
        return cls(comps, d.get("variance", ""), tuple(d.get("symmetries", ())), d.get("name", ""))


@dataclass(frozen=True)
class OneForm:
    components: np.ndarray

    def __post_init__(self):
        c = np.array(self.components, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("a 1-form needs finite components in a flat array")
        object.__setattr__(self, "components", c)

    def norm(self, g) -> float:
        return float(np.sqrt(max(self.components @ np.linalg.solve(_arr(g), self.components), 0.0)))


# ---------------------------------------------------------------------------
# Index raising and lowering
# ---------------------------------------------------------------------------


def sharp(A, g) -> np.ndarray:
    """Vector dual to a 1-form: g(sharp(A), X) = A(X)."""
    A = A.components if isinstance(A, OneForm) else np.asarray(A, dtype=float)
    return np.linalg.solve(_arr(g), A)


def flat(v, g) -> np.ndarray:
    return _arr(g) @ np.asarray(v, dtype=float)


# ---------------------------------------------------------------------------
# Products and curvature combinations
# ---------------------------------------------------------------------------


def _check_symmetric(t, what: str, tol: float = 1e-10) -> None:
    if isinstance(t, TJet):
        t = t.value
    t = np.asarray(t)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError(f"{what} must be a square rank-2 tensor")
    if np.abs(t - t.T).max() > tol * (1.0 + np.abs(t).max()):
        raise ValueError(f"{what} is not symmetric")


def kulkarni_nomizu(s, t, check: bool = True):
    """(s ^ t)(X,Y,Z,W) = s(X,Z)t(Y,W) + s(Y,W)t(X,Z) - s(X,W)t(Y,Z) - s(Y,Z)t(X,W)."""
    if not isinstance(s, TJet):
        s = _arr(s)
    if not isinstance(t, TJet):
        t = _arr(t)
    if check:
        _check_symmetric(s, "first factor")
        _check_symmetric(t, "second factor")
    a = _einsum("xz,yw->xyzw", s, t)
    b = _einsum("yw,xz->xyzw", s, t)
    c = _einsum("xw,yz->xyzw", s, t)
    d = _einsum("yz,xw->xyzw", s, t)
    return a + b - c - d


def big_G(g):
    """G(X,Y,Z,W) = g(X,Z)g(Y,W) - g(Y,Z)g(X,W)."""
    if not isinstance(g, TJet):
        g = _arr(g)
    return _einsum("xz,yw->xyzw", g, g) - _einsum("yz,xw->xyzw", g, g)


def ricci(R, ginv):
    """Ric(X,Z): trace of R(X,Y,Z,W) over the 2nd and 4th slots."""
    return _einsum("xyzw,yw->xz", R if isinstance(R, TJet) else _arr(R), ginv)


def scalar_curvature(Ric, ginv):
    return _einsum("xz,xz->", Ric if isinstance(Ric, TJet) else _arr(Ric), ginv)


def ricci_operator(Ric, ginv) -> np.ndarray:
    """Ric_o as a matrix M[i, x] with g(Ric_o X, Y) = Ric(X, Y)."""
    return np.einsum("iy,xy->ix", _arr(ginv), _arr(Ric))


def trace_24(T, ginv):
    return ricci(T, ginv)


def concircular(R, G, r, n: int):
    """C = R - r/(n(n-1)) G."""
    return R - (r / (n * (n - 1))) * G


def conharmonic(R, g, Ric, n: int):
    """Conharmonic curvature R - (g ^ Ric)/(n - 2)."""
    if n < 3:
        raise ValueError("the conharmonic tensor needs n >= 3")
    return R - kulkarni_nomizu(g, Ric, check=False) * (1.0 / (n - 2))


def h_tensor(R, g, Ric, n: int):
    """R - (g ^ Ric)/(2(n - 1))."""
    if n < 3:
        raise ValueError("this curvature combination needs n >= 3")
    return R - kulkarni_nomizu(g, Ric, check=False) * (1.0 / (2 * (n - 1)))


def symmetrize(t):
    return 0.5 * (t + (t.transpose(1, 0)))


# ---------------------------------------------------------------------------
# Operators used by the recurrence identities
# ---------------------------------------------------------------------------


def dbar(nabla_A) -> np.ndarray:
    """(dbar A)(U,V) = nabla A(U,V) - nabla A(V,U), derivative slot first."""
    N = _arr(nabla_A)
    if N.ndim != 2:
        raise ValueError("dbar needs the rank-2 derivative of a 1-form")
    return N - N.T


def curvature_endomorphism(R_mixed, U=None, V=None) -> np.ndarray:
    """M[(u, v,) c, i]: component i of R(U,V)X_c."""
    Rm = _arr(R_mixed)
    if U is None and V is None:
        return Rm
    return np.einsum("abci,a,b->ci", Rm, np.asarray(U, float), np.asarray(V, float))


def curvature_action(R_mixed, T, U=None, V=None) -> np.ndarray:
    """Derivation action (R(U,V).T)(X1..Xk) = -sum_s T(.., R(U,V)X_s, ..).

    With U and V omitted the two directions become the two leading slots of
    the result.
    """
    T = _arr(T)
    Rm = _arr(R_mixed)
    if Rm.ndim != 4 or Rm.shape[0] != T.shape[0]:
        raise ValueError("shape mismatch between curvature and tensor")
    k = T.ndim
    letters = "abcdefgh"[:k]
    pre = "" if U is not None else "uv"
    M = curvature_endomorphism(Rm, U, V)
    out = 0.0
    for s in range(k):
        src = letters[:s] + "i" + letters[s + 1 :]
        out = out - np.einsum(f"{pre}{letters[s]}i,{src}->{pre}{letters}", M, T)
    return out


def _cyclic_axes(ndim: int, slots) -> list[tuple]:
    # axes permutations realising T(Y,Z,X) and T(Z,X,Y) on the chosen slots
    i, j, k = slots
    out = []
    for rot in ((j, k, i), (k, i, j)):
        axes = list(range(ndim))
        for dst, src in zip((i, j, k), rot):
            axes[src] = dst
        out.append(tuple(axes))
    return out


def cyclic_sum_args(T, slots=(0, 1, 2)) -> np.ndarray:
    """Sum over cyclic permutations of three argument slots (0-based)."""
    T = _arr(T)
    slots = tuple(int(s) for s in slots)
    if len(slots) != 3 or len(set(slots)) != 3 or not all(0 <= s < T.ndim for s in slots):
        raise ValueError(f"invalid slots {slots} for rank {T.ndim}")
    return T + sum(T.transpose(ax) for ax in _cyclic_axes(T.ndim, slots))


def cyclic_sum_pairs(T) -> np.ndarray:
    """Cyclic sum over the argument pairs (1,2), (3,4), (5,6) of a rank-6 tensor."""
    T = _arr(T)
    if T.ndim != 6:
        raise ValueError("cyclic_sum_pairs needs a rank-6 tensor")
    # T(P2, P3, P1) and T(P3, P1, P2)
    return T + T.transpose(4, 5, 0, 1, 2, 3) + T.transpose(2, 3, 4, 5, 0, 1)


def outer(A, T):
    """A (x) T with the 1-form in the leading slot."""
    A = A.components if isinstance(A, OneForm) else np.asarray(A, dtype=float)
    return np.multiply.outer(A, _arr(T))


def g_norm(T, ginv) -> float:
    """Norm of a covariant tensor with all indices contracted through g^-1."""
    T = _arr(T)
    ginv = _arr(ginv)
    v = T
    for _ in range(T.ndim):
        v = np.tensordot(v, ginv, axes=([0], [0]))
    return float(np.sqrt(abs(np.sum(v * T))))
