"""Cartan connection data in local coordinates and the h-covariant derivative.

Everything is carried as truncated Taylor jets in the 2n variables (x, y)
around the evaluation point, so every derivative that enters the curvature
chain is exact up to rounding. The energy L^2 is expanded to order K and each
stage consumes derivatives: g and the spray keep order K-2, N, F and the
hv-coefficients K-3, curvature K-4 and each further h-derivative one less.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import expr as ex
from . import taylor
from .jets import taylor_eval
from .metric import EvalPoint, MetricSpec, assert_positive_definite, energy_jet, eval_L
from .taylor import TJet

# jet order of L^2 needed for the curvature itself
CURVATURE_ORDER = 4


def order_for(derivatives: int = 0) -> int:
    """Energy jet order that leaves ``derivatives`` h-derivatives of curvature available."""
    return CURVATURE_ORDER + derivatives


@dataclass(frozen=True)
class ConnectionData:
    """Spray, nonlinear connection and Cartan coefficients at one point.

    Index layout: ``N[i, j] = N^i_j``, ``F[i, j, k] = F^i_jk`` and
    ``Cv[i, j, k] = C^i_jk``.
    """

    point: EvalPoint
    G: np.ndarray
    N: np.ndarray
    F: np.ndarray
    Cv: np.ndarray

    def residuals(self) -> dict:
        y = np.array(self.point.y)
        return {
            "torsion": float(np.abs(self.F - self.F.transpose(0, 2, 1)).max()),
            "deflection": float(np.abs(np.einsum("ijk,j->ik", self.F, y) - self.N).max()),
            "spray_homogeneity": float(np.abs(self.N @ y - 2 * self.G).max()),
            "hv_contraction": float(np.abs(np.einsum("ijk,j->ik", self.Cv, y)).max()),
        }


class PointGeometry:
    """Lazily evaluated Cartan-connection pipeline at a single (x, y).

    ``order`` is the jet order of L^2; use :func:`order_for` to pick it.
    Attributes are jets unless noted; ``.value`` gives the array at the point.
    """

    def __init__(self, spec: MetricSpec, p: EvalPoint, order: int = CURVATURE_ORDER, check: bool = True):
        if order < 3:
            raise ValueError("the connection needs an energy jet of order >= 3")
        self.spec = spec
        self.p = p
        self.n = spec.n
        self.order = order
        if check:
            eval_L(spec, p)
            assert_positive_definite(self.g.value, p)

    # -- variables ----------------------------------------------------------
    @property
    def xvars(self) -> range:
        return range(0, self.n)

    @property
    def yvars(self) -> range:
        return range(self.n, 2 * self.n)

    def dx(self, t: TJet) -> TJet:
        """Partial x-gradient, new trailing axis."""
        return _trail(t.grad(self.xvars))

    def dy(self, t: TJet) -> TJet:
        """Partial y-gradient, new trailing axis."""
        return _trail(t.grad(self.yvars))

    def delta(self, t: TJet) -> TJet:
        """Horizontal derivative dt/dx^k - N^m_k dt/dy^m, new trailing axis."""
        nd = len(t.shape)
        letters = "abcdefgh"[:nd]
        return self.dx(t) - taylor.einsum(f"mk,{letters}m->{letters}k", self.N, self.dy(t))

    # -- pipeline -----------------------------------------------------------
    @cached_property
    def E(self) -> TJet:
        return energy_jet(self.spec, self.p, self.order)

    @cached_property
    def y(self) -> TJet:
        t = self.E
        coeffs = np.zeros((t.basis.count(t.order), self.n))
        coeffs[0] = self.p.y
        if t.order >= 1:
            for i in range(self.n):
                coeffs[1 + self.n + i, i] = 1.0
        return TJet(coeffs, t.order, t.nvars, t.max_order)

    @cached_property
    def g(self) -> TJet:
        g = 0.5 * self.dy(self.dy(self.E))
        return 0.5 * (g + g.transpose(1, 0))

    @cached_property
    def ginv(self) -> TJet:
        return taylor.inv(self.g)

    @cached_property
    def G(self) -> TJet:
        dEy = self.dy(self.E)
        mixed = taylor.einsum("lk,k->l", self.dx(dEy), self.y)
        return 0.25 * taylor.einsum("il,l->i", self.ginv, mixed - self.dx(self.E))

    @cached_property
    def N(self) -> TJet:
        return self.dy(self.G)

    @cached_property
    def cartan(self) -> TJet:
        """Lowered Cartan tensor T_ijk = 1/2 dg_ij/dy^k."""
        return 0.5 * self.dy(self.g)

    @cached_property
    def Cv(self) -> TJet:
        return taylor.einsum("il,ljk->ijk", self.ginv, self.cartan)

    @cached_property
    def F(self) -> TJet:
        dg = self.delta(self.g)  # dg[l, j, k] = delta_k g_lj
        christ = dg.transpose(0, 1, 2) + dg.transpose(0, 2, 1) - dg.transpose(2, 0, 1)
        F = 0.5 * taylor.einsum("il,ljk->ijk", self.ginv, christ)
        return 0.5 * (F + F.transpose(0, 2, 1))

    @cached_property
    def Omega(self) -> TJet:
        """Curvature of the nonlinear connection, Omega[m, k, l] = d_l N^m_k - d_k N^m_l."""
        dN = self.delta(self.N)
        return dN - dN.transpose(0, 2, 1)

    @cached_property
    def S(self) -> TJet:
        """Coordinate h-curvature S[i, j, k, l] = S^i_jkl (antisymmetric in k, l)."""
        F = self.F
        dF = self.delta(F)  # dF[i, j, l, k] = delta_k F^i_jl
        S = dF.transpose(0, 1, 3, 2) - dF
        FF = taylor.einsum("ipk,pjl->ijkl", F, F)
        S = S + FF - FF.transpose(0, 1, 3, 2)
        S = S - taylor.einsum("ijm,mkl->ijkl", self.Cv, self.Omega)
        return S

    @cached_property
    def R_mixed(self) -> TJet:
        """R[a, b, c, i]: components of R(X_a, X_b) X_c along X_i."""
        return self.S.transpose(3, 2, 1, 0)

    @cached_property
    def R(self) -> TJet:
        """Lowered h-curvature R[a, b, c, d] = g(R(X_a, X_b) X_c, X_d)."""
        return taylor.einsum("abci,id->abcd", self.R_mixed, self.g)

    def connection_data(self) -> ConnectionData:
        return ConnectionData(self.p, self.G.value, self.N.value, self.F.value, self.Cv.value)

    # -- h-covariant derivative ---------------------------------------------
    def nabla(self, t: TJet) -> TJet:
        """h-covariant derivative of a covariant tensor jet, derivative slot first.

        ``nabla(T)[u, a1..ak] = delta_u T[a1..ak] - sum_s F^m_{a_s u} T[..m..]``
        """
        k = len(t.shape)
        letters = "abcdefgh"[:k]
        out = self.delta(t)  # [a1..ak, u]
        for s in range(k):
            src = letters[:s] + "m" + letters[s + 1 :]
            out = out - taylor.einsum(f"m{letters[s]}u,{src}->{letters}u", self.F, t)
        return out.transpose(k, *range(k))

    def field_jet(self, components) -> TJet:
        """Jet of a covariant field given as a nested array of expressions."""
        arr = np.asarray(_parse_nested(components, self.n), dtype=object)
        flat = [taylor_eval(e, self.p.x, self.p.y, self.order, self.order) for e in arr.ravel()]
        coeffs = np.stack([f.coeffs for f in flat], axis=1).reshape((flat[0].coeffs.shape[0],) + arr.shape)
        return TJet(coeffs, self.order, 2 * self.n, self.order)


def _trail(t: TJet) -> TJet:
    # move the leading gradient axis to the end
    nd = len(t.shape)
    return t.transpose(*range(1, nd), 0)


def _parse_nested(components, n):
    if isinstance(components, (str, ex.Num, ex.Var, ex.BinOp, ex.Pow, ex.Neg, ex.Func)):
        return ex.parse_expr(components, n) if isinstance(components, str) else components
    if isinstance(components, (int, float)):
        return ex.num(float(components))
    out = np.empty(len(components), dtype=object)
    for i, c in enumerate(components):
        out[i] = _parse_nested(c, n)
    return np.array(out.tolist(), dtype=object)


# ----------------------------------------------------------------------------
# Functional interface
# ----------------------------------------------------------------------------


def geodesic_spray(spec: MetricSpec, p: EvalPoint) -> np.ndarray:
    return PointGeometry(spec, p, 3).G.value


def nonlinear_connection(spec: MetricSpec, p: EvalPoint) -> np.ndarray:
    return PointGeometry(spec, p, 3).N.value


def cartan_h_coefficients(spec: MetricSpec, p: EvalPoint) -> np.ndarray:
    return PointGeometry(spec, p, 3).F.value


def connection_data(spec: MetricSpec, p: EvalPoint) -> ConnectionData:
    return PointGeometry(spec, p, 3).connection_data()


def h_covariant_derivative(spec: MetricSpec, field, p: EvalPoint, order: int = 3) -> np.ndarray:
    """h-covariant derivative at ``p`` of a covariant tensor field.

    ``field`` is ``"g"``, a nested list of component expressions (strings or
    parsed), or a callable mapping a :class:`PointGeometry` to a jet.
    The result has the derivative direction as its first index. Fields
    built from curvature need a larger energy ``order`` (see :func:`order_for`).
    """
    geo = PointGeometry(spec, p, order)
    if isinstance(field, str) and field == "g":
        t = geo.g
    elif callable(field):
        t = field(geo)
    else:
        t = geo.field_jet(field)
    return geo.nabla(t).value
