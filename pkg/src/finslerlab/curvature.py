"""h-curvature of the Cartan connection and its contractions, as fields.

The curvature objects are jets so that h-covariant derivatives can be taken
of the same formulas that produce the tensors.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from . import tensors as tz
from .connection import PointGeometry, order_for
from .metric import EvalPoint, MetricSpec
from .taylor import TJet

HORIZONTAL_TOL = 1e-9

TENSOR_IDS = ("R", "Ric", "r", "C", "CH", "H", "G", "g")


class CurvatureField:
    """Curvature hierarchy at a point, carried as jets.

    ``derivatives`` is how many h-derivatives of the curvature will be taken.
    """

    def __init__(self, spec: MetricSpec, p: EvalPoint, derivatives: int = 0):
        self.spec = spec
        self.p = p
        self.n = spec.n
        self.derivatives = derivatives
        self.geo = PointGeometry(spec, p, order_for(derivatives))

    @property
    def g(self) -> TJet:
        return self.geo.g

    @property
    def ginv(self) -> TJet:
        return self.geo.ginv

    @property
    def R(self) -> TJet:
        return self.geo.R

    @property
    def R_mixed(self) -> TJet:
        return self.geo.R_mixed

    @cached_property
    def Ric(self) -> TJet:
        return tz.ricci(self.R, self.ginv)

    @cached_property
    def r(self) -> TJet:
        return tz.scalar_curvature(self.Ric, self.ginv)

    @cached_property
    def G(self) -> TJet:
        return tz.big_G(self.g)

    @cached_property
    def C(self) -> TJet:
        n = self.n
        return self.R - (self.G * self.r) * (1.0 / (n * (n - 1)))

    @cached_property
    def gRic(self) -> TJet:
        """g ^ Ric with Ric symmetrized (its asymmetry is reported separately)."""
        return tz.kulkarni_nomizu(self.g, tz.symmetrize(self.Ric), check=False)

    @cached_property
    def CH(self) -> TJet:
        if self.n < 3:
            raise ValueError("the conharmonic tensor needs n >= 3")
        return self.R - self.gRic * (1.0 / (self.n - 2))

    @cached_property
    def H(self) -> TJet:
        if self.n < 3:
            raise ValueError("this curvature combination needs n >= 3")
        return self.R - self.gRic * (1.0 / (2 * (self.n - 1)))

    def field(self, tensor_id: str) -> TJet:
        if tensor_id not in TENSOR_IDS:
            raise ValueError(f"unknown tensor id {tensor_id!r}; expected one of {TENSOR_IDS}")
        return getattr(self, tensor_id)

    def nabla(self, tensor_id: str, times: int = 1) -> TJet:
        t = self.field(tensor_id) if isinstance(tensor_id, str) else tensor_id
        for _ in range(times):
            t = self.geo.nabla(t)
        return t

    def ricci_asymmetry(self) -> float:
        Ric = self.Ric.value
        return float(np.abs(Ric - Ric.T).max())


def _field(spec, p, derivatives=0) -> CurvatureField:
    return CurvatureField(spec, p, derivatives)


def h_curvature(spec: MetricSpec, p: EvalPoint) -> tuple[tz.TensorAtPoint, np.ndarray]:
    """Lowered h-curvature and its mixed form ``Rm[a, b, c, i]``."""
    cf = _field(spec, p)
    R = tz.TensorAtPoint(cf.R.value, "dddd", ("antisym(1,2)", "antisym(3,4)"), name="R", tol=1e-9)
    return R, cf.R_mixed.value


def vh_torsion(spec: MetricSpec, p: EvalPoint) -> np.ndarray:
    """Rhat[i, k, l] = y^j R^i_jkl, the curvature applied to the canonical section."""
    cf = _field(spec, p)
    return np.einsum("ijkl,j->ikl", cf.geo.S.value, np.asarray(p.y))


def horizontally_integrable(spec: MetricSpec, p: EvalPoint, tol: float = HORIZONTAL_TOL) -> bool:
    return bool(np.abs(vh_torsion(spec, p)).max() < tol)


def ricci(spec: MetricSpec, p: EvalPoint) -> tz.TensorAtPoint:
    cf = _field(spec, p)
    return tz.TensorAtPoint(cf.Ric.value, "dd", (), name="Ric")


def ricci_operator(spec: MetricSpec, p: EvalPoint) -> np.ndarray:
    cf = _field(spec, p)
    return tz.ricci_operator(cf.Ric.value, cf.ginv.value)


def scalar_r(spec: MetricSpec, p: EvalPoint) -> float:
    return float(_field(spec, p).r.value)


def curvature_summary(spec: MetricSpec, p: EvalPoint) -> dict:
    """All pointwise curvature objects as arrays, plus diagnostic residuals."""
    cf = _field(spec, p)
    n = spec.n
    out = {
        "g": cf.g.value,
        "R": cf.R.value,
        "Ric": cf.Ric.value,
        "r": float(cf.r.value),
        "G": cf.G.value,
        "C": cf.C.value,
        "vh_torsion": np.einsum("ijkl,j->ikl", cf.geo.S.value, np.asarray(p.y)),
        "ricci_asymmetry": cf.ricci_asymmetry(),
        "pair_symmetry_residual": tz.symmetry_residual(cf.R.value, "pairsym((1,2),(3,4))"),
    }
    if n >= 3:
        out["CH"] = cf.CH.value
        out["H"] = cf.H.value
    return out


def nabla_h_of(tensor_id: str, spec: MetricSpec, p: EvalPoint, times: int = 1) -> np.ndarray:
    """h-covariant derivative of a curvature object, derivative slot(s) leading."""
    cf = _field(spec, p, times)
    return cf.nabla(tensor_id, times).value


def dbar_field(spec: MetricSpec, p: EvalPoint, components) -> np.ndarray:
    """dbar of a 1-form field given by component expressions."""
    geo = PointGeometry(spec, p, 3)
    return tz.dbar(geo.nabla(geo.field_jet(components)).value)


def dbar_dr(spec: MetricSpec, p: EvalPoint) -> np.ndarray:
    """dbar of the 1-form nabla r."""
    cf = _field(spec, p, 2)
    return tz.dbar(cf.nabla("r", 2).value)
