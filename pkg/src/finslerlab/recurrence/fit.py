"""Per-slot least-squares recovery of recurrence 1-forms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RESIDUAL_EPS = 1e-14
# basis tensors below this fraction of the derivative scale count as zero
ZERO_BASIS_TOL = 1e-12
# 2-column systems with condition number above this are rank deficient
COND_LIMIT = 1e8
NONZERO_FORM_TOL = 1e-8


@dataclass
class LinearFit:
    """Coefficients of ``D[m] ~ sum_k c_k[m] T_k`` for every derivative slot m.

    ``forms[k]`` is ``None`` when the k-th coefficient is indeterminate
    (zero or parallel basis tensor).
    """

    forms: list
    residual: float
    indeterminate: list = field(default_factory=list)
    condition: float = 1.0

    def form(self, k: int):
        return self.forms[k] if k < len(self.forms) else None


def _relative(res: float, ref: float) -> float:
    return float(res / max(ref, RESIDUAL_EPS))


def fit_linear_forms(derivative, basis, g=None) -> LinearFit:
    """Fit ``derivative[m, ...] = sum_k c_k[m] basis[k][...]`` slot by slot.

    The residual is the Frobenius norm of the misfit over all slots,
    relative to the norm of ``derivative`` (0 when both vanish).
    ``g`` is accepted for interface symmetry; the fit is Euclidean in
    components.
    """
    D = np.asarray(derivative, dtype=float)
    n = D.shape[0]
    basis = [np.asarray(b, dtype=float) for b in basis]
    if any(b.shape != D.shape[1:] for b in basis):
        raise ValueError("basis tensors must match the derivative shape without its first slot")
    dnorm = float(np.linalg.norm(D))
    if not basis:
        return LinearFit([], _relative(dnorm, dnorm) if dnorm > RESIDUAL_EPS else 0.0)

    M = np.stack([b.ravel() for b in basis], axis=1)
    norms = np.linalg.norm(M, axis=0)
    scale = max(float(norms.max()), RESIDUAL_EPS)
    active = [k for k in range(len(basis)) if norms[k] > ZERO_BASIS_TOL * scale and norms[k] > RESIDUAL_EPS]
    cond = 1.0
    if len(active) == 2:
        cond = float(np.linalg.cond(M[:, active] / norms[active]))
        if cond > COND_LIMIT:
            active = active[:1]
    indeterminate = [k for k in range(len(basis)) if k not in active]

    rhs = D.reshape(n, -1).T
    forms: list = [None] * len(basis)
    if active:
        coef, *_ = np.linalg.lstsq(M[:, active], rhs, rcond=None)
        for row, k in enumerate(active):
            forms[k] = coef[row]
        fitted = (M[:, active] @ coef).T
    else:
        fitted = np.zeros_like(rhs.T)
    res = float(np.linalg.norm(D.reshape(n, -1) - fitted))
    residual = 0.0 if dnorm <= RESIDUAL_EPS and res <= RESIDUAL_EPS else _relative(res, dnorm)
    return LinearFit(forms, residual, indeterminate, cond)


def form_is_nonzero(form, g, scale: float = 1.0, tol: float = NONZERO_FORM_TOL) -> bool:
    """g-norm of a fitted form against ``tol`` times the scene scale."""
    if form is None:
        return False
    ginv = np.linalg.inv(np.asarray(g, dtype=float))
    norm = float(np.sqrt(max(form @ ginv @ form, 0.0)))
    return norm > tol * scale
