"""Synthetic curvature scenes: algebraic data satisfying chosen recurrence hypotheses.

A scene holds a metric g, a curvature tensor R of a chosen symmetry class and
the h-derivatives dR, dRic, dr (derivative slot first). Ric and r are always
contractions of R. dRic and dr are normally contractions of dR; scenes whose
hypotheses cannot be met consistently store them independently and report the
trace defect.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .. import tensors as tz
from .kinds import KIND_TAGS, KINDS

SYMMETRY_CLASSES = ("antisym", "pairsym", "algebraic")
CONSTRAINTS = ("bianchi", "r_constant", "r_zero", "einstein_like")
# hypothesis scenes beyond the plain recurrence kinds
SCENE_KINDS = KIND_TAGS + ("gcf_ric_B", "gcf_ricci_recurrent", "gcf_ric_AB")
PROJECTION_TOL = 1e-10
NULL_RTOL = 1e-9


class InfeasibleScene(ValueError):
    """The constraint set admits no nonzero curvature tensor."""

    def __init__(self, report: dict):
        self.report = report
        super().__init__(report["reason"])


# ---------------------------------------------------------------------------
# Symmetry classes
# ---------------------------------------------------------------------------


def _perm_matrix(n: int, axes) -> np.ndarray:
    idx = np.arange(n**4).reshape((n,) * 4).transpose(axes).ravel()
    P = np.zeros((n**4, n**4))
    P[np.arange(n**4), idx] = 1.0
    return P


def _nullspace(M: np.ndarray, rtol: float = NULL_RTOL) -> np.ndarray:
    if M.shape[0] == 0:
        return np.eye(M.shape[1])
    _, s, vt = np.linalg.svd(M)
    ref = s[0] if s.size and s[0] > 0 else 1.0
    rank = int((s > rtol * ref).sum())
    return vt[rank:].T


@lru_cache(maxsize=None)
def class_basis(n: int, symmetry_class: str) -> np.ndarray:
    """Orthonormal basis (columns, flattened n^4) of a curvature symmetry class.

    antisym: skew in (1,2) and (3,4); pairsym: additionally pair symmetric;
    algebraic: additionally first-Bianchi cyclic in slots 1-3.
    """
    if symmetry_class not in SYMMETRY_CLASSES:
        raise ValueError(f"unknown symmetry class {symmetry_class!r}; expected one of {SYMMETRY_CLASSES}")
    eye = np.eye(n**4)
    rows = [eye + _perm_matrix(n, (1, 0, 2, 3)), eye + _perm_matrix(n, (0, 1, 3, 2))]
    if symmetry_class in ("pairsym", "algebraic"):
        rows.append(eye - _perm_matrix(n, (2, 3, 0, 1)))
    if symmetry_class == "algebraic":
        rows.append(eye + _perm_matrix(n, (1, 2, 0, 3)) + _perm_matrix(n, (2, 0, 1, 3)))
    B = _nullspace(np.vstack(rows))
    B.setflags(write=False)
    return B


# ---------------------------------------------------------------------------
# Scene
# ---------------------------------------------------------------------------


def _kn(s, t):
    return tz.kulkarni_nomizu(s, t, check=False)


def _kn_slots(g, T):
    """g ^ T[m] for each leading slot m of a rank-3 array of symmetric matrices."""
    return np.stack([_kn(g, 0.5 * (T[m] + T[m].T)) for m in range(T.shape[0])])


@dataclass
class SyntheticScene:
    n: int
    seed: int
    kind: str
    symmetry_class: str
    constraints: tuple
    g: np.ndarray
    R: np.ndarray
    dR: np.ndarray
    dRic: np.ndarray
    dr: np.ndarray
    A: np.ndarray
    B: np.ndarray
    extra: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    # -- derived curvature -------------------------------------------------
    @cached_property
    def ginv(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    @cached_property
    def Ric(self) -> np.ndarray:
        return tz.ricci(self.R, self.ginv)

    @cached_property
    def Ric_sym(self) -> np.ndarray:
        return 0.5 * (self.Ric + self.Ric.T)

    @cached_property
    def r(self) -> float:
        return float(tz.scalar_curvature(self.Ric, self.ginv))

    @cached_property
    def G(self) -> np.ndarray:
        return tz.big_G(self.g)

    @cached_property
    def gRic(self) -> np.ndarray:
        return _kn(self.g, self.Ric_sym)

    @cached_property
    def C(self) -> np.ndarray:
        return tz.concircular(self.R, self.G, self.r, self.n)

    @cached_property
    def CH(self) -> np.ndarray:
        return self.R - self.gRic / (self.n - 2)

    @cached_property
    def H(self) -> np.ndarray:
        return self.R - self.gRic / (2 * (self.n - 1))

    @cached_property
    def dC(self) -> np.ndarray:
        n = self.n
        return self.dR - np.multiply.outer(self.dr, self.G) / (n * (n - 1))

    @cached_property
    def dCH(self) -> np.ndarray:
        return self.dR - _kn_slots(self.g, self.dRic) / (self.n - 2)

    def tensor(self, tid: str) -> np.ndarray:
        table = {"R": self.R, "Ric": self.Ric_sym, "g": self.g, "G": self.G, "gRic": self.gRic,
                 "C": self.C, "CH": self.CH, "H": self.H}
        return table[tid]

    def derivative(self, tid: str) -> np.ndarray:
        table = {"R": self.dR, "Ric": 0.5 * (self.dRic + self.dRic.transpose(0, 2, 1)), "C": self.dC, "CH": self.dCH}
        return table[tid]

    # -- diagnostics --------------------------------------------------------
    def trace_defects(self) -> dict:
        dRic_c = np.einsum("mxyzw,yw->mxz", self.dR, self.ginv)
        dr_c = np.einsum("mxz,xz->m", self.dRic, self.ginv)
        return {
            "dRic_vs_trace_dR": float(np.abs(dRic_c - self.dRic).max()),
            "dr_vs_trace_dRic": float(np.abs(dr_c - self.dr).max()),
        }

    def bianchi_residual(self) -> float:
        return float(np.abs(tz.cyclic_sum_args(self.dR, (0, 1, 2))).max())

    def flags(self) -> dict:
        defects = self.trace_defects()
        return {
            "bianchi_imposed": "bianchi" in self.constraints,
            "r_constant": "r_constant" in self.constraints,
            "r_zero": "r_zero" in self.constraints,
            "einstein_like": "einstein_like" in self.constraints,
            "trace_consistent": max(defects.values()) < PROJECTION_TOL,
        }

    # -- serialization ------------------------------------------------------
    def to_json(self) -> dict:
        def arr(a):
            a = np.asarray(a, dtype=float)
            return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}

        return {
            "type": "scene",
            "n": self.n,
            "seed": self.seed,
            "kind": self.kind,
            "symmetry_class": self.symmetry_class,
            "constraints": list(self.constraints),
            "flags": self.flags(),
            "tensors": {k: arr(getattr(self, k)) for k in ("g", "R", "dR", "dRic", "dr")},
            "planted": {"A": arr(self.A), "B": arr(self.B), **{k: arr(v) for k, v in sorted(self.extra.items())}},
            "notes": list(self.notes),
        }

    @classmethod
    def from_json(cls, d: dict) -> "SyntheticScene":
        def arr(e):
            return np.array(e["data"], dtype=float).reshape(e["shape"])

        try:
            t = d["tensors"]
            planted = dict(d["planted"])
            A, B = arr(planted.pop("A")), arr(planted.pop("B"))
            scene = cls(
                n=int(d["n"]),
                seed=int(d["seed"]),
                kind=d["kind"],
                symmetry_class=d["symmetry_class"],
                constraints=tuple(d["constraints"]),
                g=arr(t["g"]),
                R=arr(t["R"]),
                dR=arr(t["dR"]),
                dRic=arr(t["dRic"]),
                dr=arr(t["dr"]),
                A=A,
                B=B,
                extra={k: arr(v) for k, v in planted.items()},
                notes=list(d.get("notes", [])),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ValueError(f"malformed scene: {err}") from None
        n = scene.n
        if scene.g.shape != (n, n) or scene.R.shape != (n,) * 4 or scene.dR.shape != (n,) * 5:
            raise ValueError("malformed scene: tensor shapes do not match n")
        return scene

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "SyntheticScene":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------


def random_spd(rng: np.random.Generator, n: int) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    lam = rng.uniform(0.5, 2.0, size=n)
    g = (Q * lam) @ Q.T
    return 0.5 * (g + g.T)


def _ricci_of(R, ginv):
    return np.einsum("xyzw,yw->xz", R, ginv)


def _hgf_derivative(R, g, ginv, A, B):
    Ric = _ricci_of(R, ginv)
    return np.multiply.outer(A, R) + np.multiply.outer(B, _kn(g, 0.5 * (Ric + Ric.T)))


def _constraint_rows(n, g, ginv, basis, constraints, A, B):
    rows = []
    cols = [basis[:, i].reshape((n,) * 4) for i in range(basis.shape[1])]
    if "bianchi" in constraints:
        rows.append(np.stack([tz.cyclic_sum_args(_hgf_derivative(R, g, ginv, A, B), (0, 1, 2)).ravel() for R in cols], axis=1))
    if "r_zero" in constraints:
        rows.append(np.array([[np.einsum("xz,xz->", _ricci_of(R, ginv), ginv) for R in cols]]))
    if "einstein_like" in constraints:
        lam = (n - 2) / (2 * n * (n - 1))
        block = []
        for R in cols:
            Ric = _ricci_of(R, ginv)
            r = np.einsum("xz,xz->", Ric, ginv)
            block.append((Ric - lam * r * g).ravel())
        rows.append(np.stack(block, axis=1))
    return np.vstack(rows) if rows else np.zeros((0, basis.shape[1]))


def _dbar_kernel_projection(n, H, dA):
    """Project dA so that the cyclic pair sum of dbar(dA) (x) H vanishes."""
    cols = []
    for k in range(n * n):
        E = np.zeros(n * n)
        E[k] = 1.0
        E = E.reshape(n, n)
        cols.append(tz.cyclic_sum_pairs(np.multiply.outer(E - E.T, H)).ravel())
    K = _nullspace(np.stack(cols, axis=1))
    v = dA.ravel()
    return (K @ (K.T @ v)).reshape(n, n)


def synth_scene(
    n: int,
    seed: int,
    symmetry_class: str = "pairsym",
    constraints=(),
    kind: str = "hyper_generalized",
) -> SyntheticScene:
    """Seeded synthetic scene for ``kind`` with linear constraints imposed on R.

    Raises :class:`InfeasibleScene` when only R = 0 satisfies the constraints.
    """
    constraints = tuple(sorted(set(constraints)))
    if n not in (3, 4, 5):
        raise ValueError("synthetic scenes support n in {3, 4, 5}")
    bad = [c for c in constraints if c not in CONSTRAINTS]
    if bad:
        raise ValueError(f"unknown constraint(s) {bad}; expected a subset of {CONSTRAINTS}")
    if kind not in SCENE_KINDS:
        raise ValueError(f"unknown scene kind {kind!r}")
    report = {"n": n, "seed": seed, "symmetry_class": symmetry_class, "constraints": list(constraints), "kind": kind}
    if ("bianchi" in constraints or "r_constant" in constraints) and kind not in ("hyper_generalized", "recurrent"):
        raise InfeasibleScene({**report, "reason": "bianchi and r_constant are generated for hyper_generalized and recurrent scenes only"})
    if "r_constant" in constraints and "r_zero" in constraints:
        raise InfeasibleScene({**report, "reason": "r_constant asks for nonzero r, incompatible with r_zero"})

    rng = np.random.default_rng([seed, n, SYMMETRY_CLASSES.index(symmetry_class) if symmetry_class in SYMMETRY_CLASSES else 0])
    basis = class_basis(n, symmetry_class)
    g = random_spd(rng, n)
    ginv = np.linalg.inv(g)
    A = rng.normal(size=n)
    B = rng.normal(size=n)
    if kind == "recurrent":
        B = np.zeros(n)
    if "r_constant" in constraints:
        if kind == "recurrent":
            raise InfeasibleScene({**report, "reason": "a recurrent scene with constant nonzero r needs A = 0"})
        B = -A / (2 * (n - 1))

    M = _constraint_rows(n, g, ginv, basis, constraints, A, B)
    null = _nullspace(M) if M.shape[0] else np.eye(basis.shape[1])
    if null.shape[1] == 0:
        raise InfeasibleScene({**report, "reason": "constraints force R = 0 at this dimension and symmetry class", "free_dimensions": 0})
    R = (basis @ (null @ rng.normal(size=null.shape[1]))).reshape((n,) * 4)
    R = R / np.abs(R).max()

    scene = _derivatives(n, seed, kind, symmetry_class, constraints, g, ginv, R, A, B, rng)
    _post_check(scene, report)
    return scene


def _derivatives(n, seed, kind, symmetry_class, constraints, g, ginv, R, A, B, rng) -> SyntheticScene:
    Ric = _ricci_of(R, ginv)
    Ric = 0.5 * (Ric + Ric.T)
    r = float(np.einsum("xz,xz->", Ric, ginv))
    G = tz.big_G(g)
    gRic = _kn(g, Ric)
    CH = R - gRic / (n - 2)
    C = R - r / (n * (n - 1)) * G
    Ric0 = Ric - r / n * g
    E = rng.normal(size=n)
    phi = rng.normal(size=n)
    extra: dict = {}
    notes: list = []
    dRic = dr = None
    outer = np.multiply.outer

    if "einstein_like" in constraints:
        # the hypothesis holds on an open set, so its derivative vanishes too
        dRic = np.zeros((n, n, n))
        dr = np.zeros(n)
        if kind in ("generalized_recurrent", "generalized_concircular", "generalized_conharmonic"):
            dR = outer(A, R) + outer(B, G)
            notes.append("dRic and dr follow the einstein_like hypothesis; trace of dR differs by (n-1)B (x) g")
        elif kind in ("recurrent", "concircular_recurrent", "conharmonic_recurrent"):
            B = np.zeros(n)
            dR = outer(A, R)
        else:
            raise ValueError(f"einstein_like scenes are not generated for kind {kind!r}")
    elif kind == "recurrent":
        dR = outer(A, R)
    elif kind == "generalized_recurrent":
        dR = outer(A, R) + outer(B, G)
    elif kind == "ricci_recurrent":
        B = np.zeros(n)
        dR = outer(A, R)
    elif kind == "generalized_ricci_recurrent":
        dR = outer(A, R) + outer(B, G) / (n - 1)
    elif kind == "hyper_generalized":
        dR = outer(A, R) + outer(B, gRic)
        if "r_constant" in constraints:
            H = R - gRic / (2 * (n - 1))
            dA = _dbar_kernel_projection(n, H, rng.normal(size=(n, n)))
            extra["dA"] = dA
            extra["dB"] = -dA / (2 * (n - 1))
    elif kind == "concircular_recurrent":
        B = np.zeros(n)
        extra["phi"] = phi
        dR = outer(A, C) + outer(phi, G)
    elif kind == "generalized_concircular":
        extra["phi"] = phi
        dR = outer(A, C) + outer(B + phi, G)
        dr = n * (n - 1) * phi
        notes.append("dr stored independently: a consistent trace would force B = 0")
    elif kind == "conharmonic_recurrent":
        B = np.zeros(n)
        extra["E"] = E
        dRic = outer(A, Ric) + outer(E, Ric0)
        dR = outer(A, CH) + _kn_slots(g, dRic) / (n - 2)
    elif kind == "generalized_conharmonic":
        extra["E"] = E
        dr_ = A * r - (n - 1) * (n - 2) * B
        dRic = outer(dr_ / n, g) + outer(E, Ric0)
        dR = outer(A, CH) + outer(B, G) + _kn_slots(g, dRic) / (n - 2)
    elif kind == "conharmonic_symmetric":
        A = np.zeros(n)
        B = np.zeros(n)
        extra["E"] = E
        dRic = outer(E, Ric0)
        dR = _kn_slots(g, dRic) / (n - 2)
    elif kind == "gcf_ric_B":
        # generalized conharmonic with nabla Ric = -(n-2)/2 B (x) g; B fixed by trace consistency
        B = 2 * r * A / (n - 2) ** 2
        dRic = -(n - 2) / 2 * outer(B, g)
        dR = outer(A, CH) + outer(B, G) + _kn_slots(g, dRic) / (n - 2)
    elif kind == "gcf_ricci_recurrent":
        dRic = outer(A, Ric)
        dR = outer(A, CH) + outer(B, G) + _kn_slots(g, dRic) / (n - 2)
        notes.append("dRic stored from the hypothesis: a consistent trace would force B = 0")
    elif kind == "gcf_ric_AB":
        dRic = outer(A, Ric) - (n - 2) / 2 * outer(B, g)
        dR = outer(A, CH) + outer(B, G) + _kn_slots(g, dRic) / (n - 2)
        notes.append("dRic stored from the hypothesis: a consistent trace would force B = 0")
    else:  # pragma: no cover - guarded by SCENE_KINDS
        raise ValueError(kind)

    if dRic is None:
        dRic = np.einsum("mxyzw,yw->mxz", dR, ginv)
    if dr is None:
        dr = np.einsum("mxz,xz->m", dRic, ginv)
    return SyntheticScene(n, seed, kind, symmetry_class, constraints, g, R, dR, dRic, dr, A, B, extra, notes)


def planted_forms(scene: SyntheticScene) -> list:
    """Forms the scene's own recurrence model should recover, in basis order."""
    kind = KINDS.get(scene.kind)
    if kind is None:
        raise ValueError(f"scene kind {scene.kind!r} is not a recurrence kind")
    return [scene.A, scene.B][: kind.nforms]


def _post_check(scene: SyntheticScene, report: dict) -> None:
    if "bianchi" in scene.constraints and scene.bianchi_residual() > PROJECTION_TOL:
        raise InfeasibleScene({**report, "reason": f"bianchi projection residual {scene.bianchi_residual():.3e}"})
    if "r_zero" in scene.constraints and abs(scene.r) > 1e-12:
        raise InfeasibleScene({**report, "reason": f"r_zero projection left r = {scene.r:.3e}"})
    if "einstein_like" in scene.constraints:
        n = scene.n
        lam = scene.r * (n - 2) / (2 * n * (n - 1))
        res = float(np.abs(scene.Ric - lam * scene.g).max())
        if res > PROJECTION_TOL:
            raise InfeasibleScene({**report, "reason": f"einstein_like residual {res:.3e}"})
