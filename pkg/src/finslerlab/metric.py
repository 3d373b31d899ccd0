"""Finsler metric families and their pointwise invariants."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence

import numpy as np

from . import expr as ex
from .jets import taylor_eval

FAMILIES = ("riemannian", "randers", "minkowski")


class InvalidMetricError(ValueError):
    """The metric definition itself is malformed."""


class InadmissiblePointError(ValueError):
    """L <= 0 or g not positive definite at this (x, y); rejected per point."""


@dataclass(frozen=True)
class EvalPoint:
    x: tuple
    y: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same dimension")
        if not any(self.y):
            raise ValueError("direction y must be nonzero")

    @property
    def n(self) -> int:
        return len(self.x)

    def scaled(self, lam: float) -> "EvalPoint":
        return EvalPoint(self.x, tuple(lam * v for v in self.y))


def _parse_all(items, n):
    return tuple(ex.parse_expr(s, n) if isinstance(s, str) else s for s in items)


@dataclass(frozen=True)
class MetricSpec:
    """A Finsler metric family on a single chart of R^n.

    ``a`` is the Riemannian part (an n x n matrix of expressions in x),
    ``b`` the Randers drift 1-form and ``L`` a Minkowski norm in y only.
    """

    n: int
    family: str
    name: str = ""
    a: tuple | None = None
    b: tuple | None = None
    L: ex.Expr | None = None
    _l2: ex.Expr | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise InvalidMetricError("dimension n must be an integer >= 2")
        if self.family not in FAMILIES:
            raise InvalidMetricError(f"unknown metric family {self.family!r}")
        n = self.n
        if self.family in ("riemannian", "randers"):
            if self.a is None or len(self.a) != n or any(len(row) != n for row in self.a):
                raise InvalidMetricError("a must be an n x n matrix of expressions")
            for i in range(n):
                for j in range(n):
                    if self.a[i][j] != self.a[j][i]:
                        raise InvalidMetricError(f"a is not symmetric as written at ({i + 1},{j + 1})")
                    if ex.depends_on(self.a[i][j], "y"):
                        raise InvalidMetricError("a_ij may depend on x only")
        if self.family == "randers":
            if self.b is None or len(self.b) != n:
                raise InvalidMetricError("randers metric needs b with n components")
            if any(ex.depends_on(bi, "y") for bi in self.b):
                raise InvalidMetricError("b_i may depend on x only")
        if self.family == "minkowski":
            if self.L is None:
                raise InvalidMetricError("minkowski metric needs an expression L")
            if ex.depends_on(self.L, "x"):
                raise InvalidMetricError("minkowski L may depend on y only")
        for e in self.expressions():
            if ex.max_index(e) > n:
                raise InvalidMetricError(f"expression {ex.to_source(e)!r} uses an index above n={n}")
        object.__setattr__(self, "_l2", self._build_l2())

    # -- constructors -----------------------------------------------------
    @classmethod
    def riemannian(cls, n: int, a, name: str = "") -> "MetricSpec":
        return cls(n=n, family="riemannian", name=name, a=tuple(_parse_all(row, n) for row in a))

    @classmethod
    def randers(cls, n: int, a, b, name: str = "") -> "MetricSpec":
        return cls(n=n, family="randers", name=name, a=tuple(_parse_all(row, n) for row in a), b=_parse_all(b, n))

    @classmethod
    def minkowski(cls, n: int, L, name: str = "") -> "MetricSpec":
        return cls(n=n, family="minkowski", name=name, L=ex.parse_expr(L, n) if isinstance(L, str) else L)

    # -- expressions ------------------------------------------------------
    def expressions(self) -> list:
        out = []
        if self.a is not None:
            out += [e for row in self.a for e in row]
        if self.b is not None:
            out += list(self.b)
        if self.L is not None:
            out.append(self.L)
        return out

    def _quadratic_form(self) -> ex.Expr:
        n = self.n
        terms = []
        for i in range(n):
            yi = ex.Var("y", i + 1)
            terms.append(ex.mul(self.a[i][i], ex.mul(yi, yi)))
            for j in range(i + 1, n):
                if not ex.is_zero(self.a[i][j]):
                    terms.append(ex.mul(ex.num(2.0), ex.mul(self.a[i][j], ex.mul(yi, ex.Var("y", j + 1)))))
        return ex.total(terms)

    def L_expr(self) -> ex.Expr:
        """L(x, y) as a single expression."""
        if self.family == "minkowski":
            return self.L
        alpha = ex.Func("sqrt", self._quadratic_form())
        if self.family == "riemannian":
            return alpha
        beta = ex.total(ex.mul(self.b[i], ex.Var("y", i + 1)) for i in range(self.n))
        return ex.add(alpha, beta)

    def _build_l2(self) -> ex.Expr:
        if self.family == "riemannian":
            return self._quadratic_form()
        L = self.L_expr()
        return ex.mul(L, L)

    def L2_expr(self) -> ex.Expr:
        """L^2, the energy function whose y-Hessian is 2g."""
        return self._l2

    def to_json(self) -> dict:
        d = {"name": self.name, "n": self.n, "family": self.family}
        if self.a is not None:
            d["a"] = [[ex.to_source(e) for e in row] for row in self.a]
        if self.b is not None:
            d["b"] = [ex.to_source(e) for e in self.b]
        if self.L is not None:
            d["L"] = ex.to_source(self.L)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MetricSpec":
        if "builtin" in d:
            return builtin(d["builtin"], **{k: v for k, v in d.items() if k not in ("builtin",)})
        try:
            n, family = d["n"], d["family"]
        except KeyError as err:
            raise InvalidMetricError(f"metric spec missing field {err.args[0]!r}") from None
        name = d.get("name", "")
        if family == "riemannian":
            return cls.riemannian(n, d["a"], name)
        if family == "randers":
            return cls.randers(n, d["a"], d["b"], name)
        if family == "minkowski":
            return cls.minkowski(n, d["L"], name)
        raise InvalidMetricError(f"unknown metric family {family!r}")


# --------------------------------------------------------------------------
# Pointwise evaluation
# --------------------------------------------------------------------------


def _check_point(spec: MetricSpec, p: EvalPoint) -> None:
    if p.n != spec.n:
        raise ValueError(f"point dimension {p.n} does not match metric dimension {spec.n}")


def eval_L(spec: MetricSpec, p: EvalPoint) -> float:
    _check_point(spec, p)
    val = ex.evaluate(spec.L_expr(), p.x, p.y)
    if not val > 0:
        raise InadmissiblePointError(f"L = {val} is not positive at {p}")
    return float(val)


def energy_jet(spec: MetricSpec, p: EvalPoint, order: int):
    """Taylor jet of L^2 around p in the variables (x1..xn, y1..yn)."""
    _check_point(spec, p)
    return taylor_eval(spec.L2_expr(), p.x, p.y, order)


def fundamental_tensor(spec: MetricSpec, p: EvalPoint, check: bool = True) -> np.ndarray:
    """g_ij = 1/2 d^2(L^2)/dy^i dy^j."""
    n = spec.n
    E = energy_jet(spec, p, 2)
    yv = range(n, 2 * n)
    g = 0.5 * E.grad(yv).grad(yv).value
    g = 0.5 * (g + g.T)
    if check:
        assert_positive_definite(g, p)
    return g


def cartan_tensor(spec: MetricSpec, p: EvalPoint) -> np.ndarray:
    """T_ijk = 1/4 d^3(L^2)/dy^i dy^j dy^k, totally symmetric."""
    n = spec.n
    E = energy_jet(spec, p, 3)
    yv = range(n, 2 * n)
    T = 0.25 * E.grad(yv).grad(yv).grad(yv).value
    return symmetrize_all(T)


def symmetrize_all(T: np.ndarray) -> np.ndarray:
    perms = list(permutations(range(T.ndim)))
    return sum(T.transpose(pm) for pm in perms) / len(perms)


def assert_positive_definite(g: np.ndarray, p=None, rel_tol: float = 1e-12) -> float:
    w = np.linalg.eigvalsh(g)
    if not w[0] > rel_tol * max(abs(w[-1]), 1e-300):
        raise InadmissiblePointError(f"fundamental tensor not positive definite (min eigenvalue {w[0]:.3e}) at {p}")
    return float(w[0])


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------


@dataclass
class ValidationReport:
    passed: bool
    homogeneity_residual: float
    euler_residual: float
    min_eigenvalue: float
    eigenvalues: list
    randers_norm_max: float | None
    failures: list

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "homogeneity_residual": self.homogeneity_residual,
            "euler_residual": self.euler_residual,
            "min_eigenvalue": self.min_eigenvalue,
            "eigenvalues": self.eigenvalues,
            "randers_norm_max": self.randers_norm_max,
            "failures": self.failures,
        }


def randers_norm(spec: MetricSpec, x: Sequence[float]) -> float:
    """a-norm of the drift b at x."""
    n = spec.n
    a = np.array([[ex.evaluate(spec.a[i][j], x, [0.0] * n) for j in range(n)] for i in range(n)])
    b = np.array([ex.evaluate(bi, x, [0.0] * n) for bi in spec.b])
    return float(np.sqrt(b @ np.linalg.solve(a, b)))


def validate_metric(
    spec: MetricSpec,
    samples: Sequence[EvalPoint],
    homogeneity_tol: float = 1e-12,
    euler_tol: float = 1e-10,
) -> ValidationReport:
    """Sample-based certification of homogeneity, Euler identities and convexity.

    Never raises for a bad metric; every problem is listed in ``failures``.
    """
    if not samples:
        raise ValueError("validate_metric needs at least one sample")
    failures = []
    hom = 0.0
    euler = 0.0
    eigs = []
    rnorm = None
    for k, p in enumerate(samples):
        try:
            L = eval_L(spec, p)
            for lam in (0.5, 2.0, 3.0):
                hom = max(hom, abs(eval_L(spec, p.scaled(lam)) - lam * L) / (lam * L))
        except (InadmissiblePointError, ex.DomainError) as err:
            failures.append({"sample": k, "kind": "L", "message": str(err)})
            eigs.append(None)
            continue
        try:
            E = energy_jet(spec, p, 2)
            n = spec.n
            yv = range(n, 2 * n)
            g = 0.5 * E.grad(yv).grad(yv).value
            y = np.array(p.y)
            dE = E.grad(yv).value
            euler = max(euler, abs(y @ g @ y - L**2) / L**2, np.abs(g @ y - 0.5 * dE).max() / L)
            w = np.linalg.eigvalsh(0.5 * (g + g.T))
            eigs.append([float(v) for v in w])
            if not w[0] > 0:
                failures.append(
                    {"sample": k, "kind": "convexity", "message": f"g not positive definite, min eigenvalue {w[0]:.6g}"}
                )
        except ex.DomainError as err:
            failures.append({"sample": k, "kind": "evaluation", "message": str(err)})
            eigs.append(None)
    if spec.family == "randers":
        rnorm = max(randers_norm(spec, p.x) for p in samples)
        if not rnorm < 1:
            failures.append(
                {"sample": None, "kind": "strong-convexity", "message": f"a-norm of b reaches {rnorm:.6g} >= 1"}
            )
    if hom > homogeneity_tol:
        failures.append({"sample": None, "kind": "homogeneity", "message": f"residual {hom:.3e}"})
    if euler > euler_tol:
        failures.append({"sample": None, "kind": "euler", "message": f"residual {euler:.3e}"})
    finite = [w[0] for w in eigs if w is not None]
    return ValidationReport(
        passed=not failures,
        homogeneity_residual=hom,
        euler_residual=euler,
        min_eigenvalue=min(finite) if finite else float("nan"),
        eigenvalues=eigs,
        randers_norm_max=rnorm,
        failures=failures,
    )


# --------------------------------------------------------------------------
# Built-in corpus
# --------------------------------------------------------------------------


def _diag(n, entry):
    return [[entry if i == j else "0" for j in range(n)] for i in range(n)]


def _sumsq(n):
    return "(" + "+".join(f"x{i}^2" for i in range(1, n + 1)) + ")"


def euclidean(n: int = 3) -> MetricSpec:
    return MetricSpec.riemannian(n, _diag(n, "1"), name=f"euclidean{n}")


def sphere(n: int = 3) -> MetricSpec:
    """Stereographic chart of the unit sphere, sectional curvature +1."""
    return MetricSpec.riemannian(n, _diag(n, f"4/(1+{_sumsq(n)})^2"), name=f"sphere{n}")


def hyperbolic(n: int = 3) -> MetricSpec:
    """Poincare ball chart, sectional curvature -1."""
    return MetricSpec.riemannian(n, _diag(n, f"4/(1-{_sumsq(n)})^2"), name=f"hyperbolic{n}")


def randers_constant(n: int = 3, b1: float = 0.3) -> MetricSpec:
    b = [repr(float(b1))] + ["0"] * (n - 1)
    return MetricSpec.randers(n, _diag(n, "1"), b, name=f"randers_const{n}")


def randers_wind(n: int = 3) -> MetricSpec:
    """Euclidean background with a position-dependent drift, |b| < 0.5 on [-1, 1]^n."""
    comps = ["0.2*cos(x2)", "0.15*sin(x1)*x3" if n >= 3 else "0.15*sin(x1)"]
    comps += [f"0.1*x{i - 1}" for i in range(3, n + 1)]
    return MetricSpec.randers(n, _diag(n, "1"), comps[:n], name=f"randers_wind{n}")


def randers_sphere(n: int = 3) -> MetricSpec:
    """Sphere chart with a small drift."""
    conf = f"4/(1+{_sumsq(n)})^2"
    b = [f"0.25*x2/(1+{_sumsq(n)})", "0.1"] + ["0"] * (n - 2)
    return MetricSpec.randers(n, _diag(n, conf), b[:n], name=f"randers_sphere{n}")


def quartic(n: int = 3) -> MetricSpec:
    return MetricSpec.minkowski(n, "(" + "+".join(f"y{i}^4" for i in range(1, n + 1)) + ")^(1/4)", name=f"quartic{n}")


def euclidean_schwarzschild() -> MetricSpec:
    """Riemannian (Euclidean-signature) Schwarzschild, mass 1: Ricci-flat, R != 0.

    Coordinates (tau, r, theta, phi) with r > 2 and 0 < theta < pi.
    """
    a = [
        ["1-2/x2", "0", "0", "0"],
        ["0", "1/(1-2/x2)", "0", "0"],
        ["0", "0", "x2^2", "0"],
        ["0", "0", "0", "x2^2*sin(x3)^2"],
    ]
    return MetricSpec.riemannian(4, a, name="euclidean_schwarzschild")


BUILTINS = {
    "euclidean": euclidean,
    "sphere": sphere,
    "hyperbolic": hyperbolic,
    "randers_constant": randers_constant,
    "randers_wind": randers_wind,
    "randers_sphere": randers_sphere,
    "quartic": quartic,
    "euclidean_schwarzschild": euclidean_schwarzschild,
}


def builtin(name: str, **kwargs) -> MetricSpec:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise InvalidMetricError(f"unknown builtin metric {name!r}") from None
    kwargs.pop("name", None)
    if name == "euclidean_schwarzschild":
        kwargs.pop("n", None)
    return factory(**kwargs)


def corpus(n: int = 3) -> list[MetricSpec]:
    """The standard test corpus."""
    return [euclidean(n), sphere(n), hyperbolic(n), randers_constant(n), randers_wind(n), randers_sphere(n), quartic(n)]
