import numpy as np
import pytest
import sympy as sp

from finslerlab.connection import PointGeometry, cartan_h_coefficients, connection_data, h_covariant_derivative
from finslerlab.curvature import CurvatureField, curvature_summary, h_curvature, horizontally_integrable
from finslerlab.metric import EvalPoint, MetricSpec, builtin, corpus
from tests.conftest import SCHWARZSCHILD_BOX, points

A_SOURCES = [["1 + x1^2", "x1*x2/2", "0"], ["x1*x2/2", "2 + sin(x3)", "x2/3"], ["0", "x2/3", "exp(x1)"]]


def _levi_civita(a_sources, p):
    """Christoffel symbols and curvature of a Riemannian metric via sympy."""
    n = len(a_sources)
    xs = sp.symbols(f"x1:{n + 1}")
    a = sp.Matrix([[sp.sympify(s.replace("^", "**")) for s in row] for row in a_sources])
    ainv = a.inv()
    gam = [[[sum(ainv[i, l] * (sp.diff(a[l, j], xs[k]) + sp.diff(a[l, k], xs[j]) - sp.diff(a[j, k], xs[l])) for l in range(n)) / 2
             for k in range(n)] for j in range(n)] for i in range(n)]
    subs = dict(zip(xs, p.x))
    G = np.array([[[float(gam[i][j][k].subs(subs)) for k in range(n)] for j in range(n)] for i in range(n)])
    S = np.zeros((n,) * 4)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    e = sp.diff(gam[i][j][l], xs[k]) - sp.diff(gam[i][j][k], xs[l])
                    e += sum(gam[i][m][k] * gam[m][j][l] - gam[i][m][l] * gam[m][j][k] for m in range(n))
                    S[i, j, k, l] = float(e.subs(subs))
    g = np.array(a.subs(subs).evalf(), dtype=float)
    return G, S, g


@pytest.fixture(scope="module")
def riemannian_case():
    spec = MetricSpec.riemannian(3, A_SOURCES)
    p = EvalPoint([0.2, -0.3, 0.4], [0.5, -0.1, 0.8])
    return spec, p, _levi_civita(A_SOURCES, p)


def test_riemannian_connection_is_levi_civita(riemannian_case):
    spec, p, (gamma, _, _) = riemannian_case
    F = cartan_h_coefficients(spec, p)
    assert np.abs(F - gamma).max() < 1e-12
    cd = connection_data(spec, p)
    assert np.abs(cd.N - np.einsum("ijk,j->ik", gamma, np.array(p.y))).max() < 1e-12


def test_riemannian_curvature_matches_sympy(riemannian_case):
    spec, p, (_, S, g) = riemannian_case
    R_expected = np.einsum("icba,id->abcd", S, g)
    R, _ = h_curvature(spec, p)
    assert np.abs(np.asarray(R.components) - R_expected).max() < 1e-10


@pytest.mark.parametrize("spec", corpus(3), ids=lambda s: s.name)
def test_cartan_axioms(spec):
    for p in points(3, 4):
        geo = PointGeometry(spec, p, 3)
        res = geo.connection_data().residuals()
        assert res["torsion"] == 0.0
        assert res["deflection"] < 1e-9
        assert res["hv_contraction"] < 1e-9
        assert np.abs(h_covariant_derivative(spec, "g", p)).max() < 1e-8


@pytest.mark.parametrize("name, kappa", [("sphere", 1.0), ("hyperbolic", -1.0)])
def test_constant_curvature(name, kappa):
    for n in (3, 4):
        spec = builtin(name, n=n)
        for p in points(n, 2):
            cf = CurvatureField(spec, p)
            assert np.abs(cf.R.value - kappa * cf.G.value).max() < 1e-9
            assert np.abs(cf.Ric.value - kappa * (n - 1) * cf.g.value).max() < 1e-9


def test_schwarzschild_is_ricci_flat():
    spec = builtin("euclidean_schwarzschild")
    for p in points(4, 2, box=SCHWARZSCHILD_BOX):
        cf = CurvatureField(spec, p)
        assert np.abs(cf.Ric.value).max() < 1e-10
        assert np.abs(cf.R.value).max() > 1e-3


def test_finsler_curvature_symmetries():
    spec = builtin("randers_wind", n=3)
    for p in points(3, 3):
        s = curvature_summary(spec, p)
        R = s["R"]
        assert np.abs(R + R.transpose(0, 1, 3, 2)).max() < 1e-12
        assert s["pair_symmetry_residual"] >= 0.0


def test_flat_metrics_integrable():
    for spec in (builtin("euclidean", n=3), builtin("quartic", n=3), builtin("randers_constant", n=3)):
        p = points(3, 1)[0]
        assert horizontally_integrable(spec, p)
        assert np.abs(CurvatureField(spec, p).R.value).max() < 1e-12


def test_curvature_is_degree_zero():
    spec = builtin("randers_sphere", n=3)
    p = points(3, 1)[0]
    R1 = CurvatureField(spec, p).R.value
    R3 = CurvatureField(spec, p.scaled(3.0)).R.value
    assert np.abs(R1 - R3).max() < 1e-10


def test_nabla_of_spray_data_is_consistent():
    # derivative of g along the horizontal lift vanishes for Finsler metrics too
    spec = builtin("randers_wind", n=3)
    p = points(3, 1, seed=3)[0]
    geo = PointGeometry(spec, p, 4)
    assert np.abs(geo.nabla(geo.g).value).max() < 1e-10
