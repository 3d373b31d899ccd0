import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerlab import tensors as tz
from finslerlab.recurrence.scenes import random_spd

seeds = st.integers(min_value=0, max_value=2**31 - 1)
dims = st.sampled_from([3, 4, 5])


def _sym(rng, n):
    t = rng.normal(size=(n, n))
    return t + t.T


@settings(max_examples=50, deadline=None)
@given(seeds, dims)
def test_kn_symmetries_and_bilinearity(seed, n):
    rng = np.random.default_rng(seed)
    s, t, u = _sym(rng, n), _sym(rng, n), _sym(rng, n)
    P = tz.kulkarni_nomizu(s, t)
    assert np.allclose(P, -P.transpose(1, 0, 2, 3))
    assert np.allclose(P, -P.transpose(0, 1, 3, 2))
    assert np.allclose(P, P.transpose(2, 3, 0, 1))
    assert np.allclose(P, tz.kulkarni_nomizu(t, s))
    assert np.abs(tz.cyclic_sum_args(P)).max() < 1e-12 * (1 + np.abs(P).max())
    assert np.allclose(tz.kulkarni_nomizu(s, 2 * t + u), 2 * P + tz.kulkarni_nomizu(s, u))


@settings(max_examples=50, deadline=None)
@given(seeds, dims)
def test_kn_contraction_identity(seed, n):
    rng = np.random.default_rng(seed)
    g = random_spd(rng, n)
    ginv = np.linalg.inv(g)
    t = _sym(rng, n)
    lhs = tz.ricci(tz.kulkarni_nomizu(g, t), ginv)
    rhs = (n - 2) * t + np.einsum("xz,xz->", t, ginv) * g
    assert np.abs(lhs - rhs).max() < 1e-12 * (1 + np.abs(rhs).max())


@settings(max_examples=50, deadline=None)
@given(seeds, dims)
def test_gg_is_twice_G(seed, n):
    g = random_spd(np.random.default_rng(seed), n)
    assert np.abs(tz.kulkarni_nomizu(g, g) - 2 * tz.big_G(g)).max() < 1e-14


def test_kn_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        tz.kulkarni_nomizu(np.eye(3), np.arange(9.0).reshape(3, 3))


def test_sharp_flat_round_trip(rng):
    g = random_spd(rng, 4)
    A = rng.normal(size=4)
    v = tz.sharp(A, g)
    assert np.allclose(g @ v, A, atol=1e-12)
    assert np.allclose(tz.flat(v, g), A, atol=1e-12)
    assert np.allclose(tz.sharp(A, np.eye(4)), A)
    assert not np.any(tz.sharp(np.zeros(4), g))
    with pytest.raises(np.linalg.LinAlgError):
        tz.sharp(A, np.zeros((4, 4)))


def test_tensor_at_point_validation():
    T = tz.TensorAtPoint(np.eye(3), "dd", ("sym(1,2)",), "g")
    assert T.rank == 2 and T.n == 3
    with pytest.raises(tz.SymmetryError):
        tz.TensorAtPoint(np.arange(9.0).reshape(3, 3), "dd", ("sym(1,2)",))
    with pytest.raises(ValueError):
        tz.TensorAtPoint(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        tz.TensorAtPoint(np.eye(3), "dx")
    again = tz.TensorAtPoint.from_json(T.to_json())
    assert np.array_equal(again.components, T.components)


def test_constant_curvature_combinations(rng):
    n = 4
    g = random_spd(rng, n)
    ginv = np.linalg.inv(g)
    G = tz.big_G(g)
    R = 0.7 * G
    Ric = tz.ricci(R, ginv)
    r = tz.scalar_curvature(Ric, ginv)
    assert np.allclose(Ric, 0.7 * (n - 1) * g)
    assert r == pytest.approx(0.7 * n * (n - 1))
    assert np.abs(tz.concircular(R, G, r, n)).max() < 1e-12
    assert np.allclose(tz.conharmonic(R, g, Ric, n), -0.7 * n / (n - 2) * G)
    assert np.allclose(tz.ricci_operator(Ric, ginv), 0.7 * (n - 1) * np.eye(n))


def test_cyclic_sum_twice_is_three_times(rng):
    T = rng.normal(size=(3, 3, 3))
    once = tz.cyclic_sum_args(T)
    assert np.allclose(tz.cyclic_sum_args(once), 3 * once)
    T6 = rng.normal(size=(2,) * 6)
    once6 = tz.cyclic_sum_pairs(T6)
    assert np.allclose(tz.cyclic_sum_pairs(once6), 3 * once6)


def test_curvature_action_on_metric_vanishes(rng):
    # a metric-compatible curvature endomorphism kills g
    n = 3
    Rm = 0.5 * tz.big_G(np.eye(n))  # with g = identity raising is trivial
    act = tz.curvature_action(Rm, np.eye(n))
    assert np.abs(act).max() < 1e-14


def test_dbar_and_norm(rng):
    N = rng.normal(size=(3, 3))
    D = tz.dbar(N)
    assert np.allclose(D, -D.T)
    assert tz.g_norm(np.eye(3), np.eye(3)) == pytest.approx(np.sqrt(3))
