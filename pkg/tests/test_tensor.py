import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wcsloop import tensor as T
from wcsloop.tensor import AlgCurvature, DomainError, Jet2

coord = st.floats(-2.0, 2.0, allow_nan=False)


def _field(x):
    # x0^2 sin(x1) + exp(x0 x1) / (1 + x1^2)
    return x[0] * x[0] * T.sin(x[1]) + T.exp(x[0] * x[1]) / (1.0 + x[1] * x[1])


def _field_exact(x0, x1):
    s, c = math.sin(x1), math.cos(x1)
    e = math.exp(x0 * x1)
    d = 1.0 + x1 * x1
    val = x0 * x0 * s + e / d
    g0 = 2 * x0 * s + x1 * e / d
    g1 = x0 * x0 * c + x0 * e / d - 2 * x1 * e / d ** 2
    h00 = 2 * s + x1 * x1 * e / d
    h01 = 2 * x0 * c + e / d + x0 * x1 * e / d - 2 * x1 * x1 * e / d ** 2
    h11 = (-x0 * x0 * s + x0 * x0 * e / d - 4 * x0 * x1 * e / d ** 2
           - 2 * e / d ** 2 + 8 * x1 * x1 * e / d ** 3)
    return val, np.array([g0, g1]), np.array([[h00, h01], [h01, h11]])


@given(coord, coord)
def test_jet2_matches_hand_derivatives(x0, x1):
    j = T.jet2_lift(_field, np.array([x0, x1]))
    val, grad, hess = _field_exact(x0, x1)
    scale = 1.0 + abs(val) + np.abs(hess).max()
    assert abs(j.val - val) <= 1e-12 * scale
    np.testing.assert_allclose(j.grad, grad, atol=1e-11 * scale)
    np.testing.assert_allclose(j.hess, hess, atol=1e-11 * scale)


@given(st.floats(0.3, 2.0), st.floats(-1.0, 1.0))
def test_jet2_hessian_against_finite_differences(x0, x1):
    def f(x):
        return T.sqrt(x[0]) * T.cos(x[1]) + T.log(x[0] + x[1] * x[1]) + x[0] ** 2.5

    x = np.array([x0, x1])
    j = T.jet2_lift(f, x)
    h = 1e-4
    fd = np.zeros((2, 2))
    val = lambda y: float(T.jet2_lift(f, y).val)
    for a in range(2):
        for b in range(2):
            ea, eb = np.eye(2)[a] * h, np.eye(2)[b] * h
            fd[a, b] = (val(x + ea + eb) - val(x + ea - eb) - val(x - ea + eb) + val(x - ea - eb)) / (4 * h * h)
    np.testing.assert_allclose(j.hess, fd, atol=1e-5)


def test_jet2_batched_matches_pointwise():
    rng = np.random.default_rng(0)
    x = rng.uniform(0.5, 1.5, size=(7, 3))
    f = lambda v: v[0] * v[1] / v[2] + T.sin(v[2]) ** 3
    batch = T.jet2_lift(f, x)
    for i in range(7):
        single = T.jet2_lift(f, x[i])
        np.testing.assert_allclose(batch.hess[i], single.hess, rtol=1e-14)


def test_jet2_domain_errors():
    zero = np.array([0.0, 1.0])
    with pytest.raises(DomainError):
        T.jet2_lift(lambda v: 1.0 / v[0], zero)
    with pytest.raises(DomainError):
        T.jet2_lift(lambda v: T.log(v[0]), zero)
    with pytest.raises(DomainError):
        T.jet2_lift(lambda v: T.sqrt(v[0] - 1.0), zero)


def test_integer_power_is_repeated_product():
    x = Jet2.variables(np.array([1.3, -0.4]))
    a = (x[0] + x[1]) ** 3
    b = (x[0] + x[1]) * (x[0] + x[1]) * (x[0] + x[1])
    np.testing.assert_array_equal(a.hess, b.hess)


@pytest.mark.parametrize("dim", [3, 4, 5])
def test_random_tensor_has_all_symmetries(dim):
    R = T.random_alg_curvature(dim, seed=dim)
    assert T.check_symmetries(R, tol=1e-12, relative=True)


@given(st.integers(3, 5), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30)
def test_projection_is_idempotent(dim, seed):
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((dim,) * 4)
    P = T.curvature_projection(raw)
    np.testing.assert_allclose(T.curvature_projection(P), P, atol=1e-13)


def test_projection_moves_raw_arrays():
    raw = np.random.default_rng(1).standard_normal((4,) * 4)
    assert not T.check_symmetries(raw, tol=1e-3)


def test_unsupported_dimension_rejected():
    with pytest.raises(ValueError):
        T.random_alg_curvature(6, seed=0)


def test_alg_curvature_is_read_only():
    R = T.random_alg_curvature(3, seed=0)
    with pytest.raises(ValueError):
        R.comps[0, 1, 0, 1] = 1.0


def test_coordinate_frame_needs_metric():
    with pytest.raises(ValueError):
        AlgCurvature(np.zeros((3, 3, 3, 3)), T.FRAME_COORDINATE)


@given(st.floats(-3.0, 3.0))
def test_constant_curvature_sectional(kappa):
    R = T.constant_curvature(4, kappa)
    rng = np.random.default_rng(0)
    X, Y = rng.standard_normal((2, 4))
    assert T.sectional_curvature(R, X, Y) == pytest.approx(kappa, abs=1e-12)


def test_frame_change_preserves_sectional_curvature():
    R = T.random_alg_curvature(4, seed=3)
    Q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((4, 4)))
    Rq = R.in_frame(Q)
    X, Y = np.eye(4)[0], np.eye(4)[1]
    assert T.sectional_curvature(Rq, X, Y) == pytest.approx(T.sectional_curvature(R, Q[0], Q[1]), rel=1e-12)


def test_permutation_signs_and_levi_civita():
    perms = T.permutations_with_sign(4)
    assert len(perms) == 24
    assert sum(s for _, s in perms) == 0
    eps = T.levi_civita(3)
    assert eps[0, 1, 2] == 1 and eps[1, 0, 2] == -1 and eps[0, 0, 2] == 0
    # det via the symbol
    M = np.random.default_rng(2).standard_normal((3, 3))
    det = np.einsum("ijk,i,j,k->", eps, M[0], M[1], M[2])
    assert det == pytest.approx(np.linalg.det(M), rel=1e-13)
