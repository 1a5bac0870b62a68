import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wcsloop import geometry as G
from wcsloop import ypq as Y
from wcsloop.tensor import DomainError


@pytest.fixture(scope="module")
def y73():
    return Y.solve_params(7, 3)


def test_params_7_3(y73):
    assert y73.n == 13
    assert y73.a == pytest.approx(100 / 343, rel=1e-15)
    assert y73.ell == pytest.approx(3 / 20, rel=1e-15)
    assert y73.y1 == pytest.approx(-2 / 7, rel=1e-15)
    assert y73.y2 == pytest.approx(5 / 14, rel=1e-15)
    for y in (y73.y1, y73.y2):
        assert abs(y73.a - 3 * y * y + 2 * y ** 3) < 1e-13
    assert y73.y1 < y73.y2 < y73.y3


@pytest.mark.parametrize("p,q,err", [(2, 1, Y.NotSquareError), (6, 3, Y.NotCoprimeError),
                                     (3, 3, Y.OrderingError), (3, 5, Y.OrderingError)])
def test_params_rejected(p, q, err):
    with pytest.raises(err):
        Y.solve_params(p, q)


def _valid_pairs(limit=40):
    out = []
    for p in range(2, limit):
        for q in range(1, p):
            d = 4 * p * p - 3 * q * q
            if math.gcd(p, q) == 1 and math.isqrt(d) ** 2 == d:
                out.append((p, q))
    return out


@pytest.mark.parametrize("p,q", _valid_pairs())
def test_roots_match_closed_forms(p, q):
    P = Y.solve_params(p, q)
    assert 0 < P.a < 1 and P.ell > 0
    # roots in closed form for perfect-square discriminant
    assert P.y1 == pytest.approx((2 * p - 3 * q - P.n) / (4 * p), abs=1e-14)
    assert P.y2 == pytest.approx((2 * p + 3 * q - P.n) / (4 * p), abs=1e-14)


@given(st.floats(0.01, 0.99))
def test_cubic_roots_residual(a):
    for y in Y.cubic_roots(a):
        assert abs(a - 3 * y * y + 2 * y ** 3) < 1e-13


def test_metric_entries(y73):
    th, y = 1.1, 0.05
    g = Y.metric_at(y73, th, y)
    a = y73.a
    w = 2 * (a - y * y) / (1 - y)
    q = (a - 3 * y * y + 2 * y ** 3) / (a - y * y)
    assert g[1, 1] == pytest.approx((1 - y) / 6, rel=1e-15)
    assert g[2, 2] == pytest.approx(1 / (w * q), rel=1e-14)
    assert g[4, 4] == pytest.approx(w, rel=1e-15)
    np.testing.assert_array_equal(g, g.T)
    assert np.linalg.eigvalsh(g).min() > 0


@pytest.mark.parametrize("th,yfrac", [(0.0, 0.5), (math.pi, 0.5), (1.0, 0.0), (1.0, 1.0)])
def test_metric_rejects_degenerate_points(y73, th, yfrac):
    y = {0.0: y73.y1, 1.0: y73.y2}.get(yfrac, 0.5 * (y73.y1 + y73.y2))
    with pytest.raises(DomainError):
        Y.metric_at(y73, th, y)


def test_metric_independent_of_angles(y73):
    chart = Y.ypq_chart(y73)
    x = Y._points(chart, 0.9, 0.1)
    _, dg, _ = G.metric_jets(chart, x)
    for k in (0, 3, 4):
        assert np.max(np.abs(dg[..., k])) < 1e-15


def test_integrand_independent_of_angles(y73):
    th, y = np.array([0.4, 1.7]), np.array([-0.1, 0.2])
    base = Y.integrand_f(y73, th, y)
    moved = Y.integrand_f(y73, th, y, angles=(0.3, 5.9, 0.7))
    np.testing.assert_allclose(moved, base, rtol=1e-14)


def test_integrand_full_and_reduced_agree(y73):
    full, red = Y.integrand_full_path(y73, math.pi / 2, 0.5 * (y73.y1 + y73.y2))
    assert full == pytest.approx(red, rel=1e-10)
    batched = Y.integrand_f(y73, math.pi / 2, 0.5 * (y73.y1 + y73.y2))
    assert batched == pytest.approx(red, rel=1e-11)


@pytest.mark.parametrize("th", [0.05, 1.3, 2.9])
def test_gauges_give_the_same_integrand(y73, th):
    y = np.linspace(y73.y1 + 0.01, y73.y2 - 0.01, 4)
    vals = [Y.integrand_f(y73, th, y, chart=Y.ypq_chart(y73, gauge=g)) for g in (0, 1, -1)]
    np.testing.assert_allclose(vals[1], vals[0], rtol=1e-9)
    np.testing.assert_allclose(vals[2], vals[0], rtol=1e-9)


def test_theta_reflection_symmetry(y73):
    assert Y.theta_reflection_defect(y73) < 1e-12


def test_integrand_factorises_through_sin_theta(y73):
    y = np.linspace(y73.y1 + 0.02, y73.y2 - 0.02, 5)
    f1 = Y.integrand_f(y73, 0.3, y) / math.sin(0.3)
    f2 = Y.integrand_f(y73, 2.0, y) / math.sin(2.0)
    np.testing.assert_allclose(f1, f2, rtol=1e-11)


def test_double_integral_is_rational(y73):
    # C = 1 double integral over (theta, y); the dyadic rule pins the rational
    rep = Y.integrate(y73, Y.QuadratureSpec(rel_tol=1e-12), constant=1.0)
    inner = rep.value / ((2 * math.pi) ** 3 * y73.ell)
    assert Fraction(inner).limit_denominator(1000) == Fraction(-288, 49)
    assert inner == pytest.approx(-288 / 49, rel=1e-11)


def test_double_integral_against_adaptive_quadrature(y73):
    from scipy.integrate import quad

    # f = sin(theta) F(y): the theta integral is 2 F(y)
    F = lambda y: float(Y.integrand_f(y73, math.pi / 2, y))
    ref, _ = quad(F, y73.y1, y73.y2, epsrel=1e-12, limit=200)
    rep = Y.integrate(y73, Y.QuadratureSpec(rel_tol=1e-11))
    assert rep.value == pytest.approx((2 * math.pi) ** 3 * y73.ell * 2 * ref, rel=1e-10)


def test_refinement_is_cauchy(y73):
    rep = Y.integrate(y73, Y.QuadratureSpec(orders=(4, 4), rel_tol=1e-13, max_refinements=4))
    vals = [h["value"] for h in rep.extra["history"]]
    gaps = np.abs(np.diff(vals))
    assert np.all(gaps[1:] < gaps[:-1])
    assert gaps[-1] < 1e-10 * abs(vals[-1])


def test_tighter_tolerance_within_previous_error(y73):
    a = Y.integrate(y73, Y.QuadratureSpec(orders=(8, 8), rel_tol=1e-6))
    b = Y.integrate(y73, Y.QuadratureSpec(orders=(8, 8), rel_tol=5e-7))
    assert abs(a.value - b.value) <= a.error_estimate


@pytest.mark.parametrize("c0,c1", [(0.3, -2.0), (-0.1, 0.5), (1.0, 3.0)])
def test_affine_y_reparameterisation(y73, c0, c1):
    base = Y.integrate(y73, Y.QuadratureSpec(rel_tol=1e-11)).value
    moved = Y.integrate(y73, Y.QuadratureSpec(rel_tol=1e-11), y_affine=(c0, c1)).value
    assert moved == pytest.approx(base, rel=1e-9)


def test_non_convergence_flagged(y73):
    rep = Y.integrate(y73, Y.QuadratureSpec(orders=(2, 2), rel_tol=1e-14, max_refinements=1))
    assert rep.warnings and not rep.extra["converged"]
    assert math.isfinite(rep.value)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        Y.QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValueError):
        Y.QuadratureSpec(rule="simpson")


def test_report_is_thread_count_independent(y73, monkeypatch):
    spec = Y.QuadratureSpec(orders=(24, 8), rel_tol=1e-8)
    monkeypatch.setenv("WCS_THREADS", "1")
    one = Y.integrate(y73, spec).value
    monkeypatch.setenv("WCS_THREADS", "3")
    three = Y.integrate(y73, spec).value
    assert one == three


def test_einstein_7_3(y73):
    res, lam = Y.einstein_residual(y73, 200)
    assert lam == pytest.approx(4.0, abs=1e-8)
    assert res < 1e-8


def test_einstein_oracles():
    res, lam = Y.einstein_residual_chart(G.get_chart("round-s5"), 50)
    assert lam == pytest.approx(4.0, abs=1e-12) and res < 1e-10
    res, lam = Y.einstein_residual_chart(G.get_chart("flat-t5"), 10)
    assert lam == 0.0 and res == 0.0


@pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-4])
def test_pointwise_integrand_quadratic_in_one_minus_a(y73, eps):
    th, yfrac = 1.2, 0.4
    vals = []
    for e in (eps, eps / 2):
        P = Y.with_a(y73, 1 - e)
        vals.append(float(Y.integrand_f(P, th, P.y1 + yfrac * (P.y2 - P.y1))) / e ** 2)
    assert vals[0] == pytest.approx(vals[1], rel=0.2)


@given(st.floats(0.05, 0.95))
@settings(max_examples=10, deadline=None)
def test_synthetic_params_are_consistent(a):
    P = Y.synthetic_params(a, ell=0.5)
    assert P.y1 < 0 < P.y2 < 1 < P.y3
    g = Y.metric_at(P, 1.0, 0.5 * (P.y1 + P.y2))
    assert np.linalg.eigvalsh(g).min() > 0
