"""Acceptance checks, one function per criterion.

Each check records a single ``criterion N: PASS|FAIL ...`` line; the lines
are printed in the terminal summary and when the module is run directly.
"""
import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from wcsloop import geometry as G
from wcsloop import sasaki as S
from wcsloop import ypq as Y
from wcsloop.tensor import random_alg_curvature
from wcsloop.wcsform import (WcsPointInput, interior_term_check, reduced_sum_batched, wcs_full,
                             wcs_reduced)

RESULTS: dict[int, str] = {}


def _record(n: int, ok: bool, detail: str) -> bool:
    RESULTS[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    print(RESULTS[n])
    return ok


def _inputs(rng, dim):
    R = random_alg_curvature(dim, int(rng.integers(2 ** 63)))
    return R, rng.standard_normal(dim), rng.standard_normal((dim, dim))


def check_ypq_value() -> bool:
    t0 = time.perf_counter()
    rep = Y.integrate(Y.solve_params(7, 3), Y.QuadratureSpec(rel_tol=1e-9))
    elapsed = time.perf_counter() - t0
    target = -1849 * math.pi ** 4 / 37750
    rel = abs(rep.value - target) / abs(target)
    frac = Fraction(rep.value / math.pi ** 4).limit_denominator(100000)
    ok = rel < 1e-5 and elapsed < 120 and frac == Fraction(-1849, 37750)
    return _record(1, ok, f"Y^(7,3) value={rep.value:.12g} target={target:.12g} rel={rel:.3g} "
                          f"value/pi^4~{frac} value/pi^3~{rep.extra['value_over_pi3_rational']} "
                          f"time={elapsed:.2f}s")


def check_einstein() -> bool:
    res, lam = Y.einstein_residual(Y.solve_params(7, 3), 200)
    return _record(2, res < 1e-8, f"Einstein residual={res:.3g} at 200 points, lambda={lam:.15g}")


def check_cp2() -> bool:
    kd = S.kahler_point_data("cp2")
    worst = 0.0
    for p in (1, 2, 3, 5):
        expected = S.cp2_closed_form(p)
        got = S.lifted_integrand(kd.Rfull, S.J_ADAPTED, p)
        if expected == 0.0:
            worst = max(worst, abs(got) / 192.0)
        else:
            worst = max(worst, abs(got - expected) / abs(expected))
    unit = max(abs(S.lifted_integrand(kd.Rfull, S.J_ADAPTED, p)) for p in (1, -1))
    ok = worst < 1e-6 and unit < 1e-12 * 192
    return _record(3, ok, f"CP^2 worst rel={worst:.3g} over p in (1,2,3,5), |value| at p=+-1 {unit:.3g}")


def check_cs3() -> bool:
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        R, gd, V = _inputs(rng, 3)
        inp = WcsPointInput(R, gd, 2, V)
        scale = R.scale() ** 2 * np.linalg.norm(gd) * np.prod(np.linalg.norm(V, axis=1))
        worst = max(worst, max(abs(wcs_reduced(inp)), abs(wcs_full(inp))) / scale)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and elapsed < 5.0
    return _record(4, ok, f"CS_3 max |value|/scale={worst:.3g} over 1000 tensors in {elapsed:.2f}s")


def check_full_vs_reduced() -> bool:
    rng = np.random.default_rng(5)
    worst = worst_int = 0.0
    for _ in range(200):
        R, gd, V = _inputs(rng, 5)
        inp = WcsPointInput(R, gd, 3, V)
        full, red = wcs_full(inp), wcs_reduced(inp)
        worst = max(worst, abs(full - red) / max(abs(red), 1e-300))
        scale = R.scale() ** 3 * np.linalg.norm(gd) * np.prod(np.linalg.norm(V, axis=1))
        worst_int = max(worst_int, abs(interior_term_check(R, V, gd)) / scale)
    ok = worst < 1e-10 and worst_int < 1e-10
    return _record(5, ok, f"full vs reduced max rel={worst:.3g}, interior term max rel={worst_int:.3g}")


def check_k3() -> bool:
    rng = np.random.default_rng(3)
    worst = max(abs(S.k3_bracket(S.random_constrained_operator(rng))) for _ in range(100))
    low = min(S.wcs5_integrand_kahler(S.kahler_point_data("k3", seed=s), p)
              for s in range(20) for p in (-3, -2, -1, 1, 2, 3))
    ok = worst < 1e-11 and low > 0.0
    return _record(6, ok, f"K3 max |bracket|={worst:.3g} over 100 operators, min integrand p!=0 {low:.6g}")


def check_s2xs2() -> bool:
    worst, detail = 0.0, ""
    for a, b in ((1.0, 1.0), (1.0, 2.0), (2.0, 3.0)):
        kd = S.kahler_point_data("s2xs2", a=a, b=b)
        for p in (1, 2):
            got = S.lifted_integrand(kd.Rfull, S.J_ADAPTED, p)
            want = S.s2xs2_closed_form(p, a, b)
            rel = abs(got - want) / abs(want)
            if rel > worst:
                worst, detail = rel, f"(a,b,p)=({a:g},{b:g},{p}) got={got:.10g} stated={want:.10g}"
    return _record(7, worst < 1e-6, f"S^2xS^2 worst rel={worst:.3g} at {detail}")


def check_thresholds() -> bool:
    t4 = S.rotation_threshold(S.surface_summary("t4", per_axis=4))
    cp2 = S.rotation_threshold(S.surface_summary("cp2", per_axis=8))
    verdicts = " ".join(f"p={p}:{'holds' if v else 'fails'}" for p, v in cp2[1][:4])
    ok = t4[0] == 1 and cp2[0] == 3 and all(v for _, v in t4[1])
    return _record(8, ok, f"thresholds T^4 p0={t4[0]}, CP^2 p0={cp2[0]} ({verdicts})")


def check_degeneration() -> bool:
    base = Y.solve_params(7, 3)
    scaled = []
    for eps in (1e-2, 1e-3, 1e-4):
        rep = Y.integrate(Y.with_a(base, 1 - eps), Y.QuadratureSpec(rel_tol=1e-6, max_refinements=6))
        scaled.append(rep.value / eps ** 2)
    spread = max(abs(s) for s in scaled) / min(abs(s) for s in scaled)
    ok = spread <= 1.5 and all(np.sign(s) == np.sign(scaled[0]) for s in scaled)
    body = ", ".join(f"{s:.4g}" for s in scaled)
    return _record(9, ok, f"I(1-eps)/eps^2 for eps=1e-2,1e-3,1e-4: {body} (spread {spread:.3g})")


def check_velocity_scaling() -> bool:
    params = Y.solve_params(7, 3)
    chart = Y.ypq_chart(params, gauge=1)
    th = np.linspace(0.2, 1.4, 6)
    y = np.linspace(params.y1 + 0.02, params.y2 - 0.02, 6)
    TH, YY = np.meshgrid(th, y, indexing="ij")
    pg = G.riemann_at(chart, Y._points(chart, TH, YY))
    V = np.einsum("...ib,...bm->...mi", pg.frame, pg.g)
    Rf = pg.frame_curvature()
    vol = np.linalg.det(V)
    base = reduced_sum_batched(Rf, V[..., 4, :]) * vol
    worst = 0.0
    for n in (2, 3, 5):
        moved = reduced_sum_batched(Rf, n * V[..., 4, :]) * vol
        worst = max(worst, float(np.max(np.abs(moved - n * base) / np.abs(n * base))))
    return _record(10, worst < 1e-14, f"velocity scaling max rel={worst:.3g} over 36 samples, n in (2,3,5)")


CHECKS = [check_ypq_value, check_einstein, check_cp2, check_cs3, check_full_vs_reduced, check_k3,
          check_s2xs2, check_thresholds, check_degeneration, check_velocity_scaling]


@pytest.mark.parametrize("check", CHECKS, ids=[f"criterion_{i + 1}" for i in range(len(CHECKS))])
def test_acceptance(check):
    assert check(), RESULTS[CHECKS.index(check) + 1]


if __name__ == "__main__":
    passed = [c() for c in CHECKS]
    print(f"{sum(passed)}/{len(passed)} criteria pass")
    sys.exit(0 if all(passed) else 1)
