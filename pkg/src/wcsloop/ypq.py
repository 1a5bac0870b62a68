"""Sasaki-Einstein metrics Y^{p,q} and the rotation-loop CS_5 integral.

Coordinates are ordered ``(phi, theta, y, psi, alpha)``.  The metric is

    (1-y)/6 (dtheta^2 + sin^2 theta dphi^2) + dy^2 / (w q)
      + q/9 (dpsi - cos theta dphi)^2 + w (dalpha + f (dpsi - cos theta dphi))^2

with ``w = 2(a-y^2)/(1-y)``, ``q = (a-3y^2+2y^3)/(a-y^2)`` and
``f = (a-2y+y^2)/(6(a-y^2))``.  Nothing depends on ``phi``, ``psi`` or
``alpha``, so the loop integral reduces to a double integral over
``(theta, y)``.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from . import geometry as G
from . import tensor as T
from .report import WcsReport
from .tensor import DomainError
from .wcsform import WcsPointInput, default_constant, reduced_sum_batched, wcs_full, wcs_reduced


class ParameterError(ValueError):
    pass


class NotCoprimeError(ParameterError):
    pass


class OrderingError(ParameterError):
    pass


class NotSquareError(ParameterError):
    pass


@dataclass(frozen=True)
class YpqParams:
    p: int
    q: int
    n: int
    a: float
    ell: float
    y1: float
    y2: float
    y3: float


@dataclass(frozen=True)
class QuadratureSpec:
    rule: str = "gauss-legendre-tensor"
    orders: tuple = (16, 16)
    rel_tol: float = 1e-9
    max_refinements: int = 4

    def __post_init__(self):
        if self.rule not in ("gauss-legendre-tensor", "adaptive"):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if len(self.orders) != 2 or min(self.orders) < 1:
            raise ValueError("orders needs two positive integers (theta, y)")
        if self.max_refinements < 0:
            raise ValueError("max_refinements must be >= 0")


def cubic_roots(a: float) -> tuple[float, float, float]:
    """Roots of ``a - 3y^2 + 2y^3`` for ``0 < a < 1``, in increasing order.

    The cubic has critical points 0 and 1 with values ``a > 0`` and
    ``a - 1 < 0``, which brackets one root in each of
    ``(-1/2, 0)``, ``(0, 1)`` and ``(1, 3/2)``.
    """
    if not 0.0 < a < 1.0:
        raise ParameterError(f"a must lie in (0, 1), got {a}")

    def c(y):
        return a - 3.0 * y * y + 2.0 * y * y * y

    def polish(y):
        # one Newton step to squeeze the last ulps out of the bracketed root
        d = 6.0 * y * y - 6.0 * y
        return y - c(y) / d if d != 0.0 else y

    brackets = ((-0.5, 0.0), (0.0, 1.0), (1.0, 1.5))
    roots = [polish(brentq(c, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)) for lo, hi in brackets]
    return tuple(roots)


def synthetic_params(a: float, ell: float = 1.0, p: int = 0, q: int = 0) -> YpqParams:
    """Parameters for an arbitrary ``a`` in (0, 1), e.g. to approach ``a -> 1``."""
    y1, y2, y3 = cubic_roots(a)
    return YpqParams(p, q, 0, float(a), float(ell), y1, y2, y3)


def solve_params(p: int, q: int) -> YpqParams:
    p, q = int(p), int(q)
    if p <= 0 or q <= 0:
        raise OrderingError("p and q must be positive")
    if q >= p:
        raise OrderingError(f"need q < p, got p={p}, q={q}")
    if math.gcd(p, q) != 1:
        raise NotCoprimeError(f"p={p} and q={q} are not coprime")
    disc = 4 * p * p - 3 * q * q
    n = math.isqrt(disc)
    if n * n != disc:
        raise NotSquareError(f"4p^2 - 3q^2 = {disc} is not a perfect square")
    a = 0.5 - (p * p - 3 * q * q) * n / (4.0 * p ** 3)
    ell = q / (3.0 * q * q - 2.0 * p * p + p * n)
    y1, y2, y3 = cubic_roots(a)
    return YpqParams(p, q, n, a, ell, y1, y2, y3)


def _metric_rows(a: float, y_of_u, gauge: int = 0):
    c0, c1 = y_of_u

    def metric(x):
        th = x[1]
        y = c0 + c1 * x[2]
        s = T.sin(th)
        # coefficient of dphi in the fibre form dpsi_s + k dphi, psi_s = psi - gauge * phi
        if gauge == 1:
            k = 2.0 * T.sin(0.5 * th) * T.sin(0.5 * th)
        elif gauge == -1:
            k = -2.0 * T.cos(0.5 * th) * T.cos(0.5 * th)
        else:
            k = -T.cos(th)
        ay = a - y * y
        w = 2.0 * ay / (1.0 - y)
        qq = (a - 3.0 * y * y + 2.0 * y * y * y) / ay
        f = (a - 2.0 * y + y * y) / (6.0 * ay)
        h = (1.0 - y) / 6.0
        wf = w * f
        fib = qq / 9.0 + wf * f
        return [
            [h * s * s + fib * k * k, 0.0, 0.0, fib * k, wf * k],
            [0.0, h, 0.0, 0.0, 0.0],
            [0.0, 0.0, c1 * c1 / (w * qq), 0.0, 0.0],
            [fib * k, 0.0, 0.0, fib, wf],
            [wf * k, 0.0, 0.0, wf, w],
        ]

    return metric


def ypq_chart(params: YpqParams, y_affine: tuple = (0.0, 1.0), gauge: int = 0) -> G.MetricChart:
    """Metric chart in coordinates ``(phi, theta, y, psi, alpha)``.

    ``y_affine = (c0, c1)`` uses the coordinate ``u`` with ``y = c0 + c1 u``.
    ``gauge = +1`` or ``-1`` replaces ``psi`` by ``psi -+ phi``, which removes
    the cancellation in the metric near ``theta = 0`` or ``theta = pi``.  Both
    changes leave ``d_alpha`` alone and the second has unit Jacobian.
    """
    c0, c1 = float(y_affine[0]), float(y_affine[1])
    if c1 == 0.0:
        raise ValueError("affine map must be invertible")
    if gauge not in (-1, 0, 1):
        raise ValueError("gauge must be -1, 0 or 1")
    u1, u2 = sorted(((params.y1 - c0) / c1, (params.y2 - c0) / c1))
    lower = (0.0, 0.0, u1, 0.0, 0.0)
    upper = (2 * np.pi, np.pi, u2, 2 * np.pi, 2 * np.pi * params.ell)
    return G.MetricChart("ypq", 5, _metric_rows(params.a, (c0, c1), gauge), lower, upper,
                         ("phi", "theta", "y", "psi", "alpha"),
                         params={"p": params.p, "q": params.q, "a": params.a, "ell": params.ell,
                                 "gauge": gauge})


def _points(chart: G.MetricChart, theta, y, angles=None) -> np.ndarray:
    theta, y = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(y, dtype=float))
    x = np.empty(theta.shape + (5,))
    lo = np.asarray(chart.lower)
    hi = np.asarray(chart.upper)
    mid = 0.5 * (lo + hi)
    phi, psi, alpha = (mid[0], mid[3], mid[4]) if angles is None else angles
    x[..., 0] = phi
    x[..., 1] = theta
    x[..., 2] = y
    x[..., 3] = psi
    x[..., 4] = alpha
    return x


def metric_at(params: YpqParams, theta, y) -> np.ndarray:
    chart = ypq_chart(params)
    x = _points(chart, theta, y)
    chart.check_interior(x)
    return chart.metric_values(x)


def _integrand_from_geometry(pg: G.PointGeometry, constant: float) -> np.ndarray:
    E, g = pg.frame, pg.g
    # coordinate vectors expressed in the orthonormal frame: V[m, i] = <d_m, e_i>
    V = np.einsum("...ib,...bm->...mi", E, g)
    gamma_dot = V[..., 4, :]
    return constant * reduced_sum_batched(pg.frame_curvature(), gamma_dot) * np.linalg.det(V)


def _eval_split(charts, theta, u, constant: float, angles=None) -> np.ndarray:
    """Integrand on broadcast ``(theta, u)``, northern points in gauge +1, southern in -1."""
    TH, UU = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(u, dtype=float))
    f = np.empty(TH.shape)
    north = TH < 0.5 * np.pi
    for chart, rows in ((charts[1], north), (charts[-1], ~north)):
        if rows.any():
            pg = G.riemann_at(chart, _points(chart, TH[rows], UU[rows], angles))
            f[rows] = _integrand_from_geometry(pg, constant)
    return f


def integrand_f(params: YpqParams, theta, y, constant: float | None = None, angles=None,
                chart: G.MetricChart | None = None) -> np.ndarray:
    """Coefficient of ``dphi dtheta dy dpsi dalpha`` in the pulled-back CS_5 form.

    Loop velocity is the coordinate field ``d_alpha``.  Accepts arrays of
    ``theta`` and ``y``; the result has their broadcast shape.  Without an
    explicit chart the pole-adapted gauges are used.
    """
    C = default_constant(3) if constant is None else constant
    if chart is None:
        charts = {g: ypq_chart(params, gauge=g) for g in (1, -1)}
        return _eval_split(charts, theta, y, C, angles)
    pg = G.riemann_at(chart, _points(chart, theta, y, angles))
    return _integrand_from_geometry(pg, C)


def integrand_full_path(params: YpqParams, theta: float, y: float) -> tuple[float, float]:
    """Single-point integrand via the full and the reduced permutation sums."""
    chart = ypq_chart(params)
    pg = G.riemann_at(chart, _points(chart, theta, y))
    V = np.einsum("ib,bm->mi", pg.frame, pg.g)
    inp = WcsPointInput(T.AlgCurvature(pg.frame_curvature()), V[4], 3, V)
    return wcs_full(inp), wcs_reduced(inp)


def _threads() -> int:
    raw = os.environ.get("WCS_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _gauss_sum(charts, C, n_theta, n_y, u1, u2, tile_rows=8) -> float:
    xt, wt = np.polynomial.legendre.leggauss(n_theta)
    xy, wy = np.polynomial.legendre.leggauss(n_y)
    th = 0.5 * np.pi * (xt + 1.0)
    wth = 0.5 * np.pi * wt
    uu = u1 + 0.5 * (u2 - u1) * (xy + 1.0)
    wu = 0.5 * (u2 - u1) * wy
    tiles = [slice(i, min(i + tile_rows, n_theta)) for i in range(0, n_theta, tile_rows)]

    def tile_sum(sl):
        TH, UU = np.meshgrid(th[sl], uu, indexing="ij")
        f = _eval_split(charts, TH, UU, C)
        return float(np.einsum("i,j,ij->", wth[sl], wu, f))

    workers = min(_threads(), len(tiles))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(tile_sum, tiles))
    else:
        parts = [tile_sum(sl) for sl in tiles]
    # fixed tile order keeps the result independent of the worker count
    total = 0.0
    for v in parts:
        total += v
    return total


def integrate(params: YpqParams, quad: QuadratureSpec | None = None, constant: float | None = None,
              y_affine: tuple = (0.0, 1.0)) -> WcsReport:
    """``(2 pi)(2 pi)(2 pi ell) * int f dtheta dy`` by refined Gauss-Legendre rules."""
    quad = QuadratureSpec() if quad is None else quad
    C = default_constant(3) if constant is None else constant
    charts = {g: ypq_chart(params, y_affine, g) for g in (1, -1)}
    u1, u2 = charts[1].lower[2], charts[1].upper[2]
    # a decreasing affine map reverses the chart orientation
    period = (2 * np.pi) ** 2 * (2 * np.pi * params.ell) * math.copysign(1.0, y_affine[1])
    t0 = time.perf_counter()
    nt, ny = quad.orders
    history = []
    nodes = 0
    prev = None
    converged = False
    err = float("inf")
    for level in range(quad.max_refinements + 1):
        val = period * _gauss_sum(charts, C, nt, ny, u1, u2)
        nodes += nt * ny
        history.append({"orders": [nt, ny], "value": val})
        if prev is not None:
            err = abs(val - prev)
            if err <= quad.rel_tol * abs(val):
                converged = True
                break
        prev = val
        nt, ny = 2 * nt, 2 * ny
    warnings = []
    if not converged:
        warnings.append(f"quadrature did not reach rel_tol={quad.rel_tol:g} "
                        f"within {quad.max_refinements} refinements")
        if not math.isfinite(err):
            err = abs(val)
    echo = {"p": params.p, "q": params.q, "n": params.n, "a": params.a, "ell": params.ell,
            "y1": params.y1, "y2": params.y2, "rule": quad.rule, "orders": list(quad.orders),
            "rel_tol": quad.rel_tol, "max_refinements": quad.max_refinements,
            "gamma_dot": "d_alpha"}
    ratio = val / np.pi ** 4
    extra = {"history": history, "value_over_pi4": ratio,
             "value_over_pi4_rational": str(rational_guess(ratio)),
             "value_over_pi3_rational": str(rational_guess(val / np.pi ** 3)),
             "converged": converged}
    return WcsReport(value=val, error_estimate=err, constant_C3=C, params_echo=echo,
                     node_count=nodes, wall_time_ms=int(1000 * (time.perf_counter() - t0)),
                     warnings=warnings, extra=extra)


def rational_guess(x: float, max_den: int = 100000) -> Fraction:
    """Continued-fraction best approximation with bounded denominator."""
    return Fraction(x).limit_denominator(max_den)


def theta_reflection_defect(params: YpqParams, n: int = 12) -> float:
    """Max relative gap between ``f(theta, y)`` and ``f(pi - theta, y)`` on a Gauss grid."""
    xt, _ = np.polynomial.legendre.leggauss(n)
    th = 0.5 * np.pi * (xt + 1.0)
    y = params.y1 + 0.5 * (params.y2 - params.y1) * (xt + 1.0)
    TH, Y = np.meshgrid(th, y, indexing="ij")
    f = integrand_f(params, TH, Y)
    fr = integrand_f(params, np.pi - TH, Y)
    return float(np.max(np.abs(f - fr)) / max(np.max(np.abs(f)), 1e-300))


def einstein_residual_chart(chart: G.MetricChart, samples: int, seed: int = 0,
                            margin: float = 0.05) -> tuple[float, float]:
    """``(max |Ric - L g|, L)`` over random interior points, ``L`` the median of ``Ric_ii / g_ii``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    x = chart.sample(samples, seed, margin)
    pg = G.riemann_at(chart, x)
    ric = G.ricci(pg)
    d = chart.dim
    ratios = ric[..., range(d), range(d)] / pg.g[..., range(d), range(d)]
    lam = float(np.median(ratios))
    return float(np.max(np.abs(ric - lam * pg.g))), lam


def einstein_residual(params: YpqParams, samples: int, seed: int = 0) -> tuple[float, float]:
    return einstein_residual_chart(ypq_chart(params), samples, seed)


def with_a(params: YpqParams, a: float) -> YpqParams:
    """Same period data with a replaced ``a`` (roots recomputed)."""
    y1, y2, y3 = cubic_roots(a)
    return replace(params, a=float(a), y1=y1, y2=y2, y3=y3)


__all__ = [
    "DomainError", "NotCoprimeError", "NotSquareError", "OrderingError", "ParameterError",
    "QuadratureSpec", "YpqParams", "cubic_roots", "einstein_residual", "einstein_residual_chart",
    "integrand_f", "integrand_full_path", "integrate", "metric_at", "rational_guess",
    "solve_params", "synthetic_params", "theta_reflection_defect", "with_a", "ypq_chart",
]
