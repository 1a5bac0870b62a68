"""Levi-Civita geometry of coordinate charts.

Metrics are plain Python callables taking a list of coordinates and
returning a nested ``dim x dim`` list.  The coordinates may be floats, numpy
arrays or :class:`~wcsloop.tensor.Jet2` objects, so the same function serves
for value evaluation, finite differences and exact second derivatives.
Every routine accepts a batch of points ``x`` of shape ``(..., dim)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import tensor as T
from .tensor import AlgCurvature, DomainError, Jet2


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class MetricChart:
    name: str
    dim: int
    g: Callable
    lower: tuple
    upper: tuple
    coord_names: tuple = ()
    # J acting on coordinate vectors, J(d_a) = sum_b J[..., b, a] d_b
    complex_structure: Callable | None = None
    params: dict = field(default_factory=dict)

    def check_interior(self, x) -> None:
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        bad = ~((x > lo) & (x < hi)).all(axis=-1)
        if np.any(bad):
            where = np.asarray(x).reshape(-1, self.dim)[np.asarray(bad).reshape(-1)][0]
            raise DomainError(f"point outside the open chart box of {self.name!r}", location=where)

    def metric_values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        rows = self.g([x[..., i] for i in range(self.dim)])
        return _assemble_values(rows, x.shape[:-1], self.dim)

    def sample(self, n: int, seed: int, margin: float = 0.05) -> np.ndarray:
        rng = np.random.default_rng(seed)
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        width = hi - lo
        return lo + width * (margin + (1 - 2 * margin) * rng.random((n, self.dim)))


def _assemble_values(rows, batch, dim) -> np.ndarray:
    g = np.zeros(batch + (dim, dim))
    for i in range(dim):
        for j in range(dim):
            v = rows[i][j]
            g[..., i, j] = v.val if isinstance(v, Jet2) else v
    return g


def metric_jets(chart: MetricChart, x):
    """Metric with first and second coordinate derivatives.

    Returns ``g[..., i, j]``, ``dg[..., i, j, k] = d_k g_ij`` and
    ``d2g[..., i, j, k, l] = d_k d_l g_ij``.
    """
    x = np.asarray(x, dtype=float)
    batch, d = x.shape[:-1], chart.dim
    try:
        rows = chart.g(Jet2.variables(x))
    except DomainError as err:
        raise DomainError(str(err).split(" at x=")[0], location=x) from None
    g = np.zeros(batch + (d, d))
    dg = np.zeros(batch + (d, d, d))
    d2g = np.zeros(batch + (d, d, d, d))
    for i in range(d):
        for j in range(i, d):
            v = rows[i][j]
            if isinstance(v, Jet2):
                g[..., i, j] = v.val
                dg[..., i, j, :] = v.grad
                d2g[..., i, j, :, :] = v.hess
            else:
                g[..., i, j] = v
            if j != i:
                g[..., j, i] = g[..., i, j]
                dg[..., j, i, :] = dg[..., i, j, :]
                d2g[..., j, i, :, :] = d2g[..., i, j, :, :]
    return g, dg, d2g


def _inverse(g, x):
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise GeometryError(f"metric is not positive-definite near x={np.asarray(x).tolist()}") from None
    return np.linalg.inv(g)


def _first_kind(dg):
    # L[l, j, k] = 1/2 (d_j g_lk + d_k g_lj - d_l g_jk)
    return 0.5 * (np.swapaxes(dg, -1, -2) + dg - np.moveaxis(dg, -1, -3))


def christoffel(chart: MetricChart, x) -> np.ndarray:
    """``Gamma[..., i, j, k]`` for the Levi-Civita connection."""
    chart.check_interior(x)
    g, dg, _ = metric_jets(chart, x)
    ginv = _inverse(g, x)
    return np.einsum("...il,...ljk->...ijk", ginv, _first_kind(dg))


@dataclass(frozen=True)
class PointGeometry:
    x: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    gamma: np.ndarray
    riemann: np.ndarray  # coordinate components R_{jkba}, batch dims allowed
    frame: np.ndarray  # rows are orthonormal frame vectors in coordinates

    def curvature(self) -> AlgCurvature:
        """Coordinate curvature at a single (unbatched) point."""
        return AlgCurvature(self.riemann, T.FRAME_COORDINATE, metric=self.g)

    def frame_curvature(self, frame=None) -> np.ndarray:
        E = self.frame if frame is None else np.asarray(frame)
        return np.einsum("...ia,...jb,...kc,...ld,...abcd->...ijkl", E, E, E, E, self.riemann,
                         optimize=True)


def gram_schmidt(vectors, g) -> np.ndarray:
    """Modified Gram-Schmidt of the rows of ``vectors`` in the metric ``g``.

    No pivoting: the input order is kept, so the result is deterministic.
    """
    V = np.array(vectors, dtype=float, copy=True)
    n = V.shape[-2]
    for i in range(n):
        for j in range(i):
            c = np.einsum("...a,...ab,...b->...", V[..., i, :], g, V[..., j, :])
            V[..., i, :] -= c[..., None] * V[..., j, :]
        nrm = np.sqrt(np.einsum("...a,...ab,...b->...", V[..., i, :], g, V[..., i, :]))
        V[..., i, :] /= nrm[..., None]
    return V


def riemann_from_jets(g, dg, d2g, x=None):
    """Christoffel symbols and lowered curvature from a metric 2-jet."""
    ginv = _inverse(g, x)
    L = _first_kind(dg)
    gamma = np.einsum("...il,...ljk->...ijk", ginv, L)
    # dL[..., l, j, k, m] = d_m L_ljk
    dL = 0.5 * (np.einsum("...lkjm->...ljkm", d2g) + np.einsum("...ljkm->...ljkm", d2g)
                - np.einsum("...jklm->...ljkm", d2g))
    dginv = -np.einsum("...ia,...abm,...bl->...ilm", ginv, dg, ginv)
    # dgamma[..., i, j, k, m] = d_m Gamma^i_jk
    dgamma = (np.einsum("...ilm,...ljk->...ijkm", dginv, L)
              + np.einsum("...il,...ljkm->...ijkm", ginv, dL))
    # R_{jkb}^a = d_j G^a_kb - d_k G^a_jb + G^a_jc G^c_kb - G^a_kc G^c_jb
    up = (np.einsum("...akbj->...jkba", dgamma) - np.einsum("...ajbk->...jkba", dgamma)
          + np.einsum("...ajc,...ckb->...jkba", gamma, gamma)
          - np.einsum("...akc,...cjb->...jkba", gamma, gamma))
    riem = np.einsum("...jkbc,...ca->...jkba", up, g)
    return ginv, gamma, riem


def riemann_at(chart: MetricChart, x, check: bool = True) -> PointGeometry:
    x = np.asarray(x, dtype=float)
    chart.check_interior(x)
    g, dg, d2g = metric_jets(chart, x)
    ginv, gamma, riem = riemann_from_jets(g, dg, d2g, x)
    basis = np.broadcast_to(np.eye(chart.dim), g.shape)
    frame = gram_schmidt(basis, g)
    pg = PointGeometry(x, g, ginv, gamma, riem, frame)
    if check:
        # judged in the orthonormal frame; near degenerate coordinates the
        # second-derivative cancellation loses about eps * cond(g)^2
        Rf = pg.frame_curvature()
        scale = max(float(np.max(np.abs(Rf))), 1.0)
        cond = float(np.max(np.linalg.cond(g)))
        tol = max(1e-9, 64 * np.finfo(float).eps * cond * cond) * scale
        worst = max(T.symmetry_defects(Rf).values())
        if worst > tol:
            raise GeometryError(f"curvature symmetry defect {worst:.3e} in chart {chart.name!r}")
    return pg


def ricci(pg: PointGeometry) -> np.ndarray:
    """``Ric_jk = g^{ia} R_{ijka}``; the unit sphere gives ``Ric = (n-1) g``."""
    return np.einsum("...ia,...ijka->...jk", pg.g_inv, pg.riemann)


def adapted_frame(pg: PointGeometry, J) -> np.ndarray:
    """Orthonormal frame ``(e2, Je2, e3, Je3)`` built from ``d_0`` and ``d_2``."""
    J = np.asarray(J, dtype=float)
    g = pg.g
    d = g.shape[-1]
    eye = np.broadcast_to(np.eye(d), g.shape)
    e2 = gram_schmidt(eye[..., 0:1, :], g)[..., 0, :]
    je2 = np.einsum("...ba,...a->...b", J, e2)
    partial = np.stack([e2, je2, eye[..., 2, :]], axis=-2)
    e3 = gram_schmidt(partial, g)[..., 2, :]
    je3 = np.einsum("...ba,...a->...b", J, e3)
    return np.stack([e2, je2, e3, je3], axis=-2)


def p1_density(R, args=None) -> float:
    """First Pontrjagin form evaluated on four orthonormal-frame vectors.

    ``p1 = -(1/8 pi^2) tr(Omega ^ Omega)`` with the wedge normalised so that
    ``(Omega ^ Omega)(v1..v4) = 1/4 sum_sigma sgn Omega(v_s1, v_s2) Omega(v_s3, v_s4)``.
    """
    c = R.comps if isinstance(R, AlgCurvature) else np.asarray(R)
    if c.shape != (4, 4, 4, 4):
        raise ValueError("p1_density needs a 4-dimensional curvature tensor")
    V = np.eye(4) if args is None else np.asarray(args, dtype=float)
    C = np.einsum("ia,jb,abcd->ijcd", V, V, c)
    total = 0.0
    for perm, sgn in T.permutations_with_sign(4):
        a, b, cc, dd = perm
        # tr(Omega(A) Omega(B)) = -sum_{r,l} R(A, e_r, e_l) R(B, e_r, e_l)
        total += sgn * -np.sum(C[a, b] * C[cc, dd])
    tr_ww = 0.25 * total
    return float(-tr_ww / (8.0 * np.pi ** 2))


# ---------------------------------------------------------------------------
# chart library


def _flat(dim, name):
    def g(x):
        return [[1.0 if i == j else 0.0 for j in range(dim)] for i in range(dim)]

    return MetricChart(name, dim, g, (0.0,) * dim, (2 * np.pi,) * dim)


def flat_torus(dim: int = 4) -> MetricChart:
    return _flat(dim, f"flat-t{dim}")


def round_s2(radius: float = 1.0) -> MetricChart:
    r2 = radius * radius

    def g(x):
        th = x[0]
        return [[r2, 0.0], [0.0, r2 * T.sin(th) * T.sin(th)]]

    return MetricChart("round-s2", 2, g, (0.0, 0.0), (np.pi, 2 * np.pi), ("theta", "phi"))


def round_sphere(dim: int) -> MetricChart:
    """Unit sphere in hyperspherical coordinates ``(chi_1, ..., chi_{n-1}, phi)``."""

    def g(x):
        rows = [[0.0] * dim for _ in range(dim)]
        w = 1.0
        for i in range(dim):
            rows[i][i] = w
            if i < dim - 1:
                s = T.sin(x[i])
                w = w * s * s
        return rows

    lower = (0.0,) * dim
    upper = (np.pi,) * (dim - 1) + (2 * np.pi,)
    return MetricChart(f"round-s{dim}", dim, g, lower, upper)


def cp2_fubini_study() -> MetricChart:
    """Fubini-Study metric on the affine chart of CP^2, holomorphic curvature 4.

    Coordinates ``(Re z1, Im z1, Re z2, Im z2)``; the Hermitian metric is
    ``h_jk = ((1+|z|^2) delta_jk - conj(z_j) z_k) / (1+|z|^2)^2``.
    """

    def g(x):
        xs = (x[0], x[2])
        ys = (x[1], x[3])
        s = 1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]
        inv2 = 1.0 / (s * s)
        rows = [[0.0] * 4 for _ in range(4)]
        for j in range(2):
            for k in range(2):
                A = ((s if j == k else 0.0) - (xs[j] * xs[k] + ys[j] * ys[k])) * inv2
                B = -(xs[j] * ys[k] - ys[j] * xs[k]) * inv2
                rows[2 * j][2 * k] = A
                rows[2 * j + 1][2 * k + 1] = A
                rows[2 * j][2 * k + 1] = B
                rows[2 * j + 1][2 * k] = -B
        return rows

    def J(x):
        x = np.asarray(x, dtype=float)
        m = np.zeros(x.shape[:-1] + (4, 4))
        for j in range(2):
            m[..., 2 * j + 1, 2 * j] = 1.0
            m[..., 2 * j, 2 * j + 1] = -1.0
        return m

    return MetricChart("cp2-fs", 4, g, (-3.0,) * 4, (3.0,) * 4,
                       ("x1", "y1", "x2", "y2"), complex_structure=J)


def s2xs2_product(a: float = 1.0, b: float = 1.0) -> MetricChart:
    """``a g_S2 + b g_S2`` in coordinates ``(theta1, phi1, theta2, phi2)``."""

    def g(x):
        s1 = T.sin(x[0])
        s2 = T.sin(x[2])
        return [[a, 0.0, 0.0, 0.0], [0.0, a * s1 * s1, 0.0, 0.0],
                [0.0, 0.0, b, 0.0], [0.0, 0.0, 0.0, b * s2 * s2]]

    def J(x):
        x = np.asarray(x, dtype=float)
        m = np.zeros(x.shape[:-1] + (4, 4))
        for k, th in ((0, x[..., 0]), (2, x[..., 2])):
            m[..., k + 1, k] = 1.0 / np.sin(th)
            m[..., k, k + 1] = -np.sin(th)
        return m

    return MetricChart("s2xs2", 4, g, (0.0, 0.0, 0.0, 0.0), (np.pi, 2 * np.pi, np.pi, 2 * np.pi),
                       ("theta1", "phi1", "theta2", "phi2"), complex_structure=J,
                       params={"a": a, "b": b})


def get_chart(name: str, **params) -> MetricChart:
    """Chart registry used by the command line."""
    if name == "flat-t4":
        return flat_torus(4)
    if name == "flat-t5":
        return flat_torus(5)
    if name == "cp2-fs":
        return cp2_fubini_study()
    if name == "s2xs2":
        return s2xs2_product(params.get("a", 1.0), params.get("b", 1.0))
    if name == "round-s2":
        return round_s2()
    if name == "round-s5":
        return round_sphere(5)
    if name == "ypq":
        from .ypq import solve_params, ypq_chart

        return ypq_chart(solve_params(int(params["p"]), int(params["q"])))
    raise KeyError(f"unknown chart {name!r}")


CHART_NAMES = ("flat-t4", "cp2-fs", "s2xs2", "ypq")
