"""Circle bundles over Kahler surfaces.

A Kahler surface ``M`` with an adapted orthonormal frame ``(e2, Je2, e3, Je3)``
and an integer ``p`` determine a Sasakian circle bundle whose curvature is
expressed through that of ``M``.  This module lifts the curvature, evaluates
the CS_5 integrand for the fibre-rotation loop both by the closed
``b``-term formula and by the generic permutation sum, and provides the
positivity estimate, the rotation threshold and a few surface examples.

Index 0 of a lifted tensor is the Reeb direction ``xi``; indices 1..4 are the
horizontal lifts of the surface frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import geometry as G
from . import tensor as T
from .tensor import AlgCurvature
from .wcsform import WcsPointInput, default_constant, reduced_sum, wcs_reduced

# J on the adapted frame (e2, Je2, e3, Je3): J e_a = sum_b J[b, a] e_b
J_ADAPTED = np.array([[0.0, -1.0, 0.0, 0.0],
                      [1.0, 0.0, 0.0, 0.0],
                      [0.0, 0.0, 0.0, -1.0],
                      [0.0, 0.0, 1.0, 0.0]])

SURFACES = ("t4", "cp2", "s2xs2", "k3")


class CompatibilityError(ValueError):
    pass


class ConstraintError(ValueError):
    pass


def _comps(R) -> np.ndarray:
    return R.comps if isinstance(R, AlgCurvature) else np.asarray(R, dtype=float)


def check_complex_structure(J, tol: float = 1e-12) -> np.ndarray:
    J = np.asarray(J, dtype=float)
    if J.shape != (4, 4):
        raise CompatibilityError("J must be 4x4")
    I = np.eye(4)
    if np.max(np.abs(J @ J + I)) > tol:
        raise CompatibilityError("J does not square to -1")
    if np.max(np.abs(J.T @ J - I)) > tol:
        raise CompatibilityError("J is not orthogonal")
    return J


def five_scalars(R4) -> np.ndarray:
    """``R(e2,Je2,e3,Je3), R(e2,e3,e2,e3), R(e2,Je3,e2,Je3), R(e2,Je2,e2,Je2), R(e3,Je3,e3,Je3)``."""
    c = _comps(R4)
    return np.array([c[0, 1, 2, 3], c[0, 2, 0, 2], c[0, 3, 0, 3], c[0, 1, 0, 1], c[2, 3, 2, 3]])


@dataclass(frozen=True)
class KahlerPointData:
    Rfive: np.ndarray
    p1: float
    Rfull: AlgCurvature

    def __post_init__(self):
        five = np.asarray(self.Rfive, dtype=float)
        if five.shape != (5,):
            raise ValueError("Rfive needs five scalars")
        if self.Rfull.dim != 4:
            raise ValueError("Rfull must be four-dimensional")
        ref = five_scalars(self.Rfull)
        scale = max(1.0, float(np.max(np.abs(ref))))
        if np.max(np.abs(five - ref)) > 1e-12 * scale:
            raise ValueError("Rfive disagrees with Rfull")
        object.__setattr__(self, "Rfive", five)

    @classmethod
    def from_curvature(cls, R4, args=None) -> "KahlerPointData":
        R = R4 if isinstance(R4, AlgCurvature) else AlgCurvature(np.asarray(R4, dtype=float))
        return cls(five_scalars(R), G.p1_density(R, args), R)


@dataclass(frozen=True)
class SurfaceSummary:
    R_inf: float
    vol: float
    sigma: int

    def __post_init__(self):
        if not self.vol > 0:
            raise ValueError("vol must be positive")
        if not self.R_inf >= 0:
            raise ValueError("R_inf must be non-negative")


# ---------------------------------------------------------------------------
# curvature lift


def lift_curvature(R4, J, p: int) -> AlgCurvature:
    """Curvature of the Sasakian circle bundle with Chern number multiple ``p``."""
    c = _comps(R4)
    if c.shape != (4, 4, 4, 4):
        raise ValueError("R4 must be four-dimensional")
    J = check_complex_structure(J)
    p2 = float(p) ** 2
    # w[a, b] = <J e_a, e_b>
    w = J.T
    hor = c + p2 * (-np.einsum("bc,ad->abcd", w, w) + np.einsum("ac,bd->abcd", w, w)
                    + 2.0 * np.einsum("ab,cd->abcd", w, w))
    out = np.zeros((5, 5, 5, 5))
    out[1:, 1:, 1:, 1:] = hor
    d = p2 * np.eye(4)
    out[0, 1:, 1:, 0] = d
    out[1:, 0, 0, 1:] = d
    out[0, 1:, 0, 1:] = -d
    out[1:, 0, 1:, 0] = -d
    return AlgCurvature(out)


def lifted_integrand(R4, J, p: int, constant: float | None = None) -> float:
    """Generic pipeline: permutation sum on the lifted tensor with ``gdot = xi``."""
    gd = np.zeros(5)
    gd[0] = 1.0
    return wcs_reduced(WcsPointInput(lift_curvature(R4, J, p), gd, 3), constant)


def lifted_raw_sum(R4, J, p: int) -> float:
    gd = np.zeros(5)
    gd[0] = 1.0
    return reduced_sum(WcsPointInput(lift_curvature(R4, J, p), gd, 3))


# ---------------------------------------------------------------------------
# b-terms


def bterms(R4, p1: float, p: int) -> tuple[float, float, float, float, float]:
    """Closed forms of the five grouped contributions."""
    r = five_scalars(R4)
    p2 = float(p) ** 2
    b1 = 32.0 * math.pi ** 2 * p1
    b2 = 32.0 * p2 * (r[0] - r[1] - r[2])
    b34 = 16.0 * p2 * (r[3] + 2.0 * r[0] + r[4])
    b5 = 192.0 * p2 * p2
    return b1, b2, b34, b34, b5


def bterms_grouped(R4, J, p: int) -> tuple[float, float, float, float, float]:
    """The same five quantities as explicit signed sums over ``S_4``.

    With ``w[a, b] = <J e_a, e_b>`` and ``s`` running over permutations of the
    horizontal frame, the summands are

        b1: R(s1, s2, r, l) R(s3, s4, r, l)
        b2: 4p^2 R(s3, s4, J s1, J s2)
        b3: 2p^2 w(s1, s2) R(s3, s4, e_r, J e_r)
        b4: 2p^2 R(s1, s2, e_r, J e_r) w(s3, s4)
        b5: 24p^4 w(s1, s2) w(s3, s4)
    """
    c = _comps(R4)
    J = check_complex_structure(J)
    p2 = float(p) ** 2
    w = J.T
    # R(X, Y, J Z, J W) and R(X, Y, e_r, J e_r)
    RJJ = np.einsum("abcd,ec,fd->abef", c, w, w)
    trJ = np.einsum("abrs,rs->ab", c, w)
    sums = np.zeros(5)
    for (s1, s2, s3, s4), sgn in T.permutations_with_sign(4):
        sums[0] += sgn * np.sum(c[s1, s2] * c[s3, s4])
        sums[1] += sgn * 4 * p2 * RJJ[s3, s4, s1, s2]
        sums[2] += sgn * 2 * p2 * w[s1, s2] * trJ[s3, s4]
        sums[3] += sgn * 2 * p2 * trJ[s1, s2] * w[s3, s4]
        sums[4] += sgn * 24 * p2 * p2 * w[s1, s2] * w[s3, s4]
    return tuple(float(v) for v in sums)


def wcs5_integrand_kahler(kd: KahlerPointData, p: int, constant: float | None = None) -> float:
    """``C_3 p^2 (b1 + ... + b5)`` from the five frame scalars and ``p1``."""
    C = default_constant(3) if constant is None else constant
    r = kd.Rfive
    p2 = float(p) ** 2
    bracket = 3.0 * r[0] - r[1] - r[2] + r[3] + r[4]
    return C * p2 * (32.0 * math.pi ** 2 * kd.p1 + 32.0 * p2 * bracket + 192.0 * p2 * p2)


# ---------------------------------------------------------------------------
# K3-type curvature operators


def _two_form(pairs) -> np.ndarray:
    m = np.zeros((4, 4))
    for sign, a, b in pairs:
        m[a, b] += sign
        m[b, a] -= sign
    return m / math.sqrt(0.5 * np.sum(m * m))


# frame indices: 0 = e2, 1 = Je2, 2 = e3, 3 = Je3
F_PLUS = np.stack([_two_form([(1, 0, 1), (-1, 2, 3)]),
                   _two_form([(1, 0, 2), (1, 1, 3)]),
                   _two_form([(1, 0, 3), (-1, 1, 2)])])
F_MINUS = np.stack([_two_form([(1, 0, 1), (1, 2, 3)]),
                    _two_form([(1, 0, 2), (-1, 1, 3)]),
                    _two_form([(1, 0, 3), (1, 1, 2)])])


@dataclass(frozen=True)
class CurvatureOperatorData:
    """Block-diagonal curvature operator ``R_++ + R_--`` in eigen-form.

    Row ``i`` of ``basis_plus`` gives the eigenform ``omega_i^+`` in the unit
    basis ``F_PLUS``; likewise for the minus part.
    """

    lam_plus: np.ndarray
    lam_minus: np.ndarray
    basis_plus: np.ndarray
    basis_minus: np.ndarray

    def __post_init__(self):
        for name in ("lam_plus", "lam_minus"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,):
                raise ValueError(f"{name} needs three eigenvalues")
            object.__setattr__(self, name, v)
        for name in ("basis_plus", "basis_minus"):
            B = np.asarray(getattr(self, name), dtype=float)
            if B.shape != (3, 3) or np.max(np.abs(B @ B.T - np.eye(3))) > 1e-12:
                raise ValueError(f"{name} must be an orthogonal 3x3 matrix")
            object.__setattr__(self, name, B)

    @property
    def trace_sum(self) -> float:
        return float(np.sum(self.lam_plus) + np.sum(self.lam_minus))

    def tensor(self) -> AlgCurvature:
        """``R(X,Y,Z,W) = -1/2 sum_i lam_i omega_i(X,Y) omega_i(Z,W)`` over both blocks."""
        wp = np.einsum("ij,jab->iab", self.basis_plus, F_PLUS)
        wm = np.einsum("ij,jab->iab", self.basis_minus, F_MINUS)
        c = -0.5 * (np.einsum("i,iab,icd->abcd", self.lam_plus, wp, wp)
                    + np.einsum("i,iab,icd->abcd", self.lam_minus, wm, wm))
        return AlgCurvature(c)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    Q, Rm = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q * np.sign(np.diag(Rm))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def random_constrained_operator(rng: np.random.Generator) -> CurvatureOperatorData:
    """Random spectra with ``sum lam+ + sum lam- = 0`` and random eigenbases."""
    lam = rng.standard_normal(6)
    lam -= lam.mean()
    return CurvatureOperatorData(lam[:3], lam[3:], random_rotation(rng), random_rotation(rng))


def random_k3_operator(rng: np.random.Generator, scale: float = 1.0) -> CurvatureOperatorData:
    """Ricci-flat Kahler type: traceless ``R_++`` and ``R_-- = 0``.

    In the frame's complex orientation ``F_PLUS`` spans the primitive (1,1)
    forms, so such a tensor commutes with ``J`` and satisfies Bianchi.
    """
    lam = scale * rng.standard_normal(3)
    lam -= lam.mean()
    return CurvatureOperatorData(lam, np.zeros(3), random_rotation(rng), np.eye(3))


def random_kahler_curvature(rng: np.random.Generator, scale: float = 1.0) -> AlgCurvature:
    """Random algebraic curvature tensor commuting with ``J``.

    Built as a symmetric operator on ``u(2)``, spanned by the Kahler form
    ``F_MINUS[0]`` and the primitive forms ``F_PLUS``.  Bianchi reduces to
    equal traces on the two duality blocks, fixed through the Kahler-form
    diagonal entry.
    """
    A = scale * rng.standard_normal((4, 4))
    Sm = 0.5 * (A + A.T)
    Sm[0, 0] = np.trace(Sm[1:, 1:])
    basis = np.concatenate([F_MINUS[:1], F_PLUS])
    return AlgCurvature(-0.5 * np.einsum("ij,iab,jcd->abcd", Sm, basis, basis))


def rew_bracket(R4) -> float:
    """``2R(e2,e3,e2,e3) + 2R(e2,Je3,e2,Je3) + R(e2,Je2,e2,Je2) + R(e3,Je3,e3,Je3)``."""
    r = five_scalars(R4)
    return float(2.0 * r[1] + 2.0 * r[2] + r[3] + r[4])


def k3_bracket(data: CurvatureOperatorData, strict: bool = True, tol: float = 1e-12) -> float:
    """Curvature bracket of the integrand for a block-diagonal operator.

    With ``strict`` the trace condition is enforced; ``strict=False`` lets
    the caller see the bracket for inputs that violate it.
    """
    if strict and abs(data.trace_sum) > tol * max(1.0, float(np.max(np.abs(data.lam_plus)))):
        raise ConstraintError(f"eigenvalues must sum to zero, got {data.trace_sum:.3e}")
    return rew_bracket(data.tensor())


# orientation opposite to the complex one, in which the K3 forms are self-dual
REVERSED_ARGS = np.eye(4)[[0, 1, 3, 2]]


# ---------------------------------------------------------------------------
# global estimates


def positivity_certificate(s: SurfaceSummary, p: int) -> bool:
    p2 = float(p) ** 2
    val = p2 * (96.0 * math.pi ** 2 * s.sigma - 224.0 * p2 * s.R_inf * s.vol + 192.0 * p2 * p2 * s.vol)
    return bool(val > 0)


def threshold_holds(s: SurfaceSummary, p: int) -> bool:
    p2 = float(p) ** 2
    return bool(s.R_inf < 6.0 / 7.0 * p2 + 3.0 * math.pi ** 2 * s.sigma / (7.0 * s.vol * p2))


def rotation_threshold(s: SurfaceSummary) -> tuple[int, list[tuple[int, bool]]]:
    """Smallest ``p0`` with the estimate true for every ``|p| >= p0``.

    Multiplying by ``p^2`` turns the estimate into ``6/7 u^2 - R_inf u + c > 0``
    with ``u = p^2`` and ``c = 3 pi^2 sigma / (7 vol)``, which holds for every
    ``u`` beyond the larger root; the scan stops just past it.
    """
    c = 3.0 * math.pi ** 2 * s.sigma / (7.0 * s.vol)
    disc = s.R_inf ** 2 - 24.0 * c / 7.0
    u_max = 7.0 / 12.0 * (s.R_inf + math.sqrt(disc)) if disc > 0 else 0.0
    last = int(math.floor(math.sqrt(u_max))) + 1
    verdicts = [(p, threshold_holds(s, p)) for p in range(1, last + 1)]
    p0 = 1
    for p, ok in verdicts:
        if not ok:
            p0 = p + 1
    return p0, verdicts


def h4_order(chern_coeffs) -> int:
    coeffs = [int(c) for c in chern_coeffs]
    if not coeffs:
        raise ValueError("need at least one coefficient")
    if min(coeffs) < 1:
        raise ValueError("coefficients must be positive integers")
    return reduce(math.gcd, coeffs)


# ---------------------------------------------------------------------------
# surfaces


def _flat_j(x):
    x = np.asarray(x, dtype=float)
    m = np.zeros(x.shape[:-1] + (4, 4))
    m[..., :, :] = J_ADAPTED
    return m


def surface_chart(surface: str, a: float = 1.0, b: float = 1.0) -> G.MetricChart:
    if surface == "t4":
        base = G.flat_torus(4)
        return G.MetricChart(base.name, 4, base.g, base.lower, base.upper, complex_structure=_flat_j)
    if surface == "cp2":
        return G.cp2_fubini_study()
    if surface == "s2xs2":
        return G.s2xs2_product(a, b)
    raise ValueError(f"no chart for surface {surface!r}")


def frame_curvature_adapted(chart: G.MetricChart, x) -> np.ndarray:
    """Curvature components on the adapted frame ``(e2, Je2, e3, Je3)``."""
    x = np.asarray(x, dtype=float)
    pg = G.riemann_at(chart, x)
    E = G.adapted_frame(pg, chart.complex_structure(x))
    return pg.frame_curvature(E)


def kahler_point_data(surface: str, x=None, a: float = 1.0, b: float = 1.0,
                      seed: int = 0) -> KahlerPointData:
    """Curvature data at one point; ``k3`` draws a random Ricci-flat Kahler tensor.

    For ``k3`` the Pontrjagin density is taken in the reversed orientation,
    the one in which the signature is non-negative.
    """
    if surface == "k3":
        R = random_k3_operator(np.random.default_rng(seed)).tensor()
        return KahlerPointData(five_scalars(R), G.p1_density(R, REVERSED_ARGS), R)
    chart = surface_chart(surface, a, b)
    if x is None:
        x = 0.5 * (np.asarray(chart.lower) + np.asarray(chart.upper)) + 0.1
    return KahlerPointData.from_curvature(frame_curvature_adapted(chart, x))


# volume and signature in the complex orientation
_VOL_SIGMA = {
    "t4": (lambda a, b: (2 * math.pi) ** 4, 0),
    "cp2": (lambda a, b: math.pi ** 2 / 2, 1),
    "s2xs2": (lambda a, b: 16 * math.pi ** 2 * a * b, 0),
}


def stratified_points(chart: G.MetricChart, per_axis: int, seed: int) -> np.ndarray:
    """One uniform point in each cell of a ``per_axis^dim`` grid on the chart box."""
    rng = np.random.default_rng(seed)
    lo = np.asarray(chart.lower, dtype=float)
    hi = np.asarray(chart.upper, dtype=float)
    idx = np.indices((per_axis,) * chart.dim).reshape(chart.dim, -1).T
    u = (idx + rng.random(idx.shape)) / per_axis
    return lo + (hi - lo) * u


def curvature_sup(chart: G.MetricChart, per_axis: int = 32, seed: int = 0, chunk: int = 4096) -> float:
    """Max over a stratified grid of all adapted-frame curvature components."""
    pts = stratified_points(chart, per_axis, seed)
    best = 0.0
    # fixed chunk order: the max is order independent anyway, this keeps memory bounded
    for i in range(0, len(pts), chunk):
        Rf = frame_curvature_adapted(chart, pts[i:i + chunk])
        best = max(best, float(np.max(np.abs(Rf))))
    return best


def surface_summary(surface: str, a: float = 1.0, b: float = 1.0, per_axis: int = 32,
                    seed: int = 0) -> SurfaceSummary:
    if surface == "k3":
        # Ricci-flat surrogate: curvature scale set to zero, signature 16 in the reversed orientation
        return SurfaceSummary(0.0, 1.0, 16)
    vol_fn, sigma = _VOL_SIGMA[surface]
    chart = surface_chart(surface, a, b)
    return SurfaceSummary(curvature_sup(chart, per_axis, seed), vol_fn(a, b), sigma)


def cp2_closed_form(p: int) -> float:
    p2 = float(p) ** 2
    return 576.0 / 5.0 * p2 * (p2 - 1.0) ** 2


def s2xs2_closed_form(p: int, a: float, b: float) -> float:
    """Reference product formula with a ``+`` sign on the ``1/a + 1/b`` term."""
    p2 = float(p) ** 2
    return 3.0 * p2 / 5.0 * (32.0 * p2 * (1.0 / a + 1.0 / b) + 192.0 * p2 * p2)
