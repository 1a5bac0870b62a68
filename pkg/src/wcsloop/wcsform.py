"""Pointwise Wodzicki-Chern-Simons integrands on orthonormal curvature data.

For a loop point with velocity ``gdot`` and arguments ``X_1..X_{2k-1}`` the
integrands are signed sums over all permutations ``s`` of the arguments of

    tr[ E(X_s1) . Omega(X_s2, X_s3) ... Omega(X_s(2k-2), X_s(2k-1)) ]

where ``Omega(A, B)`` is the curvature endomorphism with matrix entries
``Omega(A, B)[a, b] = R(A, B, e_b, e_a)`` and ``E`` is either the full
order -1 connection symbol ``Y -> -2R(X,gdot)Y - R(Y,gdot)X + R(X,Y)gdot``
or its surviving piece ``Y -> R(X,Y)gdot``.

Normalisation is an explicit constant.  The reduced sum is multiplied by
``C_k``; the full sum by ``C_k / 2`` so that the two agree on any manifold of
dimension ``2k - 1``.  The default ``C_3 = 3/5`` reproduces the published
five-dimensional values; ``C_2`` is ``k / 2**(k-2) = 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import FRAME_COORDINATE, AlgCurvature, levi_civita, permutations_with_sign

REDUCED_CONSTANTS = {2: 2.0, 3: 3.0 / 5.0}
# the competing k / 2^(k-2) normalisation, reported alongside but never applied
ALTERNATE_CONSTANTS = {k: k / 2 ** (k - 2) for k in (2, 3)}


def default_constant(k: int) -> float:
    if k not in REDUCED_CONSTANTS:
        raise ValueError(f"only k in {sorted(REDUCED_CONSTANTS)} is supported")
    return REDUCED_CONSTANTS[k]


@dataclass(frozen=True)
class WcsPointInput:
    R: AlgCurvature
    gamma_dot: np.ndarray
    k: int
    args: np.ndarray | None = None

    def __post_init__(self):
        if self.k not in (2, 3):
            raise ValueError("k must be 2 or 3")
        n = 2 * self.k - 1
        R = self.R
        if R.frame_kind == FRAME_COORDINATE:
            raise ValueError("convert coordinate curvature to an orthonormal frame first")
        if R.dim != n:
            raise ValueError(f"curvature has dim {R.dim}, expected 2k-1 = {n}")
        gd = np.asarray(self.gamma_dot, dtype=float)
        if gd.shape != (n,):
            raise ValueError(f"gamma_dot must have shape ({n},)")
        object.__setattr__(self, "gamma_dot", gd)
        args = np.eye(n) if self.args is None else np.asarray(self.args, dtype=float)
        if args.shape != (n, n):
            raise ValueError(f"need {n} argument vectors of length {n}")
        object.__setattr__(self, "args", args)

    @property
    def dim(self) -> int:
        return 2 * self.k - 1


def omega(R: np.ndarray, A, B) -> np.ndarray:
    """Curvature endomorphism ``Omega(A, B)[a, b] = R(A, B, e_b, e_a)``."""
    return np.einsum("ijba,i,j->ab", R, A, B)


def sigma_minus1_endo(R, gamma_dot, X) -> np.ndarray:
    """Matrix of ``Y -> -2R(X,gdot)Y - R(Y,gdot)X + R(X,Y)gdot``."""
    c = R.comps if isinstance(R, AlgCurvature) else np.asarray(R, dtype=float)
    gd = np.asarray(gamma_dot, dtype=float)
    X = np.asarray(X, dtype=float)
    if gd.shape != (c.shape[0],) or X.shape != (c.shape[0],):
        raise ValueError("vector length does not match curvature dimension")
    # entry [a, b] is the e_a component of the image of e_b
    return (-2.0 * np.einsum("ijba,i,j->ab", c, X, gd)
            - np.einsum("bjia,j,i->ab", c, gd, X)
            + np.einsum("ibja,i,j->ab", c, X, gd))


def reduced_endo(R, gamma_dot, X) -> np.ndarray:
    """Matrix of ``Y -> R(X, Y) gdot``."""
    c = R.comps if isinstance(R, AlgCurvature) else np.asarray(R, dtype=float)
    return np.einsum("ibja,i,j->ab", c, X, gamma_dot)


def interior_endo(R, gamma_dot, X) -> np.ndarray:
    """Matrix of ``Y -> R(X, gdot) Y``."""
    c = R.comps if isinstance(R, AlgCurvature) else np.asarray(R, dtype=float)
    return np.einsum("ijba,i,j->ab", c, X, gamma_dot)


def _permutation_sum(inp: WcsPointInput, endo) -> float:
    c = inp.R.comps
    V = inp.args
    gd = inp.gamma_dot
    n = inp.dim
    heads = [endo(c, gd, V[i]) for i in range(n)]
    omegas = {(i, j): omega(c, V[i], V[j]) for i in range(n) for j in range(n)}
    total = 0.0
    for perm, sgn in permutations_with_sign(n):
        M = heads[perm[0]]
        for t in range(1, n, 2):
            M = M @ omegas[perm[t], perm[t + 1]]
        total += sgn * np.trace(M)
    return float(total)


def full_sum(inp: WcsPointInput) -> float:
    return _permutation_sum(inp, sigma_minus1_endo)


def reduced_sum(inp: WcsPointInput) -> float:
    return _permutation_sum(inp, reduced_endo)


def wcs_full(inp: WcsPointInput, constant: float | None = None) -> float:
    C = default_constant(inp.k) if constant is None else constant
    return 0.5 * C * full_sum(inp)


def wcs_reduced(inp: WcsPointInput, constant: float | None = None) -> float:
    C = default_constant(inp.k) if constant is None else constant
    return C * reduced_sum(inp)


def interior_term_check(R, args=None, gamma_dot=None) -> float:
    """Signed permutation sum of ``tr[R(X_s1, gdot) Omega^(k-1)]``.

    This is the interior product of ``tr(Omega^k)``, a 2k-form, so it vanishes
    on a manifold of dimension ``2k - 1``.
    """
    c = R.comps if isinstance(R, AlgCurvature) else np.asarray(R)
    n = c.shape[0]
    if n % 2 == 0:
        raise ValueError("interior term is only defined for odd dimension 2k-1")
    if gamma_dot is None:
        gamma_dot = np.zeros(n)
        gamma_dot[0] = 1.0
    inp = WcsPointInput(AlgCurvature(c), np.asarray(gamma_dot, dtype=float), (n + 1) // 2, args)
    return _permutation_sum(inp, interior_endo)


# ---------------------------------------------------------------------------
# vectorised path: contract with the Levi-Civita symbol instead of looping


_EPS = {n: levi_civita(n) for n in (3, 5)}


def reduced_sum_batched(Rf: np.ndarray, gamma_dot: np.ndarray, args=None) -> np.ndarray:
    """Reduced permutation sum for a batch of orthonormal-frame tensors.

    ``Rf`` has shape ``(..., n, n, n, n)`` and ``gamma_dot`` ``(..., n)``.
    ``args`` (rows are the argument vectors) enters only through its
    determinant, since the sum is alternating in the arguments.
    """
    Rf = np.asarray(Rf, dtype=float)
    gd = np.asarray(gamma_dot, dtype=float)
    n = Rf.shape[-1]
    # T[..., i, a, b] = R(e_i, e_b, gdot, e_a)
    Tm = np.einsum("...ibja,...j->...iab", Rf, gd)
    # O[..., i, j, a, b] = R(e_i, e_j, e_b, e_a)
    O = np.swapaxes(Rf, -1, -2)
    if n == 3:
        F = np.einsum("...iab,...jkba->...ijk", Tm, O, optimize=True)
    elif n == 5:
        F = np.einsum("...iab,...jkbc,...lmca->...ijklm", Tm, O, O, optimize=True)
    else:
        raise ValueError("only dimensions 3 and 5 are supported")
    axes = tuple(range(-n, 0))
    total = np.tensordot(F, _EPS[n], axes=(axes, tuple(range(n))))
    if args is not None:
        total = total * np.linalg.det(np.asarray(args, dtype=float))
    return total
