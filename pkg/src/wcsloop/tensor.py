"""Second-order jets and algebraic curvature tensors.

A :class:`Jet2` carries a value together with its gradient and Hessian with
respect to ``d`` active coordinates.  All three arrays may carry leading
batch dimensions, so a metric can be evaluated at a whole quadrature grid in
one pass.

Curvature conventions: ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]`` and
``R(X, Y, Z, W) = <R(X, Y) Z, W>``.  With these, a space form of sectional
curvature ``kappa`` has ``R(e_i, e_j, e_i, e_j) = -kappa``; the Fubini-Study
metric with holomorphic sectional curvature 4 has ``R(e, Je, e, Je) = -4``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

SIGN_CONVENTION = "R(X,Y,Z,W)=<R(X,Y)Z,W>, R(e_i,e_j,e_i,e_j)=-sectional"

FRAME_ORTHONORMAL = "orthonormal"
FRAME_COORDINATE = "coordinate-with-metric"


class DomainError(ValueError):
    """Raised when an elementary function is evaluated outside its domain."""

    def __init__(self, message: str, location=None):
        self.location = location
        if location is not None:
            message = f"{message} at x={np.asarray(location).tolist()}"
        super().__init__(message)


class Jet2:
    """Value, gradient and Hessian of a scalar field, propagated exactly."""

    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 1000

    def __init__(self, val, grad, hess):
        self.val = np.asarray(val, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)

    @property
    def d(self) -> int:
        return self.grad.shape[-1]

    @classmethod
    def constant(cls, c, like: "Jet2") -> "Jet2":
        c = np.asarray(c, dtype=float)
        shape = np.broadcast_shapes(c.shape, like.val.shape)
        d = like.d
        return cls(np.broadcast_to(c, shape), np.zeros(shape + (d,)), np.zeros(shape + (d, d)))

    @classmethod
    def variables(cls, x) -> list["Jet2"]:
        """Independent coordinate jets for ``x`` of shape ``(..., d)``."""
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        batch = x.shape[:-1]
        out = []
        for i in range(d):
            g = np.zeros(batch + (d,))
            g[..., i] = 1.0
            out.append(cls(x[..., i], g, np.zeros(batch + (d, d))))
        return out

    # chain rule for a univariate function with derivatives f1, f2 at self.val
    def _chain(self, f0, f1, f2) -> "Jet2":
        g = self.grad
        f1e = f1[..., None]
        hess = f1e[..., None] * self.hess + f2[..., None, None] * (g[..., :, None] * g[..., None, :])
        return Jet2(f0, f1e * g, hess)

    def __neg__(self):
        return Jet2(-self.val, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.val + other.val, self.grad + other.grad, self.hess + other.hess)
        other = np.asarray(other, dtype=float)
        return Jet2(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet2):
            u, v = self, other
            gu, gv = u.grad, v.grad
            outer = gu[..., :, None] * gv[..., None, :]
            hess = (u.val[..., None, None] * v.hess + v.val[..., None, None] * u.hess
                    + outer + np.swapaxes(outer, -1, -2))
            grad = u.val[..., None] * gv + v.val[..., None] * gu
            return Jet2(u.val * v.val, grad, hess)
        c = np.asarray(other, dtype=float)
        return Jet2(self.val * c, self.grad * c[..., None], self.hess * c[..., None, None])

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet2":
        v = self.val
        if np.any(v == 0.0):
            raise DomainError("division by zero")
        inv = 1.0 / v
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        if isinstance(n, Jet2):
            return exp(log(self) * n)
        n = float(n)
        if n == int(n) and n >= 0:
            k = int(n)
            if k == 0:
                return Jet2.constant(1.0, self)
            out = self
            for _ in range(k - 1):
                out = out * self
            return out
        v = self.val
        if np.any(v <= 0.0):
            raise DomainError(f"non-integer power {n} of non-positive base")
        return self._chain(v ** n, n * v ** (n - 1), n * (n - 1) * v ** (n - 2))

    def __repr__(self):
        return f"Jet2(val={self.val!r}, grad={self.grad!r}, hess={self.hess!r})"


def _unary(name, f0, f1, f2, check=None):
    def fn(x):
        if isinstance(x, Jet2):
            if check is not None:
                check(x.val)
            v = x.val
            return x._chain(f0(v), f1(v), f2(v))
        if check is not None:
            check(np.asarray(x, dtype=float))
        return f0(x)

    fn.__name__ = name
    return fn


def _check_sqrt(v):
    if np.any(v < 0.0):
        raise DomainError("sqrt of negative argument")
    if np.any(v == 0.0):
        raise DomainError("sqrt is not differentiable at 0")


def _check_log(v):
    if np.any(v <= 0.0):
        raise DomainError("log of non-positive argument")


sin = _unary("sin", np.sin, np.cos, lambda v: -np.sin(v))
cos = _unary("cos", np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v))
exp = _unary("exp", np.exp, np.exp, np.exp)
log = _unary("log", np.log, lambda v: 1.0 / v, lambda v: -1.0 / (v * v), check=_check_log)
sqrt = _unary("sqrt", np.sqrt, lambda v: 0.5 / np.sqrt(v), lambda v: -0.25 / (v * np.sqrt(v)),
              check=_check_sqrt)


def jet2_lift(field: Callable[[Sequence[Jet2]], Jet2], x) -> Jet2:
    """Evaluate ``field`` at ``x`` returning value, gradient and Hessian."""
    x = np.asarray(x, dtype=float)
    try:
        out = field(Jet2.variables(x))
    except DomainError as err:
        raise DomainError(str(err), location=x) from None
    if not isinstance(out, Jet2):
        out = Jet2.constant(out, Jet2.variables(x)[0])
    return out


# ---------------------------------------------------------------------------
# algebraic curvature tensors


@dataclass(frozen=True)
class AlgCurvature:
    """Rank-4 curvature array ``comps[i, j, k, l] = R(e_i, e_j, e_k, e_l)``.

    ``frame_kind`` records whether the indices refer to an orthonormal frame
    or to coordinate vectors (in which case ``metric`` is required).
    """

    comps: np.ndarray
    frame_kind: str = FRAME_ORTHONORMAL
    metric: np.ndarray | None = None

    def __post_init__(self):
        comps = np.asarray(self.comps, dtype=float)
        if comps.ndim != 4 or len(set(comps.shape)) != 1 or comps.shape[0] < 2:
            raise ValueError(f"expected a (n,n,n,n) array with n >= 2, got {comps.shape}")
        if self.frame_kind not in (FRAME_ORTHONORMAL, FRAME_COORDINATE):
            raise ValueError(f"unknown frame kind {self.frame_kind!r}")
        if self.frame_kind == FRAME_COORDINATE and self.metric is None:
            raise ValueError("coordinate components need the metric")
        comps.setflags(write=False)
        object.__setattr__(self, "comps", comps)

    @property
    def dim(self) -> int:
        return self.comps.shape[0]

    def scale(self) -> float:
        return float(np.max(np.abs(self.comps)))

    def in_frame(self, frame) -> "AlgCurvature":
        """Components on the vectors given by the rows of ``frame``."""
        E = np.asarray(frame, dtype=float)
        c = np.einsum("ai,bj,ck,dl,abcd->ijkl", E.T, E.T, E.T, E.T, self.comps)
        return AlgCurvature(c, FRAME_ORTHONORMAL)

    def evaluate(self, X, Y, Z, W) -> float:
        return float(np.einsum("abcd,a,b,c,d->", self.comps, X, Y, Z, W))


def _tr(T: np.ndarray, *order: int) -> np.ndarray:
    # transpose the trailing four axes, leaving batch axes alone
    lead = T.ndim - 4
    return T.transpose(tuple(range(lead)) + tuple(lead + o for o in order))


def antisym_pairs(T: np.ndarray) -> np.ndarray:
    """Project onto tensors antisymmetric in (01) and in (23)."""
    T = 0.5 * (T - _tr(T, 1, 0, 2, 3))
    return 0.5 * (T - _tr(T, 0, 1, 3, 2))


def sym_pair_exchange(T: np.ndarray) -> np.ndarray:
    return 0.5 * (T + _tr(T, 2, 3, 0, 1))


def bianchi_sum(T: np.ndarray) -> np.ndarray:
    """Cyclic sum ``T_ijkl + T_jkil + T_kijl`` over the first three slots."""
    return T + _tr(T, 1, 2, 0, 3) + _tr(T, 2, 0, 1, 3)


def bianchi_project(T: np.ndarray) -> np.ndarray:
    return T - bianchi_sum(T) / 3.0


def curvature_projection(T: np.ndarray) -> np.ndarray:
    return bianchi_project(sym_pair_exchange(antisym_pairs(np.asarray(T, dtype=float))))


def symmetry_defects(R) -> dict[str, float]:
    """Max-norm violations of the algebraic curvature identities."""
    c = R.comps if isinstance(R, AlgCurvature) else np.asarray(R)
    return {
        "antisym_12": float(np.max(np.abs(c + _tr(c, 1, 0, 2, 3)))),
        "antisym_34": float(np.max(np.abs(c + _tr(c, 0, 1, 3, 2)))),
        "pair": float(np.max(np.abs(c - _tr(c, 2, 3, 0, 1)))),
        "bianchi": float(np.max(np.abs(bianchi_sum(c)))),
    }


def check_symmetries(R, tol: float = 1e-12, relative: bool = False) -> bool:
    c = R.comps if isinstance(R, AlgCurvature) else np.asarray(R)
    scale = max(float(np.max(np.abs(c))), 1.0) if relative else 1.0
    return max(symmetry_defects(c).values()) <= tol * scale


def random_alg_curvature(dim: int, seed: int) -> AlgCurvature:
    if dim not in (3, 4, 5):
        raise ValueError(f"unsupported dimension {dim}; expected 3, 4 or 5")
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((dim,) * 4)
    return AlgCurvature(curvature_projection(T))


def constant_curvature(dim: int, kappa: float) -> AlgCurvature:
    """Space form: ``R_ijkl = -kappa (d_ik d_jl - d_il d_jk)``."""
    if dim < 2:
        raise ValueError("dim must be at least 2")
    d = np.eye(dim)
    c = -kappa * (np.einsum("ik,jl->ijkl", d, d) - np.einsum("il,jk->ijkl", d, d))
    return AlgCurvature(c)


def sectional_curvature(R: AlgCurvature, X, Y) -> float:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    denom = (X @ X) * (Y @ Y) - (X @ Y) ** 2
    return -R.evaluate(X, Y, X, Y) / denom


def permutations_with_sign(n: int) -> list[tuple[tuple[int, ...], int]]:
    """All permutations of ``range(n)`` in lexicographic order with their signs."""
    out = []
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for a in range(n) for b in range(a + 1, n) if perm[a] > perm[b])
        out.append((perm, -1 if inversions % 2 else 1))
    return out


def levi_civita(n: int) -> np.ndarray:
    eps = np.zeros((n,) * n)
    for perm, sgn in permutations_with_sign(n):
        eps[perm] = sgn
    return eps


def factorial(n: int) -> int:
    return math.factorial(n)
