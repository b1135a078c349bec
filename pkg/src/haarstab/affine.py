"""Near-identity affine maps: the matrix infinity norm, pivot-free LU and
the elbow-by-elbow interpolants between a triangular factor and the identity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import DomainError, DyadicCube


class FactorizationError(ArithmeticError):
    pass


def inf_norm(m) -> float:
    """Maximum absolute row sum; for a vector, the max-coordinate norm."""
    a = np.asarray(m)
    if a.ndim == 1:
        return float(np.max(np.abs(a), initial=0.0))
    return float(np.max(np.sum(np.abs(a), axis=1), initial=0.0))


def lu_factor(a, pivot_tol: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    """Doolittle factorization ``A = L U`` without pivoting.

    ``L`` has unit diagonal.  A pivot with magnitude below ``pivot_tol`` (only
    possible when ``||A - I||_inf >= 1``) raises :class:`FactorizationError`.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    d = a.shape[0]
    lower = np.eye(d)
    upper = a.copy()
    for k in range(d - 1):
        pivot = upper[k, k]
        if abs(pivot) < pivot_tol:
            raise FactorizationError(f"zero pivot at step {k}: {pivot!r}")
        factors = upper[k + 1:, k] / pivot
        lower[k + 1:, k] = factors
        upper[k + 1:, k:] -= np.outer(factors, upper[k, k:])
        upper[k + 1:, k] = 0.0
    if d and abs(upper[-1, -1]) < pivot_tol:
        raise FactorizationError(f"zero pivot at step {d - 1}: {upper[-1, -1]!r}")
    return lower, upper


def telescope(m, k: int, direction: str = "upper") -> np.ndarray:
    """Interpolant ``M_k`` between a triangular ``M`` (``k = 0``) and ``I`` (``k = d``).

    ``upper``: entries with ``min(i, j) <= k`` (1-based) are replaced by the
    identity's.  ``lower``: entries with ``max(i, j) > d - k`` are.
    """
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    if not 0 <= k <= d:
        raise DomainError(f"telescope index {k} outside 0..{d}")
    i, j = np.indices((d, d)) + 1
    if direction == "upper":
        if np.any(np.tril(m, -1)):
            raise DomainError("upper telescope needs an upper triangular matrix")
        replace = np.minimum(i, j) <= k
    elif direction == "lower":
        if np.any(np.triu(m, 1)):
            raise DomainError("lower telescope needs a lower triangular matrix")
        replace = np.maximum(i, j) > d - k
    else:
        raise DomainError(f"direction must be 'upper' or 'lower', got {direction!r}")
    return np.where(replace, np.eye(d), m)


def determinant(m) -> float:
    """Determinant; uses the unpivoted factors when ``||M - I||_inf < 1``."""
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    if d == 0:
        return 1.0
    if inf_norm(m - np.eye(d)) < 1.0:
        _, upper = lu_factor(m)
        return float(np.prod(np.diag(upper)))
    return float(np.linalg.det(m))


@dataclass(frozen=True, eq=False)
class AffinePerturbation:
    """The map ``x -> x_Q + A (l(Q) y + x - x_Q)`` with ``||A - I|| + ||y|| <= eta``."""

    matrix: np.ndarray
    translation: np.ndarray
    eta: float

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float)
        y = np.array(self.translation, dtype=float).reshape(-1)
        if a.ndim != 2 or a.shape != (y.size, y.size):
            raise DomainError(f"matrix {a.shape} and translation {y.shape} disagree")
        eta = float(self.eta)
        if not 0.0 <= eta <= 0.5:
            raise DomainError(f"eta={eta} outside [0, 1/2]")
        size = inf_norm(a - np.eye(y.size)) + inf_norm(y)
        if size > eta * (1 + 1e-12) + 1e-15:
            raise DomainError(f"||A - I|| + ||y|| = {size} exceeds eta = {eta}")
        a.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "translation", y)
        object.__setattr__(self, "eta", eta)

    @classmethod
    def identity(cls, dim: int, eta: float = 0.0) -> "AffinePerturbation":
        return cls(np.eye(dim), np.zeros(dim), eta)

    @property
    def dim(self) -> int:
        return self.translation.size

    @property
    def size(self) -> float:
        return inf_norm(self.matrix - np.eye(self.dim)) + inf_norm(self.translation)

    @property
    def det(self) -> float:
        return determinant(self.matrix)

    def is_identity(self) -> bool:
        return not np.any(self.matrix - np.eye(self.dim)) and not np.any(self.translation)


def apply_map(p: AffinePerturbation, cube: DyadicCube, x) -> np.ndarray:
    """``x_Q + A (l(Q) y + x - x_Q)`` for one point or an ``(N, d)`` array."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != p.dim or cube.dim != p.dim:
        raise DomainError("dimension mismatch between point, cube and perturbation")
    xq = cube.center
    z = cube.sidelength * p.translation + (x - xq)
    return xq + z @ p.matrix.T


def inverse_map(p: AffinePerturbation, cube: DyadicCube, z) -> np.ndarray:
    """Solve ``apply_map(p, cube, x) = z`` for ``x``."""
    z = np.asarray(z, dtype=float)
    xq = cube.center
    w = np.linalg.solve(p.matrix, (z - xq).T).T
    return xq + w - cube.sidelength * p.translation
