"""Dyadic cubes and the tensor-product Haar system on R^d.

Geometry is kept exact: a cube stores an integer scale ``n`` and an integer
corner ``j``, so that ``Q = prod [j_i 2^n, (j_i + 1) 2^n)``.  Every derived
coordinate is a power-of-two multiple of an integer and therefore exact in
binary floating point for moderate scales.

The Haar leg pattern of a :class:`HaarIndex` is a ``d``-bit mask: bit ``i``
set means the ``i``-th cartesian factor is the Haar function of ``I_i(Q)``,
bit clear means it is the indicator of ``I_i(Q)``.  ``k = 0`` (the indicator
of the whole cube) is not a Haar function.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised for arguments outside an operation's domain."""


@dataclass(frozen=True, order=True)
class DyadicCube:
    scale: int
    corner: tuple[int, ...]

    def __post_init__(self):
        corner = tuple(int(c) for c in self.corner)
        if not corner:
            raise DomainError("a cube needs at least one coordinate")
        if abs(int(self.scale)) > 50:
            raise DomainError(f"scale {self.scale} outside [-50, 50]")
        object.__setattr__(self, "corner", corner)
        object.__setattr__(self, "scale", int(self.scale))

    @classmethod
    def unit(cls, dim: int) -> "DyadicCube":
        return cls(0, (0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.corner)

    @property
    def sidelength(self) -> float:
        return math.ldexp(1.0, self.scale)

    @property
    def volume(self) -> float:
        return math.ldexp(1.0, self.scale * self.dim)

    @property
    def lower(self) -> np.ndarray:
        return np.ldexp(np.array(self.corner, dtype=float), self.scale)

    @property
    def upper(self) -> np.ndarray:
        return np.ldexp(np.array(self.corner, dtype=float) + 1.0, self.scale)

    @property
    def center(self) -> np.ndarray:
        return np.ldexp(np.array(self.corner, dtype=float) + 0.5, self.scale)

    def interval(self, axis: int) -> tuple[float, float]:
        """The ``axis``-th cartesian factor ``I_axis(Q)`` as ``(a, b)``."""
        j = self.corner[axis]
        return math.ldexp(j, self.scale), math.ldexp(j + 1, self.scale)

    def contains_points(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all((x >= self.lower) & (x < self.upper), axis=-1)

    def contains(self, other: "DyadicCube") -> bool:
        """True when ``other`` is a (not necessarily proper) subcube."""
        if other.dim != self.dim or other.scale > self.scale:
            return False
        shift = self.scale - other.scale
        return all((c >> shift) == j for c, j in zip(other.corner, self.corner))

    def disjoint(self, other: "DyadicCube") -> bool:
        return not (self.contains(other) or other.contains(self))

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.scale + 1, tuple(c >> 1 for c in self.corner))

    def children(self) -> list["DyadicCube"]:
        """The ``2^d`` children at scale ``n - 1``, lexicographic corner order."""
        base = [2 * c for c in self.corner]
        return [
            DyadicCube(self.scale - 1, tuple(b + o for b, o in zip(base, offs)))
            for offs in itertools.product((0, 1), repeat=self.dim)
        ]

    def descendants(self, scale: int) -> list["DyadicCube"]:
        """All subcubes at ``scale`` (``<= self.scale``), lexicographic order."""
        if scale > self.scale:
            raise DomainError(f"scale {scale} is coarser than the cube's {self.scale}")
        m = 1 << (self.scale - scale)
        ranges = [range(c * m, (c + 1) * m) for c in self.corner]
        return [DyadicCube(scale, corner) for corner in itertools.product(*ranges)]

    def expanded(self, factor: float) -> tuple[np.ndarray, np.ndarray]:
        """Box of the concentric ``factor``-fold expansion (e.g. ``(1+2*eta)Q``)."""
        half = 0.5 * factor * self.sidelength
        c = self.center
        return c - half, c + half


@dataclass(frozen=True, order=True)
class HaarIndex:
    cube: DyadicCube
    k: int

    def __post_init__(self):
        if not 1 <= self.k < (1 << self.cube.dim):
            raise DomainError(
                f"Haar type k={self.k} invalid in dimension {self.cube.dim}: "
                f"need 1 <= k < {1 << self.cube.dim}"
            )

    @property
    def dim(self) -> int:
        return self.cube.dim

    def haar_axes(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.dim) if (self.k >> i) & 1)


def children(cube: DyadicCube) -> list[DyadicCube]:
    return cube.children()


def _unnormalized(index: HaarIndex, x: np.ndarray) -> np.ndarray:
    cube = index.cube
    out = np.ones(x.shape[0])
    for i in range(cube.dim):
        a, b = cube.interval(i)
        xi = x[:, i]
        inside = (xi >= a) & (xi < b)
        if (index.k >> i) & 1:
            mid = 0.5 * (a + b)
            leg = np.where(xi < mid, 1.0, -1.0)
            out *= np.where(inside, leg, 0.0)
        else:
            out *= inside
    return out


def haar_eval(index: HaarIndex, x, normalized: bool = True):
    """Evaluate ``h_{(Q),k}`` (or ``h^{(Q),k}`` with ``normalized=False``).

    ``x`` is a single point of length ``d`` or an ``(N, d)`` array of points.
    """
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != index.dim:
        raise DomainError(f"points have dimension {pts.shape[-1]}, index has {index.dim}")
    values = _unnormalized(index, pts)
    if normalized:
        values = values / math.sqrt(index.cube.volume)
    return float(values[0]) if single else values


def enumerate_window(dim: int, max_scale: int, min_scale: int,
                     region: DyadicCube | None = None) -> list[HaarIndex]:
    """All ``(Q, k)`` with ``Q`` inside ``region`` and ``min_scale <= scale(Q) <= max_scale``.

    Ordered coarse to fine, then by corner, then by ``k``.
    """
    if region is None:
        region = DyadicCube(max_scale, (0,) * dim)
    if region.dim != dim:
        raise DomainError(f"region has dimension {region.dim}, expected {dim}")
    if region.scale != max_scale:
        raise DomainError(f"region scale {region.scale} differs from max_scale {max_scale}")
    if min_scale > max_scale:
        raise DomainError(f"empty scale range {max_scale}..{min_scale}")
    indices = []
    for scale in range(max_scale, min_scale - 1, -1):
        for cube in region.descendants(scale):
            indices.extend(HaarIndex(cube, k) for k in range(1, 1 << dim))
    return indices


def window_count(dim: int, max_scale: int, min_scale: int) -> int:
    return ((1 << dim) - 1) * sum(1 << (dim * s) for s in range(max_scale - min_scale + 1))


def self_similarity_check(index: HaarIndex, sample_points) -> float:
    """Max discrepancy in ``h_{(Q),k}(x) = 2^{-nd/2} h_{(Q_0),k}(2^{-n} x - j)``."""
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    cube = index.cube
    n, d = cube.scale, cube.dim
    lhs = haar_eval(index, pts)
    unit = HaarIndex(DyadicCube.unit(d), index.k)
    rescaled = np.ldexp(pts, -n) - np.array(cube.corner, dtype=float)
    rhs = haar_eval(unit, rescaled) / math.sqrt(math.ldexp(1.0, n * d))
    return float(np.max(np.abs(lhs - rhs), initial=0.0))
