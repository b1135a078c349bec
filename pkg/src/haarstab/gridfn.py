"""Piecewise-constant functions on a uniform dyadic mesh.

A :class:`Mesh` is the uniform grid of cells of side ``2^-J`` covering an
axis-aligned window with dyadic corners (``[-1, 2)^d`` by default).  A
:class:`GridFunction` stores its values only on a sub-box of the window
(``start``/``data``); it is zero everywhere else, including outside the window.
Keeping the box tight is what makes families of localized functions cheap.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal
from scipy.interpolate import RegularGridInterpolator

from .affine import AffinePerturbation, apply_map, inverse_map
from .dyadic import DomainError, DyadicCube, HaarIndex


class AlignmentError(ValueError):
    """Mesh mismatch, or geometry that does not fall on cell boundaries."""


class WindowOverflowError(ValueError):
    """A result would be nonzero outside the mesh window."""


class ResolutionError(ValueError):
    """A mollifier kernel narrower than one cell."""


def _as_int_exact(value: float, what: str) -> int:
    r = round(value)
    if r != value:
        raise AlignmentError(f"{what} = {value!r} is not on the mesh")
    return int(r)


@dataclass(frozen=True)
class Mesh:
    dim: int
    resolution: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.broadcast_to(self.lo, (self.dim,)))
        hi = tuple(float(v) for v in np.broadcast_to(self.hi, (self.dim,)))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        for a, b in zip(lo, hi):
            if not b > a:
                raise DomainError(f"empty window side [{a}, {b})")
            _as_int_exact(math.ldexp(a, self.resolution), "window corner")
            _as_int_exact(math.ldexp(b, self.resolution), "window corner")

    @classmethod
    def default(cls, dim: int, resolution: int, lo: float = -1.0, hi: float = 2.0) -> "Mesh":
        return cls(dim, resolution, (lo,) * dim, (hi,) * dim)

    @property
    def cell_size(self) -> float:
        return math.ldexp(1.0, -self.resolution)

    @property
    def cell_volume(self) -> float:
        return math.ldexp(1.0, -self.resolution * self.dim)

    @property
    def origin(self) -> tuple[int, ...]:
        return tuple(int(math.ldexp(a, self.resolution)) for a in self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(math.ldexp(b - a, self.resolution)) for a, b in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def cell_index(self, x) -> np.ndarray:
        """Window-relative integer cell coordinates of points (may be out of range)."""
        x = np.asarray(x, dtype=float)
        return np.floor(np.ldexp(x, self.resolution)).astype(np.int64) - np.array(self.origin)

    def cell_range(self, lo, hi) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Cells meeting the box ``[lo, hi)``, unclipped."""
        a = np.floor(np.ldexp(np.asarray(lo, dtype=float), self.resolution)).astype(np.int64)
        b = np.ceil(np.ldexp(np.asarray(hi, dtype=float), self.resolution)).astype(np.int64)
        org = np.array(self.origin)
        return tuple(int(v) for v in a - org), tuple(int(v) for v in b - org)

    def aligned_range(self, lo, hi) -> tuple[tuple[int, ...], tuple[int, ...]]:
        org = self.origin
        a = tuple(_as_int_exact(math.ldexp(float(v), self.resolution), "box corner") - o
                  for v, o in zip(np.broadcast_to(lo, (self.dim,)), org))
        b = tuple(_as_int_exact(math.ldexp(float(v), self.resolution), "box corner") - o
                  for v, o in zip(np.broadcast_to(hi, (self.dim,)), org))
        return a, b

    def centers(self, start, shape) -> list[np.ndarray]:
        """Per-axis cell-center coordinates of a sub-box (an open grid)."""
        h = self.cell_size
        return [(np.arange(s, s + n) + o + 0.5) * h
                for s, n, o in zip(start, shape, self.origin)]

    def contains_range(self, start, stop) -> bool:
        return all(0 <= a and b <= n for a, b, n in zip(start, stop, self.shape))


class GridFunction:
    """A mesh function that is zero outside the box ``start .. start + data.shape``."""

    __slots__ = ("mesh", "start", "data")

    def __init__(self, mesh: Mesh, data, start=None):
        data = np.asarray(data)
        if data.dtype.kind not in "fc":
            data = data.astype(float)
        if data.ndim != mesh.dim:
            raise AlignmentError(f"data has {data.ndim} axes, mesh has {mesh.dim}")
        start = (0,) * mesh.dim if start is None else tuple(int(s) for s in start)
        stop = tuple(s + n for s, n in zip(start, data.shape))
        if not mesh.contains_range(start, stop):
            raise WindowOverflowError(f"box {start}..{stop} leaves the window {mesh.shape}")
        data = np.array(data, copy=True)
        data.setflags(write=False)
        self.mesh = mesh
        self.start = start
        self.data = data

    def __repr__(self):
        return (f"GridFunction(dim={self.mesh.dim}, J={self.mesh.resolution}, "
                f"box={self.start}+{self.data.shape}, dtype={self.data.dtype})")

    @classmethod
    def zeros(cls, mesh: Mesh) -> "GridFunction":
        return cls(mesh, np.zeros((0,) * mesh.dim))

    @classmethod
    def from_dense(cls, mesh: Mesh, values) -> "GridFunction":
        values = np.asarray(values)
        if values.shape != mesh.shape:
            raise AlignmentError(f"values of shape {values.shape} on a {mesh.shape} mesh")
        return cls(mesh, values).trimmed()

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @property
    def stop(self) -> tuple[int, ...]:
        return tuple(s + n for s, n in zip(self.start, self.data.shape))

    @property
    def values(self) -> np.ndarray:
        """Dense array over the whole window."""
        out = np.zeros(self.mesh.shape, dtype=self.data.dtype)
        out[self._slices()] = self.data
        return out

    def _slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, b) for a, b in zip(self.start, self.stop))

    def support_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical corners of the stored box."""
        h = self.mesh.cell_size
        org = np.array(self.mesh.origin)
        return (np.array(self.start) + org) * h, (np.array(self.stop) + org) * h

    def trimmed(self) -> "GridFunction":
        nz = np.nonzero(self.data)
        if nz[0].size == 0:
            return GridFunction.zeros(self.mesh)
        lo = [int(ix.min()) for ix in nz]
        hi = [int(ix.max()) + 1 for ix in nz]
        if all(a == 0 for a in lo) and tuple(hi) == self.data.shape:
            return self
        sl = tuple(slice(a, b) for a, b in zip(lo, hi))
        return GridFunction(self.mesh, self.data[sl],
                            tuple(s + a for s, a in zip(self.start, lo)))

    def with_box(self, start, stop) -> np.ndarray:
        """Values on an arbitrary box of cell indices (zero-filled)."""
        shape = tuple(b - a for a, b in zip(start, stop))
        out = np.zeros(shape, dtype=self.data.dtype)
        lo = [max(a, s) for a, s in zip(start, self.start)]
        hi = [min(b, s) for b, s in zip(stop, self.stop)]
        if all(a < b for a, b in zip(lo, hi)):
            dst = tuple(slice(a - s, b - s) for a, b, s in zip(lo, hi, start))
            src = tuple(slice(a - s, b - s) for a, b, s in zip(lo, hi, self.start))
            out[dst] = self.data[src]
        return out

    def evaluate(self, points) -> np.ndarray:
        """Cell-lookup evaluation at an ``(N, d)`` array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        idx = self.mesh.cell_index(pts) - np.array(self.start)
        inside = np.all((idx >= 0) & (idx < np.array(self.data.shape)), axis=1)
        out = np.zeros(pts.shape[0], dtype=self.data.dtype)
        if inside.any():
            out[inside] = self.data[tuple(idx[inside].T)]
        return out

    def integral(self):
        return self.data.sum() * self.mesh.cell_volume

    def _check(self, other: "GridFunction"):
        if not isinstance(other, GridFunction):
            return NotImplemented
        if other.mesh != self.mesh:
            raise AlignmentError("grid functions live on different meshes")

    def _combine(self, other: "GridFunction", sign: float) -> "GridFunction":
        if self.data.size == 0:
            return other * sign
        if other.data.size == 0:
            return self
        start = tuple(min(a, b) for a, b in zip(self.start, other.start))
        stop = tuple(max(a, b) for a, b in zip(self.stop, other.stop))
        return GridFunction(self.mesh, self.with_box(start, stop) + sign * other.with_box(start, stop), start)

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self._combine(other, 1.0)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self._combine(other, -1.0)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return GridFunction(self.mesh, self.data * c, self.start)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __neg__(self):
        return self * -1.0


# -- constructors ------------------------------------------------------------

def cube_range(cube: DyadicCube, mesh: Mesh):
    if cube.dim != mesh.dim:
        raise AlignmentError(f"cube has dimension {cube.dim}, mesh has {mesh.dim}")
    start, stop = mesh.aligned_range(cube.lower, cube.upper)
    if not mesh.contains_range(start, stop):
        raise WindowOverflowError(f"cube {cube} is not inside the window")
    return start, stop


def indicator(cube: DyadicCube, mesh: Mesh) -> GridFunction:
    """``chi_Q`` on the mesh; ``Q`` must be a union of cells."""
    if cube.scale < -mesh.resolution:
        raise AlignmentError(f"cube {cube} is finer than the mesh")
    start, stop = cube_range(cube, mesh)
    return GridFunction(mesh, np.ones(tuple(b - a for a, b in zip(start, stop))), start)


def box_indicator(mesh: Mesh, lo, hi) -> GridFunction:
    start, stop = mesh.aligned_range(lo, hi)
    if not mesh.contains_range(start, stop):
        raise WindowOverflowError(f"box [{lo}, {hi}) is not inside the window")
    return GridFunction(mesh, np.ones(tuple(b - a for a, b in zip(start, stop))), start)


def from_haar(index: HaarIndex, mesh: Mesh, normalized: bool = True) -> GridFunction:
    """Exact mesh representation of ``h_{(Q),k}``; needs ``2^-J <= l(Q)/2``."""
    cube = index.cube
    if cube.scale - 1 < -mesh.resolution:
        raise AlignmentError(
            f"Haar breakpoints of {cube} fall inside cells at resolution {mesh.resolution}")
    start, stop = cube_range(cube, mesh)
    n = stop[0] - start[0]
    legs = []
    for i in range(cube.dim):
        if (index.k >> i) & 1:
            legs.append(np.concatenate([np.ones(n // 2), -np.ones(n // 2)]))
        else:
            legs.append(np.ones(n))
    data = legs[0]
    for leg in legs[1:]:
        data = np.multiply.outer(data, leg)
    if normalized:
        data = data / math.sqrt(cube.volume)
    return GridFunction(mesh, data, start)


def sample(func, mesh: Mesh, lo=None, hi=None) -> GridFunction:
    """Midpoint samples of ``func`` (vectorized over ``(N, d)`` points) on a box."""
    if lo is None:
        start, stop = (0,) * mesh.dim, mesh.shape
    else:
        start, stop = mesh.aligned_range(lo, hi)
    shape = tuple(b - a for a, b in zip(start, stop))
    pts = _center_points(mesh, start, shape)
    return GridFunction(mesh, np.asarray(func(pts)).reshape(shape), start)


def _center_points(mesh: Mesh, start, shape) -> np.ndarray:
    axes = mesh.centers(start, shape)
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


# -- affine perturbation -----------------------------------------------------

def perturb(f: GridFunction, cube: DyadicCube, p: AffinePerturbation,
            supersample: int = 1) -> GridFunction:
    """``x -> f(x_Q + A (l(Q) y + x - x_Q))`` sampled at cell midpoints.

    With ``supersample = s > 1`` each cell averages ``s^d`` sub-cell samples
    instead; for mesh-aligned translations both agree exactly.
    """
    if p.dim != f.dim or cube.dim != f.dim:
        raise DomainError("dimension mismatch between function, cube and perturbation")
    if p.is_identity():
        return f
    f = f.trimmed()
    if f.data.size == 0:
        return f
    mesh = f.mesh
    lo, hi = f.support_box()
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(f.dim, -1).T
    pre = inverse_map(p, cube, corners)
    start, stop = mesh.cell_range(pre.min(axis=0), pre.max(axis=0))
    if not mesh.contains_range(start, stop):
        raise WindowOverflowError(
            f"perturbed support of the function attached to {cube} leaves the window; "
            f"enlarge the window")
    shape = tuple(b - a for a, b in zip(start, stop))
    pts = _center_points(mesh, start, shape)
    if supersample <= 1:
        values = f.evaluate(apply_map(p, cube, pts))
    else:
        h = mesh.cell_size
        offs = (np.arange(supersample) + 0.5) / supersample - 0.5
        values = np.zeros(pts.shape[0], dtype=f.data.dtype)
        for o in np.array(np.meshgrid(*[offs] * f.dim, indexing="ij")).reshape(f.dim, -1).T:
            values = values + f.evaluate(apply_map(p, cube, pts + o * h))
        values = values / supersample ** f.dim
    return GridFunction(mesh, values.reshape(shape), start).trimmed()


# -- mollification -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MollifierSpec:
    """A nonnegative kernel supported in ``[-1, 1]^d``, renormalized on the mesh.

    ``kind`` is ``"box"``, ``"bump"`` (``(1 - |x|_inf^2)_+``) or ``"table"``;
    a table holds samples on the vertex grid ``linspace(-1, 1, n)`` per axis
    and is interpolated multilinearly.
    """

    kind: str = "box"
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("box", "bump", "table"):
            raise DomainError(f"unknown mollifier kind {self.kind!r}")
        if self.kind == "table":
            if self.table is None:
                raise DomainError("a table mollifier needs sample values")
            t = np.array(self.table, dtype=float)
            if np.any(t < 0) or not np.isfinite(t).all():
                raise DomainError("mollifier samples must be finite and nonnegative")
            if t.sum() <= 0:
                raise DomainError("mollifier samples are all zero")
            object.__setattr__(self, "table", t)

    @classmethod
    def box(cls) -> "MollifierSpec":
        return cls("box")

    @classmethod
    def bump(cls) -> "MollifierSpec":
        return cls("bump")

    @classmethod
    def from_csv(cls, path) -> "MollifierSpec":
        """Rows of a CSV file; one row (or column) for ``d = 1``, a matrix for ``d = 2``."""
        table = np.loadtxt(path, delimiter=",", ndmin=2)
        if 1 in table.shape:
            table = table.ravel()
        return cls("table", table)

    def __call__(self, t) -> np.ndarray:
        """Kernel values at points ``t`` of shape ``(..., d)``."""
        t = np.asarray(t, dtype=float)
        r = np.max(np.abs(t), axis=-1)
        if self.kind == "box":
            return (r <= 1.0).astype(float)
        if self.kind == "bump":
            return np.clip(1.0 - r ** 2, 0.0, None)
        table = self.table
        d = t.shape[-1]
        if table.ndim != d:
            raise DomainError(f"kernel table has {table.ndim} axes, points have {d}")
        axes = [np.linspace(-1.0, 1.0, n) for n in table.shape]
        interp = RegularGridInterpolator(axes, table, bounds_error=False, fill_value=0.0)
        return np.clip(interp(t.reshape(-1, d)).reshape(t.shape[:-1]), 0.0, None)

    def weights(self, dim: int, delta: float, cell_size: float) -> np.ndarray:
        """Unit-mass discrete kernel for ``psi_delta`` on cells of side ``cell_size``."""
        ratio = delta / cell_size
        m = int(math.floor(ratio * (1 + 1e-12)))
        if m < 1:
            raise ResolutionError(f"kernel radius {delta} is below the cell size {cell_size}")
        k = np.arange(-m, m + 1) / ratio
        grids = np.meshgrid(*[k] * dim, indexing="ij")
        w = self(np.stack(grids, axis=-1))
        total = w.sum()
        if np.count_nonzero(w) < 2:
            raise ResolutionError(
                f"kernel {self.kind!r} at radius {delta} covers a single cell; no smoothing")
        return w / total


def mollify(f: GridFunction, psi: MollifierSpec, delta: float) -> GridFunction:
    """Discrete convolution with the mesh-sampled, unit-mass ``psi_delta``."""
    mesh = f.mesh
    w = psi.weights(mesh.dim, delta, mesh.cell_size)
    f = f.trimmed()
    if f.data.size == 0:
        return f
    m = w.shape[0] // 2
    start = tuple(s - m for s in f.start)
    stop = tuple(s + m for s in f.stop)
    if not mesh.contains_range(start, stop):
        raise WindowOverflowError(f"mollified support {start}..{stop} leaves the window")
    out = signal.convolve(f.data, w, mode="full")
    return GridFunction(mesh, out, start)


def mollified_haar(index: HaarIndex, mesh: Mesh, psi: MollifierSpec, eta: float) -> GridFunction:
    """``h_{(Q),k} * psi_{eta l(Q)}``.

    The normalization ``|Q|^{-1/2}`` is applied after convolving the +-1
    pattern, so rescaled copies of the same cube agree bit for bit.
    """
    raw = mollify(from_haar(index, mesh, normalized=False), psi, eta * index.cube.sidelength)
    return raw * (1.0 / math.sqrt(index.cube.volume))


# -- inner products and norms ------------------------------------------------

def inner_product(f: GridFunction, g: GridFunction):
    """``<f, g> = int f conj(g)``; exact for mesh functions up to roundoff."""
    if f.mesh != g.mesh:
        raise AlignmentError("inner product of functions on different meshes")
    lo = tuple(max(a, b) for a, b in zip(f.start, g.start))
    hi = tuple(min(a, b) for a, b in zip(f.stop, g.stop))
    if any(a >= b for a, b in zip(lo, hi)):
        return 0.0
    fs = f.with_box(lo, hi)
    gs = g.with_box(lo, hi)
    value = np.vdot(gs, fs) * f.mesh.cell_volume
    return float(value) if np.isrealobj(value) else complex(value)


def l2_norm(f: GridFunction) -> float:
    return float(math.sqrt(np.vdot(f.data, f.data).real * f.mesh.cell_volume))


# -- total variation ---------------------------------------------------------

def _line_variation(values: np.ndarray, axis: int = -1) -> np.ndarray:
    pad = [(0, 0)] * values.ndim
    pad[axis] = (1, 1)
    return np.abs(np.diff(np.pad(values, pad), axis=axis)).sum(axis=axis)


def axis_tv(f: GridFunction, axis: int, offset=()) -> float:
    """Variation of ``t -> f(y + t e_axis)``; ``offset`` holds the other coordinates.

    The function is zero outside the window, so entry and exit jumps count.
    """
    d = f.dim
    offset = tuple(float(v) for v in offset)
    if len(offset) != d - 1:
        raise DomainError(f"need {d - 1} offset coordinates, got {len(offset)}")
    point = np.insert(np.array(offset), axis, 0.0) if d > 1 else np.zeros(1)
    idx = f.mesh.cell_index(point)
    sel = []
    for i in range(d):
        if i == axis:
            sel.append(slice(None))
            continue
        j = int(idx[i]) - f.start[i]
        if not 0 <= j < f.data.shape[i]:
            return 0.0
        sel.append(j)
    return float(_line_variation(f.data[tuple(sel)]))


def axis_tv_profile(f: GridFunction, axis: int) -> np.ndarray:
    """Variation along every axis-parallel mesh line in direction ``axis``."""
    return _line_variation(f.data, axis=axis)


def max_axis_tv(f: GridFunction) -> float:
    """Largest variation over all axis-parallel lines (the NBV seminorm)."""
    if f.data.size == 0:
        return 0.0
    return float(max(axis_tv_profile(f, a).max() for a in range(f.dim)))


def line_tv(f: GridFunction, direction, base, step: float | None = None) -> float:
    """Variation of the sampled restriction ``t -> f(base + t v)``.

    A lower bound on the true line variation; exact once ``step`` resolves
    every cell crossing.  ``step`` must not exceed ``2^-J / (2 |v|_inf)``.
    """
    v = np.asarray(direction, dtype=float)
    y = np.asarray(base, dtype=float)
    vmax = np.max(np.abs(v))
    if vmax == 0:
        raise DomainError("line direction must be nonzero")
    limit = f.mesh.cell_size / (2 * vmax)
    if step is None:
        step = limit / 2
    elif step > limit * (1 + 1e-12):
        raise DomainError(f"step {step} exceeds {limit}; cell crossings could be missed")
    f = f.trimmed()
    if f.data.size == 0:
        return 0.0
    lo, hi = f.support_box()
    t0, t1 = -np.inf, np.inf
    for a in range(f.dim):
        if v[a] == 0:
            if not lo[a] <= y[a] < hi[a]:
                return 0.0
            continue
        ta, tb = sorted(((lo[a] - y[a]) / v[a], (hi[a] - y[a]) / v[a]))
        t0, t1 = max(t0, ta), min(t1, tb)
    if t0 >= t1:
        return 0.0
    n = int(math.ceil((t1 - t0) / step))
    t = t0 - step + step * np.arange(n + 3)
    values = f.evaluate(y + t[:, None] * v)
    return float(_line_variation(values))


# -- serialization -----------------------------------------------------------

def save(f: GridFunction, path, fmt: str = "bin") -> tuple[Path, Path]:
    """Write ``<path>.json`` (header) and ``<path>.bin`` or ``<path>.csv`` (box values)."""
    path = Path(path)
    data_path = path.with_suffix("." + fmt)
    header = {
        "dim": f.dim,
        "resolution": f.mesh.resolution,
        "window_lo": list(f.mesh.lo),
        "window_hi": list(f.mesh.hi),
        "box_start": list(f.start),
        "box_shape": list(f.data.shape),
        "dtype": "complex128" if np.iscomplexobj(f.data) else "float64",
        "format": fmt,
        "data_file": data_path.name,
        "order": "C",
    }
    flat = np.ascontiguousarray(f.data).ravel()
    if fmt == "bin":
        flat.astype("<c16" if np.iscomplexobj(flat) else "<f8").tofile(data_path)
    elif fmt == "csv":
        cols = np.column_stack([flat.real, flat.imag]) if np.iscomplexobj(flat) else flat[:, None]
        np.savetxt(data_path, cols, delimiter=",", fmt="%.17g")
    else:
        raise DomainError(f"unknown format {fmt!r}")
    header_path = path.with_suffix(".json")
    header_path.write_text(json.dumps(header, indent=2))
    return header_path, data_path


def load(path) -> GridFunction:
    header_path = Path(path).with_suffix(".json")
    header = json.loads(header_path.read_text())
    mesh = Mesh(header["dim"], header["resolution"],
                tuple(header["window_lo"]), tuple(header["window_hi"]))
    data_path = header_path.parent / header["data_file"]
    complex_ = header["dtype"] == "complex128"
    shape = tuple(header["box_shape"])
    if header["format"] == "bin":
        flat = np.fromfile(data_path, dtype="<c16" if complex_ else "<f8")
    else:
        cols = np.loadtxt(data_path, delimiter=",", ndmin=2)
        flat = cols[:, 0] + 1j * cols[:, 1] if complex_ else cols[:, 0]
    if flat.size != int(np.prod(shape)):
        raise AlignmentError(f"{data_path} holds {flat.size} values, header says {shape}")
    return GridFunction(mesh, flat.reshape(shape), tuple(header["box_start"]))
