"""Finite-family frame analysis on a common mesh.

A family is stored as a sparse ``members x cells`` matrix ``F`` of cell
values; the Gram matrix is ``F F^H`` times the cell volume, so pairs of
members with disjoint support boxes never produce a stored entry.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse

from .affine import AffinePerturbation, determinant
from .dyadic import DomainError, DyadicCube, HaarIndex
from .gridfn import (AlignmentError, GridFunction, Mesh, from_haar, indicator,
                     inner_product, l2_norm, perturb)


class NumericalError(ArithmeticError):
    pass


@dataclass
class FamilySpec:
    members: list[GridFunction]
    labels: list | None = None

    def __post_init__(self):
        self.members = list(self.members)
        if not self.members:
            raise DomainError("a family needs at least one member")
        mesh = self.members[0].mesh
        for m in self.members[1:]:
            if m.mesh != mesh:
                raise AlignmentError("family members live on different meshes")
        if self.labels is not None:
            self.labels = list(self.labels)
            if len(self.labels) != len(self.members):
                raise DomainError("labels and members differ in length")

    def __len__(self):
        return len(self.members)

    @property
    def mesh(self) -> Mesh:
        return self.members[0].mesh

    @cached_property
    def matrix(self) -> sparse.csr_matrix:
        """Sparse ``len(self) x mesh.size`` matrix of member cell values."""
        shape = self.mesh.shape
        strides = np.cumprod((1,) + shape[::-1])[:-1][::-1]
        rows, cols, vals = [], [], []
        for i, m in enumerate(self.members):
            nz = np.nonzero(m.data)
            if nz[0].size == 0:
                continue
            flat = sum((ix + s) * st for ix, s, st in zip(nz, m.start, strides))
            rows.append(np.full(flat.size, i))
            cols.append(flat)
            vals.append(m.data[nz])
        dtype = complex if any(np.iscomplexobj(m.data) for m in self.members) else float
        if not rows:
            return sparse.csr_matrix((len(self), self.mesh.size), dtype=dtype)
        return sparse.csr_matrix(
            (np.concatenate(vals).astype(dtype), (np.concatenate(rows), np.concatenate(cols))),
            shape=(len(self), self.mesh.size))

    def subset(self, keep: Sequence[int]) -> "FamilySpec":
        labels = None if self.labels is None else [self.labels[i] for i in keep]
        return FamilySpec([self.members[i] for i in keep], labels)

    def where(self, predicate) -> "FamilySpec":
        """Members whose label satisfies ``predicate``."""
        if self.labels is None:
            raise DomainError("family has no labels to select on")
        return self.subset([i for i, lab in enumerate(self.labels) if predicate(lab)])

    def __add__(self, other: "FamilySpec") -> "FamilySpec":
        if len(other) != len(self):
            raise DomainError("families differ in length")
        return FamilySpec([a + b for a, b in zip(self.members, other.members)], self.labels)

    def __sub__(self, other: "FamilySpec") -> "FamilySpec":
        if len(other) != len(self):
            raise DomainError("families differ in length")
        return FamilySpec([a - b for a, b in zip(self.members, other.members)], self.labels)


def haar_family(indices: Sequence[HaarIndex], mesh: Mesh) -> FamilySpec:
    return FamilySpec([from_haar(ix, mesh) for ix in indices], list(indices))


@dataclass
class GramSummary:
    gram: sparse.csr_matrix
    bessel_bound: float
    ao_norm: float
    schur_sq: float | None = None
    iterations: int = 0
    tolerance: float = 1e-10
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        g = self.gram
        return {
            "size": g.shape[0],
            "nonzeros": int(g.nnz),
            "bessel_bound": self.bessel_bound,
            "ao_norm": self.ao_norm,
            "schur_sq": self.schur_sq,
            "iterations": self.iterations,
            "tolerance": self.tolerance,
            **self.extra,
        }

    def save(self, path) -> tuple[Path, Path]:
        """``<path>.json`` with the bounds and ``<path>.csv`` with the Gram in COO form."""
        path = Path(path)
        json_path = path.with_suffix(".json")
        json_path.write_text(json.dumps(self.to_dict(), indent=2))
        coo = self.gram.tocoo()
        csv_path = path.with_suffix(".csv")
        with open(csv_path, "w") as fh:
            fh.write("row,col,value\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r},{c},{v!r}\n")
        return json_path, csv_path


def gram_matrix(family: FamilySpec) -> sparse.csr_matrix:
    """Entry ``(i, j) = <member_i, member_j>``."""
    f = family.matrix
    g = (f @ f.conj().T) * family.mesh.cell_volume
    return sparse.csr_matrix(g)


def power_iteration(matrix, rtol: float = 1e-10, maxiter: int = 200_000, seed: int = 0,
                    restarts: int = 3, deflate: np.ndarray | None = None):
    """Largest eigenvalue of a Hermitian positive semidefinite matrix.

    Returns ``(value, vector, iterations)``.  Stops when the Rayleigh quotient
    changes by at most ``rtol`` (relative) on two consecutive steps.  A start
    vector that collapses to zero triggers a fresh random start; an optional
    unit vector ``deflate`` is projected out to estimate the next eigenvalue.
    """
    n = matrix.shape[0]
    if n == 0:
        return 0.0, np.zeros(0), 0
    rng = np.random.default_rng(seed)
    total = 0
    for _ in range(restarts + 1):
        v = rng.standard_normal(n)
        if deflate is not None:
            v = v - deflate * np.vdot(deflate, v)
        nv = np.linalg.norm(v)
        if nv == 0:
            continue
        v = v / nv
        lam = 0.0
        calm = 0
        for it in range(1, maxiter + 1):
            w = matrix @ v
            if deflate is not None:
                w = w - deflate * np.vdot(deflate, w)
            new = float(np.vdot(v, w).real)
            nw = np.linalg.norm(w)
            total += 1
            if nw == 0.0:
                break
            v = w / nw
            if abs(new - lam) <= rtol * abs(new):
                calm += 1
                if calm >= 2:
                    return new, v, total
            else:
                calm = 0
            lam = new
        else:
            raise NumericalError(
                f"power iteration did not reach rtol={rtol} in {maxiter} steps; "
                f"last estimate {lam!r}")
    return 0.0, np.zeros(n), total


def bessel_bound(family: FamilySpec, rtol: float = 1e-10, seed: int = 0) -> tuple[float, float]:
    """Optimal Bessel bound of the finite family and its square root (AO norm)."""
    b, _, _ = power_iteration(gram_matrix(family), rtol=rtol, seed=seed)
    b = max(b, 0.0)
    return b, math.sqrt(b)


def haar_coefficients(block: np.ndarray) -> np.ndarray:
    """Orthonormal Haar transform of a cube-shaped array (side ``2^m``).

    The input holds coordinates in the basis of normalized cell indicators;
    the output lists the block-average coefficient first, then details from
    coarse to fine.  Detail signs follow the ``+1`` on the lower half rule.
    """
    a = np.asarray(block)
    d = a.ndim
    side = a.shape[0]
    if any(s != side for s in a.shape) or side & (side - 1):
        raise DomainError(f"block shape {a.shape} is not a power-of-two cube")
    out = []
    root2 = math.sqrt(2.0)
    while a.shape[0] > 1:
        h = a.shape[0] // 2
        a = a.reshape(sum(((h, 2) for _ in range(d)), ()))
        a = np.moveaxis(a, [2 * i + 1 for i in range(d)], list(range(d)))
        for i in range(d):
            x0 = np.take(a, 0, axis=i)
            x1 = np.take(a, 1, axis=i)
            a = np.stack([x0 + x1, x0 - x1], axis=i) / root2
        parts = a.reshape(1 << d, -1)
        out.append(parts[1:].ravel())
        a = parts[0].reshape((h,) * d)
    out.append(a.ravel())
    return np.concatenate(out[::-1])


def _block_scale(mesh: Mesh) -> int:
    """Largest scale whose dyadic cubes tile the window."""
    best = None
    for a, b in zip(mesh.lo, mesh.hi):
        for v in (a, b):
            n = int(math.ldexp(v, mesh.resolution))
            if n:
                tz = (n & -n).bit_length() - 1
                best = tz if best is None else min(best, tz)
        side = int(math.ldexp(b - a, mesh.resolution))
        cap = side.bit_length() - 1
        best = cap if best is None else min(best, cap)
    return best - mesh.resolution


def _schur_against_window_basis(family: FamilySpec) -> tuple[float, float]:
    mesh = family.mesh
    s = _block_scale(mesh)
    side = 1 << (s + mesh.resolution)
    root_vol = math.sqrt(mesh.cell_volume)
    row_max = 0.0
    columns: dict[tuple[int, ...], np.ndarray] = {}
    for m in family.members:
        m = m.trimmed()
        if m.data.size == 0:
            continue
        first = [a // side for a in m.start]
        last = [(b - 1) // side for b in m.stop]
        row = 0.0
        for block in np.ndindex(*[l - f + 1 for f, l in zip(first, last)]):
            b = tuple(f + o for f, o in zip(first, block))
            start = tuple(i * side for i in b)
            vals = m.with_box(start, tuple(a + side for a in start))
            if not vals.any():
                continue
            c = np.abs(haar_coefficients(vals * root_vol))
            row += c.sum()
            if b in columns:
                columns[b] += c
            else:
                columns[b] = c
        row_max = max(row_max, row)
    col_max = max((c.max() for c in columns.values()), default=0.0)
    return row_max, col_max


def schur_diagnostic(family: FamilySpec, reference: FamilySpec | None = None) -> float:
    """Schur-test bound ``(max row sum) * (max column sum)`` of ``|<member, ref>|``.

    ``reference`` must be orthonormal and span every member.  ``None`` uses
    the complete Haar basis of the mesh window (block indicators plus all Haar
    functions down to cell scale), evaluated by the fast transform.
    """
    if reference is None:
        row_max, col_max = _schur_against_window_basis(family)
        return float(row_max * col_max)
    if reference.mesh != family.mesh:
        raise AlignmentError("family and reference live on different meshes")
    c = abs(family.matrix @ reference.matrix.conj().T) * family.mesh.cell_volume
    c = sparse.csr_matrix(c)
    rows = np.asarray(c.sum(axis=1)).ravel()
    cols = np.asarray(c.sum(axis=0)).ravel()
    return float(rows.max(initial=0.0) * cols.max(initial=0.0))


def gram_summary(family: FamilySpec, reference: FamilySpec | None = None,
                 schur: bool = True, rtol: float = 1e-10, seed: int = 0) -> GramSummary:
    g = gram_matrix(family)
    b, _, iters = power_iteration(g, rtol=rtol, seed=seed)
    b = max(b, 0.0)
    s = schur_diagnostic(family, reference) if schur else None
    return GramSummary(g, b, math.sqrt(b), s, iters, rtol)


def analyze(f: GridFunction, family: FamilySpec) -> np.ndarray:
    """Coefficients ``<f, psi_gamma>`` in member order."""
    if f.mesh != family.mesh:
        raise AlignmentError("function and family live on different meshes")
    vec = f.values.ravel()
    return (family.matrix.conj() @ vec) * family.mesh.cell_volume


def synthesize(c, family: FamilySpec) -> GridFunction:
    """``sum_gamma c_gamma psi_gamma``."""
    c = np.asarray(c)
    if c.shape != (len(family),):
        raise DomainError(f"{c.shape[0] if c.ndim else 0} coefficients for {len(family)} members")
    dense = family.matrix.T @ c
    return GridFunction.from_dense(family.mesh, np.asarray(dense).reshape(family.mesh.shape))


def reconstruct_error(f: GridFunction, analysis_family: FamilySpec,
                      synthesis_family: FamilySpec) -> tuple[GridFunction, float]:
    """``f* = sum <f, analysis_gamma> synthesis_gamma`` and ``||f - f*|| / ||f||``."""
    if len(analysis_family) != len(synthesis_family):
        raise DomainError("analysis and synthesis families differ in length")
    norm = l2_norm(f)
    if norm == 0:
        raise DomainError("relative error of the zero function is undefined")
    f_star = synthesize(analyze(f, analysis_family), synthesis_family)
    return f_star, l2_norm(f - f_star) / norm


def frame_bounds_empirical(family: FamilySpec, probes: Sequence[GridFunction]) -> tuple[float, float]:
    """Min and max of ``sum |<p, psi>|^2 / ||p||^2`` over the probes."""
    if not probes:
        raise DomainError("no probes given")
    ratios = []
    for p in probes:
        norm2 = l2_norm(p) ** 2
        if norm2 == 0:
            raise DomainError("probe functions must be nonzero")
        c = analyze(p, family)
        ratios.append(float(np.vdot(c, c).real) / norm2)
    return min(ratios), max(ratios)


def perturbed_indicator(cube: DyadicCube, p: AffinePerturbation, mesh: Mesh,
                        supersample: int = 1) -> GridFunction:
    """``chi_{Q*}(x) = chi_Q(x_Q + A (l(Q) y + x - x_Q))`` on the mesh."""
    return perturb(indicator(cube, mesh), cube, p, supersample)


def avg_square_function(g: GridFunction, perturbations: dict, cubes: Sequence[DyadicCube],
                        supersample: int = 1, details: bool = False):
    """``|| (sum_Q |g_Q - g_{Q*}|^2 chi_Q)^{1/2} ||_2`` over a finite set of cubes.

    ``perturbations`` maps cubes to :class:`AffinePerturbation`; missing cubes
    are unperturbed.  ``|Q*|`` is the grid measure of the perturbed indicator.
    With ``details=True`` also returns per-cube rows
    ``(cube, g_Q, g_Q*, |Q*|, |Q| / det A)``.
    """
    mesh = g.mesh
    total = 0.0
    rows = []
    for cube in cubes:
        chi = indicator(cube, mesh)
        g_q = inner_product(g, chi) / cube.volume
        p = perturbations.get(cube)
        if p is None or p.is_identity():
            g_star, measure, expected = g_q, cube.volume, cube.volume
        else:
            chi_star = perturb(chi, cube, p, supersample)
            measure = float(chi_star.data.sum().real) * mesh.cell_volume
            if measure <= 0:
                raise DomainError(f"perturbed cube {cube} has no mass on the mesh")
            g_star = inner_product(g, chi_star) / measure
            expected = cube.volume / abs(determinant(p.matrix))
        total += abs(g_q - g_star) ** 2 * cube.volume
        rows.append((cube, g_q, g_star, measure, expected))
    value = math.sqrt(total)
    return (value, rows) if details else value
