"""Perturbation generators, difference families and eta sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..affine import AffinePerturbation
from ..dyadic import DomainError, DyadicCube, HaarIndex, enumerate_window
from ..frames import FamilySpec, bessel_bound, gram_summary, haar_family
from ..gridfn import (GridFunction, Mesh, MollifierSpec, ResolutionError, from_haar,
                      max_axis_tv, mollify, perturb)

GENERATORS = ("identity", "translation", "diagonal", "shear", "general", "adversarial-1d")


class UnderflowError(ArithmeticError):
    pass


def _round_translation(y: np.ndarray, cube: DyadicCube, align: int | None) -> np.ndarray:
    # l(Q) y becomes a multiple of the cell size; truncation keeps the budget
    if align is None:
        return y
    unit = math.ldexp(1.0, -align) / cube.sidelength
    return np.trunc(y / unit) * unit


def _vector_with_norm(rng, d: int, size: float) -> np.ndarray:
    y = rng.uniform(-size, size, d)
    y[rng.integers(d)] = size * rng.choice((-1.0, 1.0))
    return y


def _matrix_with_norm(rng, d: int, size: float) -> np.ndarray:
    e = rng.uniform(-1.0, 1.0, (d, d))
    rows = np.abs(e).sum(axis=1)
    return e * (size / rows.max()) if rows.max() > 0 else e


def perturbation_generators(name: str, cubes: Sequence[DyadicCube], dim: int, eta: float,
                            seed: int = 0, align: int | None = None) -> dict:
    """Per-cube perturbations ``(A, y)`` with ``||A - I|| + ||y|| <= eta``.

    ``align`` (a resolution ``J``) truncates each ``l(Q) y`` to a multiple of
    ``2^-J`` so that pure translations stay on the mesh.
    """
    if name not in GENERATORS:
        raise DomainError(f"unknown generator {name!r}; choose from {GENERATORS}")
    if name == "shear" and dim < 2:
        raise DomainError("shear needs dim >= 2")
    rng = np.random.default_rng(seed)
    eye = np.eye(dim)
    out = {}
    for cube in cubes:
        a, y = eye, np.zeros(dim)
        if name == "translation":
            y = _vector_with_norm(rng, dim, eta)
        elif name == "adversarial-1d":
            y = np.full(dim, eta)
        elif name == "diagonal":
            t = rng.uniform(0.25, 0.75)
            a = eye + np.diag(_vector_with_norm(rng, dim, t * eta))
            y = _vector_with_norm(rng, dim, (1 - t) * eta)
        elif name == "shear":
            i, j = rng.choice(dim, 2, replace=False)
            a = eye.copy()
            a[i, j] = eta * rng.choice((-1.0, 1.0))
        elif name == "general":
            t = rng.uniform(0.25, 0.75)
            a = eye + _matrix_with_norm(rng, dim, t * eta)
            y = _vector_with_norm(rng, dim, (1 - t) * eta)
        y = _round_translation(y, cube, align)
        out[cube] = AffinePerturbation(a, y, eta)
    return out


def difference_family(indices: Sequence[HaarIndex], mesh: Mesh, perturbations: dict,
                      weight_by_det: bool = True, supersample: int = 1) -> FamilySpec:
    """Members ``h_{(Q),k} - |A^{(Q)}| h~_{(Q),k}``."""
    members = []
    for ix in indices:
        h = from_haar(ix, mesh)
        p = perturbations[ix.cube]
        w = p.det if weight_by_det else 1.0
        members.append(h - w * perturb(h, ix.cube, p, supersample))
    return FamilySpec(members, list(indices))


def kernel_resolved(kernel: MollifierSpec, dim: int, delta: float, cell_size: float) -> bool:
    try:
        kernel.weights(dim, delta, cell_size)
    except ResolutionError:
        return False
    return True


def mollified_family(indices: Sequence[HaarIndex], mesh: Mesh, kernel: MollifierSpec,
                     eta: float) -> FamilySpec:
    """Members ``phi_{(Q),k} = h_{(Q),k} * psi_{eta l(Q)}``."""
    members = [mollify(from_haar(ix, mesh), kernel, eta * ix.cube.sidelength) for ix in indices]
    return FamilySpec(members, list(indices))


def random_nbv0_family(cubes: Sequence[DyadicCube], mesh: Mesh, rng, max_depth: int = 3) -> FamilySpec:
    """Members ``f^{(Q)} / |Q|^{1/2}`` with ``f^{(Q)}`` in NBV_0(Q).

    Each ``f^{(Q)}`` is random and constant on the cells of a sub-mesh of
    ``Q``, made mean-zero on ``Q``, then divided by its largest variation
    over all axis-parallel lines (boundary jumps included).
    """
    members = []
    for cube in cubes:
        room = cube.scale + mesh.resolution
        depth = int(rng.integers(1, max(1, min(max_depth, room)) + 1))
        depth = min(depth, room)
        n = 1 << depth
        coarse = rng.standard_normal((n,) * cube.dim)
        coarse -= coarse.mean()
        rep = 1 << (room - depth)
        fine = coarse
        for ax in range(cube.dim):
            fine = np.repeat(fine, rep, axis=ax)
        start, _ = mesh.aligned_range(cube.lower, cube.upper)
        f = GridFunction(mesh, fine, start)
        tv = max_axis_tv(f)
        if tv == 0:
            continue
        members.append(f * (1.0 / (tv * math.sqrt(cube.volume))))
    return FamilySpec(members, list(cubes))


@dataclass
class SlopeFit:
    points: list[tuple[float, float]]
    slope: float
    intercept: float
    residual: float

    def __post_init__(self):
        if len(self.points) < 3:
            raise DomainError("a slope fit needs at least 3 points")
        if not math.isfinite(self.slope):
            raise UnderflowError("non-finite slope")

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "residual": self.residual,
                "points": [list(p) for p in self.points]}


def fit_slope(etas: Sequence[float], values: Sequence[float]) -> SlopeFit:
    """Least-squares line through ``(log eta, log value)``."""
    etas = np.asarray(etas, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.any(values < 1e-13):
        raise UnderflowError(
            f"{int(np.sum(values < 1e-13))} of {values.size} measurements below 1e-13; "
            "the perturbation is invisible at this resolution")
    x, y = np.log(etas), np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return SlopeFit([(float(a), float(b)) for a, b in zip(x, y)], float(slope),
                    float(intercept), residual)


@dataclass
class SweepResult:
    scenario: str
    etas: list[float]
    ao_norms: list[float]
    fit: SlopeFit
    families: dict = field(default_factory=dict, repr=False)

    @property
    def c_meas(self) -> float:
        return max(a / math.sqrt(e) for e, a in zip(self.etas, self.ao_norms))


def build_scenario_family(scenario: str, eta: float, dim: int, mesh: Mesh, indices,
                          seed: int = 0, align: bool = True, kernel: MollifierSpec | None = None,
                          supersample: int = 1) -> FamilySpec:
    """The family whose AO norm is measured for one ``eta``."""
    if scenario in ("mollified", "mollified-box", "mollified-bump"):
        if kernel is None:
            kernel = MollifierSpec.bump() if scenario.endswith("bump") else MollifierSpec.box()
        usable = [ix for ix in indices
                  if kernel_resolved(kernel, dim, eta * ix.cube.sidelength, mesh.cell_size)]
        if not usable:
            raise UnderflowError(f"no cube resolves a kernel of radius {eta} l(Q)")
        phi = mollified_family(usable, mesh, kernel, eta)
        return haar_family(usable, mesh) - phi
    cubes = sorted({ix.cube for ix in indices}, reverse=True)
    perts = perturbation_generators(scenario, cubes, dim, eta, seed,
                                    mesh.resolution if align else None)
    return difference_family(indices, mesh, perts, supersample=supersample)


def sweep_eta(scenario: str, eta_list: Sequence[float], dim: int, resolution: int,
              min_scale: int, max_scale: int = 0, window=(-1.0, 2.0), seed: int = 0,
              align: bool = True, kernel: MollifierSpec | None = None, supersample: int = 1,
              keep_families: bool = False, measure: Callable | None = None) -> SweepResult:
    """AO norm of the scenario's difference family for each ``eta``, with a log-log fit."""
    etas = sorted(float(e) for e in eta_list)
    if len(etas) < 3 or etas[-1] / etas[0] < 4 * (1 - 1e-12):
        raise DomainError("a sweep needs at least 3 etas spanning 2 octaves")
    mesh = Mesh.default(dim, resolution, *window)
    indices = enumerate_window(dim, max_scale, min_scale)
    norms, families = [], {}
    for i, eta in enumerate(etas):
        fam = build_scenario_family(scenario, eta, dim, mesh, indices, seed, align,
                                    kernel, supersample)
        norms.append(measure(fam) if measure else bessel_bound(fam)[1])
        if keep_families:
            families[eta] = fam
    return SweepResult(scenario, etas, norms, fit_slope(etas, norms), families)
