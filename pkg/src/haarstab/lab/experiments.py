"""Config-driven experiments.

Each experiment produces a list of raw rows (written as CSV) and a summary
with named checks (written as JSON).  Everything random is drawn from
``numpy.random.SeedSequence(config.seed)`` children, one per trial, so the
same config always writes the same bytes.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..affine import AffinePerturbation, inf_norm, lu_factor
from ..dyadic import DomainError, DyadicCube, HaarIndex, enumerate_window
from ..frames import (FamilySpec, analyze, avg_square_function, frame_bounds_empirical,
                      gram_matrix, gram_summary, haar_family, power_iteration,
                      reconstruct_error, synthesize)
from ..gridfn import (GridFunction, Mesh, MollifierSpec, box_indicator, from_haar, l2_norm,
                      mollified_haar, perturb)
from .scenarios import (GENERATORS, build_scenario_family, fit_slope, kernel_resolved,
                        perturbation_generators, random_nbv0_family)

EXPERIMENTS = (
    "orthonormality", "lemma1-lu", "theorem1-mollify", "theorem3-nbv", "theorem4-diagonal",
    "theorem5-affine", "corollary3-reconstruct", "corollary5-sharpness", "corollary5-random",
)

SLOPE_BAND = (0.35, 0.65)
_SWEEP = tuple(math.ldexp(1.0, -m) for m in range(8, 2, -1))
DEFAULT_ETAS = {
    "lemma1-lu": (0.05, 0.25, 0.5),
    "theorem1-mollify": (1 / 16, 1 / 8),
    "corollary3-reconstruct": (math.ldexp(1.0, -6), math.ldexp(1.0, -4)),
}
DEFAULT_TRIALS = {"lemma1-lu": 1000, "theorem3-nbv": 200, "orthonormality": 20,
                  "corollary3-reconstruct": 20, "theorem1-mollify": 1000}
# experiments that place functions on the mesh
_GRID = set(EXPERIMENTS) - {"lemma1-lu"}


class ConfigError(ValueError):
    pass


def _is_dyadic(x: float) -> bool:
    return math.ldexp(x, 40).is_integer()


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    dim: int = 1
    resolution: int = 8
    n_min: int = -4
    n_max: int = 0
    eta_list: tuple = ()
    seed: int = 0
    kernel: str = "box"
    out: str = "results"
    align: bool = True
    window: tuple = (-1.0, 2.0)
    dims: tuple = ()
    trials: int | None = None
    scenario: str | None = None
    supersample: int = 1

    def __post_init__(self):
        def bad(name, msg):
            raise ConfigError(f"field '{name}': {msg}")

        if self.experiment not in EXPERIMENTS:
            bad("experiment", f"{self.experiment!r} is not one of {', '.join(EXPERIMENTS)}")
        for name in ("dim", "resolution", "n_min", "n_max", "seed", "supersample"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                bad(name, f"expected an integer, got {v!r}")
        if not 1 <= self.dim <= 6:
            bad("dim", f"{self.dim} outside 1..6")
        if not 1 <= self.resolution <= 14:
            bad("resolution", f"{self.resolution} outside 1..14")
        if self.n_min > self.n_max:
            bad("n_min", f"{self.n_min} is coarser than n_max={self.n_max}")
        if self.experiment in _GRID and self.n_min - 1 < -self.resolution:
            bad("n_min", f"Haar functions at scale {self.n_min} need resolution >= {1 - self.n_min}")
        if self.supersample < 1:
            bad("supersample", "must be >= 1")
        if self.trials is not None and (not isinstance(self.trials, int) or self.trials < 1):
            bad("trials", f"expected a positive integer, got {self.trials!r}")
        if not isinstance(self.align, bool):
            bad("align", f"expected true or false, got {self.align!r}")
        try:
            window = tuple(float(w) for w in self.window)
        except (TypeError, ValueError):
            bad("window", f"expected [lo, hi], got {self.window!r}")
        if len(window) != 2 or not window[0] < window[1]:
            bad("window", f"expected [lo, hi] with lo < hi, got {self.window!r}")
        object.__setattr__(self, "window", window)
        dims = tuple(self.dims)
        if any(isinstance(d, bool) or not isinstance(d, int) or not 1 <= d <= 6 for d in dims):
            bad("dims", f"entries must be integers in 1..6, got {self.dims!r}")
        object.__setattr__(self, "dims", dims)
        if self.scenario is not None and self.scenario not in GENERATORS:
            bad("scenario", f"{self.scenario!r} is not one of {', '.join(GENERATORS)}")
        if self.kernel not in ("box", "bump") and not Path(self.kernel).is_file():
            bad("kernel", f"{self.kernel!r} is neither 'box', 'bump' nor a CSV file")
        try:
            etas = tuple(float(e) for e in self.eta_list)
        except (TypeError, ValueError):
            bad("eta_list", f"expected a list of numbers, got {self.eta_list!r}")
        object.__setattr__(self, "eta_list", etas)
        for e in etas:
            if not 0 < e <= 0.5:
                bad("eta_list", f"eta={e} outside (0, 1/2]")
            if self.align and self.experiment in _GRID and not _is_dyadic(e):
                bad("eta_list", f"eta={e} is not dyadic; pass --no-align for arbitrary eta")
        if self.experiment == "theorem5-affine":
            cap = 1.0 / (20 * self.dim)
            over = [e for e in self.etas() if e > cap]
            if over:
                bad("eta_list", f"theorem5-affine needs eta <= 1/(20 d) = {cap}; got {over}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"field '{unknown[0]}': unknown field")
        if "experiment" not in data:
            raise ConfigError("field 'experiment': missing")
        data = dict(data)
        for name in ("eta_list", "window", "dims"):
            if name in data and isinstance(data[name], list):
                data[name] = tuple(data[name])
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(data)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["eta_list"] = list(self.eta_list)
        d["window"] = list(self.window)
        d["dims"] = list(self.dims)
        return d

    def etas(self) -> tuple:
        if self.eta_list:
            return tuple(sorted(self.eta_list))
        if self.experiment == "theorem5-affine":
            cap = 1.0 / (20 * self.dim)
            return tuple(e for e in _SWEEP if e <= cap)
        return DEFAULT_ETAS.get(self.experiment, _SWEEP)

    def n_trials(self) -> int:
        return self.trials if self.trials is not None else DEFAULT_TRIALS.get(self.experiment, 1)

    def dim_list(self) -> tuple:
        return self.dims or (self.dim,)

    def mesh(self, dim: int | None = None) -> Mesh:
        return Mesh.default(dim or self.dim, self.resolution, *self.window)

    def mollifier(self) -> MollifierSpec:
        if self.kernel == "box":
            return MollifierSpec.box()
        if self.kernel == "bump":
            return MollifierSpec.bump()
        return MollifierSpec.from_csv(self.kernel)


@dataclass
class Report:
    experiment: str
    columns: list[str]
    rows: list[dict]
    checks: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def check(self, name: str, value, limit: str, passed: bool):
        self.checks.append({"name": name, "value": value, "limit": limit, "passed": bool(passed)})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    @property
    def failing(self) -> list[str]:
        return [c["name"] for c in self.checks if not c["passed"]]

    def to_dict(self, config: ExperimentConfig | None = None) -> dict:
        out = {"experiment": self.experiment, "passed": self.passed, "failing": self.failing,
               "checks": self.checks, **self.summary}
        out.setdefault("c_meas", None)
        if config is not None:
            out["config"] = config.to_dict()
        return out


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, np.floating):
        return repr(float(v))
    return str(v)


def write_report(report: Report, config: ExperimentConfig) -> tuple[Path, Path]:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{report.experiment}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(report.columns)
        for row in report.rows:
            w.writerow([_fmt(row[c]) for c in report.columns])
    json_path = out / f"{report.experiment}.json"
    json_path.write_text(json.dumps(_plain(report.to_dict(config)), indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _streams(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _random_span_element(family: FamilySpec, rng) -> GridFunction:
    return synthesize(rng.standard_normal(len(family)), family)


# -- individual experiments --------------------------------------------------

def orthonormality(config: ExperimentConfig) -> Report:
    mesh = config.mesh()
    fam = haar_family(enumerate_window(config.dim, config.n_max, config.n_min), mesh)
    g = gram_matrix(fam).tocoo()
    off = np.abs(g.data[g.row != g.col])
    diag = gram_matrix(fam).diagonal()
    max_off = float(off.max(initial=0.0))
    max_diag = float(np.max(np.abs(diag - 1.0)))
    b, _, iters = power_iteration(gram_matrix(fam), seed=config.seed)
    rows = []
    for i, rng in enumerate(_streams(config.seed, config.n_trials())):
        f = _random_span_element(fam, rng)
        norm2 = l2_norm(f) ** 2
        c = analyze(f, fam)
        coeff2 = float(np.vdot(c, c).real)
        rows.append({"probe": i, "norm_sq": norm2, "coeff_sq": coeff2,
                     "rel_err": abs(coeff2 - norm2) / norm2})
    worst = max(r["rel_err"] for r in rows)
    rep = Report("orthonormality", ["probe", "norm_sq", "coeff_sq", "rel_err"], rows)
    rep.summary = {"members": len(fam), "max_offdiag": max_off, "max_diag_dev": max_diag,
                   "bessel_bound": b, "iterations": iters}
    rep.check("gram off-diagonal", max_off, "<= 1e-12", max_off <= 1e-12)
    rep.check("gram diagonal", max_diag, "<= 1e-12", max_diag <= 1e-12)
    rep.check("parseval", worst, "<= 1e-10", worst <= 1e-10)
    return rep


def lu_suite(config: ExperimentConfig) -> Report:
    dims = config.dims or (2, 3, 4, 5, 6)
    rows = []
    streams = iter(_streams(config.seed, len(dims) * len(config.etas())))
    for d in dims:
        eye = np.eye(d)
        for eta in config.etas():
            rng = next(streams)
            worst_rec = worst_dev = 0.0
            for _ in range(config.n_trials()):
                e = rng.uniform(-1.0, 1.0, (d, d))
                a = eye + e * (eta / inf_norm(e))
                lower, upper = lu_factor(a)
                worst_rec = max(worst_rec, inf_norm(lower @ upper - a))
                worst_dev = max(worst_dev, inf_norm(lower - eye), inf_norm(upper - eye))
            bound = eta / (1 - eta)
            rows.append({"dim": d, "eta": eta, "trials": config.n_trials(),
                         "max_recon_err": worst_rec, "max_factor_dev": worst_dev, "bound": bound,
                         "dev_over_bound": worst_dev / bound})
    rep = Report("lemma1-lu", ["dim", "eta", "trials", "max_recon_err", "max_factor_dev",
                               "bound", "dev_over_bound"], rows)
    rec = max(r["max_recon_err"] for r in rows)
    slack = max(r["max_factor_dev"] - r["bound"] for r in rows)
    rep.summary = {"c_meas": max(r["dev_over_bound"] for r in rows)}
    rep.check("lu reconstruction", rec, "<= 1e-12", rec <= 1e-12)
    rep.check("factor deviation", slack, "max(|L-I|,|U-I|) - eta/(1-eta) <= 1e-12", slack <= 1e-12)
    return rep


def _distance_to_jumps(index: HaarIndex, pts: np.ndarray) -> np.ndarray:
    # infinity-distance to the boundary of Q and to the midplanes of the Haar axes
    cube = index.cube
    lo, hi = cube.lower, cube.upper
    outside = np.maximum(np.maximum(lo - pts, pts - hi), 0.0)
    out_dist = outside.max(axis=1)
    in_dist = np.minimum(pts - lo, hi - pts).min(axis=1)
    inside = np.all((pts >= lo) & (pts <= hi), axis=1)
    dist = np.where(inside, in_dist, out_dist)
    mid = cube.center
    for i in index.haar_axes():
        others = np.delete(outside, i, axis=1)
        rest = others.max(axis=1) if others.shape[1] else np.zeros(len(pts))
        dist = np.minimum(dist, np.maximum(np.abs(pts[:, i] - mid[i]), rest))
    return dist


def _cell_points(f: GridFunction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mesh = f.mesh
    axes = mesh.centers(f.start, f.data.shape)
    grids = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([g.ravel() for g in grids], axis=1)
    half = 0.5 * mesh.cell_size
    return centers, centers - half, centers + half


def mollified_frame_report(dim: int, eta: float, kernel: MollifierSpec, mesh: Mesh,
                           indices=None, seed: int = 0, points: int = 1000) -> dict:
    """Support, equality radius, AO norm and self-similarity of the mollified Haar family."""
    if not 0 < eta < 0.5:
        raise DomainError(f"eta={eta} outside (0, 1/2)")
    if indices is None:
        indices = enumerate_window(dim, 0, 1 - mesh.resolution)
    usable = [ix for ix in indices
              if kernel_resolved(kernel, dim, eta * ix.cube.sidelength, mesh.cell_size)]
    if not usable:
        raise DomainError(f"no cube in the window resolves the kernel at eta={eta}")
    outside_cells = far_mismatch = 0
    radius = 0.0
    diffs, phis = [], {}
    for ix in usable:
        phi = mollified_haar(ix, mesh, kernel, eta)
        phis[ix] = phi
        h = from_haar(ix, mesh)
        ell = ix.cube.sidelength
        elo, ehi = ix.cube.expanded(1 + 2 * eta)
        centers, clo, chi = _cell_points(phi)
        inside = np.all((clo >= elo) & (chi <= ehi), axis=1)
        vals = phi.data.ravel()
        outside_cells += int(np.count_nonzero(vals[~inside]))
        diff = (phi - h).with_box(phi.start, phi.stop).ravel()
        tol = 1e-12 / math.sqrt(ix.cube.volume)
        bad = np.abs(diff) > tol
        if bad.any():
            dist = _distance_to_jumps(ix, centers[bad])
            radius = max(radius, float(dist.max()) / (eta * ell))
            far_mismatch += int(np.count_nonzero(dist > 2 * eta * ell))
        diffs.append(h - phi)
    summary = gram_summary(FamilySpec(diffs, usable), seed=seed)
    rng = np.random.default_rng(seed)
    unit_phi = {}
    worst = 0.0
    picks = rng.integers(len(usable), size=points)
    u = np.ldexp(np.floor(np.ldexp(rng.random((points, dim)), 20)), -20)
    for i, ix in zip(range(points), picks):
        ix = usable[ix]
        cube = ix.cube
        x = cube.lower + cube.sidelength * ((1 + 2 * eta) * u[i] - eta)
        x = np.ldexp(np.round(np.ldexp(x, 30)), -30)
        key = (cube.scale, ix.k)
        if key not in unit_phi:
            unit_mesh = Mesh.default(dim, mesh.resolution + cube.scale)
            unit_phi[key] = mollified_haar(HaarIndex(DyadicCube.unit(dim), ix.k), unit_mesh,
                                           kernel, eta)
        lhs = phis[ix].evaluate(x[None, :])[0]
        rescaled = np.ldexp(x, -cube.scale) - np.array(cube.corner, dtype=float)
        rhs = unit_phi[key].evaluate(rescaled[None, :])[0] * (1.0 / math.sqrt(cube.volume))
        worst = max(worst, abs(lhs - rhs))
    return {
        "eta": eta, "members": len(usable), "skipped": len(indices) - len(usable),
        "outside_cells": outside_cells, "equality_radius": radius,
        "far_mismatch_cells": far_mismatch, "ao_norm": summary.ao_norm,
        "bessel_bound": summary.bessel_bound, "schur_sq": summary.schur_sq,
        "self_similarity": worst, "points": points,
    }


def mollified_structure(config: ExperimentConfig) -> Report:
    mesh = config.mesh()
    kernel = config.mollifier()
    indices = enumerate_window(config.dim, config.n_max, config.n_min)
    rows = [mollified_frame_report(config.dim, eta, kernel, mesh, indices, config.seed,
                                   config.n_trials())
            for eta in config.etas()]
    for r in rows:
        r["c_eta"] = r["ao_norm"] / math.sqrt(r["eta"])
    cols = ["eta", "members", "skipped", "outside_cells", "equality_radius",
            "far_mismatch_cells", "ao_norm", "bessel_bound", "schur_sq", "self_similarity", "c_eta"]
    rep = Report("theorem1-mollify", cols, rows)
    rep.summary = {"c_meas": max(r["c_eta"] for r in rows),
                   "max_equality_radius": max(r["equality_radius"] for r in rows)}
    outside = sum(r["outside_cells"] for r in rows)
    far = sum(r["far_mismatch_cells"] for r in rows)
    ss = max(r["self_similarity"] for r in rows)
    rep.check("support in (1+2eta)Q", outside, "== 0 cells", outside == 0)
    rep.check("phi = h away from jumps", far, "== 0 cells beyond 2 eta l(Q)", far == 0)
    rep.check("self-similarity", ss, "== 0", ss == 0)
    dom = min(r["schur_sq"] - r["bessel_bound"] for r in rows)
    rep.check("schur dominance", dom, ">= -1e-10", dom >= -1e-10)
    etas = [r["eta"] for r in rows]
    if len(etas) >= 3 and etas[-1] / etas[0] >= 4:
        fit = fit_slope(etas, [r["ao_norm"] for r in rows])
        rep.summary["slope"] = fit.to_dict()
        rep.check("ao slope", fit.slope, f"in {list(SLOPE_BAND)}",
                  SLOPE_BAND[0] <= fit.slope <= SLOPE_BAND[1])
    return rep


def nbv_bessel(config: ExperimentConfig) -> Report:
    rows = []
    dims = config.dims or (config.dim,)
    for d in dims:
        mesh = config.mesh(d)
        cubes = sorted({ix.cube for ix in enumerate_window(d, config.n_max, config.n_min)},
                       reverse=True)
        bound = ((1 + 1 / math.sqrt(2)) * d) ** 2
        for t, rng in enumerate(_streams(config.seed + 7919 * d, config.n_trials())):
            fam = random_nbv0_family(cubes, mesh, rng)
            s = gram_summary(fam, seed=config.seed)
            rows.append({"dim": d, "trial": t, "members": len(fam),
                         "bessel_bound": s.bessel_bound, "schur_sq": s.schur_sq, "bound": bound,
                         "ratio": s.bessel_bound / bound})
    rep = Report("theorem3-nbv", ["dim", "trial", "members", "bessel_bound", "schur_sq",
                                  "bound", "ratio"], rows)
    worst = max(r["ratio"] for r in rows)
    dom = min(r["schur_sq"] - r["bessel_bound"] for r in rows)
    rep.summary = {"c_meas": max(r["bessel_bound"] for r in rows), "max_ratio": worst}
    rep.check("bessel bound", worst, "B / ((1+1/sqrt 2) d)^2 <= 1", worst <= 1)
    rep.check("schur dominance", dom, ">= -1e-10", dom >= -1e-10)
    return rep


def _eta_sweep(config: ExperimentConfig, name: str, scenario: str) -> Report:
    mesh = config.mesh()
    indices = enumerate_window(config.dim, config.n_max, config.n_min)
    kernel = config.mollifier() if scenario.startswith("mollified") else None
    rows = []
    for eta in config.etas():
        fam = build_scenario_family(scenario, eta, config.dim, mesh, indices, config.seed,
                                    config.align, kernel, config.supersample)
        s = gram_summary(fam, seed=config.seed)
        rows.append({"eta": eta, "members": len(fam), "bessel_bound": s.bessel_bound,
                     "ao_norm": s.ao_norm, "schur_sq": s.schur_sq,
                     "c_eta": s.ao_norm / math.sqrt(eta)})
    rep = Report(name, ["eta", "members", "bessel_bound", "ao_norm", "schur_sq", "c_eta"], rows)
    etas = [r["eta"] for r in rows]
    c_meas = max(r["c_eta"] for r in rows)
    rep.summary = {"scenario": scenario, "c_meas": c_meas}
    fit = fit_slope(etas, [r["ao_norm"] for r in rows])
    rep.summary["slope"] = fit.to_dict()
    rep.check("ao slope", fit.slope, f"in {list(SLOPE_BAND)}",
              SLOPE_BAND[0] <= fit.slope <= SLOPE_BAND[1])
    rep.check("c_meas finite", c_meas, "finite", math.isfinite(c_meas))
    dom = min(r["schur_sq"] - r["bessel_bound"] for r in rows)
    rep.check("schur dominance", dom, ">= -1e-10", dom >= -1e-10)
    return rep


def diagonal_sweep(config: ExperimentConfig) -> Report:
    return _eta_sweep(config, "theorem4-diagonal", config.scenario or "diagonal")


def affine_sweep(config: ExperimentConfig) -> Report:
    return _eta_sweep(config, "theorem5-affine", config.scenario or "general")


def perturbed_haar_family(indices, mesh: Mesh, perturbations: dict,
                          supersample: int = 1) -> FamilySpec:
    """Members ``h~_{(Q),k}(x) = h_{(Q),k}(x_Q + A (l(Q) y + x - x_Q))``."""
    return FamilySpec([perturb(from_haar(ix, mesh), ix.cube, perturbations[ix.cube], supersample)
                       for ix in indices], list(indices))


def reconstruction(config: ExperimentConfig) -> Report:
    mesh = config.mesh()
    indices = enumerate_window(config.dim, config.n_max, config.n_min)
    cubes = sorted({ix.cube for ix in indices}, reverse=True)
    haar = haar_family(indices, mesh)
    scenario = config.scenario or "general"
    align = config.resolution if config.align else None
    rows = []
    for eta in config.etas():
        fams = []
        for offset in (0, 1):
            perts = perturbation_generators(scenario, cubes, config.dim, eta,
                                            config.seed + offset, align)
            fams.append(perturbed_haar_family(indices, mesh, perts, config.supersample))
        analysis, synthesis = fams
        sa = gram_summary(haar - analysis, seed=config.seed)
        ss = gram_summary(haar - synthesis, seed=config.seed)
        delta = max(sa.ao_norm, ss.ao_norm)
        lo_b, hi_b = (1 - delta) ** 2 - 0.02, (1 + delta) ** 2 + 0.02
        err_b = delta * (2 + delta) + 0.02
        for i, rng in enumerate(_streams(config.seed + 1, config.n_trials())):
            f = _random_span_element(haar, rng)
            a_lo, _ = frame_bounds_empirical(analysis, [f])
            s_lo, _ = frame_bounds_empirical(synthesis, [f])
            _, rel = reconstruct_error(f, analysis, synthesis)
            rows.append({"eta": eta, "probe": i, "delta": delta, "analysis_ratio": a_lo,
                         "synthesis_ratio": s_lo, "lower": lo_b, "upper": hi_b,
                         "rel_error": rel, "error_bound": err_b,
                         "schur_margin": min(sa.schur_sq - sa.bessel_bound,
                                             ss.schur_sq - ss.bessel_bound)})
    cols = ["eta", "probe", "delta", "analysis_ratio", "synthesis_ratio", "lower", "upper",
            "rel_error", "error_bound", "schur_margin"]
    rep = Report("corollary3-reconstruct", cols, rows)
    in_band = all(r["lower"] <= min(r["analysis_ratio"], r["synthesis_ratio"])
                  and max(r["analysis_ratio"], r["synthesis_ratio"]) <= r["upper"] for r in rows)
    err_gap = max(r["rel_error"] - r["error_bound"] for r in rows)
    deltas = sorted({(r["eta"], r["delta"]) for r in rows})
    rep.summary = {"deltas": {repr(e): d for e, d in deltas},
                   "c_meas": max(d / math.sqrt(e) for e, d in deltas)}
    rep.check("frame bounds", in_band, "ratios within [(1-delta)^2-0.02, (1+delta)^2+0.02]",
              in_band)
    rep.check("reconstruction", err_gap, "rel_error - (delta(2+delta)+0.02) <= 0", err_gap <= 0)
    dom = min(r["schur_margin"] for r in rows)
    rep.check("schur dominance", dom, ">= -1e-10", dom >= -1e-10)
    return rep


def sharpness_configuration(eta: float, mesh: Mesh) -> tuple[GridFunction, dict]:
    """``g = chi_[0, eta)`` and ``[0,1)* = [0,1) + eta``, every other cube fixed."""
    g = box_indicator(mesh, [0.0], [eta])
    p = AffinePerturbation(np.eye(1), np.array([-eta]), eta)
    return g, {DyadicCube.unit(1): p}


def sharpness(config: ExperimentConfig) -> Report:
    if config.dim != 1:
        raise ConfigError("field 'dim': corollary5-sharpness is one-dimensional")
    mesh = config.mesh(1)
    cubes = sorted({ix.cube for ix in enumerate_window(1, config.n_max, config.n_min)},
                   reverse=True)
    unit = DyadicCube.unit(1)
    if unit not in cubes:
        cubes.insert(0, unit)
    rows = []
    for eta in config.etas():
        g, perts = sharpness_configuration(eta, mesh)
        value = avg_square_function(g, perts, cubes)
        gn = l2_norm(g)
        rows.append({"eta": eta, "value": value, "g_norm": gn,
                     "ratio": value / (math.sqrt(eta) * gn)})
    rep = Report("corollary5-sharpness", ["eta", "value", "g_norm", "ratio"], rows)
    dev = max(abs(r["ratio"] - 1) for r in rows)
    rep.summary = {"c_meas": max(r["ratio"] for r in rows)}
    rep.check("ratio", dev, "|ratio - 1| <= 1e-12", dev <= 1e-12)
    return rep


def random_averages(config: ExperimentConfig) -> Report:
    mesh = config.mesh()
    d = config.dim
    cubes = sorted({ix.cube for ix in enumerate_window(d, config.n_max, config.n_min)},
                   reverse=True)
    rng = np.random.default_rng(config.seed)
    start, stop = mesh.aligned_range(np.zeros(d), np.ones(d))
    g = GridFunction(mesh, rng.standard_normal(tuple(b - a for a, b in zip(start, stop))), start)
    gn = l2_norm(g)
    align = config.resolution if config.align else None
    scenario = config.scenario or "translation"
    rows = []
    for eta in config.etas():
        perts = perturbation_generators(scenario, cubes, d, eta, config.seed, align)
        value = avg_square_function(g, perts, cubes, config.supersample)
        rows.append({"eta": eta, "value": value, "g_norm": gn,
                     "c_eta": value / (math.sqrt(eta) * gn)})
    rep = Report("corollary5-random", ["eta", "value", "g_norm", "c_eta"], rows)
    fit = fit_slope([r["eta"] for r in rows], [r["value"] for r in rows])
    rep.summary = {"scenario": scenario, "slope": fit.to_dict(),
                   "c_meas": max(r["c_eta"] for r in rows)}
    rep.check("slope", fit.slope, f">= {SLOPE_BAND[0]}", fit.slope >= SLOPE_BAND[0])
    return rep


RUNNERS = {
    "orthonormality": orthonormality,
    "lemma1-lu": lu_suite,
    "theorem1-mollify": mollified_structure,
    "theorem3-nbv": nbv_bessel,
    "theorem4-diagonal": diagonal_sweep,
    "theorem5-affine": affine_sweep,
    "corollary3-reconstruct": reconstruction,
    "corollary5-sharpness": sharpness,
    "corollary5-random": random_averages,
}


def execute(config: ExperimentConfig) -> Report:
    """Run without writing files."""
    return RUNNERS[config.experiment](config)


def run(config: ExperimentConfig) -> Report:
    """Run and write ``<out>/<experiment>.csv`` and ``<out>/<experiment>.json``."""
    report = execute(config)
    write_report(report, config)
    return report
