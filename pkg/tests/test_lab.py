import json
import math

import numpy as np
import pytest

from haarstab.dyadic import DyadicCube, enumerate_window
from haarstab.gridfn import Mesh, MollifierSpec, max_axis_tv
from haarstab.lab.cli import main
from haarstab.lab.experiments import ConfigError, ExperimentConfig, execute, mollified_frame_report
from haarstab.lab.scenarios import (UnderflowError, fit_slope, perturbation_generators,
                                    random_nbv0_family, sweep_eta)

CUBES2 = enumerate_window(2, 0, -2)[::3]


def test_identity_generator():
    perts = perturbation_generators("identity", [c.cube for c in CUBES2], 2, 0.1)
    assert all(p.is_identity() for p in perts.values())


def test_diagonal_generator_has_no_off_diagonal():
    perts = perturbation_generators("diagonal", [c.cube for c in CUBES2], 2, 0.1, seed=4)
    for p in perts.values():
        assert p.matrix[0, 1] == p.matrix[1, 0] == 0
        assert p.size <= 0.1 + 1e-12


def test_general_generator_uses_whole_budget():
    perts = perturbation_generators("general", [c.cube for c in CUBES2], 2, 0.05, seed=1)
    for p in perts.values():
        assert abs(p.size - 0.05) <= 1e-12


def test_shear_generator():
    perts = perturbation_generators("shear", [c.cube for c in CUBES2], 2, 0.0625, seed=2)
    for p in perts.values():
        off = p.matrix - np.eye(2)
        assert np.count_nonzero(off) == 1 and abs(off).max() == 0.0625
        assert not p.translation.any()


def test_aligned_translations_are_on_the_mesh():
    cubes = [c.cube for c in enumerate_window(1, 0, -4)]
    perts = perturbation_generators("translation", cubes, 1, 0.125, seed=3, align=8)
    for cube, p in perts.items():
        shift = cube.sidelength * p.translation[0] * 256
        assert shift == round(shift)


def test_identity_sweep_underflows():
    with pytest.raises(UnderflowError):
        sweep_eta("identity", [2.0 ** -m for m in range(8, 2, -1)], 1, 6, -3)


def test_sweep_needs_two_octaves():
    with pytest.raises(Exception):
        sweep_eta("translation", [0.1, 0.12, 0.15], 1, 6, -3)


def test_fit_slope_on_power_law():
    etas = [2.0 ** -m for m in range(8, 2, -1)]
    fit = fit_slope(etas, [3 * e ** 0.5 for e in etas])
    assert math.isclose(fit.slope, 0.5) and math.isclose(fit.intercept, math.log(3))
    assert fit.residual < 1e-12


def test_adversarial_and_dilation_sweeps():
    etas = [2.0 ** -m for m in range(8, 2, -1)]
    adv = sweep_eta("adversarial-1d", etas, 1, 8, -6)
    assert 0.35 <= adv.fit.slope <= 0.65
    dil = sweep_eta("diagonal", etas, 1, 8, -6)
    assert all(a <= dil.c_meas * math.sqrt(e) * (1 + 1e-12) for e, a in zip(dil.etas, dil.ao_norms))


def test_nbv0_members_are_normalized():
    mesh = Mesh.default(2, 5)
    cubes = [DyadicCube(0, (0, 0))] + DyadicCube(0, (0, 0)).descendants(-1)
    fam = random_nbv0_family(cubes, mesh, np.random.default_rng(0))
    for f, cube in zip(fam.members, fam.labels):
        assert abs(f.integral()) <= 1e-12
        assert math.isclose(max_axis_tv(f) * math.sqrt(cube.volume), 1.0, rel_tol=1e-12)
        lo, hi = f.support_box()
        assert np.all(lo >= cube.lower) and np.all(hi <= cube.upper)


def test_mollified_report_box_eighth():
    mesh = Mesh.default(1, 8)
    r = mollified_frame_report(1, 0.125, MollifierSpec.box(), mesh,
                               enumerate_window(1, 0, -3), points=200)
    assert r["outside_cells"] == 0 and r["far_mismatch_cells"] == 0
    assert r["self_similarity"] == 0 and r["equality_radius"] <= 1
    assert r["schur_sq"] >= r["bessel_bound"] - 1e-10


def test_small_eta_gives_small_ao_norm():
    mesh = Mesh.default(1, 10)
    ixs = enumerate_window(1, 0, -2)
    small = mollified_frame_report(1, 2.0 ** -9, MollifierSpec.box(), mesh, ixs, points=50)
    large = mollified_frame_report(1, 2.0 ** -3, MollifierSpec.box(), mesh, ixs, points=50)
    assert small["ao_norm"] < 0.2 * large["ao_norm"]


def test_config_validation():
    with pytest.raises(ConfigError, match="experiment"):
        ExperimentConfig("nope")
    with pytest.raises(ConfigError, match="eta_list"):
        ExperimentConfig("theorem5-affine", dim=2, eta_list=(0.125, 0.0625, 0.03125))
    with pytest.raises(ConfigError, match="eta_list"):
        ExperimentConfig("theorem4-diagonal", eta_list=(0.1, 0.05, 0.01))
    ExperimentConfig("theorem4-diagonal", eta_list=(0.1, 0.05, 0.01), align=False)
    with pytest.raises(ConfigError, match="'bogus'"):
        ExperimentConfig.from_dict({"experiment": "orthonormality", "bogus": 1})
    with pytest.raises(ConfigError, match="n_min"):
        ExperimentConfig("orthonormality", resolution=3, n_min=-3)


def test_affine_default_etas_respect_cap():
    cfg = ExperimentConfig("theorem5-affine", dim=2)
    assert max(cfg.etas()) <= 1 / 40 and len(cfg.etas()) == 3


def _write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(p)


def test_cli_pass_and_outputs(tmp_path):
    cfg = _write(tmp_path, {"experiment": "orthonormality", "dim": 1, "resolution": 6})
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    summary = json.loads((out / "orthonormality.json").read_text())
    assert summary["passed"] and summary["max_offdiag"] <= 1e-15
    assert math.isclose(summary["bessel_bound"], 1.0, rel_tol=1e-9)
    assert "c_meas" in summary
    assert (out / "orthonormality.csv").read_text().startswith("probe,norm_sq")


def test_cli_sharpness_rows_are_one(tmp_path):
    out = tmp_path / "o"
    code = main(["run", "--experiment", "corollary5-sharpness", "--resolution", "8",
                 "--out", str(out)] + [a for m in range(3, 9) for a in ("--eta", str(2.0 ** -m))])
    assert code == 0
    rows = (out / "corollary5-sharpness.csv").read_text().splitlines()[1:]
    assert len(rows) == 6 and all(abs(float(r.split(",")[3]) - 1) <= 1e-12 for r in rows)


def test_cli_is_deterministic(tmp_path):
    cfg = _write(tmp_path, {"experiment": "theorem3-nbv", "dims": [1, 2], "resolution": 5,
                            "n_min": -2, "trials": 5, "seed": 11})
    main(["run", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["run", "--config", cfg, "--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "theorem3-nbv.csv").read_bytes()
    assert a == (tmp_path / "b" / "theorem3-nbv.csv").read_bytes()


def test_cli_config_errors(tmp_path, capsys):
    bad_json = _write(tmp_path, '{"experiment": "orthonormality",\n "dim": }')
    assert main(["run", "--config", bad_json]) == 2
    assert "line 2" in capsys.readouterr().err
    bad_field = _write(tmp_path, {"experiment": "orthonormality", "dim": "two"}, "b.json")
    assert main(["run", "--config", bad_field]) == 2
    assert "field 'dim'" in capsys.readouterr().err
    assert main(["run", "--experiment", "theorem5-affine", "--dim", "2", "--eta", "0.125",
                 "--eta", "0.0625", "--eta", "0.03125"]) == 2


def test_cli_failure_exit_code(tmp_path, capsys):
    # at J=5 the perturbations at eta <= 2^-6 fall below one cell, so the fit fails
    code = main(["run", "--experiment", "theorem4-diagonal", "--dim", "1", "--resolution", "5",
                 "--out", str(tmp_path)])
    assert code == 1
    assert "failing" in capsys.readouterr().err


def test_every_experiment_runs_small():
    small = {
        "orthonormality": dict(resolution=4, n_min=-2),
        "lemma1-lu": dict(dims=(2, 3), trials=10),
        "theorem1-mollify": dict(resolution=6, n_min=-2, trials=20),
        "theorem3-nbv": dict(resolution=4, n_min=-2, trials=3),
        "theorem4-diagonal": dict(resolution=10, n_min=-4),
        "theorem5-affine": dict(resolution=12, n_min=-4),
        "corollary3-reconstruct": dict(resolution=6, n_min=-3, trials=3),
        "corollary5-sharpness": dict(resolution=8, n_min=-2),
        "corollary5-random": dict(resolution=12, n_min=-4, window=(-0.5, 1.5)),
    }
    for name, kw in small.items():
        r = execute(ExperimentConfig(name, **kw))
        assert r.rows and r.checks, name
        assert r.passed, (name, r.failing)


def test_cli_affine_two_dimensions(tmp_path):
    cfg = _write(tmp_path, {"experiment": "theorem5-affine", "dim": 2, "resolution": 10,
                            "n_min": -2, "window": [-0.5, 1.5]})
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "theorem5-affine.json").read_text())
    assert 0.35 <= summary["slope"]["slope"] <= 0.65
    assert math.isfinite(summary["c_meas"])
