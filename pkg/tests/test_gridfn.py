import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from haarstab.affine import AffinePerturbation
from haarstab.dyadic import DyadicCube, HaarIndex, enumerate_window, haar_eval
from haarstab.gridfn import (AlignmentError, GridFunction, Mesh, MollifierSpec, ResolutionError,
                             WindowOverflowError, axis_tv, box_indicator, from_haar, indicator,
                             inner_product, l2_norm, line_tv, load, max_axis_tv, mollified_haar,
                             mollify, perturb, sample, save)


def test_mesh_shape_and_alignment():
    m = Mesh.default(2, 4)
    assert m.shape == (48, 48)
    assert m.cell_size == 1 / 16
    with pytest.raises(AlignmentError):
        Mesh(1, 2, (0.1,), (1.0,))


def test_haar_matches_pointwise_evaluation():
    mesh = Mesh.default(2, 5)
    for ix in enumerate_window(2, 0, -3)[::7]:
        f = from_haar(ix, mesh)
        pts = np.stack([g.ravel() for g in np.meshgrid(*mesh.centers((0, 0), mesh.shape),
                                                        indexing="ij")], axis=1)
        assert np.array_equal(f.evaluate(pts), haar_eval(ix, pts))


def _overlap(lo1, hi1, lo2, hi2):
    return float(np.prod(np.clip(np.minimum(hi1, hi2) - np.maximum(lo1, lo2), 0, None)))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-16, 31), min_size=8, max_size=8))
def test_inner_product_against_interval_overlap(ends):
    mesh = Mesh.default(2, 4)
    a = np.sort(np.array(ends[:4]).reshape(2, 2), axis=1) / 16
    b = np.sort(np.array(ends[4:]).reshape(2, 2), axis=1) / 16
    a[:, 1] += 1 / 16
    b[:, 1] += 1 / 16
    f = box_indicator(mesh, a[:, 0], a[:, 1])
    g = box_indicator(mesh, b[:, 0], b[:, 1]) * 3.0
    exact = 3.0 * _overlap(a[:, 0], a[:, 1], b[:, 0], b[:, 1])
    assert math.isclose(inner_product(f, g), exact, abs_tol=1e-14)


def test_arithmetic_uses_box_union():
    mesh = Mesh.default(1, 3)
    f = box_indicator(mesh, [0.0], [0.25])
    g = box_indicator(mesh, [0.5], [1.0])
    s = f - g
    assert s.start == (8,) and s.data.shape == (8,)
    assert math.isclose(l2_norm(s) ** 2, 0.75)
    assert l2_norm((f + f) / 2 - f) == 0


def test_window_overflow():
    mesh = Mesh.default(1, 3)
    with pytest.raises(WindowOverflowError):
        box_indicator(mesh, [1.5], [2.5])
    f = indicator(DyadicCube(0, (1,)), mesh)
    p = AffinePerturbation(np.eye(1), [-0.5], 0.5)
    with pytest.raises(WindowOverflowError):
        perturb(f, DyadicCube(0, (1,)), p)


@settings(max_examples=40, deadline=None)
@given(shift=st.integers(-8, 8), scale=st.integers(-3, 0))
def test_aligned_translation_is_exact_shift(shift, scale):
    mesh = Mesh.default(1, 6)
    cube = DyadicCube(scale, (0,))
    ell = cube.sidelength
    y = shift / 64 / ell
    if abs(y) > 0.5:
        return
    f = indicator(cube, mesh)
    g = perturb(f, cube, AffinePerturbation(np.eye(1), [y], 0.5))
    # chi_Q(x + l y) is the indicator of Q - l y
    expected = box_indicator(mesh, [-shift / 64], [ell - shift / 64])
    assert l2_norm(g - expected) == 0


def test_supersample_agrees_on_aligned_maps():
    mesh = Mesh.default(2, 5)
    ix = HaarIndex(DyadicCube(-1, (0, 1)), 3)
    p = AffinePerturbation(np.eye(2), [0.125, -0.0625], 0.25)
    a = perturb(from_haar(ix, mesh), ix.cube, p)
    b = perturb(from_haar(ix, mesh), ix.cube, p, supersample=3)
    assert l2_norm(a - b) <= 1e-14


def test_mollify_preserves_mass_and_grows_box():
    mesh = Mesh.default(1, 6)
    f = box_indicator(mesh, [0.0], [0.5])
    for kernel in (MollifierSpec.box(), MollifierSpec.bump()):
        g = mollify(f, kernel, 3 / 64)
        assert math.isclose(g.integral(), f.integral(), rel_tol=1e-12)
        assert g.start == (f.start[0] - 3,) and g.data.shape == (38,)
    with pytest.raises(ResolutionError):
        mollify(f, MollifierSpec.box(), 1 / 128)
    with pytest.raises(ResolutionError):
        mollify(f, MollifierSpec.bump(), 1 / 64)


def test_table_kernel_matches_box(tmp_path):
    path = tmp_path / "k.csv"
    path.write_text("1,1,1,1,1\n")
    table = MollifierSpec.from_csv(path)
    assert np.allclose(table.weights(1, 0.25, 1 / 16), MollifierSpec.box().weights(1, 0.25, 1 / 16))


def test_mollified_haar_is_linear_rescale():
    mesh = Mesh.default(1, 8)
    ix = HaarIndex(DyadicCube(-2, (1,)), 1)
    a = mollified_haar(ix, mesh, MollifierSpec.bump(), 0.125)
    b = mollify(from_haar(ix, mesh), MollifierSpec.bump(), 0.125 * 0.25)
    assert l2_norm(a - b) <= 1e-14


def test_axis_tv_of_indicators():
    mesh = Mesh.default(2, 4)
    f = box_indicator(mesh, [0.0, 0.25], [0.5, 1.0])
    assert axis_tv(f, 0, [0.5]) == 2.0
    assert axis_tv(f, 1, [0.1]) == 2.0
    assert axis_tv(f, 1, [0.9]) == 0.0
    assert max_axis_tv(f * 3) == 6.0


def _exact_line_tv(f: GridFunction, v, y):
    # enumerate every crossing of the line with a mesh hyperplane, then
    # evaluate once inside each piece
    mesh = f.mesh
    h = mesh.cell_size
    ts = set()
    for a in range(f.dim):
        if v[a] == 0:
            continue
        for k in range(round(mesh.lo[a] / h), round(mesh.hi[a] / h) + 1):
            ts.add((k * h - y[a]) / v[a])
    ts = sorted(ts)
    mids = np.array([0.5 * (s + t) for s, t in zip(ts, ts[1:])])
    vals = np.concatenate([[0.0], f.evaluate(y + mids[:, None] * v), [0.0]])
    return float(np.abs(np.diff(vals)).sum())


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), slope=st.sampled_from([(1, 0.5), (0.5, 1), (1, -0.5), (1, 0)]))
def test_line_tv_against_crossing_oracle(seed, slope):
    mesh = Mesh(2, 3, (0.0, 0.0), (1.0, 1.0))
    h = mesh.cell_size
    rng = np.random.default_rng(seed)
    f = GridFunction(mesh, rng.integers(-3, 4, mesh.shape).astype(float))
    v = np.array(slope, dtype=float)
    # offsets keep every pair of crossings at least h/2 apart
    y = np.array([0.3 * h, 0.4 * h]) if v[0] == 1 else np.array([0.4 * h, 0.3 * h])
    if v[1] < 0:
        y = np.array([0.3 * h, 0.6 * h])
    assert math.isclose(line_tv(f, v, y), _exact_line_tv(f, v, y), abs_tol=1e-12)


def test_line_tv_step_limit():
    mesh = Mesh.default(1, 3)
    f = box_indicator(mesh, [0.0], [0.5])
    assert line_tv(f, [1.0], [0.01]) == 2.0
    with pytest.raises(Exception):
        line_tv(f, [1.0], [0.0], step=0.5)


@pytest.mark.parametrize("fmt", ["bin", "csv"])
def test_save_load_roundtrip(tmp_path, fmt):
    mesh = Mesh.default(2, 3)
    f = sample(lambda p: np.sin(7 * p[:, 0]) * p[:, 1], mesh, [0.0, 0.0], [1.0, 0.5])
    save(f, tmp_path / "f", fmt)
    g = load(tmp_path / "f")
    assert g.mesh == f.mesh and g.start == f.start
    assert np.array_equal(g.data, f.data)
