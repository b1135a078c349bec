import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from haarstab.dyadic import (DomainError, DyadicCube, HaarIndex, enumerate_window, haar_eval,
                             self_similarity_check, window_count)


def test_cube_geometry_is_exact():
    q = DyadicCube(-3, (5, -2))
    assert q.sidelength == 0.125
    assert q.volume == 0.125 ** 2
    assert list(q.lower) == [0.625, -0.25]
    assert list(q.upper) == [0.75, -0.125]
    assert list(q.center) == [0.6875, -0.1875]
    assert q.interval(1) == (-0.25, -0.125)


def test_children_partition_parent():
    q = DyadicCube(0, (1, 0))
    kids = q.children()
    assert len(kids) == 4
    assert kids == sorted(kids, key=lambda c: c.corner)
    assert all(k.parent() == q and q.contains(k) for k in kids)
    assert sum(k.volume for k in kids) == q.volume
    assert all(a.disjoint(b) for a in kids for b in kids if a != b)


def test_contains_and_descendants():
    q = DyadicCube(1, (-1,))
    assert q.contains(DyadicCube(-2, (-8,)))
    assert not q.contains(DyadicCube(-2, (0,)))
    assert len(q.descendants(-1)) == 4
    with pytest.raises(DomainError):
        q.descendants(2)


def test_haar_type_validated():
    with pytest.raises(DomainError):
        HaarIndex(DyadicCube.unit(2), 0)
    with pytest.raises(DomainError):
        HaarIndex(DyadicCube.unit(2), 4)
    assert HaarIndex(DyadicCube.unit(3), 5).haar_axes() == (0, 2)


def test_haar_values_one_dimension():
    ix = HaarIndex(DyadicCube(-2, (1,)), 1)
    x = np.array([[0.25], [0.3], [0.4], [0.49], [0.5], [0.2]])
    assert list(haar_eval(ix, x)) == [2.0, 2.0, -2.0, -2.0, 0.0, 0.0]
    assert list(haar_eval(ix, x, normalized=False)) == [1.0, 1.0, -1.0, -1.0, 0.0, 0.0]
    assert haar_eval(ix, [0.26]) == 2.0


def test_haar_tensor_legs():
    ix = HaarIndex(DyadicCube.unit(2), 1)   # Haar in x, indicator in y
    pts = np.array([[0.1, 0.9], [0.9, 0.1], [0.1, 1.0]])
    assert list(haar_eval(ix, pts)) == [1.0, -1.0, 0.0]


def _exact_inner_1d(a: HaarIndex, b: HaarIndex) -> float:
    # integrate the product piece by piece between all breakpoints
    brk = set()
    for ix in (a, b):
        lo, hi = ix.cube.interval(0)
        brk |= {lo, hi, 0.5 * (lo + hi)}
    brk = sorted(brk)
    total = 0.0
    for u, v in zip(brk, brk[1:]):
        m = np.array([[0.5 * (u + v)]])
        total += haar_eval(a, m)[0] * haar_eval(b, m)[0] * (v - u)
    return total


def test_orthonormal_against_piecewise_oracle():
    ixs = enumerate_window(1, 0, -3)
    g = np.array([[_exact_inner_1d(a, b) for b in ixs] for a in ixs])
    assert np.max(np.abs(g - np.eye(len(ixs)))) <= 1e-15


def test_enumerate_window_order_and_count():
    ixs = enumerate_window(2, 0, -2)
    assert len(ixs) == window_count(2, 0, -2) == 3 * (1 + 4 + 16)
    scales = [ix.cube.scale for ix in ixs]
    assert scales == sorted(scales, reverse=True)
    assert len(set(ixs)) == len(ixs)
    with pytest.raises(DomainError):
        enumerate_window(1, -2, 0)
    with pytest.raises(DomainError):
        enumerate_window(1, 0, -1, region=DyadicCube(1, (0,)))


@settings(max_examples=60, deadline=None)
@given(scale=st.integers(-6, 4), corner=st.lists(st.integers(-20, 20), min_size=1, max_size=3),
       k=st.integers(1, 7), seed=st.integers(0, 2 ** 16))
def test_self_similarity_exact(scale, corner, k, seed):
    d = len(corner)
    k = (k % ((1 << d) - 1)) + 1
    ix = HaarIndex(DyadicCube(scale, tuple(corner)), k)
    rng = np.random.default_rng(seed)
    # dyadic points, so that rescaling is exact
    u = np.ldexp(np.floor(np.ldexp(rng.random((50, d)) * 1.4 - 0.2, 24)), -24)
    pts = ix.cube.lower + ix.cube.sidelength * u
    assert self_similarity_check(ix, pts) == 0.0


@given(st.integers(-10, 10), st.integers(1, 4))
def test_volume_is_power_of_two(scale, d):
    q = DyadicCube(scale, (0,) * d)
    assert q.volume == math.ldexp(1.0, scale * d)
