import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anisoframe.errors import InvalidInputError
from anisoframe.nodes import gap, generate, min_separation, split


def test_gap_integer_lattice():
    pts = np.arange(-4.0, 4.0)
    g, res = gap(pts, 8.0)
    assert abs(g - 0.5) <= 1e-12


def test_gap_single_node_antipodal():
    g, _ = gap(np.array([0.0]), 2.0)
    assert abs(g - 1.0) <= 1e-12


def test_gap_jittered_range():
    rng = np.random.default_rng(1)
    pts = np.arange(-8.0, 8.0) + rng.uniform(-0.2, 0.2, 16)
    g, _ = gap(pts, 16.0)
    assert 0.3 <= g <= 0.7
    # brute-force cross-check through sorted midpoints
    xs = np.sort(pts)
    brute = max(np.diff(np.concatenate([xs, [xs[0] + 16.0]]))) / 2
    assert abs(g - brute) <= 1e-12


def test_gap_empty_rejected():
    with pytest.raises(InvalidInputError):
        gap(np.array([]), 4.0)


def test_split_integer_lattice_is_single_layer():
    ns = split(np.arange(-4.0, 4.0), 8.0)
    assert ns.max_per_cube == 1
    layer = ns.layer(1)
    for k, row in layer.items():
        assert k[0] == int(np.floor(ns.points[row, 0]))


def test_split_three_in_one_cube():
    ns = split(np.array([0.0, 0.25, 0.5]), 2.0)
    assert ns.max_per_cube == 3
    assert sorted(ns.layer_index.tolist()) == [1, 2, 3]
    assert np.all(ns.cube_index == 0)


def test_split_control_bound(ref_nodes):
    # |lambda^s_k - k|_inf <= 1 for every layer entry
    dev = np.abs(ref_nodes.points - ref_nodes.cube_index)
    assert np.max(dev) <= 1.0


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(min_value=-3.999, max_value=3.999), min_size=1,
                max_size=40, unique=True))
def test_split_reassembles(points):
    pts = np.asarray(points)
    ns = split(pts, 8.0)
    rebuilt = []
    for s in range(1, ns.max_per_cube + 1):
        rebuilt.extend(ns.points[i, 0] for i in ns.layer(s).values())
    assert sorted(rebuilt) == pytest.approx(sorted(pts.tolist()))


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.floats(min_value=-3.999, max_value=3.999), min_size=2,
             max_size=20, unique=True),
    st.floats(min_value=-3.999, max_value=3.999),
)
def test_gap_monotone_under_addition(points, extra):
    pts = np.asarray(points)
    g1, _ = gap(pts, 8.0)
    g2, _ = gap(np.append(pts, extra), 8.0)
    assert g2 <= g1 + 1e-12


def test_generate_lattice():
    pts = generate("lattice", box=8.0, seed=0, d=1, spacing=1.0)
    assert pts.shape == (8, 1)
    assert np.allclose(np.sort(pts[:, 0]), np.arange(-4.0, 4.0))


def test_generate_deterministic():
    a = generate("jittered", box=8.0, seed=5, d=1, spacing=1.0, delta=0.2)
    b = generate("jittered", box=8.0, seed=5, d=1, spacing=1.0, delta=0.2)
    assert np.array_equal(a, b)


def test_generate_jittered_gap_bound():
    pts = generate("jittered", box=16.0, seed=3, d=1, spacing=1.0, delta=0.2)
    g, res = gap(pts, 16.0)
    assert g <= 0.5 + 0.2 + res + 1e-12


def test_generate_poisson_constraints():
    pts = generate("poisson-thinned", box=16.0, seed=2, d=1, r_min=0.3, r_max=0.8)
    assert min_separation(pts, 16.0) >= 0.3 - 1e-12
    g, res = gap(pts, 16.0)
    assert g <= 0.8 + res + 1e-9


def test_generate_invalid_params():
    with pytest.raises(InvalidInputError):
        generate("jittered", box=8.0, seed=0, d=1, spacing=1.0, delta=0.6)
    with pytest.raises(InvalidInputError):
        generate("poisson-thinned", box=8.0, seed=0, d=1, r_min=0.9, r_max=0.3)
    with pytest.raises(InvalidInputError):
        generate("nope", box=8.0, seed=0)


def test_split_2d():
    rng = np.random.default_rng(4)
    pts = rng.uniform(-4, 4, size=(60, 2))
    ns = split(pts, 8.0)
    assert ns.d == 2
    total = sum(len(ns.layer(s)) for s in range(1, ns.max_per_cube + 1))
    assert total == 60
