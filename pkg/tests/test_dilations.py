import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anisoframe.dilations import (
    AnisoCube,
    check_expansive,
    cube_volume_exact,
    matrix_power,
)
from anisoframe.errors import InvalidInputError, NotExpansiveError, ScaleRangeError


def test_scalar_accepted():
    d = check_expansive([[2.0]])
    assert d.eig_moduli == (2.0,)
    assert d.det_abs == 2.0


def test_unipotent_rejected():
    with pytest.raises(NotExpansiveError) as exc:
        check_expansive([[1.0, 1.0], [0.0, 1.0]])
    assert abs(exc.value.modulus - 1.0) < 1e-12


def test_rotation_like_accepted():
    d = check_expansive([[0.0, -2.0], [1.0, 0.0]])
    assert np.allclose(d.eig_moduli, np.sqrt(2.0))
    assert abs(d.det_abs - 2.0) < 1e-14


def test_det_is_product_of_moduli():
    d = check_expansive([[0.0, -2.0], [1.0, 0.0]])
    assert abs(np.prod(d.eig_moduli) - d.det_abs) < 1e-12


def test_invalid_inputs():
    with pytest.raises(InvalidInputError):
        check_expansive([[1.0, 2.0]])
    with pytest.raises(InvalidInputError):
        check_expansive([[np.nan]])
    with pytest.raises(InvalidInputError):
        check_expansive([[0.0, 0.0], [0.0, 0.0]])


def test_power_examples(dil):
    assert matrix_power(dil, 3)[0, 0] == 8.0
    assert matrix_power(dil, -1)[0, 0] == 0.5


def test_power_example_2d(dil2):
    assert np.allclose(matrix_power(dil2, 2), [[-2.0, 0.0], [0.0, -2.0]])


def test_power_identities(dil2):
    assert np.allclose(dil2.power(0), np.eye(2))
    for j in range(1, 13):
        prod = dil2.power(j) @ dil2.power(-j)
        assert np.max(np.abs(prod - np.eye(2))) < 1e-12


def test_scale_range(dil):
    with pytest.raises(ScaleRangeError):
        dil.power(17)


@settings(max_examples=30, deadline=None)
@given(
    j=st.integers(min_value=-4, max_value=4),
    k0=st.integers(min_value=-10, max_value=10),
    k1=st.integers(min_value=-10, max_value=10),
)
def test_volume_law_2d(j, k0, k1):
    d = check_expansive([[0.0, -2.0], [1.0, 0.0]])
    cube = AnisoCube(d, j, (k0, k1))
    assert abs(cube.volume - cube_volume_exact(d, j)) <= 1e-10 * cube.volume


def test_cubes_tile_fixed_scale(dil2, rng):
    # random points each land in exactly the cube floor(A^{-j} x)
    j = 2
    pts = rng.uniform(-4, 4, size=(64, 2))
    local = pts @ dil2.power(-j).T
    ks = np.floor(local).astype(int)
    for p, k in zip(pts, ks):
        cube = AnisoCube(dil2, j, tuple(k))
        assert cube.contains(p[None, :])[0]
        shifted = AnisoCube(dil2, j, (int(k[0]) + 1, int(k[1])))
        assert not shifted.contains(p[None, :])[0]
