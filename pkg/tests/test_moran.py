import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from moranlif import lattice_queen, lattice_rook, moran_i, row_standardize, spatial_lag, standardize
from moranlif.errors import DimensionMismatch, ZeroVariance
from moranlif.weights import SpatialWeights

from conftest import checkerboard

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_standardize_hand_values():
    obs = standardize([1, 2, 3])
    r = np.sqrt(1.5)
    np.testing.assert_allclose(obs.standardized, [-r, 0.0, r], atol=1e-15)
    assert obs.sigma == pytest.approx(1.0, abs=1e-15)


def test_constant_vector_rejected():
    with pytest.raises(ZeroVariance):
        standardize([5, 5, 5])


def test_too_short():
    with pytest.raises(DimensionMismatch):
        standardize([1.0])


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(2, 60), elements=finite))
def test_standardize_invariants_and_fixed_point(raw):
    if np.ptp(raw) < 1e-3:
        return
    z = standardize(raw).standardized
    assert abs(z.mean()) < 1e-10
    assert abs(np.mean(z * z) - 1) < 1e-10
    np.testing.assert_allclose(standardize(z).standardized, z, atol=1e-12)


def test_checkerboard_lag_and_moran():
    w = row_standardize(lattice_rook(4, 4))
    z = standardize(checkerboard(4, 4))
    np.testing.assert_allclose(spatial_lag(z, w), -z.standardized, atol=1e-15)
    assert moran_i(z, w) == pytest.approx(-1.0, abs=1e-12)


def test_island_lag_is_zero():
    w = row_standardize(SpatialWeights.from_neighbors([[1], [0, 3], [], [1]]))
    lag = spatial_lag(standardize([1.0, 4.0, 2.0, 7.0]), w)
    assert lag[2] == 0.0


def test_island_counts_in_denominator_only():
    w = row_standardize(SpatialWeights.from_neighbors([[1], [0], []]))
    z = standardize([1.0, 2.0, 6.0]).standardized
    expected = (z[0] * z[1] + z[1] * z[0]) / np.dot(z, z)
    assert moran_i(z, w) == pytest.approx(expected, abs=1e-15)


def test_lag_matches_dense_on_torus(rng):
    w = row_standardize(lattice_rook(3, 3, torus=True))
    z = standardize(rng.standard_normal(9))
    np.testing.assert_allclose(spatial_lag(z, w), w.todense() @ z.standardized, atol=1e-15)


@pytest.mark.parametrize("shape,torus,queen", [((8, 8), True, False), ((20, 20), False, False),
                                               ((20, 20), False, True), ((13, 7), True, True)])
def test_sparse_matches_dense_quadratic_form(rng, shape, torus, queen):
    build = lattice_queen if queen else lattice_rook
    w = row_standardize(build(*shape, torus=torus))
    z = standardize(rng.standard_normal(w.n)).standardized
    dense = z @ w.todense() @ z / (z @ z)
    mc = moran_i(z, w)
    assert mc == pytest.approx(dense, abs=1e-12)
    assert -1.5 <= mc <= 1.5


@settings(max_examples=60, deadline=None)
@given(st.floats(-1e3, 1e3).filter(lambda a: abs(a) > 1e-3), st.floats(-1e3, 1e3), st.integers(0, 2**32 - 1))
def test_scale_shift_invariance(a, b, seed):
    w = row_standardize(lattice_queen(5, 6))
    raw = np.random.default_rng(seed).standard_normal(w.n)
    assert moran_i(standardize(a * raw + b), w) == pytest.approx(moran_i(standardize(raw), w), abs=1e-12)


def test_dimension_mismatch():
    w = row_standardize(lattice_rook(3, 3))
    with pytest.raises(DimensionMismatch):
        moran_i(standardize(np.arange(8.0)), w)
    with pytest.raises(DimensionMismatch):
        spatial_lag(np.arange(8.0), w)


def test_checkerboard_fast():
    w = row_standardize(lattice_rook(4, 4))
    z = standardize(checkerboard(4, 4))
    moran_i(z, w)
    t0 = time.perf_counter()
    moran_i(z, w)
    assert time.perf_counter() - t0 < 1e-3
