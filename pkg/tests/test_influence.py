import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from moranlif import _kernels_py
from moranlif import (
    contaminate_exact,
    contaminated_moran_closed,
    influence_at,
    influence_curve,
    influence_surface,
    lag_sums,
    lattice_queen,
    lattice_rook,
    lif_at,
    lif_map,
    moran_i,
    row_standardize,
    standardize,
)
from moranlif.errors import EmptyRange, IndexOutOfRange
from moranlif.influence import arctan_form, exact_coefficients, influence_value, lif_value
from moranlif.weights import SpatialWeights

from conftest import compiled_kernels, zero_site_field


def trapezoid_lif(f, h=2.0, points=10**6 + 1):
    x = np.linspace(-h, h, points)
    y = np.abs(f(x))
    return float(np.sum((y[1:] + y[:-1]) * 0.5 * np.diff(x)))


def analytic_lif(n, s, mc, h=2.0, form="difference"):
    """Closed antiderivative of the rational I_c, split at its roots."""
    a = (n - 1) / n
    c = 1 + (n - 1) * mc if form == "difference" else mc + 1

    def F(x):
        return (2 * n * s * np.log(a * x * x + n) / (2 * a)
                - c * (x / a - (n / a) * np.arctan(x * np.sqrt(a / n)) / np.sqrt(a * n)))

    cuts = [-h, h, 0.0] + ([2 * n * s / c] if c != 0 else [])
    edges = sorted(x for x in set(cuts) if -h <= x <= h)
    return sum(abs(F(b) - F(a_)) for a_, b in zip(edges[:-1], edges[1:]))


@pytest.fixture
def torus_zero_site(rng):
    w = row_standardize(lattice_rook(4, 4, torus=True))
    z = zero_site_field(rng, 16, 5)
    return z, w


def test_exact_noop(rng):
    w = row_standardize(lattice_queen(5, 5))
    z = standardize(rng.standard_normal(25))
    for loc in (0, 7, 24):
        assert contaminate_exact(z, w, loc, z.standardized[loc]) == pytest.approx(moran_i(z, w), abs=1e-12)


def test_exact_zero_at_zero_site(torus_zero_site):
    z, w = torus_zero_site
    assert contaminate_exact(z, w, 5, 0.0) == pytest.approx(moran_i(z, w), abs=1e-15)
    assert contaminated_moran_closed(z, w, 5, 0.0) == pytest.approx(moran_i(z, w), abs=1e-12)


def test_closed_matches_exact_on_torus(torus_zero_site):
    z, w = torus_zero_site
    assert contaminated_moran_closed(z, w, 5, 2.0) == pytest.approx(contaminate_exact(z, w, 5, 2.0), abs=1e-10)
    for z1 in np.linspace(-4, 4, 33):
        assert contaminated_moran_closed(z, w, 5, z1) == pytest.approx(contaminate_exact(z, w, 5, z1), abs=1e-10)


def test_closed_deviates_on_open_lattice(rng, capsys):
    w = row_standardize(lattice_rook(6, 6))
    dev = 0.0
    for site in (0, 3, 14):
        z = zero_site_field(rng, 36, site)
        for z1 in (-2.0, 1.0, 3.0):
            dev = max(dev, abs(contaminated_moran_closed(z, w, site, z1) - contaminate_exact(z, w, site, z1)))
    print(f"open 6x6 rook: max |closed - exact| = {dev:.3e}")
    assert np.isfinite(dev)


def test_index_checks(torus_zero_site):
    z, w = torus_zero_site
    for f in (contaminate_exact, contaminated_moran_closed, influence_at):
        with pytest.raises(IndexOutOfRange):
            f(z, w, 16, 1.0)
        with pytest.raises(IndexOutOfRange):
            f(z, w, -1, 1.0)
    with pytest.raises(IndexOutOfRange):
        lif_at(z, w, 99)


def test_influence_zero_at_origin(rng):
    w = row_standardize(lattice_rook(5, 5))
    z = standardize(rng.standard_normal(25))
    for loc in range(25):
        assert influence_at(z, w, loc, 0.0) == 0.0
        assert influence_at(z, w, loc, 0.0, form="simplified") == 0.0


def test_influence_is_scaled_difference(rng):
    w = row_standardize(lattice_rook(6, 6, torus=True))
    for site in (0, 9, 35):
        z = zero_site_field(rng, 36, site)
        mc = moran_i(z, w)
        for z1 in np.linspace(-4, 4, 17):
            expected = 36 * (contaminated_moran_closed(z, w, site, z1) - mc)
            assert influence_at(z, w, site, z1) == pytest.approx(expected, abs=1e-10)


def test_simplified_form_gap_is_structural(rng):
    # simplified - difference = z1^2 (n - 2) MC / D
    n, s = 50, 0.4
    z1 = np.linspace(-3, 3, 13)
    for mc in (-0.5, 0.0, 0.3):
        gap = influence_value(z1, n, s, mc, "simplified") - influence_value(z1, n, s, mc, "difference")
        np.testing.assert_allclose(gap, z1**2 * (n - 2) * mc / ((n - 1) / n * z1**2 + n), atol=1e-12)


def test_slope_at_origin(rng):
    w = row_standardize(lattice_queen(6, 7))
    z = standardize(rng.standard_normal(42))
    s = lag_sums(z, w)
    h = 1e-5
    for loc in (0, 10, 41):
        slope = (influence_at(z, w, loc, h) - influence_at(z, w, loc, -h)) / (2 * h)
        assert slope == pytest.approx(2 * s[loc], abs=1e-6)


@pytest.mark.parametrize("n,mc", [(100, 0.3), (25, -0.4), (400, 0.0)])
def test_asymptotes(n, mc):
    # difference: I_c -> n * (-1/(n-1) - MC); simplified: -(n/(n-1)) (MC + 1)
    for z1 in (-1e6, 1e6):
        assert influence_value(z1, n, 0.7, mc) == pytest.approx(-n * (1 + (n - 1) * mc) / (n - 1), abs=1e-3)
        assert influence_value(z1, n, 0.7, mc, "simplified") == pytest.approx(-(n / (n - 1)) * (mc + 1), abs=1e-3)


def test_exact_limit_matches_single_outlier_moran(rng):
    w = row_standardize(lattice_rook(5, 5, torus=True))
    z = standardize(rng.standard_normal(25))
    assert contaminate_exact(z, w, 3, 1e7) == pytest.approx(-1 / 24, abs=1e-5)


# LIF -------------------------------------------------------------------------

@pytest.mark.parametrize("n,s,mc", [(100, 0.5, 0.3), (100, -1.3, 0.1), (36, 0.02, -0.6), (10, 2.0, 0.9),
                                    (100, 0.0, 0.3), (49, 1.0, -1 / 48 + 0.2)])
@pytest.mark.parametrize("form", ["difference", "simplified"])
def test_lif_matches_analytic_and_trapezoid(n, s, mc, form):
    quad = lif_value(n, s, mc, form=form)
    exact = analytic_lif(n, s, mc, form=form)
    trap = trapezoid_lif(lambda x: influence_value(x, n, s, mc, form))
    assert quad == pytest.approx(exact, abs=1e-9, rel=1e-12)
    assert quad == pytest.approx(trap, rel=1e-6)


def test_lif_zero_only_for_identically_zero_curve():
    n = 30
    assert lif_value(n, 0.0, -1 / (n - 1)) == pytest.approx(0.0, abs=1e-15)
    assert lif_value(n, 1e-6, -1 / (n - 1)) > 0


@pytest.mark.parametrize("s", [0.1, 0.5, 1.0, 2.0])
def test_lif_lag_sign_symmetry(s):
    assert lif_value(100, s, 0.3) == pytest.approx(lif_value(100, -s, 0.3), abs=1e-9)


def test_lif_half_width():
    assert lif_value(100, 0.5, 0.3, half_width=1.0) < lif_value(100, 0.5, 0.3)
    with pytest.raises(EmptyRange):
        lif_value(100, 0.5, 0.3, half_width=0.0)


def test_lif_at_against_trapezoid(rng):
    w = row_standardize(lattice_rook(8, 8))
    z = standardize(rng.standard_normal(64))
    s, mc = lag_sums(z, w), moran_i(z, w)
    for loc in rng.choice(64, 5, replace=False):
        trap = trapezoid_lif(lambda x: influence_value(x, 64, s[loc], mc))
        assert lif_at(z, w, loc) == pytest.approx(trap, rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 29), st.floats(-5, 5))
def test_exact_coefficients_match_brute_force(seed, loc, z1):
    w = row_standardize(lattice_queen(5, 6))
    z = standardize(np.random.default_rng(seed).standard_normal(30))
    num, den = exact_coefficients(z, w)
    got = np.polyval(num[loc][::-1], z1) / np.polyval(den[loc][::-1], z1)
    expected = 30 * (contaminate_exact(z, w, loc, z1) - moran_i(z, w))
    assert got == pytest.approx(expected, abs=1e-9)


def test_exact_lif_against_brute_force_trapezoid(rng):
    w = row_standardize(lattice_rook(5, 5))
    z = standardize(rng.standard_normal(25))
    mc = moran_i(z, w)
    x = np.linspace(-2, 2, 4001)
    for loc in (0, 12):
        y = np.abs([25 * (contaminate_exact(z, w, loc, v) - mc) for v in x])
        trap = float(np.sum((y[1:] + y[:-1]) * 0.5 * np.diff(x)))
        assert lif_at(z, w, loc, exact=True) == pytest.approx(trap, rel=1e-5)


def test_exact_and_closed_lif_agree_on_torus_zero_site(rng):
    w = row_standardize(lattice_rook(6, 6, torus=True))
    z = zero_site_field(rng, 36, 7)
    assert lif_at(z, w, 7, exact=True) == pytest.approx(lif_at(z, w, 7), abs=1e-8)


def test_lif_map_extremes_match_exhaustive_oracle(rook10):
    from moranlif import SarConfig, sar_generate

    z = standardize(sar_generate(SarConfig(0.5, rook10, seed=123, replications=1), 0).field)
    scores = lif_map(z, rook10)
    s, mc = lag_sums(z, rook10), moran_i(z, rook10)
    oracle = np.array([trapezoid_lif(lambda x: influence_value(x, 100, s[i], mc), points=20001)
                       for i in range(100)])
    assert scores.argmax_location == int(np.argmax(oracle))
    assert scores.argmin_location == int(np.argmin(oracle))
    np.testing.assert_allclose(scores.lif, oracle, rtol=1e-4)
    assert sorted(scores.rank.tolist()) == list(range(100))
    assert np.all(np.diff(scores.lif[scores.rank]) <= 0)
    assert scores.rank_position[scores.argmax_location] == 1


def test_extreme_neighbors_rank_high(rng, rook10):
    raw = rng.standard_normal(100)
    cell = 44
    raw[rook10.neighbors(cell)] = 6.0
    scores = lif_map(standardize(raw), rook10)
    assert scores.rank_position[cell] <= 10


def test_lif_map_island_uses_zero_lag():
    nb = [[1], [0, 2], [1], []]
    w = row_standardize(SpatialWeights.from_neighbors(nb))
    z = standardize([1.0, 3.0, 2.0, 8.0])
    scores = lif_map(z, w)
    assert scores.lag_sum[3] == 0.0
    assert scores.lif[3] == pytest.approx(lif_value(4, 0.0, scores.mc), abs=1e-12)


def test_influence_curve_fields(rng):
    w = row_standardize(lattice_rook(4, 4))
    z = standardize(rng.standard_normal(16))
    c = influence_curve(z, w, 6, points=101)
    assert c.z1_grid.size == c.ic_values.size == 101
    assert np.all(np.diff(c.z1_grid) > 0)
    assert c.ic_values[50] == pytest.approx(0.0, abs=1e-12)
    assert c.lif == pytest.approx(lif_at(z, w, 6))
    assert c.lag_sum == pytest.approx(lag_sums(z, w)[6])


@pytest.mark.skipif(compiled_kernels() is None, reason="compiled kernels not built")
def test_quadrature_backends_agree(rng):
    num = np.column_stack([rng.normal(size=200) * 0.1, rng.normal(size=200) * 50, rng.normal(size=200) * 20])
    den = np.tile([100.0, 0.0, 0.99], (200, 1))
    a = compiled_kernels().rational_abs_integrals(num, den, -2.0, 2.0, 1e-9)
    b = _kernels_py.rational_abs_integrals(num, den, -2.0, 2.0, 1e-9)
    np.testing.assert_allclose(a, b, atol=2e-9, rtol=0)


# surfaces --------------------------------------------------------------------

LEVELS = np.linspace(-0.7, 0.7, 7)


def test_surface_zero_row_and_lag_slice():
    surf = influence_surface(LEVELS, (-2, 2), (-2, 2), (41, 21), n=100)
    assert surf.by_level.shape == (7, 41, 21)
    np.testing.assert_array_equal(surf.by_level[:, 20, :], 0.0)
    np.testing.assert_array_equal(surf.lag_zero[20, :], 0.0)
    j0 = int(np.flatnonzero(np.isclose(surf.lag, 0.0))[0])
    for k, mc in enumerate(surf.mc_levels):
        m = np.flatnonzero(np.isclose(surf.mc_axis, mc, atol=1e-12))
        assert m.size == 1
        np.testing.assert_allclose(surf.by_level[k, :, j0], surf.lag_zero[:, m[0]], atol=1e-12)


@pytest.mark.parametrize("form", ["difference", "simplified"])
def test_surface_monotone_in_lag_for_positive_z1(form):
    surf = influence_surface(LEVELS, (-2, 2), (-2, 2), (41, 41), n=100, form=form)
    pos = surf.z1 > 0
    assert np.all(np.diff(surf.by_level[:, pos, :], axis=2) > 0)


def test_surface_empty_ranges():
    with pytest.raises(EmptyRange):
        influence_surface(LEVELS, (2, -2), (-2, 2), (5, 5))
    with pytest.raises(EmptyRange):
        influence_surface(LEVELS, (-2, 2), (-2, 2), (1, 5))
    with pytest.raises(EmptyRange):
        influence_surface([], (-2, 2), (-2, 2), (5, 5))


def test_arctan_form_disagrees_with_integral(capsys):
    rows = []
    for s in (-1.0, 0.0, 0.5, 1.0):
        rows.append((s, float(arctan_form(100, s, 0.3)), lif_value(100, s, 0.3, form="simplified")))
    for s, printed, quad in rows:
        print(f"s={s:+.1f} arctan={printed:+.4f} quadrature={quad:.4f}")
    assert any(abs(p - q) > 1.0 for _, p, q in rows)
