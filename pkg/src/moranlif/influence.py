"""Influence of single-site contamination on global Moran's I.

Contaminating location ``l`` means replacing its standardized value with
``z1`` and re-centering the vector (no variance rescale). The influence is
``I_c(z1) = n * (MC_c(z1) - MC)`` and the local influence function (LIF)
of a location is the integral of ``|I_c|`` over ``z1`` in
``[-h * sigma, h * sigma]`` with ``h = 2`` by default and ``sigma = 1`` for
standardized data.

Two closed forms of ``I_c`` are available, both functions of ``n``, the
location's incoming lag sum ``s = sum_{i != l} w_il z_i`` and the baseline
``MC``, with ``D = ((n - 1) / n) * z1**2 + n``:

``"difference"`` (default)
    ``(2 n z1 s - z1**2 * (1 + (n - 1) * MC)) / D``. This is exactly
    ``n * (contaminated_moran_closed - MC)`` for a zero-valued site.
``"simplified"``
    ``(2 n z1 s - z1**2 * (MC + 1)) / D``. Agrees with ``"difference"`` only
    when ``MC = 0``; kept for comparison.

Both forms treat the site as if it held 0 before contamination, whatever
its actual value: the LIF answers "how much could a hypothetical outlier
here move Moran's I". ``exact=True`` instead uses the brute-force
replace-and-recenter model for the actual data, valid for any ``W``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import EmptyRange, IndexOutOfRange
from .moran import _check, _vector, moran_i

__all__ = [
    "FORMS",
    "InfluenceCurve",
    "LifScores",
    "Surfaces",
    "lag_sums",
    "contaminate_exact",
    "contaminated_moran_closed",
    "influence_value",
    "influence_at",
    "influence_coefficients",
    "exact_coefficients",
    "integrate_abs",
    "lif_value",
    "lif_at",
    "lif_map",
    "influence_curve",
    "influence_surface",
    "arctan_form",
]

FORMS = ("difference", "simplified")
QUAD_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class InfluenceCurve:
    location: int
    z1_grid: np.ndarray
    ic_values: np.ndarray
    lif: float
    lag_sum: float
    mc_baseline: float


@dataclass(frozen=True, eq=False)
class LifScores:
    """LIF of every location.

    ``rank`` lists locations by descending LIF (ties keep index order);
    ``rank_position[i]`` is the 1-based place of location ``i`` in it.
    """

    lif: np.ndarray
    rank: np.ndarray
    argmax_location: int
    argmin_location: int
    lag_sum: np.ndarray
    mc: float
    form: str
    half_width: float
    exact: bool = False

    @property
    def rank_position(self):
        pos = np.empty_like(self.rank)
        pos[self.rank] = np.arange(1, self.rank.size + 1)
        return pos


def _location(location, n):
    loc = int(location)
    if not 0 <= loc < n or loc != location:
        raise IndexOutOfRange(f"location {location} outside [0, {n})")
    return loc


def _form(form):
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")
    return form


def lag_sums(z, w):
    """Incoming lag sum ``sum_{i != l} w_il z_i`` of every location ``l``.

    Island rows get 0.
    """
    zv = _vector(z)
    _check(zv, w)
    s = np.asarray(w.column_lag(zv), dtype=np.float64)
    if w.island_rows:
        s[list(w.island_rows)] = 0.0
    return s


def contaminate_exact(z, w, location, z1):
    """Moran's I after replacing ``z[location]`` by ``z1`` and re-centering."""
    zv = np.array(_vector(z), dtype=np.float64)
    _check(zv, w)
    loc = _location(location, zv.size)
    zv[loc] = z1
    zv -= zv.mean()
    return float(np.dot(zv, w.lag(zv)) / np.dot(zv, zv))


def contaminated_moran_closed(z, w, location, z1):
    """Closed-form contaminated Moran's I for a site assumed to hold 0.

    Evaluates ``[Q + 2 z1 s - z1**2 / n] / [n + ((n - 1) / n) z1**2]`` where
    ``Q = sum_{i,j != l} w_ij z_i z_j`` and ``s`` is the site's incoming lag
    sum. Matches :func:`contaminate_exact` when the site is 0 and ``W`` is
    symmetric with unit column sums.
    """
    zv = np.array(_vector(z), dtype=np.float64)
    _check(zv, w)
    n = zv.size
    loc = _location(location, n)
    zv[loc] = 0.0
    q = float(np.dot(zv, w.lag(zv)))
    s = 0.0 if loc in w.island_rows else float(w.column_lag(zv)[loc])
    num = q + 2.0 * z1 * s - z1 * z1 / n
    den = n + (n - 1) / n * z1 * z1
    return num / den


def influence_value(z1, n, lag_sum, mc, form="difference"):
    """Vectorized closed-form ``I_c`` (see module docstring for the forms)."""
    _form(form)
    z1 = np.asarray(z1, dtype=np.float64)
    quad = 1.0 + (n - 1) * mc if form == "difference" else mc + 1.0
    den = (n - 1) / n * z1 * z1 + n
    return (2.0 * n * z1 * lag_sum - z1 * z1 * quad) / den


def influence_at(z, w, location, z1, form="difference"):
    """``I_c`` of ``location`` at contamination ``z1``, from the closed form."""
    zv = _vector(z)
    _check(zv, w)
    loc = _location(location, zv.size)
    s = lag_sums(zv, w)[loc]
    return float(influence_value(z1, zv.size, s, moran_i(zv, w), form))


def influence_coefficients(n, lag_sum, mc, form="difference"):
    """Return ``(num, den)`` coefficient arrays, shape ``(m, 3)``, ascending powers."""
    _form(form)
    s = np.atleast_1d(np.asarray(lag_sum, dtype=np.float64))
    quad = 1.0 + (n - 1) * mc if form == "difference" else mc + 1.0
    num = np.zeros((s.size, 3))
    num[:, 1] = 2.0 * n * s
    num[:, 2] = -quad
    den = np.zeros((s.size, 3))
    den[:, 0] = n
    den[:, 2] = (n - 1) / n
    return num, den


def exact_coefficients(z, w):
    """Coefficients of ``n * (contaminate_exact(z1) - MC)`` as rational in ``z1``.

    With ``v = e_l - 1/n`` and ``d = z1 - z_l`` the contaminated vector is
    ``z + d v``, so numerator and denominator of its Moran's I are
    quadratics in ``d``; this shifts them to powers of ``z1``.
    """
    zv = np.asarray(_vector(z), dtype=np.float64)
    _check(zv, w)
    n = zv.size
    mc = moran_i(zv, w)
    counts = w.cardinalities
    rows = np.repeat(np.arange(n), counts)
    r = np.bincount(rows, weights=w.data, minlength=n)
    c = np.bincount(w.indices, weights=w.data, minlength=n)
    total = w.data.sum()
    lag = w.lag(zv)
    col = w.column_lag(zv)
    a0 = np.dot(zv, lag)
    a1 = (col - np.dot(zv, r) / n) + (lag - np.dot(c, zv) / n)
    a2 = -r / n - c / n + total / n**2
    d0 = float(n)
    d1 = 2.0 * zv
    d2 = 1.0 - 1.0 / n
    # numerator of n * (MC_c - MC), in powers of d
    e0 = n * (a0 - mc * d0) * np.ones(n)
    e1 = n * (a1 - mc * d1)
    e2 = n * (a2 - mc * d2)
    num = np.column_stack([e0 - e1 * zv + e2 * zv**2, e1 - 2.0 * e2 * zv, e2])
    den = np.column_stack(
        [d0 - d1 * zv + d2 * zv**2, d1 - 2.0 * d2 * zv, np.full(n, d2)]
    )
    return num, den


def integrate_abs(num, den, half_width=2.0, tol=QUAD_TOL):
    """Integral of ``|num(x) / den(x)|`` over ``[-half_width, half_width]`` per row."""
    if not half_width > 0:
        raise EmptyRange("half_width must be positive")
    num = np.atleast_2d(np.asarray(num, dtype=np.float64))
    den = np.atleast_2d(np.asarray(den, dtype=np.float64))
    return kernels.rational_abs_integrals(num, den, -float(half_width), float(half_width), float(tol))


def lif_value(n, lag_sum, mc, half_width=2.0, form="difference", tol=QUAD_TOL):
    """LIF from the closed form for given ``(n, lag_sum, mc)``; scalar or array."""
    num, den = influence_coefficients(n, lag_sum, mc, form)
    out = integrate_abs(num, den, half_width, tol)
    return float(out[0]) if np.ndim(lag_sum) == 0 else out


def lif_at(z, w, location, half_width_sigmas=2.0, form="difference", exact=False, tol=QUAD_TOL):
    """LIF of one location by adaptive quadrature split at the roots of ``I_c``."""
    zv = _vector(z)
    _check(zv, w)
    loc = _location(location, zv.size)
    sigma = z.sigma if hasattr(z, "sigma") else 1.0
    if exact:
        num, den = exact_coefficients(zv, w)
        return float(integrate_abs(num[loc], den[loc], half_width_sigmas * sigma, tol)[0])
    s = lag_sums(zv, w)[loc]
    return lif_value(zv.size, s, moran_i(zv, w), half_width_sigmas * sigma, form, tol)


def lif_map(z, w, half_width_sigmas=2.0, form="difference", exact=False, tol=QUAD_TOL):
    """LIF for every location, with ranking and arg-extremes."""
    zv = _vector(z)
    _check(zv, w)
    n = zv.size
    sigma = z.sigma if hasattr(z, "sigma") else 1.0
    mc = moran_i(zv, w)
    s = lag_sums(zv, w)
    if exact:
        num, den = exact_coefficients(zv, w)
    else:
        num, den = influence_coefficients(n, s, mc, form)
    lif = integrate_abs(num, den, half_width_sigmas * sigma, tol)
    rank = np.argsort(-lif, kind="stable")
    return LifScores(
        lif=lif,
        rank=rank,
        argmax_location=int(rank[0]),
        argmin_location=int(rank[-1]),
        lag_sum=s,
        mc=mc,
        form=_form(form),
        half_width=float(half_width_sigmas * sigma),
        exact=bool(exact),
    )


def influence_curve(z, w, location, points=201, half_width_sigmas=2.0, form="difference",
                    exact=False):
    """Sample ``I_c`` of one location on a uniform grid (odd ``points`` hits 0)."""
    if points < 3:
        raise ValueError("need at least 3 grid points")
    zv = _vector(z)
    _check(zv, w)
    loc = _location(location, zv.size)
    sigma = z.sigma if hasattr(z, "sigma") else 1.0
    h = half_width_sigmas * sigma
    grid = np.linspace(-h, h, points)
    mc = moran_i(zv, w)
    s = float(lag_sums(zv, w)[loc])
    if exact:
        num, den = exact_coefficients(zv, w)
        p, q = num[loc], den[loc]
        ic = np.polyval(p[::-1], grid) / np.polyval(q[::-1], grid)
    else:
        ic = influence_value(grid, zv.size, s, mc, form)
    lif = lif_at(zv, w, loc, half_width_sigmas * sigma, form, exact)
    return InfluenceCurve(loc, grid, ic, lif, s, mc)


@dataclass(frozen=True, eq=False)
class Surfaces:
    """``I_c`` grids: one ``(z1, lag)`` surface per MC level plus ``(z1, MC)`` at lag 0."""

    n: int
    form: str
    z1: np.ndarray
    lag: np.ndarray
    mc_levels: np.ndarray
    by_level: np.ndarray  # (levels, len(z1), len(lag))
    mc_axis: np.ndarray
    lag_zero: np.ndarray  # (len(z1), len(mc_axis))


def _axis(interval, count, name):
    lo, hi = (float(x) for x in interval)
    if not hi > lo:
        raise EmptyRange(f"{name} range [{lo}, {hi}] is empty")
    if count < 2:
        raise EmptyRange(f"{name} grid needs at least 2 points")
    return np.linspace(lo, hi, int(count))


def influence_surface(mc_levels, z1_range=(-2.0, 2.0), lag_range=(-2.0, 2.0), grid=(41, 41),
                      n=100, mc_range=None, mc_points=25, form="difference"):
    """Evaluate ``I_c`` on Cartesian grids.

    Parameters
    ----------
    mc_levels : sequence of float
        Baseline Moran's I values, one ``(z1, lag)`` surface each.
    z1_range, lag_range : (float, float)
        Closed intervals for the contamination and the lag sum.
    grid : (int, int)
        Points along ``z1`` and along ``lag``.
    n : int
        Number of locations the formula assumes.
    mc_range, mc_points
        MC axis of the lag-zero surface; defaults to the span of
        ``mc_levels``.
    """
    levels = np.asarray(mc_levels, dtype=np.float64).ravel()
    if levels.size == 0:
        raise EmptyRange("no MC levels given")
    z1 = _axis(z1_range, grid[0], "z1")
    lag = _axis(lag_range, grid[1], "lag")
    if mc_range is None:
        mc_range = (levels.min(), levels.max()) if levels.size > 1 else (levels[0] - 0.5, levels[0] + 0.5)
    mc_axis = _axis(mc_range, mc_points, "MC")
    zz, ll = np.meshgrid(z1, lag, indexing="ij")
    by_level = np.stack([influence_value(zz, n, ll, mc, form) for mc in levels])
    zm, mm = np.meshgrid(z1, mc_axis, indexing="ij")
    lag_zero = influence_value(zm, n, 0.0, mm, form)
    return Surfaces(int(n), form, z1, lag, levels, by_level, mc_axis, lag_zero)


def arctan_form(n, lag_sum, mc, sigma=1.0):
    """The arctan closed form that circulates for the LIF integral.

    ``2 [n (MC + s - 1) atan(2 sigma / n) + 2 sigma (s - 1)] + 2 sqrt(n) atan(2 sigma / n)``.
    It does not agree with direct integration of ``|I_c|`` (it can even be
    negative); exposed only so the gap can be measured.
    """
    t = np.arctan(2.0 * sigma / n)
    return 2.0 * (n * (mc + lag_sum - 1.0) * t + 2.0 * sigma * (lag_sum - 1.0)) + 2.0 * np.sqrt(n) * t
