"""Local Moran's I, quadrant labels and conditional-permutation inference."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .moran import _check, _vector

__all__ = ["LisaResult", "local_moran", "quadrants", "lisa_inference", "QUADRANT_LABELS"]

QUADRANT_LABELS = ("HH", "LL", "HL", "LH", "ISLAND")
TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LisaResult:
    """Per-location local Moran statistics.

    ``p_value`` is the two-sided pseudo p-value
    ``(count_exceed + 1) / (n_permutations + 1)``; islands get 1.0 and the
    ``ISLAND`` label.
    """

    local_i: np.ndarray
    lag: np.ndarray
    quadrant: tuple
    p_value: np.ndarray
    n_permutations: int
    seed: int
    alpha: float
    exceed_counts: np.ndarray

    @property
    def significant(self):
        islands = np.array([q == "ISLAND" for q in self.quadrant])
        return (self.p_value < self.alpha) & ~islands

    def __eq__(self, other):
        if not isinstance(other, LisaResult):
            return NotImplemented
        return (
            np.array_equal(self.local_i, other.local_i)
            and np.array_equal(self.p_value, other.p_value)
            and self.quadrant == other.quadrant
            and (self.n_permutations, self.seed, self.alpha)
            == (other.n_permutations, other.seed, other.alpha)
        )


def local_moran(z, w):
    """Return ``I_i = z_i * L(z)_i`` for every location (0 on islands)."""
    z = _vector(z)
    _check(z, w)
    return z * w.lag(z)


def quadrants(z, lag, islands=()):
    """Label each location HH, LL, HL or LH; zero counts as high."""
    z = np.asarray(z)
    lag = np.asarray(lag)
    labels = []
    for i, (zi, li) in enumerate(zip(z, lag)):
        if i in islands:
            labels.append("ISLAND")
        elif zi >= 0:
            labels.append("HH" if li >= 0 else "HL")
        else:
            labels.append("LH" if li >= 0 else "LL")
    return tuple(labels)


def lisa_inference(z, w, n_permutations=999, seed=0, alpha=0.05):
    """Local Moran's I with conditional-permutation pseudo p-values.

    For each non-island location ``i``, ``z_i`` is held fixed and the
    neighbor slots are filled with values drawn without replacement from
    the other ``n - 1`` locations. A permutation counts as extreme when its
    absolute deviation from the conditional mean
    ``E[I_i] = -z_i**2 * sum_j w_ij / (n - 1)`` is at least the observed one.

    Each location draws from its own stream keyed by ``(seed, i)``, so the
    result does not depend on evaluation order.

    Parameters
    ----------
    z : Observations
        Standardized observations.
    w : SpatialWeights
        Row-standardized weights.
    n_permutations : int
        At least 99.
    seed : int
        Any integer; reduced modulo 2**64.
    alpha : float
        Significance level recorded on the result.
    """
    if n_permutations < 99:
        raise ValueError("n_permutations must be at least 99")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    zv = np.ascontiguousarray(_vector(z), dtype=np.float64)
    _check(zv, w)
    n = zv.size
    lag = w.lag(zv)
    local = zv * lag
    row_sums = np.bincount(
        np.repeat(np.arange(n), w.cardinalities), weights=w.data, minlength=n
    )
    center = -zv * zv * row_sums / (n - 1)
    # reordering the observed neighbor values changes the sum by rounding
    # only; such ties must count as at least as extreme
    threshold = np.abs(local - center) - TIE_TOL * (np.abs(local) + np.abs(center) + 1.0)
    counts = kernels.lisa_exceed_counts(
        zv, w.indptr, w.indices, w.data, center, threshold, int(n_permutations), int(seed)
    )
    islands = w.island_rows
    p = np.where(counts >= 0, (counts + 1.0) / (n_permutations + 1.0), 1.0)
    return LisaResult(
        local_i=local,
        lag=lag,
        quadrant=quadrants(zv, lag, islands),
        p_value=p,
        n_permutations=int(n_permutations),
        seed=int(seed),
        alpha=float(alpha),
        exceed_counts=counts,
    )
