"""Standardization, spatial lag and global Moran's I."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroVariance

__all__ = ["Observations", "standardize", "spatial_lag", "moran_i"]


@dataclass(frozen=True, eq=False)
class Observations:
    """An attribute vector together with its mean-0, variance-1 version.

    The variance uses divisor ``n``, so ``standardized @ standardized == n``.
    """

    ids: tuple
    values: np.ndarray
    standardized: np.ndarray
    sigma: float = 1.0

    @property
    def n(self):
        return self.standardized.size


def standardize(raw, ids=None):
    """Center ``raw`` and scale it to unit variance (divisor n).

    Parameters
    ----------
    raw : array_like
        Raw attribute values, at least two.
    ids : sequence, optional
        Location identifiers; defaults to ``1..n``.

    Raises
    ------
    ZeroVariance
        If every value is the same.
    """
    values = np.array(raw, dtype=np.float64).ravel()
    n = values.size
    if n < 2:
        raise DimensionMismatch("need at least two observations")
    if not np.all(np.isfinite(values)):
        raise ValueError("observations must be finite")
    if ids is None:
        ids = tuple(str(i + 1) for i in range(n))
    elif len(ids) != n:
        raise DimensionMismatch(f"{len(ids)} ids for {n} values")
    centered = values - values.mean()
    s = np.sqrt(np.dot(centered, centered) / n)
    if not s > 0 or s <= 1e-300:
        raise ZeroVariance("all values are equal; Moran's I is undefined")
    z = centered / s
    # second pass removes the rounding residue of the first
    z -= z.mean()
    z /= np.sqrt(np.dot(z, z) / n)
    values.setflags(write=False)
    z.setflags(write=False)
    return Observations(tuple(ids), values, z, float(np.sqrt(np.dot(z, z) / n)))


def _vector(z):
    if isinstance(z, Observations):
        return z.standardized
    return np.asarray(z, dtype=np.float64)


def _check(z, w):
    if z.shape != (w.n,):
        raise DimensionMismatch(f"{z.size} observations but weights for {w.n} locations")


def spatial_lag(z, w):
    """Return ``L(z)_i = sum_j w_ij z_j``; zero for islands."""
    z = _vector(z)
    _check(z, w)
    return w.lag(z)


def moran_i(z, w):
    """Global Moran's I, ``z' W z / z' z``.

    ``z`` may be an :class:`Observations` (its standardized vector is used)
    or a plain vector, which is used as given.
    """
    z = _vector(z)
    _check(z, w)
    return float(np.dot(z, w.lag(z)) / np.dot(z, z))
