"""Sparse spatial weights: lattice constructors, GAL I/O, row-standardization.

Weights are held in compressed sparse row form (``indptr``, ``indices``,
``data``). Neighbor order inside a row is preserved exactly as constructed
or read, which is what makes GAL round-trips byte-exact.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import DimensionMismatch, GalFormatError, InvalidLattice

__all__ = [
    "SpatialWeights",
    "lattice_rook",
    "lattice_queen",
    "row_standardize",
    "read_gal",
    "write_gal",
    "parse_lattice_spec",
]


@dataclass(frozen=True, eq=False)
class SpatialWeights:
    """Immutable sparse n x n weights matrix with zero diagonal.

    Parameters
    ----------
    n : int
        Number of locations.
    indptr, indices, data : ndarray
        CSR arrays. ``indices[indptr[i]:indptr[i+1]]`` are the neighbors of
        ``i`` in stored order and ``data`` the matching strictly positive
        weights.
    row_standardized : bool
        Whether every non-island row sums to one.
    ids : tuple or None
        Optional location identifiers (e.g. from a GAL file).
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    row_standardized: bool = False
    ids: tuple | None = None
    island_rows: frozenset = field(init=False)

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        n = int(self.n)
        if n < 1:
            raise DimensionMismatch("weights need at least one location")
        if indptr.shape != (n + 1,) or indptr[0] != 0 or np.any(np.diff(indptr) < 0):
            raise DimensionMismatch("malformed indptr")
        if indices.shape != data.shape or indices.size != indptr[-1]:
            raise DimensionMismatch("indices/data length does not match indptr")
        if indices.size and (indices.min() < 0 or indices.max() >= n):
            raise DimensionMismatch("neighbor index outside [0, n)")
        if np.any(~(data > 0)):
            raise ValueError("stored weights must be strictly positive")
        rows = np.repeat(np.arange(n), np.diff(indptr))
        if np.any(rows == indices):
            raise ValueError("diagonal entries are not allowed")
        if self.ids is not None and len(self.ids) != n:
            raise DimensionMismatch(f"{len(self.ids)} ids for {n} locations")
        for arr in (indptr, indices, data):
            arr.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "data", data)
        if self.ids is not None:
            object.__setattr__(self, "ids", tuple(self.ids))
        islands = frozenset(np.flatnonzero(np.diff(indptr) == 0).tolist())
        object.__setattr__(self, "island_rows", islands)

    @classmethod
    def from_neighbors(cls, neighbors, weights=None, ids=None, row_standardized=False):
        """Build from a list of neighbor index lists (and optional weight lists)."""
        n = len(neighbors)
        counts = [len(nb) for nb in neighbors]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indices = np.fromiter((j for nb in neighbors for j in nb), dtype=np.int64, count=int(indptr[-1]))
        if weights is None:
            data = np.ones(indices.size)
        else:
            data = np.fromiter((x for ws in weights for x in ws), dtype=np.float64, count=int(indptr[-1]))
        return cls(n, indptr, indices, data, row_standardized=row_standardized, ids=ids)

    @property
    def entries(self):
        """List of ``(row, col, weight)`` triples in storage order."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return list(zip(rows.tolist(), self.indices.tolist(), self.data.tolist()))

    @property
    def cardinalities(self):
        return np.diff(self.indptr)

    def neighbors(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi]

    def row_weights(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.data[lo:hi]

    @cached_property
    def sparse(self):
        """``scipy.sparse.csr_matrix`` view (read-only use)."""
        return sparse.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    def todense(self):
        return self.sparse.toarray()

    def lag(self, values):
        """Return ``W @ values``; island rows give 0."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n,):
            raise DimensionMismatch(f"vector of length {values.shape} for {self.n} locations")
        return self.sparse @ values

    def column_lag(self, values):
        """Return ``W.T @ values``, i.e. sum_i w_ij * values_i for each j."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n,):
            raise DimensionMismatch(f"vector of length {values.shape} for {self.n} locations")
        return self.sparse.T @ values

    def is_symmetric(self, tol=0.0):
        diff = abs(self.sparse - self.sparse.T)
        return diff.nnz == 0 or diff.max() <= tol

    def reorder(self, ids):
        """Return weights relabelled so that location ``k`` is ``ids[k]``.

        Requires ``self.ids`` and the same id set; neighbor order within each
        row is kept.
        """
        if self.ids is None:
            raise DimensionMismatch("weights carry no ids to align on")
        ids = [str(x) for x in ids]
        own = [str(x) for x in self.ids]
        if len(ids) != len(own) or set(ids) != set(own):
            missing = sorted(set(ids) - set(own))
            extra = sorted(set(own) - set(ids))
            raise DimensionMismatch(
                f"id sets differ (not in weights: {missing[:5]}, not in data: {extra[:5]})"
            )
        if ids == own:
            return self
        pos = {k: i for i, k in enumerate(own)}
        new_of_old = np.empty(self.n, dtype=np.int64)
        for new, k in enumerate(ids):
            new_of_old[pos[k]] = new
        neighbors, weights = [], []
        for k in ids:
            old = pos[k]
            neighbors.append(new_of_old[self.neighbors(old)].tolist())
            weights.append(self.row_weights(old).tolist())
        return SpatialWeights.from_neighbors(
            neighbors, weights, ids=tuple(ids), row_standardized=self.row_standardized
        )


def _lattice(rows, cols, torus, offsets):
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise InvalidLattice(f"a {rows}x{cols} lattice has no neighbor structure")
    neighbors = []
    for r in range(rows):
        for c in range(cols):
            here = r * cols + c
            found = set()
            for dr, dc in offsets:
                rr, cc = r + dr, c + dc
                if torus:
                    rr %= rows
                    cc %= cols
                elif not (0 <= rr < rows and 0 <= cc < cols):
                    continue
                k = rr * cols + cc
                if k != here:
                    found.add(k)
            neighbors.append(sorted(found))
    return SpatialWeights.from_neighbors(neighbors)


_ROOK = ((-1, 0), (0, -1), (0, 1), (1, 0))
_QUEEN = _ROOK + ((-1, -1), (-1, 1), (1, -1), (1, 1))


def lattice_rook(rows, cols, torus=False):
    """Binary rook contiguity on a ``rows x cols`` grid, cells numbered row-major.

    With ``torus=True`` edges wrap. On grids with a side of length 1 or 2 the
    wrapped neighbors coincide, so duplicates and self-links are dropped and
    such cells have fewer than four neighbors.
    """
    return _lattice(int(rows), int(cols), bool(torus), _ROOK)


def lattice_queen(rows, cols, torus=False):
    """Binary queen contiguity (rook plus diagonals)."""
    return _lattice(int(rows), int(cols), bool(torus), _QUEEN)


def row_standardize(w):
    """Divide every non-island row by its sum. Island rows stay empty."""
    counts = np.diff(w.indptr)
    sums = np.bincount(np.repeat(np.arange(w.n), counts), weights=w.data, minlength=w.n)
    sums = np.where(counts > 0, sums, 1.0)
    data = w.data / np.repeat(sums, counts)
    return SpatialWeights(w.n, w.indptr, w.indices, data, row_standardized=True, ids=w.ids)


def parse_lattice_spec(spec):
    """Parse ``"RxC"`` (e.g. ``"10x10"``) into ``(rows, cols)``."""
    try:
        r, c = spec.lower().split("x")
        rows, cols = int(r), int(c)
    except (ValueError, AttributeError):
        raise InvalidLattice(f"lattice spec must look like 10x10, got {spec!r}") from None
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise InvalidLattice(f"a {rows}x{cols} lattice has no neighbor structure")
    return rows, cols


def _read_text(source):
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            return fh.read(), str(source)
    if hasattr(source, "read"):
        return source.read(), getattr(source, "name", "<stream>")
    raise FileNotFoundError(f"GAL file not found: {source}")


def read_gal(source):
    """Read a GAL contiguity file into binary :class:`SpatialWeights`.

    The header is either a single count ``n`` or the four-token form
    ``0 n shapefile key``. Location ids are mapped to indices in the order
    their records appear.
    """
    text, name = _read_text(source)
    lines = text.splitlines()
    if not lines:
        raise GalFormatError(f"{name}: empty GAL file")
    head = lines[0].split()
    try:
        if len(head) == 1:
            n = int(head[0])
        elif len(head) == 4:
            n = int(head[1])
        else:
            raise ValueError
    except ValueError:
        raise GalFormatError(f"{name}: line 1: bad header {lines[0]!r}") from None
    if n < 1:
        raise GalFormatError(f"{name}: line 1: location count must be positive")

    ids, neighbor_tokens = [], []
    pos = 1
    for _ in range(n):
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            raise GalFormatError(f"{name}: expected {n} records, found {len(ids)}")
        rec = lines[pos].split()
        if len(rec) != 2:
            raise GalFormatError(f"{name}: line {pos + 1}: expected 'id count', got {lines[pos]!r}")
        try:
            k = int(rec[1])
        except ValueError:
            raise GalFormatError(f"{name}: line {pos + 1}: bad neighbor count {rec[1]!r}") from None
        nb = lines[pos + 1].split() if pos + 1 < len(lines) else []
        if len(nb) != k:
            raise GalFormatError(
                f"{name}: line {pos + 2}: id {rec[0]} declares {k} neighbors, lists {len(nb)}"
            )
        ids.append(rec[0])
        neighbor_tokens.append(nb)
        pos += 2

    index = {}
    for i, ident in enumerate(ids):
        if ident in index:
            raise GalFormatError(f"{name}: id {ident!r} has two records")
        index[ident] = i
    neighbors = []
    for ident, nb in zip(ids, neighbor_tokens):
        try:
            row = [index[t] for t in nb]
        except KeyError as exc:
            raise GalFormatError(f"{name}: id {ident}: unknown neighbor {exc.args[0]!r}") from None
        if len(set(row)) != len(row):
            raise GalFormatError(f"{name}: id {ident}: repeated neighbor")
        if index[ident] in row:
            raise GalFormatError(f"{name}: id {ident}: lists itself as neighbor")
        neighbors.append(row)
    return SpatialWeights.from_neighbors(neighbors, ids=tuple(ids))


def write_gal(w, dest=None, ids=None):
    """Write the neighbor structure of ``w`` as GAL text.

    Returns the text; also writes it to ``dest`` (path or stream) if given.
    Weights are not stored, only adjacency.
    """
    if ids is None:
        ids = w.ids if w.ids is not None else [str(i + 1) for i in range(w.n)]
    ids = [str(x) for x in ids]
    buf = io.StringIO()
    buf.write(f"{w.n}\n")
    for i in range(w.n):
        nb = w.neighbors(i)
        buf.write(f"{ids[i]} {nb.size}\n")
        buf.write(" ".join(ids[j] for j in nb) + "\n")
    text = buf.getvalue()
    if dest is not None:
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            with open(dest, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    return text
