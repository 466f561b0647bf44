"""Attribute CSV ingestion, GeoJSON joins and lattice SVG choropleths.

GAL weights files are handled by :mod:`moranlif.weights`.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateId,
    EmptyDataset,
    JoinKeyMissing,
    MalformedGeoJson,
    MissingColumn,
    MissingValue,
    NonNumericValue,
)

__all__ = [
    "Dataset",
    "read_attribute_csv",
    "join_geojson",
    "write_geojson",
    "render_lattice_svg",
    "PALETTES",
]

_MISSING = {"", "na", "n/a", "nan", "null", "none", "."}

PALETTES = {
    "gray": ("#1a1a1a", "#f2f2f2"),
    "reds": ("#fff5f0", "#67000d"),
    "blues": ("#f7fbff", "#08306b"),
}


@dataclass(frozen=True, eq=False)
class Dataset:
    ids: tuple
    raw_values: np.ndarray
    source: str | None = None
    value_column: str | None = None
    geometry: object = None

    @property
    def n(self):
        return len(self.ids)


def _rows(fh):
    """Yield ``(line_number, fields)``, skipping blank and ``#`` comment lines."""
    for lineno, line in enumerate(fh, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, next(csv.reader([line]))


def read_attribute_csv(path, id_column, value_column):
    """Read ids and one numeric column from a comma-separated file with header.

    Values must use a decimal point. Rows with a missing value raise
    :class:`MissingValue` listing every offending row; nothing is imputed.
    Reported row numbers are file line numbers.
    """
    name = os.fspath(path)
    with open(path, encoding="utf-8-sig", newline="") as fh:
        rows = _rows(fh)
        try:
            _, header = next(rows)
        except StopIteration:
            raise EmptyDataset(f"{name}: no header") from None
        header = [h.strip() for h in header]
        for col in (id_column, value_column):
            if col not in header:
                raise MissingColumn(f"{name}: column {col!r} not in header {header}")
        id_pos, val_pos = header.index(id_column), header.index(value_column)
        ids, values, missing, seen = [], [], [], {}
        for lineno, fields in rows:
            # an unquoted decimal comma shows up as an extra field
            if len(fields) != len(header):
                raise MissingColumn(
                    f"{name}: row {lineno} has {len(fields)} fields, header has {len(header)}"
                )
            ident = fields[id_pos].strip()
            if ident in seen:
                raise DuplicateId(ident, lineno)
            seen[ident] = lineno
            text = fields[val_pos].strip()
            if text.lower() in _MISSING:
                missing.append(lineno)
                continue
            try:
                val = float(text)
            except ValueError:
                raise NonNumericValue(lineno, value_column, text) from None
            if not math.isfinite(val):
                raise NonNumericValue(lineno, value_column, text)
            ids.append(ident)
            values.append(val)
    if missing:
        raise MissingValue(value_column, missing)
    if not ids:
        raise EmptyDataset(f"{name}: no data rows")
    return Dataset(tuple(ids), np.array(values), name, value_column)


def _plain(x):
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def join_geojson(source, dataset, results, key):
    """Attach per-location results to GeoJSON features by id.

    Parameters
    ----------
    source : path or dict
        A FeatureCollection.
    dataset : Dataset
        Supplies the ids that ``results`` are aligned with.
    results : mapping
        Property name -> sequence aligned with ``dataset.ids``.
    key : str
        Feature property holding the id.

    Returns
    -------
    (dict, int)
        The annotated copy and the number of features without a match,
        which receive ``None`` for every result property. Geometry is
        passed through untouched.
    """
    if isinstance(source, dict):
        fc = copy.deepcopy(source)
        name = "<geojson>"
    else:
        name = os.fspath(source)
        try:
            with open(source, encoding="utf-8") as fh:
                fc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedGeoJson(f"{name}: {exc}") from None
    if not isinstance(fc, dict) or fc.get("type") != "FeatureCollection":
        raise MalformedGeoJson(f"{name}: not a FeatureCollection")
    features = fc.get("features")
    if not isinstance(features, list):
        raise MalformedGeoJson(f"{name}: 'features' is not a list")
    for name_, col in results.items():
        if len(col) != dataset.n:
            raise DimensionMismatch(f"result {name_!r} has {len(col)} values for {dataset.n} ids")
    index = {str(k): i for i, k in enumerate(dataset.ids)}
    unmatched = 0
    for num, feat in enumerate(features):
        if not isinstance(feat, dict) or feat.get("type") != "Feature":
            raise MalformedGeoJson(f"{name}: feature {num} is not a Feature")
        props = feat.get("properties")
        if props is None:
            props = feat["properties"] = {}
        if key not in props:
            raise JoinKeyMissing(f"{name}: feature {num} has no property {key!r}")
        raw = props[key]
        if isinstance(raw, float) and raw.is_integer():
            raw = int(raw)
        i = index.get(str(raw))
        if i is None:
            unmatched += 1
        for prop, col in results.items():
            props[prop] = None if i is None else _plain(col[i])
    return fc, unmatched


def write_geojson(fc, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(fc, fh)
        fh.write("\n")


def _rgb(hexcolor):
    h = hexcolor.lstrip("#")
    if len(h) != 6:
        raise ValueError(f"colors must be #rrggbb, got {hexcolor!r}")
    return tuple(int(h[i:i + 2], 16) for i in (0, 2, 4))


def _blend(lo, hi, t):
    return "#" + "".join(f"{round(a + t * (b - a)):02x}" for a, b in zip(lo, hi))


def _fmt(x):
    return f"{x:.6g}"


def render_lattice_svg(values, rows, cols, palette_spec="gray", legend=True, cell=20, title=None):
    """Render a ``rows x cols`` grid (row-major values) as an SVG choropleth.

    Colors interpolate linearly between the palette's low and high endpoint
    over ``[min, max]``; a zero range maps every cell to the low endpoint.
    The legend shows 5 ticks at 3 significant digits (a single tick when
    the range is zero). Output bytes depend only on the inputs.
    """
    vals = np.asarray(values, dtype=np.float64).ravel()
    if rows * cols != vals.size:
        raise DimensionMismatch(f"{vals.size} values for a {rows}x{cols} grid")
    lo_c, hi_c = PALETTES[palette_spec] if isinstance(palette_spec, str) else palette_spec
    lo_rgb, hi_rgb = _rgb(lo_c), _rgb(hi_c)
    vmin, vmax = float(vals.min()), float(vals.max())
    span = vmax - vmin
    t = (vals - vmin) / span if span > 0 else np.zeros_like(vals)

    grid_w, grid_h = cols * cell, rows * cell
    legend_w = 5 * cell if legend else 0
    top = cell if title else 0
    width, height = grid_w + legend_w, grid_h + top
    out = io.StringIO()
    out.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    out.write(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">\n'
    )
    if title:
        out.write(
            f'<text x="{grid_w / 2:g}" y="{cell * 0.7:g}" font-size="{cell * 0.6:g}" '
            f'text-anchor="middle">{_escape(title)}</text>\n'
        )
    out.write('<g id="cells" stroke="none">\n')
    for k in range(vals.size):
        r, c = divmod(k, cols)
        out.write(
            f'<rect x="{c * cell}" y="{top + r * cell}" width="{cell}" height="{cell}" '
            f'fill="{_blend(lo_rgb, hi_rgb, t[k])}"><title>cell {k + 1}: {_fmt(vals[k])}</title></rect>\n'
        )
    out.write("</g>\n")
    if legend:
        x0 = grid_w + cell // 2
        bar_w = cell // 2
        steps = 20
        out.write('<g id="legend">\n')
        for s in range(steps):
            frac = s / (steps - 1)
            y = top + grid_h - (s + 1) * grid_h / steps
            out.write(
                f'<rect x="{x0}" y="{y:g}" width="{bar_w}" height="{grid_h / steps:g}" '
                f'fill="{_blend(lo_rgb, hi_rgb, frac if span > 0 else 0.0)}"/>\n'
            )
        ticks = np.linspace(vmin, vmax, 5) if span > 0 else np.array([vmin])
        for j, tick in enumerate(ticks):
            frac = j / 4 if span > 0 else 0.0
            y = top + grid_h - frac * grid_h
            out.write(
                f'<text class="tick" x="{x0 + bar_w + 3}" y="{y:g}" font-size="{cell * 0.5:g}" '
                f'dominant-baseline="middle">{tick:.3g}</text>\n'
            )
        out.write("</g>\n")
    out.write("</svg>\n")
    return out.getvalue()


def _escape(text):
    return (
        str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )
