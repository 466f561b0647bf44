"""Command line front end: ``moranlif {lif,lisa,simulate,surface}``.

Exit codes: 0 success, 2 input error, 3 numerical failure. Result files are
written to a scratch directory and moved into ``--out-dir`` only when the
whole command succeeds.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import shutil
import sys
import tempfile

import numpy as np

from . import __version__
from .errors import InputError, NumericalError
from .formats import join_geojson, read_attribute_csv, render_lattice_svg, write_geojson
from .influence import FORMS, influence_surface, lif_map
from .lisa import lisa_inference
from .moran import moran_i, spatial_lag, standardize
from .simulate import SarConfig, mc_experiment
from .weights import lattice_queen, lattice_rook, parse_lattice_spec, read_gal, row_standardize

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("moranlif")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
DEFAULT_MC_LEVELS = "-0.7,-0.4667,-0.2333,0,0.2333,0.4667,0.7"


class Outputs:
    """Collects result files in a scratch dir; :meth:`commit` moves them into place."""

    def __init__(self, out_dir, header):
        self.out_dir = os.path.abspath(out_dir)
        self.header = header
        parent = os.path.dirname(self.out_dir) or "."
        os.makedirs(parent, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix=".moranlif-", dir=parent)
        self.names = []

    def path(self, name):
        self.names.append(name)
        return os.path.join(self.tmp, name)

    def csv(self, name, columns, rows):
        with open(self.path(name), "w", encoding="utf-8", newline="") as fh:
            fh.write(self.header + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(x) for x in row])

    def text(self, name, text):
        with open(self.path(name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)

    def commit(self):
        os.makedirs(self.out_dir, exist_ok=True)
        for name in self.names:
            os.replace(os.path.join(self.tmp, name), os.path.join(self.out_dir, name))
        self.discard()
        return [os.path.join(self.out_dir, n) for n in self.names]

    def discard(self):
        shutil.rmtree(self.tmp, ignore_errors=True)


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def _config_hash(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out_dir", "func", "config", "verbose")}
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _header(args):
    seed = getattr(args, "seed", None)
    return f"# moranlif {__version__} command={args.command} seed={seed} config={_config_hash(args)}"


def _weights(args, n, ids):
    """Resolve the weights source (GAL file xor lattice) aligned to ``ids``."""
    has_gal, has_lattice = args.weights is not None, args.lattice is not None
    if has_gal == has_lattice:
        raise InputError("give exactly one of --weights (GAL) or --lattice RxC")
    if has_gal:
        w = read_gal(args.weights).reorder(ids)
        shape = None
    else:
        rows, cols = parse_lattice_spec(args.lattice)
        if rows * cols != n:
            raise InputError(f"lattice {rows}x{cols} has {rows * cols} cells but input has {n} rows")
        build = lattice_queen if args.contiguity == "queen" else lattice_rook
        w = build(rows, cols, torus=args.torus)
        shape = (rows, cols)
    w = row_standardize(w)
    if w.island_rows:
        log.warning("%d island location(s) without neighbors: lag set to 0", len(w.island_rows))
    return w, shape


def _load(args):
    data = read_attribute_csv(args.input, args.id_col, args.value_col)
    log.info("read %d rows from %s", data.n, args.input)
    w, shape = _weights(args, data.n, data.ids)
    z = standardize(data.raw_values, data.ids)
    return data, w, shape, z


def _join(args, out, data, name, results):
    if not args.geojson:
        return
    fc, unmatched = join_geojson(args.geojson, data, results, args.join_key or args.id_col)
    if unmatched:
        log.warning("%d GeoJSON feature(s) had no matching id", unmatched)
    write_geojson(fc, out.path(name))


def cmd_lif(args, out):
    data, w, shape, z = _load(args)
    scores = lif_map(z, w, args.half_width, args.form, args.exact)
    lag = spatial_lag(z, w)
    pos = scores.rank_position
    out.csv(
        "lif.csv",
        ["id", "value", "lag", "lif", "rank"],
        zip(data.ids, data.raw_values, lag, scores.lif, pos),
    )
    if args.geojson:
        lisa = lisa_inference(z, w, args.permutations, args.seed, args.alpha)
        _join(args, out, data, "lif.geojson", {
            "lif": scores.lif,
            "lif_rank": pos,
            "local_i": lisa.local_i,
            "lisa_p": lisa.p_value,
            "quadrant": list(lisa.quadrant),
        })
    if args.svg and shape:
        out.text("value.svg", render_lattice_svg(data.raw_values, *shape, "gray", title=args.value_col))
        out.text("lif.svg", render_lattice_svg(scores.lif, *shape, "reds", title="LIF"))
    print(f"global Moran's I: {scores.mc:.6f}")
    print(f"max LIF: id {data.ids[scores.argmax_location]} ({scores.lif[scores.argmax_location]:.6g})")
    print(f"min LIF: id {data.ids[scores.argmin_location]} ({scores.lif[scores.argmin_location]:.6g})")


def cmd_lisa(args, out):
    data, w, shape, z = _load(args)
    res = lisa_inference(z, w, args.permutations, args.seed, args.alpha)
    sig = res.significant
    out.csv(
        "lisa.csv",
        ["id", "local_i", "quadrant", "p_value", f"significant@{args.alpha:g}"],
        zip(data.ids, res.local_i, res.quadrant, res.p_value, (int(s) for s in sig)),
    )
    _join(args, out, data, "lisa.geojson", {
        "local_i": res.local_i,
        "lisa_p": res.p_value,
        "quadrant": list(res.quadrant),
    })
    if args.svg and shape:
        out.text("local_i.svg", render_lattice_svg(res.local_i, *shape, "blues", title="local I"))
    k = int(sig.sum())
    log.info(
        "%d of %d locations significant at alpha=%g (%s)",
        k, data.n, args.alpha, "majority non-significant" if k < data.n / 2 else "majority significant",
    )
    print(f"global Moran's I: {moran_i(z, w):.6f}")
    print(f"significant at {args.alpha:g}: {k}/{data.n}")


def cmd_simulate(args, out):
    rows, cols = parse_lattice_spec(args.lattice or "10x10")
    build = lattice_queen if args.contiguity == "queen" else lattice_rook
    w = row_standardize(build(rows, cols, torus=args.torus))
    config = SarConfig(args.rho, w, seed=args.seed, replications=args.replications)
    log.info("simulating %d replications on %dx%d, rho=%g", args.replications, rows, cols, args.rho)
    summary = mc_experiment(config, args.half_width, args.form, args.exact, workers=args.workers)
    cells = range(rows * cols)
    out.csv(
        "cells.csv",
        ["index", "row", "col", "mean_lif", "sd_lif", "final_lif"],
        ((k + 1, k // cols + 1, k % cols + 1, summary.mean_lif[k], summary.sd_lif[k],
          summary.final_scores.lif[k]) for k in cells),
    )
    out.csv("mc.csv", ["replicate", "moran_i"], enumerate(summary.mc_values))
    out.csv(
        "field.csv",
        ["id", "row", "col", "value"],
        ((k + 1, k // cols + 1, k % cols + 1, summary.final_field[k]) for k in cells),
    )
    for key, curve in summary.curves.items():
        out.csv(f"curve_{key}.csv", ["z1", "ic"], zip(curve.z1_grid, curve.ic_values))
    if args.svg:
        out.text("field.svg", render_lattice_svg(summary.final_field, rows, cols, "gray", title="Z"))
        out.text("lif_final.svg", render_lattice_svg(summary.final_scores.lif, rows, cols, "reds", title="LIF"))
        out.text("lif_mean.svg", render_lattice_svg(summary.mean_lif, rows, cols, "reds", title="mean LIF"))
    print(f"mean Moran's I over {args.replications} replications: {summary.mc_values.mean():.6f}")
    print(f"max mean-LIF cell: {summary.argmax_mean + 1}; min mean-LIF cell: {summary.argmin_mean + 1}")
    print(
        f"final replication: max-LIF cell {summary.final_scores.argmax_location + 1}, "
        f"min-LIF cell {summary.final_scores.argmin_location + 1}"
    )


def _floats(text, name, count=None):
    try:
        vals = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise InputError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise InputError(f"{name}: expected {count} numbers, got {text!r}")
    return vals


def cmd_surface(args, out):
    levels = _floats(args.mc_levels, "--mc-levels")
    z1_range = _floats(args.z1_range, "--z1-range", 2)
    lag_range = _floats(args.lag_range, "--lag-range", 2)
    try:
        grid = tuple(int(x) for x in args.grid.lower().split("x"))
    except ValueError:
        raise InputError(f"--grid must look like 41x41, got {args.grid!r}") from None
    if len(grid) != 2:
        raise InputError(f"--grid must look like 41x41, got {args.grid!r}")
    surf = influence_surface(levels, z1_range, lag_range, grid, n=args.n, form=args.form)
    for mc, values in zip(surf.mc_levels, surf.by_level):
        rows = ((z, l, values[i, j]) for i, z in enumerate(surf.z1) for j, l in enumerate(surf.lag))
        out.csv(f"surface_mc{mc:+.3f}.csv", ["z1", "lag", "ic"], rows)
    rows = ((z, m, surf.lag_zero[i, j]) for i, z in enumerate(surf.z1) for j, m in enumerate(surf.mc_axis))
    out.csv("surface_lag0.csv", ["z1", "mc", "ic"], rows)
    print(f"wrote {len(surf.mc_levels)} surfaces plus the lag-zero variant (n={args.n})")


def _common(p, data=True):
    g = p.add_argument_group("common")
    if data:
        g.add_argument("--input", required=True, help="attribute CSV")
        g.add_argument("--id-col", default="id")
        g.add_argument("--value-col", default="value")
        g.add_argument("--weights", help="GAL contiguity file")
        g.add_argument("--geojson", help="FeatureCollection to annotate")
        g.add_argument("--join-key", help="feature property holding the id (default: --id-col)")
        g.add_argument("--permutations", type=int, default=999)
        g.add_argument("--alpha", type=float, default=0.05)
    g.add_argument("--lattice", help="grid shape RxC, e.g. 10x10")
    g.add_argument("--torus", action="store_true")
    g.add_argument("--contiguity", choices=("rook", "queen"), default="rook")
    g.add_argument("--out-dir", default=".")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--half-width", type=float, default=2.0, help="integration half-width in sigmas")
    g.add_argument("--form", choices=FORMS, default="difference")
    g.add_argument("--exact", action="store_true", help="use replace-and-recenter contamination")
    g.add_argument("--svg", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="moranlif", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="TOML file whose keys mirror the flags")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"moranlif {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lif", help="local influence function map")
    _common(p)
    p.set_defaults(func=cmd_lif)

    p = sub.add_parser("lisa", help="local Moran's I with permutation p-values")
    _common(p)
    p.set_defaults(func=cmd_lisa)

    p = sub.add_parser("simulate", help="SAR Monte Carlo LIF experiment")
    _common(p, data=False)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--replications", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("surface", help="influence surfaces over (z1, lag) per MC level")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--mc-levels", default=DEFAULT_MC_LEVELS)
    p.add_argument("--z1-range", default="-2,2")
    p.add_argument("--lag-range", default="-2,2")
    p.add_argument("--grid", default="41x41")
    p.add_argument("--form", choices=FORMS, default="difference")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_surface)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    with open(known.config, "rb") as fh:
        cfg = tomllib.load(fh)
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            dests = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in cfg.items() if k in dests})
            for a in sp._actions:
                if a.dest in cfg:
                    a.required = False


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        print(f"moranlif: error: config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="moranlif: %(message)s",
        stream=sys.stderr,
    )
    out = None
    try:
        out = Outputs(args.out_dir, _header(args))
        args.func(args, out)
        written = out.commit()
        out = None
        for path in written:
            log.info("wrote %s", path)
        return EXIT_OK
    except (InputError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"moranlif: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"moranlif: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"moranlif: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        if out is not None:
            out.discard()


if __name__ == "__main__":
    sys.exit(main())
