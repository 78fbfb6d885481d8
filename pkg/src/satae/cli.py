"""Command-line entry point: ``satae {gen-data,train,energy-grid,export-filters,comp-table}``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, data, model, nonlin, train
from .errors import NonFiniteLoss, SataeError

CATALOG = ("shrink", "relu", "satlin", "linear")


@dataclass
class RunManifest:
    config: dict
    nonlinearity: dict
    hidden: int
    dataset: dict
    seed: int
    artifacts: list = field(default_factory=list)
    duration_s: float = 0.0

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _floats(text: str, n: int, name: str):
    parts = text.split(":")
    try:
        vals = [float(v) for v in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name} must be {n} numbers separated by ':'")
    if len(vals) != n:
        raise argparse.ArgumentTypeError(f"{name} must be {n} numbers separated by ':'")
    return vals


def _bounds(text):
    x0, x1, y0, y1 = _floats(text, 4, "bounds")
    if not (x1 > x0 and y1 > y0):
        raise argparse.ArgumentTypeError("bounds need x_min < x_max and y_min < y_max")
    return x0, x1, y0, y1


def _range(text):
    lo, hi, step = _floats(text, 3, "range")
    if not (step > 0 and hi >= lo):
        raise argparse.ArgumentTypeError("range needs lo <= hi and step > 0")
    return lo, hi, step


def _tile(text):
    try:
        r, c = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("tile must look like 12x12")
    if r < 1 or c < 1:
        raise argparse.ArgumentTypeError("tile dimensions must be positive")
    return r, c


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def cmd_gen_data(args) -> int:
    if args.kind in data.TOY_KINDS:
        ds = data.gen_toy(args.kind, args.n, args.noise, args.seed)
    else:
        if args.input is None:
            raise SataeError(f"--kind {args.kind} needs --input")
        ds = data.load_idx(args.input) if args.kind == "idx" else data.load_cifar_batch(args.input)
        if args.binarize:
            ds = data.binarize(ds)
        if args.patch:
            ch, rows, cols = ds.image_shape
            ds = data.extract_patches(ds, rows, cols, args.patch, args.count, args.seed, channels=ch)
    if args.normalize:
        ds = data.normalize(ds, args.norm_mode)
    data.save_cache(args.out, ds)
    return 0


def _train_config(args) -> train.TrainConfig:
    base = train.TrainConfig.from_json(args.config).to_dict() if args.config else {}
    overrides = {
        "lr": args.lr, "seed": args.seed, "init_scale": args.init_scale,
        "reproject_every": args.reproject_every, "tied": args.tied,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    if args.no_shuffle:
        base["batch_order"] = False
    if args.no_dec_bias:
        base["dec_bias"] = False
    if args.alpha_max is not None or args.alpha_step is not None or args.epochs is not None:
        base["alpha_schedule"] = train.make_schedule(
            1.0 if args.alpha_max is None else args.alpha_max,
            0.1 if args.alpha_step is None else args.alpha_step,
            30 if args.epochs is None else args.epochs)
    return train.TrainConfig.from_dict(base)


def cmd_train(args) -> int:
    t0 = time.perf_counter()
    cfg = _train_config(args)
    f = nonlin.get(args.fn, args.lam)
    raw = Path(args.data).read_bytes()
    ds = data.parse_cache(raw, tag=f"cache:{args.data}")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        params, log = train.train(f, ds, args.hidden, cfg)
    except NonFiniteLoss as exc:
        print(f"error: training diverged in stage alpha={exc.alpha} (epoch {exc.epoch})",
              file=sys.stderr)
        return 1
    paths = [out / "model.satae", out / "log.csv", out / "manifest.json"]
    model.save_model(paths[0], params, f)
    log.write_csv(paths[1])
    RunManifest(
        config=cfg.to_dict(),
        nonlinearity={"kind": f.kind, "width": f.width},
        hidden=args.hidden,
        dataset={"path": str(args.data), "source_tag": ds.source_tag,
                 "sha256": hashlib.sha256(raw).hexdigest()},
        seed=cfg.seed,
        artifacts=[str(p) for p in paths],
        duration_s=time.perf_counter() - t0,
    ).write(paths[2])
    return 0


def cmd_energy_grid(args) -> int:
    p, f = model.load_model(args.model)
    grid = analysis.energy_grid(p, f, args.bounds, args.resolution)
    grid.write_csv(f"{args.out}.csv")
    grid.write_pgm(f"{args.out}.pgm", log_scale=args.log_scale)
    return 0


def cmd_export_filters(args) -> int:
    p, _ = model.load_model(args.model)
    rows, cols = args.tile
    tiling = analysis.tile_filters(p, rows, cols, args.channels)
    out = args.out or ("filters.pgm" if args.channels == 1 else "filters.ppm")
    tiling.write(out)
    return 0


def comp_table(fn: str, lam: float, lo: float, hi: float, step: float, numeric: bool = False,
               weights: nonlin.VariationWeights | None = None):
    """``(z, f_c)`` over ``lo:hi:step``; numeric for smooth and linear activations."""
    n = int(round((hi - lo) / step)) + 1
    z = lo + step * np.arange(n)
    if fn in CATALOG and fn != "linear" and not numeric:
        return z, nonlin.eval_comp(nonlin.get(fn, lam), z)
    weights = weights or nonlin.VariationWeights()
    m = int(math.ceil(weights.scale_cutoff / step))
    ext = lo + step * np.arange(-m, n + m)
    if fn in CATALOG:
        fprime = nonlin.eval_deriv(nonlin.get(fn, lam), ext)
    else:
        fprime = nonlin.SMOOTH[fn][1](ext)
    tab = nonlin.numeric_comp(ext, fprime, weights)
    return z, tab.table.fc[m:m + n]


def cmd_comp_table(args) -> int:
    lo, hi, step = args.range
    z, fc = comp_table(args.fn, args.lam, lo, hi, step, args.numeric,
                       nonlin.VariationWeights(rate=args.rate, scale_cutoff=args.cutoff))
    if args.out:
        nonlin.write_comp_csv(args.out, z, fc)
    else:
        sys.stdout.write("z,fc\n")
        for a, b in zip(z, fc):
            sys.stdout.write(f"{a:.17g},{b:.17g}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="satae", description="Saturating auto-encoder toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a dataset in the native cache format")
    g.add_argument("--kind", required=True, choices=list(data.TOY_KINDS) + ["idx", "cifar"])
    g.add_argument("--n", type=_positive_int, default=500)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--input", help="IDX or CIFAR batch file for --kind idx/cifar")
    g.add_argument("--binarize", action="store_true", help="map pixels to -1/+1 at 0.5")
    g.add_argument("--patch", type=_positive_int, help="extract square patches of this size")
    g.add_argument("--count", type=_positive_int, default=10000, help="number of patches")
    g.add_argument("--normalize", action="store_true")
    g.add_argument("--norm-mode", choices=["per_dim", "global"], default="per_dim")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train a SATAE and write model, log and manifest")
    t.add_argument("--data", required=True, help="native dataset cache (.satd)")
    t.add_argument("--config", help="TrainConfig JSON; flags override its fields")
    t.add_argument("--fn", choices=CATALOG, default="shrink")
    t.add_argument("--lambda", dest="lam", type=float, default=1.0)
    t.add_argument("--hidden", type=_positive_int, default=10)
    t.add_argument("--out-dir", default=".")
    t.add_argument("--lr", type=float)
    t.add_argument("--seed", type=int)
    t.add_argument("--init-scale", type=float)
    t.add_argument("--alpha-max", type=float)
    t.add_argument("--alpha-step", type=float)
    t.add_argument("--epochs", type=_positive_int, help="epochs per alpha stage")
    t.add_argument("--reproject-every", type=int)
    tied = t.add_mutually_exclusive_group()
    tied.add_argument("--tied", dest="tied", action="store_const", const=True)
    tied.add_argument("--untied", dest="tied", action="store_const", const=False)
    t.add_argument("--no-shuffle", action="store_true")
    t.add_argument("--no-dec-bias", action="store_true")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("energy-grid", help="reconstruction energy over a 2-D grid")
    e.add_argument("--model", required=True)
    e.add_argument("--bounds", type=_bounds, default=(-1.0, 1.0, -1.0, 1.0),
                   help="x_min:x_max:y_min:y_max")
    e.add_argument("--resolution", type=int, default=256)
    e.add_argument("--log-scale", action="store_true")
    e.add_argument("--out", default="energy", help="output prefix for .csv and .pgm")
    e.set_defaults(func=cmd_energy_grid)

    x = sub.add_parser("export-filters", help="tile decoder columns into a PGM/PPM")
    x.add_argument("--model", required=True)
    x.add_argument("--tile", type=_tile, required=True, help="ROWSxCOLS")
    x.add_argument("--channels", type=int, choices=[1, 3], default=1)
    x.add_argument("--out")
    x.set_defaults(func=cmd_export_filters)

    c = sub.add_parser("comp-table", help="tabulate a complementary function")
    c.add_argument("--fn", required=True, choices=list(CATALOG) + sorted(nonlin.SMOOTH))
    c.add_argument("--lambda", dest="lam", type=float, default=1.0)
    c.add_argument("--range", type=_range, default=(-3.0, 3.0, 0.01), help="lo:hi:step")
    c.add_argument("--numeric", action="store_true",
                   help="use the multi-scale construction even for catalog activations")
    c.add_argument("--rate", type=float, default=1.0, help="scale-weight decay rate")
    c.add_argument("--cutoff", type=float, default=20.0, help="largest scale integrated")
    c.add_argument("--out")
    c.set_defaults(func=cmd_comp_table)
    return ap


_VALUE_FLAGS = ("--range", "--bounds")


def _join_negative_values(argv):
    # argparse reads "-3:3:0.01" as an option; bind it to its flag instead
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_values(argv))
    if getattr(args, "resolution", 2) < 2:
        parser.error("--resolution must be >= 2")
    try:
        return args.func(args)
    except (SataeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
