"""Command-line entry point.

    surfsplit build-graph  --readout noisy --error-kind path --r 2 --t 3 --out g.txt
    surfsplit mc           --r 2 --rates 0.08 --trials 100000
    surfsplit split        --r 2 --rates 0.05 --M 200000
    surfsplit fit          results.csv [--pin-c]
    surfsplit report       DIR
    surfsplit run          --config experiment.yaml

Exit codes: 0 success, 2 configuration error, 3 rung-overlap failure,
4 input/output error.  Output goes to --output, else $SURFSPLIT_OUTPUT,
else ./surfsplit-out.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import math
import os
import sys

from .analysis import FitError, emit_results, fit_ansatz, read_results, write_curves
from .bennett import RungOverlapError
from .config import ConfigError, ExperimentConfig
from .experiment import build_setup, run_experiment
from .graph import save_graph
from .lattice import GeometryError

EXIT_OK, EXIT_CONFIG, EXIT_OVERLAP, EXIT_IO = 0, 2, 3, 4

_CONFIG_FLAGS = {
    "readout": str, "error_kind": str, "s": int, "b": int, "t": int, "outer": str,
    "method": str, "p_star": float, "p_start": float, "anchor": str, "trials": int,
    "M": int, "N": int, "sampler": str, "seed": int, "workers": int, "output": str,
}


def _add_config_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="YAML experiment file; flags override its fields")
    sp.add_argument("--r", type=int, nargs="+")
    sp.add_argument("--rates", type=float, nargs="+")
    for name, typ in _CONFIG_FLAGS.items():
        sp.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ)


def _config_from_args(args, method: str | None = None) -> ExperimentConfig:
    data = {}
    if args.config:
        import yaml

        try:
            with open(args.config) as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError("<root>", f"not valid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a mapping")
    for name in list(_CONFIG_FLAGS) + ["r", "rates"]:
        val = getattr(args, name, None)
        if val is not None:
            data[name] = val
    if method is not None and "method" not in data:
        data["method"] = method
    return ExperimentConfig.from_dict(data)


def _print_records(records) -> None:
    for q in records:
        sig = "inf" if not math.isfinite(q.sigma_rel) else f"{q.sigma_rel:.3f}"
        print(f"{q.method:10s} {q.error_kind:4s} {q.readout:9s} r={q.r} p={q.p:.5g} "
              f"P_L={q.P_L:.4e} sigma_rel={sig}")


def cmd_run(args, method: str | None = None) -> int:
    cfg = _config_from_args(args, method)
    out = cfg.output_dir()
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.yaml"), "w") as fh:
        fh.write(cfg.dumps())
    records = []
    try:
        records = run_experiment(cfg, out)
    finally:
        if records:
            emit_results(records, os.path.join(out, "results.csv"), os.path.join(out, "curves"))
    _print_records(records)
    return EXIT_OK


def cmd_split(args) -> int:
    method = None
    if getattr(args, "method", None) is None:
        method = "split-up" if (getattr(args, "readout", None) or "noiseless") == "noiseless" else "split-down"
    return cmd_run(args, method)


def cmd_build_graph(args) -> int:
    setup = build_setup(args.readout, args.error_kind, args.r, s=args.s, b=args.b, t=args.t,
                        p=args.p, outer=args.outer)
    save_graph(setup.graph, args.out)
    g = setup.graph
    print(f"wrote {args.out}: {g.n_vertices} vertices, {g.n_edges} edges, "
          f"{int(g.boundary.sum())} boundary vertices, |logical| = {int(g.logical.sum())}")
    return EXIT_OK


def cmd_fit(args) -> int:
    points = []
    for path in args.inputs:
        for q in read_results(path):
            if q.P_L > 0 and math.isfinite(q.sigma_rel):
                points.append((q.p, q.r, q.P_L, q.sigma_rel))
    pin = 4 * math.log(2) if args.pin_c else None
    res = fit_ansatz(points, pin_c=pin)
    payload = dict(coefficients=res.coefficients, pinned=res.pinned, condition=res.condition,
                   max_rel_deviation=float(abs(res.rel_deviation).max()),
                   n_points=len(points))
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_report(args) -> int:
    records = []
    for path in sorted(glob.glob(os.path.join(args.directory, "**", "*.csv"), recursive=True)):
        if os.path.basename(os.path.dirname(path)) == "report":
            continue
        try:
            records.extend(read_results(path))
        except (KeyError, ValueError):
            continue  # not a results file
    dest = os.path.join(args.directory, "report")
    os.makedirs(dest, exist_ok=True)
    emit_results(records, os.path.join(dest, "all_results.csv"))
    files = write_curves(records, dest)
    print(f"{len(records)} records, {len(files)} curve files in {dest}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="surfsplit", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("build-graph", help="serialize a decoding graph")
    g.add_argument("--readout", choices=("noiseless", "noisy"), default="noiseless")
    g.add_argument("--error-kind", choices=("loop", "path"), default="loop")
    g.add_argument("--r", type=int, default=2)
    g.add_argument("--s", type=int)
    g.add_argument("--b", type=int)
    g.add_argument("--t", type=int)
    g.add_argument("--p", type=float, default=0.005)
    g.add_argument("--outer", choices=("open", "closed"))
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_build_graph)

    for name, helptext in (("mc", "direct Monte Carlo"), ("split", "splitting ladder"),
                           ("run", "full experiment from a config")):
        sp = sub.add_parser(name, help=helptext)
        _add_config_flags(sp)
        if name == "mc":
            sp.set_defaults(func=lambda a: cmd_run(a, "mc"))
        elif name == "split":
            sp.set_defaults(func=cmd_split)
        else:
            sp.set_defaults(func=cmd_run)

    f = sub.add_parser("fit", help="fit the ansatz to result CSVs")
    f.add_argument("inputs", nargs="+")
    f.add_argument("--pin-c", action="store_true", help="fix c = 4 ln 2")
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    r = sub.add_parser("report", help="collect results under a directory into curve files")
    r.add_argument("directory")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GeometryError, FitError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RungOverlapError as exc:
        print(f"rung overlap failure: {exc}", file=sys.stderr)
        return EXIT_OVERLAP
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
