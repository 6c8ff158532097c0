"""Command-line front end: every computation as a subcommand.

All JSON outputs carry ``"schema": "yule/1"`` and 17-significant-digit
floats; every file output gets a sibling ``<out>.manifest.json`` recording
the exact argv, config, versions and timestamps.  ``yule replay`` re-executes
a manifest (output paths suffixed) so quadrature results can be compared
bit for bit.

Exit codes: 0 success, 1 invalid flags or arguments, 2 numeric errors
(divergence or exhausted quadrature budget).
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import __version__
from ._jsonio import SCHEMA, RunManifest, dumps, load_manifest, print_json, write_json
from .bounds import build_bound_report
from .errors import DomainError, NumericError, YuleError
from .kernel import dn_explicit, cached_context
from .mgf import MgfPoint, phi_n
from .moments import (CONTINUOUS, MomentRequest, moment, resolve_context,
                      second_moment_closed_form)
from .montecarlo import SimConfig, estimate_l1_distance, write_replicates_csv
from .reference import SECOND_MOMENTS, THETA50_MOMENTS

_TABLE1_GRID = (2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="yule", description=__doc__)
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap for quadrature cell evaluation")
    parser.add_argument("--cache-dir", default=None,
                        help="kernel spectrum cache (default: $YULE_CACHE_DIR)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moment", help="E[theta_n^m]")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--n", type=int)
    group.add_argument("--continuous", action="store_true")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--rel-tol", type=float, default=1e-7)
    p.add_argument("--backend", choices=("series", "closed"), default="series")
    p.add_argument("--out", default=None)

    p = sub.add_parser("table", help="regenerate a reference table as CSV")
    p.add_argument("--which", choices=("table1", "table2"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rel-tol", type=float, default=1e-7)

    p = sub.add_parser("simulate", help="coupled replicates to CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--fine-factor", type=int, required=True)
    p.add_argument("--replicates", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--antithetic", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("rate", help="L1 distance versus n and slope")
    p.add_argument("--n-list", required=True,
                   help="comma-separated walk lengths, e.g. 50,100,200")
    p.add_argument("--replicates", type=int, default=200_000)
    p.add_argument("--fine-factor", type=int, default=50)
    p.add_argument("--seed", type=int, default=20240001)
    p.add_argument("--out", default=None)

    p = sub.add_parser("bounds", help="constants C1..C5 and lemma checks")
    p.add_argument("--scan-max", type=int, default=500)
    p.add_argument("--out", default=None)

    p = sub.add_parser("charpoly", help="d_n(lambda)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)

    p = sub.add_parser("mgf", help="joint mgf at one point")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s11", type=float, required=True)
    p.add_argument("--s12", type=float, required=True)
    p.add_argument("--s22", type=float, required=True)

    p = sub.add_parser("replay", help="re-run a manifest, suffixing outputs")
    p.add_argument("manifest")
    p.add_argument("--suffix", default=".replay")
    return parser


def _emit(doc, out, manifest: RunManifest):
    doc = {"schema": SCHEMA, **doc}
    if out:
        write_json(out, doc)
        manifest.outputs.append(str(out))
        manifest.finish().write(f"{out}.manifest.json")
    else:
        print_json(doc)


def _cmd_moment(args, manifest):
    n = CONTINUOUS if args.continuous else args.n
    req = MomentRequest(n=n, m=args.order, rel_tol=args.rel_tol)
    if args.backend == "closed":
        if args.order != 2 or n is CONTINUOUS:
            raise DomainError("the closed backend covers --order 2 with finite --n")
        ctx = cached_context(args.n, args.cache_dir)
        res = second_moment_closed_form(ctx, rel_tol=args.rel_tol,
                                        workers=args.threads)
    else:
        ctx = resolve_context(n, args.cache_dir)
        res = moment(req, ctx, workers=args.threads)
    _emit({
        "command": "moment",
        "n": "continuous" if n is CONTINUOUS else n,
        "order": args.order,
        "value": res.value,
        "abs_error_estimate": res.abs_error_estimate,
        "cells_used": res.cells_used,
        "backend": res.backend,
        "exact": res.exact,
    }, args.out, manifest)


def _cmd_table(args, manifest):
    rows = []
    if args.which == "table1":
        header = ("n", "value", "abs_error", "paper_value", "abs_diff")
        for n in _TABLE1_GRID:
            ctx = cached_context(n, args.cache_dir)
            res = second_moment_closed_form(ctx, rel_tol=args.rel_tol,
                                            workers=args.threads)
            ref = SECOND_MOMENTS[n]
            rows.append((n, res.value, res.abs_error_estimate, ref,
                         abs(res.value - ref)))
        res = moment(MomentRequest(n=CONTINUOUS, m=2, rel_tol=args.rel_tol),
                     workers=args.threads)
        ref = SECOND_MOMENTS["inf"]
        rows.append(("inf", res.value, res.abs_error_estimate, ref,
                     abs(res.value - ref)))
    else:
        header = ("k", "value", "abs_error", "paper_value", "abs_diff")
        ctx = cached_context(50, args.cache_dir)
        for k in sorted(THETA50_MOMENTS):
            res = moment(MomentRequest(n=50, m=k, rel_tol=args.rel_tol),
                         ctx, workers=args.threads)
            ref = THETA50_MOMENTS[k]
            rows.append((k, res.value, res.abs_error_estimate, ref,
                         abs(res.value - ref)))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[0]] + [format(v, ".17g") for v in row[1:]])
    manifest.outputs.append(str(args.out))
    manifest.finish().write(f"{args.out}.manifest.json")


def _cmd_simulate(args, manifest):
    cfg = SimConfig(n=args.n, fine_factor=args.fine_factor,
                    replicates=args.replicates, seed=args.seed,
                    antithetic=args.antithetic)
    manifest.seed = args.seed
    rows = write_replicates_csv(cfg, args.out)
    manifest.outputs.append(str(args.out))
    manifest.finish().write(f"{args.out}.manifest.json")
    print_json({"schema": SCHEMA, "command": "simulate", "rows": rows,
                "out": str(args.out)})


def _cmd_rate(args, manifest):
    n_list = [int(tok) for tok in args.n_list.split(",") if tok.strip()]
    if not n_list:
        raise DomainError("--n-list must name at least one walk length")
    manifest.seed = args.seed
    points = []
    for n in n_list:
        cfg = SimConfig(n=n, fine_factor=args.fine_factor,
                        replicates=args.replicates, seed=args.seed)
        points.append(estimate_l1_distance(cfg))
    slope = float("nan")
    if len(points) >= 2:
        slope = float(np.polyfit(np.log([p["n"] for p in points]),
                                 np.log([p["mean"] for p in points]), 1)[0])
    _emit({
        "command": "rate",
        "fine_factor": args.fine_factor,
        "replicates": args.replicates,
        "seed": args.seed,
        "points": points,
        "slope": slope,
    }, args.out, manifest)


def _cmd_bounds(args, manifest):
    report = build_bound_report(n_scan_max=args.scan_max)
    _emit({"command": "bounds", **report.to_dict()}, args.out, manifest)


def _cmd_charpoly(args, manifest):
    value = dn_explicit(args.n, args.lam)
    _emit({"command": "charpoly", "n": args.n, "lambda": args.lam,
           "value": value}, None, manifest)


def _cmd_mgf(args, manifest):
    ctx = cached_context(args.n, args.cache_dir)
    value = phi_n(ctx, MgfPoint(args.s11, args.s12, args.s22))
    _emit({"command": "mgf", "n": args.n, "s11": args.s11, "s12": args.s12,
           "s22": args.s22, "value": value}, None, manifest)


def _cmd_replay(args, _manifest):
    doc = load_manifest(args.manifest)
    argv = list(doc["argv"])
    out = []
    for i, tok in enumerate(argv):
        if i > 0 and argv[i - 1] == "--out":
            tok = tok + args.suffix
        out.append(tok)
    return main(out)


_DISPATCH = {
    "moment": _cmd_moment,
    "table": _cmd_table,
    "simulate": _cmd_simulate,
    "rate": _cmd_rate,
    "bounds": _cmd_bounds,
    "charpoly": _cmd_charpoly,
    "mgf": _cmd_mgf,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "replay":
        return _cmd_replay(args, None)
    manifest = RunManifest(command=args.command, argv=argv,
                           config={k: v for k, v in vars(args).items()
                                   if k != "command"}).start()
    try:
        _DISPATCH[args.command](args, manifest)
    except DomainError as exc:
        sys.stderr.write(f"yule: invalid request: {exc}\n")
        return 1
    except (NumericError, YuleError) as exc:
        sys.stderr.write(f"yule: numeric failure: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
