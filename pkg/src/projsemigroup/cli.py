"""Command-line interface: ``width``, ``dimension``, ``exact``, ``verify``, ``randomop``.

CSV goes to ``--out`` (or stdout); the JSON summary goes next to it as
``<out>.json`` (or to stderr). ``--workers`` and output paths are not echoed
in summaries, so outputs are byte-identical across worker counts.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import intensity as _intensity
from . import mc, randomop, verify, widths
from .widths import CompactSpec

COLUMNS = ("quantity", "t", "mc_mean", "mc_stderr", "exact", "asymptote", "ratio", "censored_fraction")
_NOT_ECHOED = {"workers", "out", "func", "command"}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def _csv(records: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        w.writerow([_fmt(r.get(c)) for c in COLUMNS])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def _echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in _NOT_ECHOED}


def _emit(args, records: list[dict]) -> None:
    summary = _dump({"command": args.command, "flags": _echo(args),
                     "master_seed": getattr(args, "seed", None), "records": records})
    table = _csv(records)
    if args.out:
        out = Path(args.out)
        out.write_text(table)
        out.with_name(out.name + ".json").write_text(summary)
    else:
        sys.stdout.write(table)
        sys.stderr.write(summary)


def _t_grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --t-grid {text!r}") from None


def _asymptote(kind: str, t: float):
    try:
        return widths.asymptote(kind, t)
    except ValueError:
        return None


def _ratio(value, ref):
    if value is None or ref in (None, 0):
        return None
    return value / ref


def cmd_width(args) -> int:
    model = _intensity.parse_intensity(args.intensity)
    if args.compact == "diagonal":
        compact = CompactSpec("diagonal", widths.parse_rule(args.a_rule))
        quantity, kind = "width_diag", "diag_mean"
    else:
        compact = CompactSpec("ellipsoid", widths.parse_rule(args.b_rule))
        quantity, kind = "width_ellipsoid", "ell_mean"
    spec = mc.ExperimentSpec(quantity, args.t_grid, args.paths, args.seed, model, compact,
                             args.trunc_eps)
    default = compact.is_default and model == _intensity.linear()
    records = []
    for est in mc.run_experiment(spec, args.workers):
        exact = None
        if args.exact:
            if default and compact.kind == "diagonal":
                exact = widths.exact_mean_width_sq_diagonal(est.t)
            elif default:
                exact = widths.exact_mean_width_sq_ellipsoid(est.t)
            else:
                exact = widths.mean_width_sq(compact, est.t, model)
        ref = _asymptote(kind, est.t) if default else None
        records.append({
            "quantity": quantity, "t": est.t, "mc_mean": est.mean, "mc_stderr": est.stderr,
            "exact": exact, "asymptote": ref,
            "ratio": _ratio(exact if exact is not None else est.mean, ref),
            "censored_fraction": est.censored_fraction,
        })
    _emit(args, records)
    return 0


def cmd_dimension(args) -> int:
    model = _intensity.parse_intensity(args.intensity)
    spec = mc.ExperimentSpec("alpha", args.t_grid, args.paths, args.seed, model,
                             trunc_eps=args.trunc_eps)
    vals, _ = mc.simulate_paths(spec, args.workers)
    records = []
    for j, t in enumerate(spec.t_grid):
        est = mc.estimate(vals[:, j], t)
        mean = widths.expected_dimension(t, model)
        scale = _asymptote("alpha_scale", t)
        records.append({"quantity": "alpha", "t": t, "mc_mean": est.mean,
                        "mc_stderr": est.stderr, "exact": mean, "asymptote": scale,
                        "ratio": _ratio(mean, scale)})
        zero = mc.estimate(vals[:, j] == 0, t)
        log_c = widths.log_void_probability(t, model)
        records.append({"quantity": "alpha_zero", "t": t, "mc_mean": zero.mean,
                        "mc_stderr": zero.stderr, "exact": math.exp(log_c)})
        limit = -widths.ZETA2 if model == _intensity.linear() else None
        records.append({"quantity": "t_log_c", "t": t, "exact": t * log_c, "asymptote": limit,
                        "ratio": _ratio(t * log_c, limit)})
    _emit(args, records)
    return 0


_EXACT = {
    "mean-width-diag": lambda a: widths.exact_mean_width_sq_diagonal(a.t, 1e-10),
    "var-width-diag": lambda a: widths.exact_var_width_sq_diagonal(a.t, 1e-10),
    "mean-width-ell": lambda a: widths.exact_mean_width_sq_ellipsoid(a.t, 1e-10),
    "c-of-t": lambda a: widths.void_probability(a.t),
    "alpha-mean": lambda a: widths.expected_dimension(a.t),
    "survival-inv-width": lambda a: widths.survival_law_inv_width(a.t, a.n),
}


def cmd_exact(args) -> int:
    if args.quantity == "survival-inv-width" and args.n is None:
        print("error: survival-inv-width needs --n", file=sys.stderr)
        return 2
    print(f"{_EXACT[args.quantity](args):.15g}")
    return 0


def cmd_verify(args) -> int:
    results = verify.run_suite(args.suite, args.paths, args.seed, args.workers)
    ok = all(r.passed for r in results)
    report = _dump({"suite": args.suite, "paths": args.paths, "master_seed": args.seed,
                    "passed": ok, "checks": [r.as_dict() for r in results]})
    if args.out:
        Path(args.out).write_text(report)
    else:
        sys.stdout.write(report)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] criterion {r.criterion}: {r.name}",
              file=sys.stderr)
    return 0 if ok else 1


def cmd_randomop(args) -> int:
    rng = mc.derive_path_stream(args.seed, 0)
    if args.demo == "point-eval":
        rep = randomop.point_eval_demo(args.family, args.n, rng)
        payload = asdict(rep)
    else:
        part = randomop.sample_partition(args.rate, rng)
        op = randomop.condexp_matrix(part, args.grid)
        ev = op.spectrum()
        payload = {
            "rate": args.rate, "grid": args.grid, "cuts": list(part.cuts),
            "intervals": part.n_intervals, "cells": op.n_cells, "trace": op.trace(),
            "hs_sum": float(randomop.hs_sum_basis(op, op.n_cells)[-1]),
            "symmetry_defect": op.symmetry_defect(), "idempotence_defect": op.idempotence_defect(),
            "spectrum_defect": float(np.max(np.minimum(abs(ev), abs(ev - 1)))),
            "rank_from_spectrum": int(np.count_nonzero(ev > 0.5)),
        }
    text = _dump({"command": "randomop", "flags": _echo(args), "report": payload})
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _mc_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--intensity", default="linear:1.0",
                   help="linear:C | power:P:C | table:PATH:<linear:C|power:P:C>")
    p.add_argument("--t-grid", type=_t_grid, required=True, help="comma-separated times")
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trunc-eps", type=float, default=1e-9)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", help="CSV path; the JSON summary is written to <out>.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="projsemigroup",
                                     description="Random projection semigroups driven by Poisson clocks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("width", help="Monte-Carlo and exact squared widths of a compact")
    p.add_argument("--compact", choices=("diagonal", "ellipsoid"), required=True)
    p.add_argument("--a-rule", default="inv:1", help="box coefficients, inv:P means a_k = k^-P")
    p.add_argument("--b-rule", default="lin:1", help="ellipsoid weights, lin:C means b_k = C k")
    p.add_argument("--exact", action="store_true", help="add exact mean column")
    _mc_flags(p)
    p.set_defaults(func=cmd_width)

    p = sub.add_parser("dimension", help="dimension of the random subspace")
    _mc_flags(p)
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("exact", help="print one closed-form value")
    p.add_argument("--quantity", choices=tuple(_EXACT), required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", choices=("semigroup", "widths", "dimension", "randomop", "all"),
                   required=True)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", help="JSON report path (default stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("randomop", help="random operator demos on L2[0,1]")
    p.add_argument("--demo", choices=("point-eval", "poisson-condexp"), required=True)
    p.add_argument("--family", choices=("constant", "linear", "rademacher"), default="rademacher")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--rate", type=float, default=5.0)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_randomop)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
