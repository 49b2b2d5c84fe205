"""Command-line front end.

Exit codes: 0 success, 1 a check or construction condition failed,
2 bad input (unreadable file, schema or parameter error).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import (AmbiguousContext, CopulaError, DomainError, IncompatibleLevels,
                     ModelFormatError, SupportInvalid, ZeroLoad)
from .models import build_from_config, dumps_model, load_model
from .numerics import EPS
from .probit import (check_compatibility, injured_fraction, levels_from_json, probit_value,
                     read_exposure_csv, sample_threshold_chain, write_chain_csv)
from .sampling import format_pairs_csv, sample_pairs, to_normal_pairs
from .validation import validate_copula

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
_INPUT_ERRORS = (DomainError, SupportInvalid, ModelFormatError, AmbiguousContext, ZeroLoad,
                 OSError, json.JSONDecodeError)


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_build(args) -> int:
    cfg = json.loads(Path(args.config).read_text())
    c = build_from_config(cfg)
    text = dumps_model(c, cfg)
    _emit(text, args.out)
    if args.out not in (None, "-"):
        u0 = getattr(c, "u0", None)
        extra = f" u0={u0!r}" if u0 is not None else ""
        print(f"wrote {args.out}{extra}", file=sys.stderr)
    return EXIT_OK


def grid_values(c, what: str, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not 10 <= n <= 2000:
        raise DomainError(f"grid size must lie in [10, 2000], got {n}")
    x = np.linspace(EPS, 1.0 - EPS, n)
    uu, vv = np.meshgrid(x, x, indexing="ij")
    u, v = uu.ravel(), vv.ravel()
    fn = {"cdf": c.cdf, "density": c.density, "conditional": c.conditional_cdf}.get(what)
    if fn is None:
        raise DomainError(f"unknown grid field {what!r}")
    return u, v, np.asarray(fn(u, v), dtype=float)


def cmd_grid(args) -> int:
    c = load_model(args.model)
    u, v, val = grid_values(c, args.what, args.n)
    _emit(format_pairs_csv(np.column_stack([u, v, val]), ("u", "v", "value")), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    c = load_model(args.model)
    b = sample_pairs(c, args.n, args.seed, workers=args.workers)
    if args.normal:
        text = format_pairs_csv(to_normal_pairs(b), ("x", "y"))
    else:
        text = format_pairs_csv(b.pairs, ("u", "v"))
    _emit(text, args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    c = load_model(args.model)
    rep = validate_copula(c, args.grid, args.tau_samples, args.seed)
    _emit(rep.to_json() + "\n", args.out)
    for chk in rep.checks:
        print(f"{'PASS' if chk.passed else 'FAIL'} {chk.name} worst={chk.worst:.3e}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_probit(args) -> int:
    levels = levels_from_json(Path(args.levels).read_text())
    exposure = read_exposure_csv(args.exposure) if args.exposure else None
    ctx = {}
    if args.t is not None:
        ctx["t"] = args.t
    elif exposure is not None:
        ctx["t"] = exposure.duration()
    if args.c_max is not None:
        ctx["c_max"] = args.c_max
    elif exposure is not None:
        ctx["c_max"] = exposure.max_concentration(ctx["t"])
    report = {"context": ctx, "transitions": [], "levels": []}
    ok = True
    for i in range(len(levels) - 1):
        r = check_compatibility(levels[i], levels[i + 1], ctx)
        ok &= r.compatible
        report["transitions"].append({"from": i + 1, "to": i + 2, "compatible": r.compatible,
                                      "delta": r.delta_i, "case": r.case_tag, "reason": r.reason})
        if not r.compatible:
            print(f"levels {i + 1} -> {i + 2} incompatible ({r.case_tag}): {r.reason}",
                  file=sys.stderr)
    if exposure is not None:
        for p in levels:
            report["levels"].append({"label": p.label, "probit": probit_value(p, exposure, ctx["t"]),
                                     "injured_fraction": injured_fraction(p, exposure, ctx["t"])})
    if args.sample is None:
        print("deltas: " + " ".join(f"{t['delta']!r}" for t in report["transitions"]), file=sys.stderr)
        _emit(json.dumps(report, indent=2) + "\n", args.out)
        return EXIT_OK if ok else EXIT_FAIL
    if not ok:
        return EXIT_FAIL
    n, seed = args.sample
    chain = sample_threshold_chain(levels, ctx, n, seed, allow_singular=args.allow_singular)
    labels = [p.label or f"gamma_{j + 1}" for j, p in enumerate(levels)]
    if args.out in (None, "-"):
        sys.stdout.write(format_pairs_csv(chain.gammas, tuple(labels)))
    else:
        write_chain_csv(args.out, chain, labels)
    return EXIT_OK


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypocopula",
                                 description="Copulas with prescribed support: build, grid, sample, "
                                             "validate, probit chains.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a model file from a JSON config")
    p.add_argument("config")
    p.add_argument("-o", "--out", help="model file (default stdout)")
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("grid", help="evaluate cdf, density or conditional CDF on an n x n grid")
    p.add_argument("model")
    p.add_argument("what", choices=["cdf", "density", "conditional"])
    p.add_argument("-n", type=int, default=101)
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_grid)

    p = sub.add_parser("sample", help="draw pairs by conditional inversion")
    p.add_argument("model")
    p.add_argument("-n", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normal", action="store_true", help="emit standard-normal x,y instead of u,v")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("validate", help="run the validation suite; exit 1 on any failure")
    p.add_argument("model")
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--tau-samples", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("probit", help="check level compatibility or sample threshold chains")
    p.add_argument("levels", help="levels JSON")
    p.add_argument("exposure", nargs="?", help="exposure CSV t_start,t_end,concentration")
    p.add_argument("--t", type=float, help="exposure-duration bound (default: exposure end)")
    p.add_argument("--c-max", type=float, help="concentration bound (default: exposure max)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--check", action="store_true", help="report compatibility (default)")
    g.add_argument("--sample", nargs=2, type=int, metavar=("N", "SEED"))
    p.add_argument("--allow-singular", action="store_true",
                   help="accept Delta_i = 0 with the deterministic coupling")
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_probit)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IncompatibleLevels as exc:
        print(f"incompatible levels: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except CopulaError as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
