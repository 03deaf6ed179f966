"""Command-line front end.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BENCHMARKS, run_benchmark
from .evaluate import ExperimentConfig, run_experiment
from .io import load_data, write_jst, write_matrix_csv
from .multifactor import DEFLATIONS, fit_multifactor, variance_explained
from .power import FitError, FitOptions
from .simgen import SimSpec, SpecError, generate

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
_VARIANTS = {"scalar": "scalar", "general": "generalized", "generalized": "generalized", "matrix": "matrix"}

log = logging.getLogger("jisstpca")


class UsageError(Exception):
    pass


def _key_line(text: str, key: str) -> int:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def _load_json(path) -> tuple[dict, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None


def _load_spec(path, d=None, text=None) -> SimSpec:
    if d is None:
        d, text = _load_json(path)
    try:
        return SimSpec.from_dict(d)
    except SpecError as exc:
        raise UsageError(f"{path}:{_key_line(text, exc.field)}: field '{exc.field}': {exc.message}") from None


def _int_list(s: str) -> list[int]:
    try:
        vals = [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"ranks must be positive integers, got {s!r}")
    return vals


def _lambda(s: str):
    if s == "auto":
        return s
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number in [0, 1], got {s!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"lambda must lie in [0, 1], got {v}")
    return v


def cmd_simulate(args) -> int:
    spec = _load_spec(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    X, Y, truth = generate(spec)
    write_jst(out / "X.jst", X)
    if isinstance(Y, np.ndarray):
        write_matrix_csv(out / "Y.csv", Y)
    else:
        write_jst(out / "Y.jst", Y)
    doc = {"version": __version__, "spec": spec.to_dict(), "truth": truth.to_dict()}
    if spec.structure == "structured":
        doc["laplacian"] = "unnormalized (D - A)"
    (out / "truth.json").write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    if args.bic is not None and (args.ranks_x or args.ranks_y):
        raise UsageError("--bic cannot be combined with --ranks-x/--ranks-y")
    variant = _VARIANTS[args.variant]
    K = args.k
    if args.bic is None:
        if args.ranks_x is None:
            raise UsageError("give --ranks-x (and --ranks-y) or --bic")
        if len(args.ranks_x) == 1 and K > 1:
            args.ranks_x = args.ranks_x * K
        ranks_y = args.ranks_y or [1]
        if len(ranks_y) == 1 and K > 1:
            ranks_y = ranks_y * K
        if len(args.ranks_x) != K or len(ranks_y) != K:
            raise UsageError(f"rank lists must have one entry per factor (K={K})")
    else:
        ranks_y = None
        bic = args.bic if len(args.bic) == 2 else args.bic * 2
    try:
        X = load_data(args.x)
        Y = load_data(args.y)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if variant == "matrix" and not (isinstance(Y, np.ndarray) and Y.ndim == 2):
        raise UsageError("--variant matrix needs a covariate matrix (.csv) for Y")
    if variant != "matrix" and isinstance(Y, np.ndarray):
        raise UsageError("a covariate matrix Y requires --variant matrix")
    try:
        opts = FitOptions(lam=args.lam, t_max=args.tmax, tol=args.tol, init=args.init)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    t0 = time.perf_counter()
    try:
        if args.bic is not None:
            stack = fit_multifactor(X, Y, K, bic=tuple(bic), deflation=args.deflation, variant=variant, opts=opts)
        else:
            stack = fit_multifactor(
                X, Y, K, args.ranks_x, ranks_y, deflation=args.deflation, variant=variant, opts=opts
            )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    elapsed = time.perf_counter() - t0
    scan = []
    try:
        scan = [list(variance_explained(X, Y, stack, k)) for k in range(1, len(stack) + 1)]
    except FitError as exc:
        log.warning("variance explained not reported: %s", exc)
    doc = {
        "version": __version__,
        "variant": variant,
        "K": K,
        "seed": args.seed,
        "options": {"lam": args.lam, "t_max": args.tmax, "tol": args.tol, "init": args.init, "deflation": args.deflation},
        "stack": stack.to_dict(),
        "variance_explained": scan,
        "seconds": elapsed,
    }
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {args.out} (ranks x {stack.ranks_x}, y {stack.ranks_y}, {elapsed:.3f}s)")
    return EXIT_OK


def cmd_eval(args) -> int:
    d, text = _load_json(args.config)
    if "sim" not in d or "methods" not in d:
        raise UsageError(f"{args.config}:1: experiment config needs 'sim' and 'methods'")
    spec = _load_spec(args.config, d["sim"], text)
    rest = {k: v for k, v in d.items() if k not in ("sim", "methods")}
    try:
        cfg = ExperimentConfig(spec, d["methods"], threads=args.threads, **rest)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = run_experiment(cfg)
    report.to_csv(out / "report.csv")
    report.to_json(out / "summary.json")
    if report.failures:
        print(f"{len(report.failures)} failed fits recorded in summary.json", file=sys.stderr)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    run_benchmark(
        args.name, args.out, replicates=args.replicates, seed=args.seed, threads=args.threads, plots=not args.no_plots
    )
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jisstpca", description="Joint PCA of paired network populations.")
    parser.add_argument("--version", action="version", version=f"jisstpca {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a dataset from a JSON simulation spec")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a factor stack to X and Y")
    p.add_argument("x", help="X tensor (.jst or CSV manifest .json)")
    p.add_argument("y", help="Y tensor (.jst, .json) or covariate matrix (.csv)")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--ranks-x", type=_int_list)
    p.add_argument("--ranks-y", type=_int_list)
    p.add_argument("--bic", type=_int_list, metavar="RX_MAX[,RY_MAX]")
    p.add_argument("--variant", choices=sorted(_VARIANTS), default="scalar")
    p.add_argument("--deflation", choices=DEFLATIONS, default="subtract")
    p.add_argument("--lambda", dest="lam", type=_lambda, default="auto")
    p.add_argument("--init", choices=("spectral", "warm"), default="spectral")
    p.add_argument("--tmax", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="factors.json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="run a Monte-Carlo experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run a preset benchmark")
    p.add_argument("name", choices=BENCHMARKS)
    p.add_argument("--out", required=True)
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if getattr(args, "threads", None) is not None and args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"jisstpca {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FitError as exc:
        print(f"jisstpca {args.command}: fit failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
