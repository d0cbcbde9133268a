"""
Command-line front end.

``spreadpc <command> [flags]``, or ``python3 -m spreadpc``.  A ``--config``
file holds ``key = value`` lines (``#`` comments); flags given on the command
line override it.  Exit codes: 0 success, 1 failed ``verify`` checks,
2 invalid input, 3 flagged-invalid result under ``--strict``, 4 I/O error.
"""

from __future__ import annotations

import argparse
import datetime
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import __version__
from . import acceptance as A
from . import diagrams as G
from . import formats as F
from . import returns as R
from . import simulate as S
from . import sums as U
from .kernels import KernelSpec, make_uniform

log = logging.getLogger("spreadpc")

EXIT_OK, EXIT_CHECKS, EXIT_INVALID, EXIT_FLAGGED, EXIT_IO = 0, 1, 2, 3, 4

COMMANDS = ("predict", "series", "sums", "continuum", "compare", "saw-enum",
            "triangle", "cp-limit", "simulate-op", "verify")


class UsageError(ValueError):
    """Invalid flag value; the message names the flag."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# parser

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("common")
    g.add_argument("--config", help="key = value file merged under the flags")
    g.add_argument("--format", choices=("json", "csv", "text"), default="json")
    g.add_argument("--output", help="write here instead of standard output")
    g.add_argument("--strict", action="store_true",
                   help="exit 3 when a result is flagged invalid")
    g.add_argument("--no-meta", action="store_true",
                   help="omit timestamps and timings (byte-stable output)")
    g.add_argument("--workers", type=_positive_int, default=None,
                   help="worker threads (default: $SPREADPC_WORKERS or 1)")
    g.add_argument("-v", "--verbose", action="store_true",
                   help="progress log on standard error")

    kern = _Parser(add_help=False)
    k = kern.add_argument_group("kernel")
    k.add_argument("--d", type=_positive_int)
    k.add_argument("--L", type=_positive_int)
    k.add_argument("--kernel", default="uniform",
                   help="'uniform' or a kernel definition file")

    model = _Parser(add_help=False)
    model.add_argument("--model", help="saw, cp, op or perc")
    model.add_argument("--override-gate", action="store_true",
                       help="allow d <= d_c (results are not rigorous there)")

    series = _Parser(add_help=False)
    series.add_argument("--nmax", type=_nonneg_int, default=None,
                        help="truncation length (default: adaptive)")
    series.add_argument("--tol", type=_positive_float, default=R.DEFAULT_TOL)

    sim = _Parser(add_help=False)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--trials", type=_positive_int, default=10**4)

    parser = _Parser(prog="spreadpc",
                     description="Leading-order critical points of spread-out models.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("predict", parents=[common, kern, model, series],
                       help="p_c = 1 + C(D) for one model")
    p.add_argument("--L-sweep", type=_positive_int, nargs="+", dest="L_sweep")

    sub.add_parser("series", parents=[common, kern, series],
                   help="return probabilities r_n")
    p = sub.add_parser("sums", parents=[common, kern, series],
                       help="all loop sums of one kernel")
    p.add_argument("--override-gate", action="store_true")

    p = sub.add_parser("continuum", parents=[common, model],
                       help="continuum-limit sums and predictions")
    p.add_argument("--d", type=_positive_int)
    p.add_argument("--L", type=_positive_int)
    p.add_argument("--nmax", type=_positive_int, default=R.N_MAX)

    p = sub.add_parser("compare", parents=[common],
                       help="lattice versus continuum discrepancy over L")
    p.add_argument("--d", type=_positive_int)
    p.add_argument("--L-sweep", type=_positive_int, nargs="+", dest="L_sweep",
                   default=[4, 8, 16, 32])
    p.add_argument("--alpha", type=int, choices=(0, 1), default=0)
    p.add_argument("--variant", choices=("weighted", "even"), default="weighted")
    p.add_argument("--nmax", type=_positive_int, default=R.N_MAX)
    p.add_argument("--override-gate", action="store_true")

    p = sub.add_parser("saw-enum", parents=[common, kern],
                       help="self-avoiding loop enumeration")
    p.add_argument("--nmax", type=_nonneg_int, default=8)
    p.add_argument("--method", choices=("auto", "partition", "dfs"), default="auto")

    p = sub.add_parser("triangle", parents=[common, kern, series],
                       help="random-walk triangle diagram")
    p.add_argument("--p", type=_positive_float, default=1.0)
    p.add_argument("--quadrature", action="store_true",
                   help="also evaluate the Fourier integral (d <= 3)")

    p = sub.add_parser("cp-limit", parents=[common, kern, series],
                       help="discretized contact-process sums")
    p.add_argument("--epsilon", type=_positive_float, nargs="+",
                   default=[0.2, 0.1, 0.05])
    p.add_argument("--direct", action="store_true",
                   help="use the binomial double sum instead of the closed form")

    p = sub.add_parser("simulate-op", parents=[common, kern, sim],
                       help="oriented percolation and random-walk Monte Carlo")
    p.add_argument("--mode", choices=("survival", "pc", "double", "returns"),
                   default="survival")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--horizon", type=_nonneg_int, default=100)
    p.add_argument("--n", type=_positive_int, default=2, help="walk length (returns)")
    p.add_argument("--bracket", type=float, nargs=2, default=[0.8, 1.3])
    p.add_argument("--pc-tol", type=_positive_float, default=1e-3, dest="pc_tol")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--ghost", action="store_true",
                   help="ignore collisions (branching process)")
    p.add_argument("--max-active", type=_positive_int, default=2000, dest="max_active")

    p = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    p.add_argument("--suite", default="fast", help="fast or full")
    p.add_argument("--soft-gating", action="store_true",
                   help="let the exploratory check gate the exit status")
    return parser


# ---------------------------------------------------------------------------
# config files

def read_config(path) -> dict[str, str]:
    out = {}
    for i, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"--config {path}, line {i}: expected key = value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        return action.choices[command]


def _convert(action, text: str):
    if action.nargs == 0:  # store_true
        low = text.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise UsageError(f"--{action.dest}: expected a boolean, got {text!r}")
        return low in ("true", "1", "yes")
    conv = action.type or str
    try:
        if action.nargs in ("+", "*", 2):
            vals = [conv(t) for t in text.replace(",", " ").split()]
        else:
            vals = conv(text)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"--{action.dest}: {exc}") from None
    if action.choices is not None:
        for v in vals if isinstance(vals, list) else [vals]:
            if v not in action.choices:
                raise UsageError(f"--{action.dest}: {v!r} not in {list(action.choices)}")
    return vals


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args
    sub = _subparser(parser, args.command)
    actions = {a.dest: a for a in sub._actions}
    values = read_config(args.config)
    defaults = {}
    for key, text in values.items():
        if key in ("config", "help") or key not in actions:
            raise UsageError(f"--config: unknown key {key!r} for {args.command}")
        defaults[key] = _convert(actions[key], text)
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# helpers

def _kernel(args) -> KernelSpec:
    if args.kernel == "uniform":
        if args.d is None or args.L is None:
            raise UsageError("--d and --L are required for the uniform kernel")
        return make_uniform(args.d, args.L)
    kernel = F.read_kernel(args.kernel)
    for flag in ("d", "L"):
        given = getattr(args, flag)
        if given is not None and given != getattr(kernel, flag):
            raise UsageError(f"--{flag}={given} conflicts with --kernel {args.kernel}")
    return kernel


def _series(args, kernel) -> R.ReturnSeries:
    return R.return_series(kernel, args.nmax, tol=args.tol)


def _require(args, *flags):
    for f in flags:
        if getattr(args, f, None) is None:
            raise UsageError(f"--{f} is required for {args.command}")


def _prediction_text(pred: U.Prediction) -> str:
    order = "beta^2" if pred.source == "Discrete" else "beta/L"
    lines = [
        f"{pred.model}  d={pred.d}  L={pred.L}  beta={pred.beta:.6e}",
        f"  p_c = 1 + {pred.correction_term:.10e} + O({order})",
        f"      = {pred.p_c_leading:.12f}  (error scale {pred.error_scale:.3e})",
        f"  sum {pred.components.get('sum')}, N={pred.truncation_N}, "
        f"tail valid: {pred.tail_valid}",
    ]
    if pred.gate_overridden:
        lines.append("  warning: d <= d_c, dimension gate overridden")
    return "\n".join(lines) + "\n"


def _text(obj) -> str:
    if isinstance(obj, dict):
        return "".join(f"{k}: {v}\n" for k, v in obj.items())
    return f"{obj}\n"


class _Result:
    """What a command produced: a JSON payload plus optional CSV/text forms."""

    def __init__(self, payload: dict, csv: str | None = None, text: str | None = None,
                 flagged: bool = False):
        self.payload, self.csv, self.text, self.flagged = payload, csv, text, flagged


# ---------------------------------------------------------------------------
# commands

def cmd_predict(args) -> _Result:
    _require(args, "model")
    if args.L_sweep:
        if args.kernel != "uniform":
            raise UsageError("--L-sweep needs the uniform kernel")
        _require(args, "d")
        kernels = [make_uniform(args.d, L) for L in args.L_sweep]
    else:
        kernels = [_kernel(args)]
    preds = []
    for k in kernels:
        U.check_gate(args.model, k.d, args.override_gate)
        series = R.return_series(k, args.nmax, tol=args.tol)
        preds.append(U.predict_pc(args.model, series, args.tol,
                                  override_gate=args.override_gate))
    flagged = any(not p.tail_valid for p in preds)
    payload = preds[0].to_dict() if len(preds) == 1 else \
        {"predictions": [p.to_dict() for p in preds]}
    return _Result(payload, F.predictions_csv(preds),
                   "".join(_prediction_text(p) for p in preds), flagged)


def cmd_series(args) -> _Result:
    s = _series(args, _kernel(args))
    payload = {"d": s.d, "L": s.L, "method": s.method, "N": s.N,
               "r_n": s.values.tolist(), "gauss_constant": s.gauss_constant}
    if s.exact:
        payload["rational"] = s.exact
    if s.tail is not None:
        payload["tail"] = asdict(s.tail)
    text = "".join(f"{n:4d}  {r:.17g}\n" for n, r in enumerate(s.values.tolist()))
    flagged = s.tail is not None and not s.tail.valid
    return _Result(payload, F.series_csv(s), text, flagged)


def _sums_payload(sums: U.LoopSums) -> dict:
    return {"S_all": sums.S_all, "S_even": sums.S_even,
            "S_weighted": sums.S_weighted, "triangle": sums.triangle,
            "N": sums.N, "valid": sums.valid,
            "tails": {k: asdict(v) for k, v in sums.tails.items()}}


def cmd_sums(args) -> _Result:
    k = _kernel(args)
    if k.d <= 2 and not args.override_gate:
        raise U.DimensionGateError(f"loop sums need d > 2, got d={k.d}")
    s = _series(args, k)
    sums = U.loop_sums(s, args.tol)
    payload = {"d": s.d, "L": s.L, "beta": s.beta, **_sums_payload(sums)}
    flagged = not all(v for key, v in sums.valid.items() if key != "triangle")
    return _Result(payload, None, _text(payload), flagged)


def cmd_continuum(args) -> _Result:
    _require(args, "d")
    if args.model:
        _require(args, "L")
        pred = U.predict_pc_continuum(args.model, args.d, args.L, N=args.nmax,
                                      override_gate=args.override_gate)
        return _Result(pred.to_dict(), F.predictions_csv([pred]),
                       _prediction_text(pred), not pred.tail_valid)
    if args.d <= 2 and not args.override_gate:
        raise U.DimensionGateError(f"continuum sums need d > 2, got d={args.d}")
    sums = U.continuum_sums(args.d, args.nmax)
    payload = {"d": args.d, "source": "Continuum", **_sums_payload(sums)}
    return _Result(payload, None, _text(payload),
                   not (sums.valid["S_all"] and sums.valid["S_even"]))


def cmd_compare(args) -> _Result:
    _require(args, "d")
    rows = U.compare_discrete_continuum(args.d, args.L_sweep, args.alpha,
                                        variant=args.variant, N=args.nmax,
                                        override_gate=args.override_gate)
    payload = {"d": args.d, "alpha": args.alpha, "variant": args.variant,
               "rows": [asdict(r) for r in rows]}
    text = "".join(f"L={r.L:4d}  delta={r.delta:.4e}  delta/(beta/L)={r.ratio:.5f}\n"
                   for r in rows)
    return _Result(payload, F.discrepancy_csv(rows), text,
                   not all(r.valid for r in rows))


def cmd_saw_enum(args) -> _Result:
    k = _kernel(args)
    enum = G.saw_loop_sum(k, args.nmax, method=args.method)
    bound = G.saw_correction_bound(R.return_series(k))
    payload = {"d": k.d, "L": k.L, "nmax": args.nmax, "method": enum.method,
               "all_loops": [float(x) for x in enum.all_loops],
               "saw_loops": [float(x) for x in enum.saw_loops],
               "pi1_truncated": enum.pi1_truncated, "defect": enum.defect,
               "correction_bound": bound.value, "bound_valid": bound.valid}
    text = (f"pi1 (n <= {args.nmax}) = {enum.pi1_truncated:.10e}\n"
            f"closed walks minus loops = {enum.defect:.4e} "
            f"(bound {bound.value:.4e})\n")
    return _Result(payload, F.loops_csv(enum), text, not bound.valid)


def cmd_triangle(args) -> _Result:
    k = _kernel(args)
    if not 0 < args.p <= 1:
        raise UsageError(f"--p must lie in (0, 1], got {args.p}")
    s = _series(args, k)
    t = U.triangle(s, args.p)
    payload = {"d": k.d, "L": k.L, "p": args.p, "triangle": t.value,
               "valid": t.valid, "triangle_times_L_d": t.value * k.L**k.d, "N": s.N}
    if args.quadrature:
        if k.d > 3:
            raise UsageError("--quadrature is limited to d <= 3")
        payload["quadrature"] = U.triangle_quadrature(k, args.p)
    return _Result(payload, None, _text(payload), not t.valid)


def cmd_cp_limit(args) -> _Result:
    k = _kernel(args)
    s = _series(args, k)
    s_all = U.loop_sums(s, args.tol).S_all
    method = "direct" if args.direct else "resummed"
    rows = []
    for eps in args.epsilon:
        if eps > 1:
            raise UsageError(f"--epsilon values must lie in (0, 1], got {eps}")
        f = U.cp_epsilon_sum(s, eps, method=method)
        rows.append({"epsilon": eps, "value": f.value, "valid": f.valid,
                     "gap": f.value - s_all})
    payload = {"d": k.d, "L": k.L, "S_all": s_all, "method": method, "rows": rows}
    text = "".join(f"eps={r['epsilon']:<8g} f={r['value']:.10e}  "
                   f"f - S_all={r['gap']:+.3e}\n" for r in rows)
    return _Result(payload, None, text, not all(r["valid"] for r in rows))


def cmd_simulate_op(args) -> _Result:
    k = _kernel(args)
    workers = args.workers
    if args.trials < 100:
        raise UsageError("--trials must be at least 100 for a reported estimate")
    if args.mode == "returns":
        est = S.mc_return(k, args.n, args.trials, args.seed, workers=workers)
    elif args.mode == "survival":
        cfg = S.SimConfig(k, args.p, args.horizon, args.trials, args.seed,
                          args.threshold, args.ghost, args.max_active)
        est = S.op_survival(cfg, workers)
    elif args.mode == "pc":
        est = S.op_pc_estimate(k, args.horizon, args.trials, args.seed,
                               tuple(args.bracket), args.pc_tol,
                               threshold=args.threshold, ignore_collisions=args.ghost,
                               max_active=args.max_active, workers=workers)
    else:
        est = S.op_double_connection_sum(k, args.horizon, args.trials, args.seed,
                                         p=args.p, workers=workers)
    payload = est.to_dict()
    args._wall_time = payload.pop("wall_time")
    payload["seed"] = args.seed
    text = (f"{args.mode}: {est.value:.6g} +- {est.stderr:.2g} "
            f"({est.trials} trials, {est.dropped_trials} dropped, "
            f"{est.capped_trials} capped)\n")
    return _Result(payload, None, text, est.capped_trials > 0 or est.dropped_trials > 0)


def cmd_verify(args) -> _Result:
    if args.suite not in A.SUITES:
        raise UsageError(f"--suite must be one of {sorted(A.SUITES)}, got {args.suite!r}")

    def report(res):
        print(res.line(), file=sys.stderr, flush=True)

    results = A.run_suite(args.suite, report)
    if args.soft_gating:
        for r in results:
            r.gating = True
    ok = A.suite_passed(results)
    args._verify_ok = ok
    payload = {"suite": args.suite, "passed": ok,
               "checks": [{"number": r.number, "name": r.name, "passed": r.passed,
                           "gating": r.gating, "detail": r.detail} for r in results]}
    csv = "number,name,passed,gating\n" + "".join(
        f"{r.number},{r.name},{r.passed},{r.gating}\n" for r in results)
    text = "".join(r.line() + "\n" for r in results) + \
        ("all gating checks passed\n" if ok else "some gating checks FAILED\n")
    return _Result(payload, csv, text)


DISPATCH = {
    "predict": cmd_predict, "series": cmd_series, "sums": cmd_sums,
    "continuum": cmd_continuum, "compare": cmd_compare, "saw-enum": cmd_saw_enum,
    "triangle": cmd_triangle, "cp-limit": cmd_cp_limit,
    "simulate-op": cmd_simulate_op, "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# entry point

def _render(args, result: _Result, started: float) -> str:
    if args.format == "csv":
        if result.csv is None:
            raise UsageError(f"--format csv is not available for {args.command}")
        return result.csv
    if args.format == "text":
        return result.text or _text(result.payload)
    meta = None
    if not args.no_meta:
        meta = {"version": __version__, "command": args.command,
                "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                "wall_time": getattr(args, "_wall_time", time.perf_counter() - started)}
    return F.dumps(result.payload, meta)


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"spreadpc: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"spreadpc: error: --config: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    started = time.perf_counter()
    try:
        result = DISPATCH[args.command](args)
        out = _render(args, result, started)
        if args.output:
            Path(args.output).write_text(out)
        else:
            sys.stdout.write(out)
    except OSError as exc:
        print(f"spreadpc: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError, MemoryError, OverflowError) as exc:
        # KernelError, DimensionGateError, BracketError, size errors
        print(f"spreadpc: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.command == "verify":
        return EXIT_OK if args._verify_ok else EXIT_CHECKS
    if args.strict and result.flagged:
        print("spreadpc: result flagged invalid (--strict)", file=sys.stderr)
        return EXIT_FLAGGED
    return EXIT_OK


def main() -> None:
    sys.exit(run())
