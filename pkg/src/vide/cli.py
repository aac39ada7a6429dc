"""Command-line interface: ``vide {run,weights,converge,zscan}``.

Exit status is 0 on success, 1 on a usage or configuration error and 2 when
a verdict fails (a negative positivity scan or a negative margin for a
stability bound whose constants are all explicit).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import ConfigError, RunConfig, parse_config, parse_suite
from .harness import RunReport, stability_bound, weighted_a_norm
from .kernel import Abel, ExpSum, KernelError, kernel_from_spec
from .quadrature import QuadratureError, Rule, build_table
from .stepper import SchemeError, SolverDivergence, StepConstraintWarning, run
from .ztran import MIN_SAMPLES, ZTransformError, positivity_scan, quadratic_form_check

EXIT_OK, EXIT_USAGE, EXIT_VERDICT = 0, 1, 2
MAX_STATE_COLUMNS = 16


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def fmt(x) -> str:
    """Round-trip float formatting; ``None`` becomes an empty field."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    text = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _workers() -> int:
    raw = os.environ.get("VIDE_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise UsageError(f"VIDE_THREADS must be an integer, got {raw!r}")
    return os.cpu_count() or 1


def _alpha(cfg: RunConfig):
    return cfg.kernel.alpha if isinstance(cfg.kernel, Abel) else None


# -- run -----------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = parse_config(_read(args.config))
    for msg in _constraint_notes(cfg):
        print(msg, file=sys.stderr)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepConstraintWarning)
        hist = run(cfg.scheme_config())
    d = cfg.operator.dim
    header = ["n", "t_n", "norm_Un"]
    if d <= MAX_STATE_COLUMNS:
        header += [f"u_{j}" for j in range(d)]
    rows = []
    for n in range(cfg.n_steps + 1):
        row = [n, n * cfg.k, hist.norms[n]]
        if d <= MAX_STATE_COLUMNS:
            row += list(hist.states[n])
        rows.append(row)
    _write_csv(args.out or cfg.out, header, rows)
    check = stability_bound(hist, cfg.c)
    print(f"weighted norm (c={cfg.c:g}): {weighted_a_norm(hist, cfg.c, skip_zero=True):.6e}",
          file=sys.stderr)
    if check.explicit:
        print(f"explicit stability margin: {check.margin:.6e}", file=sys.stderr)
        if check.margin < 0:
            print("verdict: FAIL (negative margin)", file=sys.stderr)
            return EXIT_VERDICT
    return EXIT_OK


def _constraint_notes(cfg: RunConfig):
    if cfg.constraint_ok is False:
        yield (f"warning: step constraint violated (s0={cfg.s0:g}, C_alpha={cfg.c_alpha:.4g}); "
               "running anyway")


# -- weights -------------------------------------------------------------------

def cmd_weights(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    rule = Rule(args.rule)
    kernel = None
    if args.kernel:
        try:
            kernel = kernel_from_spec(json.loads(args.kernel))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--kernel is not valid JSON: {exc.msg}") from exc
    alpha = args.alpha
    if rule is Rule.IQ:
        if not isinstance(kernel, ExpSum):
            raise ConfigError("rule iq needs --kernel with an expsum family")
    else:
        if alpha is None and isinstance(kernel, Abel):
            alpha = kernel.alpha
        if alpha is None:
            raise ConfigError(f"rule {rule.value} needs --alpha")
    table = build_table(rule, args.k, args.n - 1, kernel=kernel, alpha=alpha,
                        **({"literal_start": True} if args.literal_start and rule is Rule.CQ_BDF2 else {}))
    if table.starting.size:
        header = ["n", "w_n", "starting_n"]
        rows = [[n, table.w[n], table.starting[n]] for n in range(args.n)]
    else:
        header = ["n", "w_n"]
        rows = [[n, table.w[n]] for n in range(args.n)]
    _write_csv(args.out, header, rows)
    return EXIT_OK


# -- zscan ---------------------------------------------------------------------

def cmd_zscan(args) -> int:
    rule = Rule(args.rule)
    if not args.s0 > 0:
        raise UsageError("--s0 must be > 0")
    if args.samples < MIN_SAMPLES:
        raise UsageError(f"--samples must be >= {MIN_SAMPLES}")
    n_max = args.n_max or max(1024, math.ceil(60.0 / args.s0))
    kernel = kernel_from_spec(json.loads(args.kernel)) if args.kernel else None
    if rule is Rule.IQ:
        if kernel is None:
            kernel = ExpSum(((1.0, 1.0),))
        table = build_table(rule, args.k, n_max, kernel=kernel)
        power = 0.0
    else:
        alpha = args.alpha if args.alpha is not None else getattr(kernel, "alpha", None)
        if alpha is None:
            raise ConfigError(f"rule {rule.value} needs --alpha")
        table = build_table(rule, args.k, n_max, alpha=alpha)
        power = min(alpha - 1.0, 0.0)
    w = -table.w if args.negate else table.w
    scan = positivity_scan(w, args.s0, args.samples, power)
    qf = quadratic_form_check(w, trials=args.trials, length=64, seed=args.seed)
    agree = (qf >= -1e-12) == scan.passed
    print(f"rule: {rule.value}")
    print(f"min_real_part: {fmt(scan.min_real_part)}")
    print(f"argmin_angle: {fmt(scan.argmin_angle)}")
    print(f"tail_bound: {fmt(scan.tail_bound)}")
    print(f"quadratic_form_min: {fmt(qf)}")
    print(f"verdict: {scan.verdict}")
    if not agree:
        print("warning: quadratic-form check disagrees with the symbol scan", file=sys.stderr)
    return EXIT_OK if scan.passed else EXIT_VERDICT


# -- converge ------------------------------------------------------------------

def _converge_entry(cfg: RunConfig) -> list:
    problem = cfg.problem()
    if problem is None:
        raise ConfigError("converge entries need a 'manufactured' solution")
    reports = []
    prev = None
    for k in cfg.ks:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StepConstraintWarning)
            hist = run(cfg.scheme_config(k=k))
        err_norms = problem.error_norms(hist)
        err = weighted_a_norm(err_norms, cfg.c, skip_zero=True)
        order = None
        if prev is not None:
            order = math.log(prev[1] / err) / math.log(prev[0] / k) if err > 0 else None
        check = stability_bound(hist, cfg.c)
        reports.append(RunReport(cfg.scheme.value, _alpha(cfg), k, cfg.n_steps, cfg.c, err, order,
                                 check.margin, cfg.constraint_ok, float(np.max(err_norms)),
                                 check.explicit))
        prev = (k, err)
    return reports


def cmd_converge(args) -> int:
    configs = parse_suite(_read(args.config))
    workers = min(_workers(), len(configs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_converge_entry, configs))
    else:
        results = [_converge_entry(cfg) for cfg in configs]
    header = ["scheme", "alpha", "k", "N", "c", "a_norm_error", "order", "margin", "constraint_ok"]
    rows = [rep.row() for reps in results for rep in reps]
    _write_csv(args.out, header, rows)
    bad = [rep for reps in results for rep in reps if rep.explicit and rep.margin < 0]
    if bad:
        print(f"verdict: FAIL ({len(bad)} negative explicit margins)", file=sys.stderr)
        return EXIT_VERDICT
    return EXIT_OK


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vide", description="Volterra integrodifferential time stepping")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("run", help="march one configuration and write the trajectory")
    p.add_argument("--config", required=True, help="JSON run config ('-' for stdin)")
    p.add_argument("--out", help="CSV output path (default: config 'out' or stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("weights", help="tabulate quadrature weights")
    p.add_argument("--rule", required=True, choices=[r.value for r in Rule])
    p.add_argument("--alpha", type=float)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--n", type=int, required=True, help="number of rows (weights 0..n-1)")
    p.add_argument("--kernel", help="kernel JSON, e.g. '{\"family\":\"expsum\",\"terms\":[[1,1]]}'")
    p.add_argument("--literal-start", action="store_true",
                   help="cq-bdf2: sum w_1..w_n in the starting weights")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("converge", help="observed orders for a manufactured-solution suite")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("zscan", help="positivity of a weight family's generating function")
    p.add_argument("--rule", required=True, choices=[r.value for r in Rule])
    p.add_argument("--alpha", type=float)
    p.add_argument("--k", type=float, default=0.1)
    p.add_argument("--s0", type=float, default=0.25)
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--kernel", help="kernel JSON for the iq rule (default expsum [[1,1]])")
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--negate", action="store_true", help="scan the sign-flipped weights")
    p.set_defaults(func=cmd_zscan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (KernelError, QuadratureError, SchemeError, ZTransformError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverDivergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERDICT


if __name__ == "__main__":
    sys.exit(main())
