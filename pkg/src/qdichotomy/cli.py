"""Command-line entry point.

Subcommands: ``div``, ``exponent``, ``sweep``, ``finite-n``, ``mmax`` and
``verify``. States are read from JSON state files. Exit status is 0 on
success, 1 on invalid input, 2 when the SDP solver does not converge and 3
when the verification suite reports a failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import divergences as dv
from .exceptions import RejectedInputError, SolverError
from .exponents import (
    Dichotomy,
    f_flat_alpha_form,
    f_minimax_delta_form,
    sc_exponent_purified,
    sc_exponent_trace_pure,
)
from .finite import eps_at_rate, max_transform_count
from .statefile import load_state, save_channel
from .verify import run_suite, thread_count

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3
DIGITS = 12
#: magnitudes below this print as 0 (values are in bits, so this is rounding noise)
ZERO_FLOOR = 5e-13

EXPONENT_FORMS = {
    "purified": sc_exponent_purified,
    "trace-pure": sc_exponent_trace_pure,
    "flat": f_flat_alpha_form,
    "minimax": f_minimax_delta_form,
}
DIV_KINDS = ("sandwiched", "petz", "log-euclidean", "umegaki", "max", "fidelity", "trace", "purified")


class InputError(Exception):
    """Invalid command-line input; the message names the flag."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def fmt(x) -> str:
    """Number with 12 significant digits; infinities as ``inf``."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if abs(x) < ZERO_FLOOR:
        return "0"
    return f"{x:.{DIGITS}g}"


def _json_number(x):
    x = float(x)
    return x if math.isfinite(x) else fmt(x)


def _load(args, flag: str):
    path = getattr(args, flag.lstrip("-").replace("-", "_"))
    if path is None:
        raise InputError(f"{flag} is required")
    try:
        return load_state(path)
    except FileNotFoundError:
        raise InputError(f"{flag}: no such file {path!r}") from None
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{flag}: cannot read state from {path!r}: {exc}") from None


def _dichotomies(args):
    try:
        d1 = Dichotomy(_load(args, "--rho1"), _load(args, "--sigma1"))
    except RejectedInputError as exc:
        raise InputError(f"--rho1/--sigma1: {exc}") from None
    try:
        d2 = Dichotomy(_load(args, "--rho2"), _load(args, "--sigma2"))
    except RejectedInputError as exc:
        raise InputError(f"--rho2/--sigma2: {exc}") from None
    return d1, d2


def _positive(flag):
    def parse(text):
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} expects a number, got {text!r}") from None
        if not value > 0 or not math.isfinite(value):
            raise argparse.ArgumentTypeError(f"{flag} must be positive and finite, got {text!r}")
        return value
    return parse


def _count(flag, minimum=1):
    def parse(text):
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} expects an integer, got {text!r}") from None
        if value < minimum:
            raise argparse.ArgumentTypeError(f"{flag} must be >= {minimum}, got {value}")
        return value
    return parse


def _dims(text):
    try:
        dims = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--dims expects comma-separated integers, got {text!r}") from None
    if not dims or any(d < 2 or d > 6 for d in dims):
        raise argparse.ArgumentTypeError(f"--dims must be within 2..6, got {text!r}")
    return dims


def _emit(text: str, output) -> None:
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, int, np.floating, np.integer)) else v
                         for v in row])
    return buf.getvalue()


def _map(fun, items):
    """Ordered map, concurrent when the thread-count variable asks for it."""
    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fun, items))
    return [fun(x) for x in items]


# ---------------------------------------------------------------------------
# subcommands


def cmd_div(args) -> int:
    rho, sigma = _load(args, "--rho"), _load(args, "--sigma")
    kind = args.kind
    if kind in ("sandwiched", "petz", "log-euclidean"):
        if args.alpha is None:
            raise InputError(f"--alpha is required for --kind {kind}")
        value = dv.renyi_divergence(kind, args.alpha, rho, sigma)
        record = {"value": value.value, "kind": value.kind, "order": value.order,
                  "near_one": value.near_one}
    elif kind in ("umegaki", "max"):
        value = dv.umegaki(rho, sigma) if kind == "umegaki" else dv.d_max(rho, sigma)
        record = {"value": value.value, "kind": value.kind, "order": value.order, "near_one": False}
    else:
        fun = {"fidelity": dv.fidelity, "trace": dv.trace_distance, "purified": dv.purified_distance}[kind]
        record = {"value": fun(rho, sigma), "kind": kind, "order": None, "near_one": False}
    if args.format == "json":
        record["value"] = _json_number(record["value"])
        _emit(json.dumps(record) + "\n", args.output)
    elif args.format == "csv":
        _emit(_csv(["value", "kind", "order"], [[record["value"], record["kind"], record["order"] or ""]]),
              args.output)
    else:
        _emit(fmt(record["value"]) + "\n", args.output)
    return EXIT_OK


def _exponent(form, d1, d2, r):
    return EXPONENT_FORMS[form](d1, d2, r)


def cmd_exponent(args) -> int:
    d1, d2 = _dichotomies(args)
    res = _exponent(args.form, d1, d2, args.r)
    if args.format == "json":
        _emit(json.dumps({"r": args.r, "exponent": _json_number(res.value),
                          "argmax_order": _json_number(res.argmax_order),
                          "rate_threshold": _json_number(res.rate_threshold),
                          "form": res.form}) + "\n", args.output)
    elif args.format == "csv":
        _emit(_csv(["r", "exponent", "argmax_order", "rate_threshold"],
                   [[args.r, res.value, res.argmax_order, res.rate_threshold]]), args.output)
    else:
        _emit(f"exponent {fmt(res.value)}\nargmax_order {fmt(res.argmax_order)}\n"
              f"rate_threshold {fmt(res.rate_threshold)}\n", args.output)
    return EXIT_OK


def sweep_grid(start: float, stop: float, count: int) -> list:
    """Ascending, duplicate-free r values."""
    if count == 1:
        return [float(start)]
    return sorted(set(float(x) for x in np.linspace(start, stop, count)))


def cmd_sweep(args) -> int:
    if args.r_stop < args.r_start:
        raise InputError("--r-stop must be >= --r-start")
    d1, d2 = _dichotomies(args)
    grid = sweep_grid(args.r_start, args.r_stop, args.r_count)
    results = _map(lambda r: _exponent(args.form, d1, d2, r), grid)
    if args.format == "json":
        rows = [{"r": r, "exponent": _json_number(x.value), "argmax_order": _json_number(x.argmax_order),
                 "rate_threshold": _json_number(x.rate_threshold)} for r, x in zip(grid, results)]
        _emit(json.dumps(rows, indent=1) + "\n", args.output)
    else:
        _emit(_csv(["r", "exponent", "argmax_order", "rate_threshold"],
                   [[r, x.value, x.argmax_order, x.rate_threshold] for r, x in zip(grid, results)]),
              args.output)
    return EXIT_OK


FINITE_HEADER = ["n", "m", "kind", "error", "fidelity_sq", "neg_log_fid_rate", "solver_gap"]


def cmd_finite(args) -> int:
    d1, d2 = _dichotomies(args)
    ns = list(range(1, args.n_max + 1))
    results = _map(lambda n: eps_at_rate(d1, d2, args.r, n, args.kind, args.tol, args.method), ns)
    rows = [[x.n, x.m, x.distance_kind, x.optimal_error, x.optimal_fidelity_sq, x.neg_log_fid_rate,
             x.solver_gap] for x in results]
    if args.format == "json":
        out = [dict(zip(FINITE_HEADER, [row[0], row[1], row[2]] + [_json_number(v) for v in row[3:]]))
               for row in rows]
        _emit(json.dumps(out, indent=1) + "\n", args.output)
    else:
        _emit(_csv(FINITE_HEADER, rows), args.output)
    if args.channel_out:
        last = results[-1]
        save_channel(args.channel_out, last.channel, representation=last.representation,
                     n=last.n, m=last.m)
    return EXIT_OK


def cmd_mmax(args) -> int:
    d1, d2 = _dichotomies(args)
    res = max_transform_count(d1, d2, args.n, args.eps, args.kind, args.tol, args.method)
    if args.format == "json":
        _emit(json.dumps({"m": res.m, "cap": res.cap, "monotone": res.monotone,
                          "visited": [[m, _json_number(e)] for m, e in res.visited]}) + "\n", args.output)
    else:
        _emit(f"{res.m}\n", args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    report = run_suite(args.seed, args.trials, args.dims, args.tolerance)
    _emit((report.to_json() if args.format == "json" else report.to_table()) + "\n", args.output)
    return EXIT_OK if report.passed else EXIT_VERIFY


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qdichotomy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, formats=("text", "csv", "json")):
        p.add_argument("--format", choices=formats, default=formats[0])
        p.add_argument("--output", help="write to this path instead of stdout")

    def pairs(p):
        for flag in ("--rho1", "--sigma1", "--rho2", "--sigma2"):
            p.add_argument(flag, required=True, metavar="PATH")

    p = sub.add_parser("div", help="evaluate one divergence or distance")
    p.add_argument("--kind", choices=DIV_KINDS, required=True)
    p.add_argument("--alpha", type=_positive("--alpha"))
    p.add_argument("--rho", required=True, metavar="PATH")
    p.add_argument("--sigma", required=True, metavar="PATH")
    common(p)
    p.set_defaults(func=cmd_div)

    p = sub.add_parser("exponent", help="strong converse exponent at one rate")
    pairs(p)
    p.add_argument("--r", type=_positive("--r"), required=True)
    p.add_argument("--form", choices=tuple(EXPONENT_FORMS), default="purified")
    common(p)
    p.set_defaults(func=cmd_exponent)

    p = sub.add_parser("sweep", help="exponent over a grid of rates")
    pairs(p)
    p.add_argument("--r-start", type=_positive("--r-start"), required=True)
    p.add_argument("--r-stop", type=_positive("--r-stop"), required=True)
    p.add_argument("--r-count", type=_count("--r-count"), default=21)
    p.add_argument("--form", choices=tuple(EXPONENT_FORMS), default="purified")
    common(p, ("csv", "json"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("finite-n", help="optimal finite-blocklength errors for n = 1..N")
    pairs(p)
    p.add_argument("--n-max", type=_count("--n-max"), required=True)
    p.add_argument("--r", type=_positive("--r"), required=True)
    p.add_argument("--kind", choices=("purified", "trace"), default="purified")
    p.add_argument("--tol", type=_positive("--tol"), default=1e-7)
    p.add_argument("--method", choices=("auto", "classical", "sdp"), default="auto")
    p.add_argument("--channel-out", metavar="PATH", help="export the channel for n = N as JSON")
    common(p, ("csv", "json"))
    p.set_defaults(func=cmd_finite)

    p = sub.add_parser("mmax", help="largest target count within an error budget")
    pairs(p)
    p.add_argument("--n", type=_count("--n"), required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--kind", choices=("purified", "trace"), default="purified")
    p.add_argument("--tol", type=_positive("--tol"), default=1e-7)
    p.add_argument("--method", choices=("auto", "classical", "sdp"), default="auto")
    common(p, ("text", "json"))
    p.set_defaults(func=cmd_mmax)

    p = sub.add_parser("verify", help="run the property-test suite")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trials", type=_count("--trials"), default=200)
    p.add_argument("--dims", type=_dims, default=[2, 3, 4])
    p.add_argument("--tolerance", type=float, default=1e-6)
    common(p, ("text", "json"))
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "eps", None) is not None and not 0.0 <= args.eps <= 1.0:
            raise InputError(f"--eps must lie in [0, 1], got {args.eps}")
        if getattr(args, "tolerance", None) is not None and args.tolerance < 0:
            raise InputError(f"--tolerance must be >= 0, got {args.tolerance}")
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RejectedInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver error: {exc} (best primal {exc.primal}, best dual {exc.dual})", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
