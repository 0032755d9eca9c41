"""Command-line front end.

Every run is determined by the model file and argv. CSV and JSON output
go to ``--output`` (``-`` for stdout) and are byte-identical across
repeated runs. Exit codes: 2 for configuration or schema errors, 3 for
regime errors, 4 for numeric or budget errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from contextlib import contextmanager

import numpy as np

from .asymptotics import (convergence_study, exponential_regime_check, lemma1_check,
                          regular_variation_probe)
from .errors import CritpinError, ModelError, NumericError, RegimeError
from .exact import HalfSpaceQuery, build_tables, halfspace_probabilities
from .io import load_model
from .mc import BridgeSampler, mc_prob
from .thermo import RateFunctionNt, classify, rate_function_Nt, solve_eta

EXACT_HEADER = ["t", "alpha", "prob_lower", "prob_upper", "u_t", "log_Zc"]
CHECK_HEADER = ["t", "value", "predicted", "rel_gap", "error"]
TAIL_HEADER = ["x", "value", "predicted", "rel_gap", "error"]
RATE_HEADER = ["w", "rate", "eta"]


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")


def _alpha(text: str) -> float:
    a = float(text)
    if not 0.0 <= a < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in [0, 1)")
    return a


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return n


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _json_safe(x):
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    return x


@contextmanager
def _sink(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_csv(path: str, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) if not isinstance(x, str) else x for x in row])
    with _sink(path) as fh:
        fh.write(buf.getvalue())


def _write_json(path: str, doc) -> None:
    with _sink(path) as fh:
        fh.write(json.dumps(_json_safe(doc), indent=2) + "\n")


def _rel_gap(value, predicted):
    if value is None:
        return None
    return value / predicted - 1.0 if predicted else value


# -- subcommands ---------------------------------------------------------------

def cmd_classify(args) -> None:
    model = load_model(args.model)
    doc = {"model": model.name, **classify(model).as_dict()}
    _write_json(args.output, doc)


def cmd_rate(args) -> None:
    model = load_model(args.model)
    rf = RateFunctionNt.from_model(model)
    ws = args.w if args.w is not None else list(np.linspace(0.0, 1.0, args.grid + 1))
    rows = []
    for w in ws:
        eta = solve_eta(rf, w) if rf.w_c < w < 1 else None
        rows.append((w, rate_function_Nt(rf, w), eta))
    _write_csv(args.output, RATE_HEADER, rows)


def _query(model, c, alpha, T, args):
    return HalfSpaceQuery.for_model(model, c, alpha, T, mode=args.mode, delta=args.delta)


def cmd_exact(args) -> None:
    model = load_model(args.model)
    c = classify(model)
    T = max(args.t)
    tables = build_tables(model, c, T)
    rows = []
    for alpha in args.alpha:
        probs = halfspace_probabilities(_query(model, c, alpha, T, args), tables, args.t)
        for t in args.t:
            p = probs[t]
            rows.append((t, alpha, p.lower, p.upper, tables.u[t], tables.log_zc[t]))
    _write_csv(args.output, EXACT_HEADER, rows)


def cmd_sample(args) -> None:
    model = load_model(args.model)
    c = classify(model)
    tables = build_tables(model, c, args.t)
    sampler = BridgeSampler(tables, seed=args.seed, stream=args.stream)
    rep = mc_prob(sampler, args.t, _query(model, c, args.alpha, args.t, args), args.n)
    doc = {"model": model.name, "alpha": args.alpha, **rep.as_dict(timing=args.timing)}
    _write_json(args.output, doc)


def cmd_limit_check(args) -> None:
    model = load_model(args.model)
    rep = convergence_study(model, args.alpha, args.ladder, mode=args.mode, delta=args.delta)
    rows = [(r.t, r.ratio, rep.constant, _rel_gap(r.ratio, rep.constant), r.ratio_err) for r in rep.rows]
    if rep.extrapolated is not None:
        rows.append(("extrapolated", rep.extrapolated, rep.constant,
                     _rel_gap(rep.extrapolated, rep.constant), None))
    _write_csv(args.output, CHECK_HEADER, rows)


def cmd_tail_check(args) -> None:
    model = load_model(args.model)
    c = classify(model)
    rows = [(r.point, r.value, r.predicted, r.rel_gap, r.error) for r in lemma1_check(c, args.x)]
    if args.probe:
        for x in args.x:
            r = regular_variation_probe(c, x)
            rows.append((f"ratio2x@{_fmt(x)}", r.value, r.predicted, r.rel_gap, r.error))
    _write_csv(args.output, TAIL_HEADER, rows)


def cmd_slope_check(args) -> None:
    model = load_model(args.model)
    c = classify(model)
    w = args.w if args.w is not None else args.w_frac * c.rho
    rows = []
    for r in exponential_regime_check(model, w, args.ladder, classification=c):
        rows.append((r.t, r.slope, r.predicted, r.rel_gap, None))
    _write_csv(args.output, CHECK_HEADER, rows)


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="critpin", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--model", required=True, help="model JSON file")
        sp.add_argument("--output", default="-", help="output path, '-' for stdout")
        sp.set_defaults(func=func)
        return sp

    def add_mode(sp):
        sp.add_argument("--mode", choices=("exact", "bracket"), default="exact")
        sp.add_argument("--delta", type=float, default=None, help="bucket width in bracket mode")

    add("classify", cmd_classify, "regime classification as JSON")

    sp = add("rate", cmd_rate, "rate function of N_t/t as CSV")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--w", type=_floats, default=None, help="comma-separated points")
    g.add_argument("--grid", type=_positive, default=100, help="uniform grid on [0, 1]")

    sp = add("exact", cmd_exact, "exact half-space probabilities as CSV")
    sp.add_argument("--t", type=_ints, required=True, help="comma-separated sizes")
    sp.add_argument("--alpha", type=_floats, required=True, help="comma-separated levels in [0, 1)")
    add_mode(sp)

    sp = add("sample", cmd_sample, "Monte Carlo estimate as JSON")
    sp.add_argument("--t", type=_positive, required=True)
    sp.add_argument("--alpha", type=_alpha, required=True)
    sp.add_argument("--n", type=_positive, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--stream", type=int, default=0)
    sp.add_argument("--timing", action="store_true", help="include wall time in the report")
    add_mode(sp)

    sp = add("limit-check", cmd_limit_check, "ratio ladder against the critical limit constant")
    sp.add_argument("--alpha", type=_alpha, required=True)
    sp.add_argument("--ladder", type=_ints, default=[512, 1024, 2048, 4096])
    add_mode(sp)

    sp = add("tail-check", cmd_tail_check, "regular variation of the tail Q")
    sp.add_argument("--x", type=_floats, default=[10.0, 1e2, 1e3, 1e4, 1e5])
    sp.add_argument("--probe", action="store_true", help="add Q(2x)/Q(x) rows")

    sp = add("slope-check", cmd_slope_check, "exponential slopes of P[N_t <= w t]")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--w", type=float, default=None)
    g.add_argument("--w-frac", type=float, default=0.5, help="w as a fraction of rho")
    sp.add_argument("--ladder", type=_ints, default=[512, 1024, 2048])
    return p


def _validate(args) -> None:
    alphas = args.alpha if isinstance(getattr(args, "alpha", None), list) else []
    for a in alphas:
        if not 0.0 <= a < 1.0:
            raise ModelError(f"alpha must lie in [0, 1), got {a}")
    ts = getattr(args, "t", None)
    for t in ts if isinstance(ts, list) else []:
        if t < 1:
            raise ModelError(f"t must be >= 1, got {t}")


EXIT_CODES = ((ModelError, 2), (RegimeError, 3), (NumericError, 4))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _validate(args)
        args.func(args)
    except CritpinError as exc:
        for cls, code in EXIT_CODES:
            if isinstance(exc, cls):
                print(f"critpin: error: {exc}", file=sys.stderr)
                return code
        raise
    except ValueError as exc:
        print(f"critpin: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
