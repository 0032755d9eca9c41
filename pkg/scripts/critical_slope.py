"""Empirical exponential slopes -(1/t) ln P[N_t <= w t] along a ladder.

At criticality the probability decays like a power of t, so the slope
behaves like ln(t / const) / t; in the localized phase it tends to the
rate function. Cost grows roughly tenfold per doubling of t.

Usage: python scripts/critical_slope.py [--model models/critical_s3.json] [--ladder 2048,4096,8192]
"""

import argparse
import math
import time
from pathlib import Path

from critpin.asymptotics import exponential_regime_check
from critpin.io import load_model
from critpin.thermo import classify

MODELS = Path(__file__).resolve().parent.parent / "models"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default=str(MODELS / "critical_s3.json"))
    ap.add_argument("--frac", type=float, default=0.5, help="w as a fraction of w_c (critical) or rho")
    ap.add_argument("--ladder", default="2048,4096,8192")
    args = ap.parse_args()
    model = load_model(args.model)
    c = classify(model)
    w = args.frac * (c.w_c if c.is_critical else c.rho)
    print(f"# regime {c.regime.value}  w={w:.10f}")
    print("t,prob,slope,rate,t_times_prob,ln_t_over_t,seconds")
    for t in (int(x) for x in args.ladder.split(",")):
        start = time.perf_counter()
        r = exponential_regime_check(model, w, [t], classification=c)[0]
        print(f"{t},{r.prob:.10e},{r.slope:.6e},{r.predicted:.6e},{t * r.prob:.6f},"
              f"{math.log(t) / t:.6e},{time.perf_counter() - start:.1f}", flush=True)


if __name__ == "__main__":
    main()
