"""Ratio ladders against the critical limit constant.

Runs the doubling ladder for the s^-3 family (kappa 2, alpha 0.4) and the
logarithmic kappa 1 family (alpha 0.5), printing R(t), R(t)/C and the
Aitken-extrapolated ratio.

Usage: python scripts/precise_limit_ladder.py [--ladder 512,1024,2048,4096]
"""

import argparse
import time
from pathlib import Path

from critpin.asymptotics import convergence_study
from critpin.io import load_model

MODELS = Path(__file__).resolve().parent.parent / "models"
CASES = [("critical_s3.json", 0.4), ("critical_log_k1.json", 0.5)]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ladder", default="512,1024,2048,4096")
    args = ap.parse_args()
    ladder = [int(x) for x in args.ladder.split(",")]
    for fname, alpha in CASES:
        start = time.perf_counter()
        rep = convergence_study(load_model(MODELS / fname), alpha, ladder)
        print(f"# {fname}  alpha={alpha}  kappa={rep.kappa}  C={rep.constant:.10f}")
        print("t,prob,ratio,ratio_over_C")
        for r in rep.rows:
            print(f"{r.t},{r.prob.value:.10e},{r.ratio:.10f},{r.ratio / rep.constant:.6f}")
        print(f"extrapolated,,{rep.extrapolated:.10f},{rep.extrapolated / rep.constant:.6f}")
        print(f"# increments shrinking: {rep.shrinking}  time {time.perf_counter() - start:.1f}s\n")


if __name__ == "__main__":
    main()
