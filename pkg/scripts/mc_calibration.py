"""Monte Carlo bridge estimates against the exact half-space probability.

Usage: python scripts/mc_calibration.py [--t 256] [--alpha 0.4] [--n 1000000] [--seeds 20]
"""

import argparse
from pathlib import Path

from critpin.exact import HalfSpaceQuery, build_tables, exact_prob_halfspace
from critpin.io import load_model
from critpin.mc import BridgeSampler, mc_prob
from critpin.thermo import classify

MODELS = Path(__file__).resolve().parent.parent / "models"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default=str(MODELS / "critical_s3.json"))
    ap.add_argument("--t", type=int, default=256)
    ap.add_argument("--alpha", type=float, default=0.4)
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()
    model = load_model(args.model)
    c = classify(model)
    tables = build_tables(model, c, args.t)
    query = HalfSpaceQuery.for_model(model, c, args.alpha, args.t)
    exact = exact_prob_halfspace(query, tables, args.t).value
    print(f"# exact {exact:.10e}")
    print("seed,estimate,stderr,z,wall_time")
    inside = 0
    for seed in range(args.seeds):
        r = mc_prob(BridgeSampler(tables, seed=seed), args.t, query, args.n)
        z = (r.estimate - exact) / r.stderr if r.stderr else float("nan")
        inside += abs(z) <= 3
        print(f"{seed},{r.estimate:.6e},{r.stderr:.3e},{z:+.3f},{r.wall_time:.2f}")
    print(f"# within 3 standard errors: {inside}/{args.seeds}")


if __name__ == "__main__":
    main()
