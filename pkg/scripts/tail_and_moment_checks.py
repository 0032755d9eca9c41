"""Tail regular variation and the product-moment limit for the s^-3 family.

Prints kappa x^kappa Q(x) / L(x) on a decade grid and
E_o[(N_t / t) U_t] E_o[S]^2 on a doubling ladder.

Usage: python scripts/tail_and_moment_checks.py
"""

from pathlib import Path

from critpin.asymptotics import lemma1_check, lemma2_check, regular_variation_probe
from critpin.exact import build_tables
from critpin.io import load_model
from critpin.thermo import classify

MODELS = Path(__file__).resolve().parent.parent / "models"


def main() -> None:
    model = load_model(MODELS / "critical_s3.json")
    c = classify(model)
    print("x,value,error,Q(2x)/Q(x)")
    for row in lemma1_check(c, [10.0, 1e2, 1e3, 1e4, 1e5]):
        probe = regular_variation_probe(c, row.point)
        print(f"{row.point:g},{row.value:.10f},{row.error:.1e},{probe.value:.10f}")
    ts = [256, 512, 1024, 2048, 4096, 8192]
    rows, shrinks = lemma2_check(build_tables(model, c, max(ts)), ts)
    print("\nt,product_moment_scaled,gap")
    for row in rows:
        print(f"{row.point:g},{row.value:.10f},{row.value - 1:+.3e}")
    print(f"# |value - 1| decreasing: {shrinks}")


if __name__ == "__main__":
    main()
