"""Shared models, tables and oracles.

Reference numbers are computed here with mpmath, independently of the
library's own series code.
"""

from __future__ import annotations

import itertools
import math
from pathlib import Path

import mpmath
import numpy as np
import pytest

from critpin.exact import RenewalTables, build_tables
from critpin.model import ModelSpec, PotentialSpec, RewardSpec, WaitingTimeSpec
from critpin.thermo import classify

ROOT = Path(__file__).resolve().parents[1]
MODELS = ROOT / "models"
GOLDEN = Path(__file__).resolve().parent / "golden"

mpmath.mp.dps = 30
ZETA2 = float(mpmath.zeta(2))
ZETA3 = float(mpmath.zeta(3))
BETA_C_S3 = -math.log(ZETA3)
MEAN_S3 = ZETA2 / ZETA3


def s3_model(offset: float = 0.0, reward: RewardSpec | None = None) -> ModelSpec:
    return ModelSpec(WaitingTimeSpec.power(2.0), PotentialSpec(BETA_C_S3 + offset),
                     reward or RewardSpec.count(), name="s3")


def log_k1_model() -> ModelSpec:
    w = WaitingTimeSpec.power(1.0, -2.0)
    return ModelSpec(w, PotentialSpec(-math.log(LOG_K1_NORM)), name="log_k1")


def _log_k1_sums():
    # sum_s s^-k ln(e+s)^-2 for k = 2 (mass) and k = 1 (mean): direct head
    # plus Euler-Maclaurin tail with the integral in y = ln(x/N).
    N = 20000
    out = []
    for k in (2, 1):
        f = lambda x: x ** (-k) * mpmath.log(mpmath.e + x) ** -2
        head = mpmath.fsum(f(mpmath.mpf(s)) for s in range(1, N))
        tail = mpmath.quad(lambda y: N * mpmath.exp(y) * f(N * mpmath.exp(y)), [0, 1, 5, 20, mpmath.inf])
        em = f(mpmath.mpf(N)) / 2 - mpmath.diff(f, N) / 12 + mpmath.diff(f, N, 3) / 720
        out.append(float(head + tail + em))
    return out


LOG_K1_NORM, LOG_K1_FIRST = _log_k1_sums()
LOG_K1_MEAN = LOG_K1_FIRST / LOG_K1_NORM


def hurwitz_tail(q: float, x: float) -> float:
    """``sum_{s > x} s^-q``."""
    return float(mpmath.zeta(q, math.floor(x) + 1))


def compositions(t: int, support):
    """All ordered tuples of support elements summing to ``t``."""
    if t == 0:
        yield ()
        return
    for s in support:
        if s <= t:
            for rest in compositions(t - s, support):
                yield (s,) + rest


def enumerate_functional(q, t, g=None, threshold=None):
    """Brute-force ``E_q[1{sum g(S_i) <= threshold} U_t]``."""
    support = [s for s in range(1, len(q)) if q[s] > 0]
    total = []
    for path in compositions(t, support):
        if g is not None and sum(g[s] for s in path) > threshold + 1e-12:
            continue
        total.append(math.prod(q[s] for s in path))
    return math.fsum(total)


def enumerate_layers(q, t):
    """Brute-force ``G(n, t)`` for ``n = 0..t``."""
    support = [s for s in range(1, len(q)) if q[s] > 0]
    G = [[] for _ in range(t + 1)]
    for path in compositions(t, support):
        G[len(path)].append(math.prod(q[s] for s in path))
    return np.array([math.fsum(x) for x in G])


@pytest.fixture(scope="session")
def s3():
    return s3_model()


@pytest.fixture(scope="session")
def s3_class(s3):
    return classify(s3)


@pytest.fixture(scope="session")
def s3_tables(s3, s3_class) -> RenewalTables:
    return build_tables(s3, s3_class, 4096)


@pytest.fixture(scope="session")
def localized():
    return s3_model(0.5)


@pytest.fixture(scope="session")
def localized_class(localized):
    return classify(localized)


@pytest.fixture(scope="session")
def log_k1():
    return log_k1_model()


@pytest.fixture(scope="session")
def bernoulli():
    return ModelSpec(WaitingTimeSpec.finite([(1, 0.5), (2, 0.5)]), name="bernoulli")


@pytest.fixture(scope="session")
def bernoulli_tables():
    return RenewalTables.build(np.array([0.0, 0.5, 0.5]), 64)


# -- acceptance report ----------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_line():
    def record(label: str, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"criterion {label}: {'PASS' if ok else 'FAIL'}  {detail}")
        print(ACCEPTANCE_LINES[-1])
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
