"""Renewal-bridge sampling and Monte Carlo estimates of constrained probabilities.

A bridge to horizon ``t`` is drawn step by step: from remaining horizon
``h`` the next waiting time is ``s`` with probability
``q(s) u(h - s) / u(h)``, which is exactly the law of the renewal
conditioned on ``U_t = 1``. Inverse-CDF rows are cached per horizon.

Samples are split into fixed blocks, each with its own generator seeded
from ``SeedSequence(seed, spawn_key=(stream, block))``; hit counts are
integers, so the merged estimate does not depend on evaluation order.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from .errors import BudgetError
from .exact import DEFAULT_BUDGET, HalfSpaceQuery, RenewalTables

BLOCK = 1 << 16


@numba.njit(nogil=True, cache=True)
def _search(row, h, x):
    # First index whose cumulative weight exceeds x.
    lo, hi = 0, h - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if row[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo + 1


@numba.njit(nogil=True, cache=True)
def _hits_kernel(n, t, cdf, weights, threshold, next_double, state):
    hits = 0
    for _ in range(n):
        h = t
        acc = 0.0
        while h > 0:
            s = _search(cdf[h], h, next_double(state))
            acc += weights[s]
            h -= s
        if acc <= threshold:
            hits += 1
    return hits


@numba.njit(nogil=True, cache=True)
def _path_kernel(n, t, cdf, next_double, state, out):
    for i in range(n):
        h = t
        j = 0
        while h > 0:
            s = _search(cdf[h], h, next_double(state))
            out[i, j] = s
            j += 1
            h -= s


@dataclass(frozen=True)
class EstimateReport:
    """Monte Carlo estimate with its standard error (sample sd over sqrt n)."""

    estimate: float
    stderr: float | None
    n: int
    hits: int
    seed: int
    stream: int
    t: int
    wall_time: float = field(default=0.0, compare=False)

    def as_dict(self, timing: bool = False) -> dict:
        out = asdict(self)
        if not timing:
            out.pop("wall_time")
        return out


def _report(hits: int, n: int, **kw) -> EstimateReport:
    p = hits / n
    se = math.sqrt(p * (1 - p) * n / (n - 1)) / math.sqrt(n) if n > 1 else None
    return EstimateReport(estimate=p, stderr=se, n=n, hits=hits, **kw)


class BridgeSampler:
    """Exact sampler of renewal bridges under the working law of ``tables``."""

    def __init__(self, tables: RenewalTables, seed: int = 0, stream: int = 0,
                 budget: int = DEFAULT_BUDGET):
        self.tables = tables
        self.seed = int(seed)
        self.stream = int(stream)
        self.budget = budget
        self._rows: dict[int, np.ndarray] = {}
        self._cdf: dict[int, np.ndarray] = {}
        self._rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(self.stream,))))

    def _check(self, t: int) -> None:
        self.tables.check_t(t)

    def row(self, h: int) -> np.ndarray:
        """Cumulative first-step law from remaining horizon ``h``."""
        row = self._rows.get(h)
        if row is None:
            q, u = self.tables.pmf, self.tables.u
            w = q[1:h + 1] * u[h - 1::-1]
            row = np.cumsum(w)
            if row[-1] > 0:
                row /= row[-1]
                row[-1] = 1.0
            else:
                row[:] = 1.0
            row.setflags(write=False)
            self._rows[h] = row
        return row

    def first_step_law(self, t: int) -> np.ndarray:
        """``P[S_1 = s | U_t = 1] = q(s) u(t-s) / u(t)`` for ``s = 1..t``."""
        self._check(t)
        q, u = self.tables.pmf, self.tables.u
        return q[1:t + 1] * u[t - 1::-1] / u[t]

    def cdf_table(self, t: int) -> np.ndarray:
        tab = self._cdf.get(t)
        if tab is None:
            if (t + 1) * t > self.budget:
                raise BudgetError(f"CDF table for t={t} exceeds budget of {self.budget} entries")
            tab = np.ones((t + 1, max(t, 1)))
            for h in range(1, t + 1):
                tab[h, :h] = self.row(h)
            self._cdf[t] = tab
        return tab

    def sample_bridge(self, t: int, rng: np.random.Generator | None = None) -> list[int]:
        """One path of waiting times summing to ``t``."""
        self._check(t)
        rng = rng or self._rng
        path, h = [], t
        while h > 0:
            s = int(np.searchsorted(self.row(h), rng.random(), side="right")) + 1
            path.append(s)
            h -= s
        return path

    def _block_generators(self, n: int):
        blocks = -(-n // BLOCK)
        for b in range(blocks):
            size = min(BLOCK, n - b * BLOCK)
            ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, b))
            yield size, np.random.PCG64(ss)

    def sample_paths(self, t: int, n: int) -> np.ndarray:
        """``n`` bridges as rows of an ``(n, t)`` array padded with zeros."""
        self._check(t)
        cdf = self.cdf_table(t)
        out = np.zeros((n, t), dtype=np.int64)
        pos = 0
        for size, bg in self._block_generators(n):
            _path_kernel(size, t, cdf, bg.ctypes.next_double, bg.ctypes.state_address,
                         out[pos:pos + size])
            pos += size
        return out

    def hit_count(self, t: int, weights: np.ndarray, threshold: float, n: int) -> int:
        self._check(t)
        cdf = self.cdf_table(t)
        w = np.ascontiguousarray(weights[:t + 1], dtype=float)
        hits = 0
        for size, bg in self._block_generators(n):
            hits += _hits_kernel(size, t, cdf, w, float(threshold),
                                 bg.ctypes.next_double, bg.ctypes.state_address)
        return hits


def _event(query: HalfSpaceQuery, t: int) -> tuple[np.ndarray, float]:
    if query.mode == "exact":
        h, K = query.integer_steps(t)
        return h.astype(float), float(K)
    thr = query.alpha * t
    return np.asarray(query.g[:t + 1], dtype=float), thr + 1e-12 * max(1.0, abs(thr))


def mc_prob(sampler: BridgeSampler, t: int, query: HalfSpaceQuery, n: int) -> EstimateReport:
    """Fraction of ``n`` bridges whose projected reward stays in the half-space."""
    if n < 1:
        raise ValueError("n must be >= 1")
    start = time.perf_counter()
    weights, thr = _event(query, t)
    hits = sampler.hit_count(t, weights, thr, n)
    return _report(hits, n, seed=sampler.seed, stream=sampler.stream, t=t,
                   wall_time=time.perf_counter() - start)


def mc_prob_count(sampler: BridgeSampler, t: int, m: int, n: int) -> EstimateReport:
    """Monte Carlo estimate of ``P_t^c[N_t <= m]``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    start = time.perf_counter()
    hits = sampler.hit_count(t, np.ones(t + 1), float(m), n)
    return _report(hits, n, seed=sampler.seed, stream=sampler.stream, t=t,
                   wall_time=time.perf_counter() - start)
