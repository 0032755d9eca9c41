"""Exact finite-size probabilities of the constrained pinning model.

Everything is computed under the working renewal law ``q`` (``p_o`` at
criticality, the ``zeta``-tilted law when localized), for which

    Z_t^c = exp(shift * t) * u(t)        and
    P_t^c[A] = E_q[1_A U_t] / u(t),

so no Gibbs weight is ever exponentiated. ``u(t) = E_q[U_t]`` solves the
renewal equation, ``G(n, t) = P_q[T_n = t]`` is the ``n``-fold convolution
of ``q``, and half-space events are handled by a DP over
``(time, quantized projected-reward sum)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.signal import fftconvolve

from .errors import BudgetError, ConditioningError, ModelError, RegimeError
from .model import ModelSpec, TiltedDistribution, g_array
from .series import Bracket

log = logging.getLogger(__name__)

FFT_THRESHOLD = 2048
FFT_GUARD_RTOL = 1e-9
DEFAULT_BUDGET = 1 << 25  # float64 entries, 256 MiB
SNAP = 1e-9


def _pmf(p_o, T: int) -> np.ndarray:
    if isinstance(p_o, TiltedDistribution):
        if not p_o.is_probability:
            raise RegimeError(f"waiting-time law is defective: mass {p_o.mass.value:.15g}")
        return p_o.pmf_array(T)
    q = np.zeros(T + 1)
    arr = np.asarray(p_o, dtype=float)
    n = min(len(arr), T + 1)
    q[:n] = arr[:n]
    q[0] = 0.0
    if np.any(q < 0) or q.sum() > 1 + 1e-12:
        raise RegimeError("waiting-time array is not a (truncated) probability mass function")
    return q


# -- renewal mass ------------------------------------------------------------

def _renewal_direct(q: np.ndarray, T: int) -> np.ndarray:
    u = np.zeros(T + 1)
    u[0] = 1.0
    for t in range(1, T + 1):
        u[t] = np.dot(q[1:t + 1], u[t - 1::-1])
    return u


def _renewal_fft(q: np.ndarray, T: int) -> np.ndarray:
    """Online convolution by divide and conquer, ``O(T log^2 T)``."""
    u = np.zeros(T + 1)
    acc = np.zeros(T + 1)

    def solve(lo, hi):
        if hi - lo <= 64:
            for t in range(lo, hi):
                if t == 0:
                    u[0] = 1.0
                else:
                    u[t] = acc[t] + np.dot(q[1:t - lo + 1], u[t - 1:lo - 1 if lo else None:-1])
            return
        mid = (lo + hi) // 2
        solve(lo, mid)
        conv = fftconvolve(u[lo:mid], q[:hi - lo])
        acc[mid:hi] += conv[mid - lo:hi - lo]
        solve(mid, hi)

    solve(0, T + 1)
    return np.maximum(u, 0.0)


def renewal_mass(p_o, T: int, method: str = "auto") -> np.ndarray:
    """``u(t) = E_o[U_t]`` for ``t = 0..T`` from the renewal equation.

    ``method="auto"`` uses the direct recursion below ``FFT_THRESHOLD`` and
    divide-and-conquer FFT convolution above it; the FFT result is checked
    against the direct recursion on ``t <= FFT_THRESHOLD`` and replaced by
    it there.
    """
    if T < 1:
        raise ValueError("horizon must be >= 1")
    q = _pmf(p_o, T)
    if method == "direct" or (method == "auto" and T < FFT_THRESHOLD):
        return _renewal_direct(q, T)
    if method not in ("auto", "fft"):
        raise ValueError(f"unknown method {method!r}")
    u = _renewal_fft(q, T)
    w = min(T, FFT_THRESHOLD)
    ref = _renewal_direct(q, w)
    gap = np.abs(u[:w + 1] - ref)
    if np.any(gap > FFT_GUARD_RTOL * ref + 1e-15):
        log.warning("FFT renewal guard failed (max gap %.3e); using direct recursion", gap.max())
        return _renewal_direct(q, T)
    u[:w + 1] = ref
    return u


# -- renewal-count layers ----------------------------------------------------

def _next_layer(prev: np.ndarray, q: np.ndarray, lo: int, T: int) -> np.ndarray:
    """Convolve a layer supported on ``[lo, T]`` with ``q``, truncated at ``T``."""
    out = np.zeros(T + 1)
    if lo >= T:
        return out
    conv = np.convolve(prev[lo:T], q[1:T - lo + 1])
    out[lo + 1:] = conv[:T - lo]
    return out


def iter_layers(q: np.ndarray, T: int):
    """Yield ``(n, G(n, .))`` for ``n = 1, 2, ...`` up to ``n = T``."""
    layer = q[:T + 1].copy()
    layer[0] = 0.0
    yield 1, layer
    for n in range(2, T + 1):
        layer = _next_layer(layer, q, n - 1, T)
        yield n, layer


def count_layers(p_o, T: int, n_max: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """``G[n, t] = P_o[T_n = t]`` for ``0 <= n <= n_max``, ``0 <= t <= T``.

    Layers are built by direct (not FFT) convolution so that tiny masses
    keep full relative accuracy.
    """
    if not 0 <= n_max <= T:
        raise ValueError("need 0 <= n_max <= T")
    if (n_max + 1) * (T + 1) > budget:
        raise BudgetError(f"{n_max + 1} x {T + 1} layer table exceeds budget of {budget} entries")
    q = _pmf(p_o, T)
    G = np.zeros((n_max + 1, T + 1))
    G[0, 0] = 1.0
    if n_max:
        for n, layer in iter_layers(q, T):
            G[n] = layer
            if n == n_max:
                break
    return G


# -- tables -----------------------------------------------------------------

@dataclass(frozen=True)
class RenewalTables:
    """Renewal masses of a working law up to ``horizon``.

    ``log_zc[t] = shift * t + ln u(t)`` is the log partition function of the
    constrained model when ``shift`` is the exponent removed from the
    Gibbs weights (``ell`` or ``zeta``).
    """

    horizon: int
    pmf: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    log_zc: np.ndarray = field(repr=False)
    shift: float = 0.0
    mean_s: float | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def build(cls, p_o, T: int, shift: float | None = None, method: str = "auto") -> "RenewalTables":
        q = _pmf(p_o, T)
        u = renewal_mass(q, T, method=method)
        if shift is None:
            shift = p_o.shift if isinstance(p_o, TiltedDistribution) else 0.0
        mean_s = p_o.mean.value if isinstance(p_o, TiltedDistribution) else None
        t = np.arange(T + 1)
        with np.errstate(divide="ignore"):
            log_zc = shift * t + np.log(u)
        for a in (q, u, log_zc):
            a.setflags(write=False)
        return cls(T, q, u, log_zc, shift, mean_s)

    def layers(self, n_max: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
        G = self._cache.get("layers")
        if G is None or G.shape[0] <= n_max:
            G = count_layers(self.pmf, self.horizon, n_max, budget)
            G.setflags(write=False)
            self._cache["layers"] = G
        return G[:n_max + 1]

    def renewal_count_moment(self) -> np.ndarray:
        """``E_o[N_t U_t]`` for ``t = 0..horizon``.

        Conditioning on the first waiting time gives
        ``m(t) = sum_s q(s) (m(t-s) + u(t-s))``.
        """
        m = self._cache.get("moment")
        if m is None:
            q, u, T = self.pmf, self.u, self.horizon
            m = np.zeros(T + 1)
            for t in range(1, T + 1):
                m[t] = np.dot(q[1:t + 1], (m[t - 1::-1] + u[t - 1::-1]))
            m.setflags(write=False)
            self._cache["moment"] = m
        return m

    def check_t(self, t: int) -> None:
        if not 1 <= t <= self.horizon:
            raise ValueError(f"t={t} outside table horizon 1..{self.horizon}")
        if self.u[t] <= 0:
            raise ConditioningError(f"u({t}) = 0: t cannot be a renewal")


def build_tables(model: ModelSpec, classification, T: int, method: str = "auto") -> RenewalTables:
    from .thermo import working_distribution

    dist = working_distribution(model, classification)
    return RenewalTables.build(dist, T, shift=dist.shift, method=method)


def partition_direct(model: ModelSpec, T: int) -> np.ndarray:
    """``Z_t^c`` from ``Z_t = sum_s exp(v(s)) p(s) Z_{t-s}``, in linear scale."""
    w = model.weight_array(T, 0.0)
    return _renewal_direct(w, T)


# -- renewal count ------------------------------------------------------------

def count_probabilities(tables: RenewalTables, pairs: Iterable[tuple[int, int]]) -> dict:
    """``P_t^c[N_t <= m]`` for several ``(t, m)`` in one pass over the layers."""
    pairs = [(int(t), int(m)) for t, m in pairs]
    for t, _ in pairs:
        tables.check_t(t)
    out = {}
    need = {}
    for t, m in pairs:
        if m >= t:
            out[(t, m)] = 1.0
        elif m < 1:
            out[(t, m)] = 0.0
        else:
            need[(t, m)] = []
    if need:
        t_top = max(t for t, _ in need)
        n_top = max(m for _, m in need)
        for n, layer in iter_layers(tables.pmf, t_top):
            for (t, m), parts in need.items():
                if n <= m:
                    parts.append(layer[t])
            if n >= n_top:
                break
        for (t, m), parts in need.items():
            out[(t, m)] = math.fsum(parts) / tables.u[t]
    return out


def exact_prob_count(tables: RenewalTables, t: int, m: int) -> float:
    """``P_t^c[N_t <= m] = sum_{n<=m} G(n, t) / u(t)``."""
    return count_probabilities(tables, [(t, m)])[(t, m)]


# -- half-space events -------------------------------------------------------

MODES = ("exact", "bracket")


@dataclass(frozen=True)
class HalfSpaceQuery:
    """Event ``sum_i g(S_i) 1{T_i <= t} <= alpha t`` on a renewal at ``t``.

    ``g[s]`` holds the projected reward for ``s = 0..len(g)-1``. In exact
    mode ``scale * g`` must be integer valued; in bracket mode ``g`` is
    quantized on a grid of width ``delta`` rounding down and up.
    """

    alpha: float
    g: np.ndarray = field(repr=False, compare=False)
    scale: float = 1.0
    delta: float | None = None
    mode: str = "exact"

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "bracket" and self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be > 0")
        if not self.scale > 0:
            raise ValueError("scale must be > 0")

    @classmethod
    def for_model(cls, model: ModelSpec, classification, alpha: float, T: int,
                  mode: str = "exact", delta: float | None = None) -> "HalfSpaceQuery":
        """Query for ``W_t / t`` in the half-space of the given model.

        The natural integer scale is ``|rho - r|``, which turns ``g`` into
        ``+-(f(s) - r s)``.
        """
        g = g_array(model, classification, T)
        q = cls(alpha, g, scale=abs(classification.rho - classification.r), delta=delta, mode=mode)
        if mode == "exact":
            q.integer_steps(T)
        return q

    @property
    def horizon(self) -> int:
        return len(self.g) - 1

    def default_delta(self, t: int) -> float:
        """Grid width giving at most ``4 t`` buckets on the reachable g-sum range."""
        s = np.arange(1, t + 1)
        ratio = self.g[1:t + 1] / s
        span = max(ratio.max(), 0.0) - min(ratio.min(), 0.0)
        return span / 4 if span > 0 else 1.0

    def integer_steps(self, t: int) -> tuple[np.ndarray, int]:
        x = self.scale * self.g[:t + 1]
        h = np.rint(x)
        if np.any(np.abs(x - h) > SNAP * np.maximum(1.0, np.abs(x))):
            raise ModelError("scale * g is not integer valued; use bracket mode")
        return h.astype(np.int64), _snap_floor(self.scale * self.alpha * t)

    def quantized_steps(self, t: int, delta: float | None = None):
        """``(h_lower, h_upper, K)``: ceil/floor quantizations and the common threshold."""
        d = delta or self.delta or self.default_delta(t)
        x = self.g[:t + 1] / d
        near = np.rint(x)
        snapped = np.abs(x - near) <= SNAP * np.maximum(1.0, np.abs(x))
        up = np.where(snapped, near, np.ceil(x)).astype(np.int64)
        down = np.where(snapped, near, np.floor(x)).astype(np.int64)
        return up, down, _snap_floor(self.alpha * t / d)


def _snap_floor(x: float) -> int:
    near = round(x)
    if abs(x - near) <= SNAP * max(1.0, abs(x)):
        return int(near)
    return int(math.floor(x))


GROUPED_MAX = 16


def _sum_range(q: np.ndarray, h: np.ndarray, t: int) -> tuple[int, int]:
    s = np.arange(1, t + 1)
    on = q[1:t + 1] > 0
    per = h[1:t + 1][on] / s[on]
    return int(math.floor(t * min(per.min(), 0.0))), int(math.ceil(t * max(per.max(), 0.0)))


def _reward_dp(q: np.ndarray, h: np.ndarray, t: int, kmin: int, kmax: int,
               budget: int) -> np.ndarray:
    """Table ``D[tau, k] = E_q[1{sum h(S_i) = k} U_tau]`` for ``tau <= t``, ``kmin <= k <= kmax``.

    States above ``kmax`` are dropped, which is exact when ``h >= 0``.
    Steps are grouped by value of ``h`` (one matvec per group) when there
    are few distinct values, and applied one waiting time at a time otherwise.
    """
    nk = kmax - kmin + 1
    if (t + 1) * nk > budget:
        raise BudgetError(f"DP state space {t + 1} x {nk} exceeds budget; use a larger delta")
    on = np.flatnonzero(q[1:t + 1] > 0) + 1
    D = np.zeros((t + 1, nk))
    D[0, -kmin] = 1.0

    def shift_add(row, v, j):
        if j >= 0:
            if j < nk:
                row[j:] += v[:nk - j]
        elif -j < nk:
            row[:nk + j] += v[-j:]

    values = np.unique(h[on])
    if len(values) <= GROUPED_MAX:
        groups = []
        for j in values:
            qj = np.where(h == j, q[:t + 1], 0.0)
            qj[0] = 0.0
            groups.append((int(j), qj))
        for tau in range(1, t + 1):
            past = D[tau - 1::-1]
            for j, qj in groups:
                shift_add(D[tau], qj[1:tau + 1] @ past, j)
    else:
        for tau in range(1, t + 1):
            row = D[tau]
            for s in on:
                if s > tau:
                    break
                shift_add(row, q[s] * D[tau - s], int(h[s]))
    return D


def _halfspace_dp(q: np.ndarray, h: np.ndarray, K: int, t: int, budget: int) -> float:
    """``E_q[1{sum h(S_i) <= K} U_t]`` by DP over (time, integer sum)."""
    kmin, kmax = _sum_range(q, h, t)
    if K < kmin:
        return 0.0
    if kmin == 0:
        kmax = min(kmax, K)
    row = _reward_dp(q, h, t, kmin, kmax, budget)[t]
    return math.fsum(row[:min(K, kmax) - kmin + 1])


def reward_distribution(tables: RenewalTables, h, t: int,
                        budget: int = DEFAULT_BUDGET) -> tuple[int, np.ndarray]:
    """Law of the integer reward ``sum h(S_i)`` over a bridge to ``t``.

    Returns ``(kmin, probs)`` with ``probs[k - kmin] = P_t^c[sum h(S_i) = k]``.
    """
    kmin, rows = reward_distributions(tables, h, [t], budget)
    return kmin, rows[t]


def reward_distributions(tables: RenewalTables, h, ts,
                         budget: int = DEFAULT_BUDGET) -> tuple[int, dict[int, np.ndarray]]:
    """:func:`reward_distribution` for several sizes from one DP pass.

    All rows share the offset ``kmin`` of the largest size, since the
    reachable range of the reward only widens with ``t``.
    """
    ts = [int(t) for t in ts]
    for t in ts:
        tables.check_t(t)
    T = max(ts)
    q = tables.pmf[:T + 1]
    h = np.asarray(h, dtype=np.int64)[:T + 1]
    kmin, kmax = _sum_range(q, h, T)
    D = _reward_dp(q, h, T, kmin, kmax, budget)
    return kmin, {t: D[t] / tables.u[t] for t in ts}


def _is_count(h: np.ndarray, q: np.ndarray, t: int) -> bool:
    on = q[1:t + 1] > 0
    return bool(np.all(h[1:t + 1][on] == 1))


def halfspace_functional(query: HalfSpaceQuery, p_o, t: int,
                         budget: int = DEFAULT_BUDGET) -> Bracket:
    """``E(t) = E_o[1{sum g(S_i) 1{T_i<=t} <= alpha t} U_t]``.

    Exact mode returns a degenerate bracket; bracket mode returns the
    certified ``[E^-(t), E^+(t)]`` from ceil/floor quantization.
    """
    if t > query.horizon:
        raise ValueError("query g table shorter than t")
    q = _pmf(p_o, t)
    if query.mode == "exact":
        h, K = query.integer_steps(t)
        if _is_count(h, q, t):
            val = _count_mass(q, t, K)
        else:
            val = _halfspace_dp(q, h, K, t, budget)
        return Bracket(val, val)
    up, down, K = query.quantized_steps(t)
    lo = _halfspace_dp(q, up, K, t, budget)
    hi = _halfspace_dp(q, down, K, t, budget)
    return Bracket(min(lo, hi), max(lo, hi))


def _count_mass(q: np.ndarray, t: int, m: int) -> float:
    if m < 1:
        return 0.0
    parts = []
    for n, layer in iter_layers(q, t):
        if n > m:
            break
        parts.append(layer[t])
    return math.fsum(parts)


def exact_prob_halfspace(query: HalfSpaceQuery, tables: RenewalTables, t: int,
                         budget: int = DEFAULT_BUDGET) -> Bracket:
    """``P_t^c[W_t / t in H_alpha] = E(t) / u(t)``, as a bracket."""
    tables.check_t(t)
    e = halfspace_functional(query, tables.pmf, t, budget)
    ut = tables.u[t]
    return Bracket(min(e.lower / ut, 1.0), min(e.upper / ut, 1.0))


def halfspace_probabilities(query: HalfSpaceQuery, tables: RenewalTables, ts: Iterable[int],
                            budget: int = DEFAULT_BUDGET) -> dict:
    """Probabilities for several ``t``; count-type exact queries share one layer pass."""
    ts = sorted(set(int(t) for t in ts))
    if query.mode == "exact":
        steps = {t: query.integer_steps(t) for t in ts}
        if all(_is_count(h, tables.pmf, t) for t, (h, _) in steps.items()):
            probs = count_probabilities(tables, [(t, K) for t, (_, K) in steps.items()])
            return {t: Bracket(probs[(t, K)], probs[(t, K)]) for t, (_, K) in steps.items()}
    return {t: exact_prob_halfspace(query, tables, t, budget) for t in ts}


def product_moment(tables: RenewalTables, t: int) -> float:
    """``E_o[(N_t / t) U_t] = sum_n (n / t) G(n, t)``."""
    if not 1 <= t <= tables.horizon:
        raise ValueError(f"t={t} outside table horizon")
    return tables.renewal_count_moment()[t] / t
