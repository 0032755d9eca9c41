"""Model family: waiting-time law ``p``, potential ``v`` and reward ``f``.

A waiting-time law is an explicit finite head plus an optional power tail

    p(s) = scale * ln(e + s)**log_power / s**(kappa + 1),   s >= tail_start,

which covers pure power laws (empty head, ``tail_start = 1``), finite
supports (no tail) and tables glued to a power tail. The potential is a
constant ``beta`` with optional finite overrides, and the reward is
``N_t`` counting, the identity, or a table with a linear tail. Everything
that is needed downstream reduces to certified sums of
``phi(s) * exp(v(s) - c*s) * p(s)``, see :meth:`ModelSpec.weighted_sum`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Iterable, Mapping

import numpy as np

from .errors import ModelError, RegimeError
from .series import EPS, Bracket, converges, power_log_sum

Pairs = tuple[tuple[int, float], ...]


def _pairs(values: Mapping[int, float] | Iterable[tuple[int, float]], what: str) -> Pairs:
    items = values.items() if isinstance(values, Mapping) else values
    out = {}
    for s, x in items:
        if int(s) != s or s < 1:
            raise ModelError(f"{what}: waiting time {s!r} is not a positive integer")
        if not math.isfinite(x):
            raise ModelError(f"{what}: value at s={s} is not finite")
        if int(s) in out:
            raise ModelError(f"{what}: duplicate entry for s={s}")
        out[int(s)] = float(x)
    return tuple(sorted(out.items()))


@dataclass(frozen=True)
class PowerTail:
    """``scale * ln(e+s)**log_power / s**(kappa+1)``."""

    kappa: float
    log_power: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ModelError(f"kappa must be a finite positive real, got {self.kappa}")
        if not math.isfinite(self.log_power):
            raise ModelError("log_power must be finite")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ModelError("scale must be a finite positive real")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = self.scale * np.exp(self.log_power * np.log(np.log(np.e + s))
                                  - (self.kappa + 1) * np.log(s))
        return out if out.ndim else float(out)

    def moment_converges(self, k: int) -> bool:
        """Whether ``sum s^k p(s)`` over the tail is finite."""
        return converges(self.kappa + 1 - k, self.log_power, 0.0)


@dataclass(frozen=True)
class WaitingTimeSpec:
    """Waiting-time law ``p(s) = P[S_1 = s]`` on ``{1, 2, ...}``.

    Total mass may exceed or fall short of one: only the product
    ``exp(v(s)) p(s)`` enters the constrained model, and any defect sits at
    ``S = inf``.
    """

    head: Pairs = ()
    tail: PowerTail | None = None
    tail_start: int = 1

    def __post_init__(self):
        object.__setattr__(self, "head", _pairs(self.head, "waiting"))
        for s, p in self.head:
            if p <= 0:
                raise ModelError(f"waiting: p({s}) = {p} must be > 0")
        if self.tail is not None:
            if int(self.tail_start) != self.tail_start or self.tail_start < 1:
                raise ModelError("waiting: tail_start must be a positive integer")
            if self.head and self.head[-1][0] >= self.tail_start:
                raise ModelError("waiting: head entries must lie below tail_start")
        elif not self.head:
            raise ModelError("waiting: support is empty")
        if self.period != 1:
            raise ModelError(f"waiting: support is periodic with period {self.period}")

    @classmethod
    def power(cls, kappa: float, log_power: float = 0.0, scale: float = 1.0) -> "WaitingTimeSpec":
        return cls(tail=PowerTail(kappa, log_power, scale), tail_start=1)

    @classmethod
    def finite(cls, mass) -> "WaitingTimeSpec":
        return cls(head=mass)

    @classmethod
    def hybrid(cls, head, tail: PowerTail, tail_start: int) -> "WaitingTimeSpec":
        return cls(head=head, tail=tail, tail_start=tail_start)

    @property
    def family(self) -> str:
        if self.tail is None:
            return "finite"
        return "hybrid" if self.head or self.tail_start > 1 else "power"

    @property
    def is_finite(self) -> bool:
        return self.tail is None

    @property
    def period(self) -> int:
        if self.tail is not None:
            # The tail contains two consecutive integers.
            return 1
        return reduce(math.gcd, (s for s, _ in self.head))

    @property
    def explicit_max(self) -> int:
        """Largest waiting time handled as an explicit table entry."""
        if self.tail is not None:
            return self.tail_start - 1
        return self.head[-1][0]

    def pmf(self, s: int) -> float:
        if s < 1:
            raise ValueError("waiting time must be >= 1")
        if self.tail is not None and s >= self.tail_start:
            return self.tail(s)
        return dict(self.head).get(int(s), 0.0)

    def pmf_array(self, T: int) -> np.ndarray:
        """``[0, p(1), ..., p(T)]``."""
        out = np.zeros(T + 1)
        for s, p in self.head:
            if s <= T:
                out[s] = p
        if self.tail is not None and self.tail_start <= T:
            out[self.tail_start:] = self.tail(np.arange(self.tail_start, T + 1))
        return out

    @cached_property
    def normalization(self) -> Bracket:
        """Certified ``sum_s p(s)``."""
        total = Bracket.exact(math.fsum(p for _, p in self.head))
        if self.tail is not None:
            t = self.tail
            total = total + power_log_sum(self.tail_start, t.kappa + 1, t.log_power, 0.0, t.scale)
        return total


@dataclass(frozen=True)
class PotentialSpec:
    """Potential ``v``: constant ``beta`` off a finite override table."""

    beta: float = 0.0
    table: Pairs = ()

    def __post_init__(self):
        if not math.isfinite(self.beta):
            raise ModelError("potential: beta must be finite")
        object.__setattr__(self, "table", _pairs(self.table, "potential"))

    @classmethod
    def constant(cls, beta: float) -> "PotentialSpec":
        return cls(beta=beta)

    @property
    def is_constant(self) -> bool:
        return not self.table

    @property
    def explicit_max(self) -> int:
        return self.table[-1][0] if self.table else 0

    def __call__(self, s: int) -> float:
        return dict(self.table).get(int(s), self.beta)


REWARD_KINDS = ("count", "identity", "table")


@dataclass(frozen=True)
class RewardSpec:
    """Deterministic scalar reward ``f``.

    ``table`` rewards take the listed values and ``slope * s + intercept``
    elsewhere, so ``f(s)/s -> slope``.
    """

    kind: str = "count"
    table: Pairs = ()
    slope: float = 0.0
    intercept: float = 0.0

    def __post_init__(self):
        if self.kind not in REWARD_KINDS:
            raise ModelError(f"reward: unknown kind {self.kind!r}")
        object.__setattr__(self, "table", _pairs(self.table, "reward"))
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise ModelError("reward: slope and intercept must be finite")
        if self.kind != "table" and (self.table or self.slope or self.intercept):
            raise ModelError(f"reward: kind {self.kind!r} takes no table or linear tail")

    @classmethod
    def count(cls) -> "RewardSpec":
        return cls("count")

    @classmethod
    def identity(cls) -> "RewardSpec":
        return cls("identity")

    @classmethod
    def from_table(cls, values, slope: float = 0.0, intercept: float = 0.0) -> "RewardSpec":
        return cls("table", values, slope, intercept)

    @property
    def r(self) -> float:
        """Limit of ``f(s)/s``."""
        return {"count": 0.0, "identity": 1.0}.get(self.kind, self.slope)

    @property
    def explicit_max(self) -> int:
        return self.table[-1][0] if self.table else 0

    @property
    def bound(self) -> float:
        """A constant ``M`` with ``|f(s)| <= M s`` for every ``s >= 1``."""
        if self.kind == "count" or self.kind == "identity":
            return 1.0
        on_table = max((abs(f) / s for s, f in self.table), default=0.0)
        return max(on_table, abs(self.slope) + abs(self.intercept))

    def __call__(self, s: int) -> float:
        if self.kind == "count":
            return 1.0
        if self.kind == "identity":
            return float(s)
        return dict(self.table).get(int(s), self.slope * s + self.intercept)

    def array(self, T: int) -> np.ndarray:
        s = np.arange(T + 1, dtype=float)
        if self.kind == "count":
            return np.ones(T + 1)
        if self.kind == "identity":
            return s
        out = self.slope * s + self.intercept
        for k, f in self.table:
            if k <= T:
                out[k] = f
        return out


@dataclass(frozen=True)
class ModelSpec:
    """Constrained pinning model ``(p, v, f)``."""

    waiting: WaitingTimeSpec
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    reward: RewardSpec = field(default_factory=RewardSpec)
    name: str = field(default="", compare=False)

    @property
    def ell(self) -> float:
        """``limsup (1/s) ln e^{v(s)} p(s)``.

        Exact for the supported families: the potential is bounded off a
        finite set and the power tail decays subexponentially, so the limsup
        is 0 with a tail and ``-inf`` without one.
        """
        return -math.inf if self.waiting.is_finite else 0.0

    @property
    def explicit_max(self) -> int:
        return max(self.waiting.explicit_max, self.potential.explicit_max, self.reward.explicit_max)

    def weight_array(self, T: int, shift: float = 0.0) -> np.ndarray:
        """``[0, w(1), ..., w(T)]`` with ``w(s) = exp(v(s) - shift*s) p(s)``."""
        p = self.waiting.pmf_array(T)
        s = np.arange(T + 1, dtype=float)
        v = np.full(T + 1, self.potential.beta)
        for k, x in self.potential.table:
            if k <= T:
                v[k] = x
        out = np.zeros(T + 1)
        pos = p > 0
        out[pos] = np.exp(v[pos] - shift * s[pos] + np.log(p[pos]))
        return out

    def weighted_sum(self, shift: float, phi: str = "one", start: int = 1) -> Bracket:
        """Certified ``sum_{s>=start} phi(s) exp(v(s) - shift*s) p(s)``.

        ``phi`` is ``"one"``, ``"s"`` or ``"reward"``.
        """
        if phi not in ("one", "s", "reward"):
            raise ValueError(f"unknown phi {phi!r}")
        n0 = self.explicit_max
        total = Bracket(0.0, 0.0)
        if start <= n0:
            s = np.arange(start, n0 + 1)
            w = self.weight_array(n0, shift)[start:]
            if phi == "one":
                vals = w
            elif phi == "s":
                vals = s * w
            else:
                vals = self.reward.array(n0)[start:] * w
            head = math.fsum(vals)
            pad = 64 * EPS * math.fsum(np.abs(vals))
            total = Bracket(head - pad, head + pad)
        tail = self.waiting.tail
        if tail is None:
            return total
        a = max(start, n0 + 1)
        coef = tail.scale * math.exp(self.potential.beta)
        q0 = tail.kappa + 1

        def part(k: int) -> Bracket:
            return power_log_sum(a, q0 - k, tail.log_power, shift, coef)

        if phi == "one":
            return total + part(0)
        if phi == "s":
            return total + part(1)
        rw = self.reward
        if rw.kind == "count":
            return total + part(0)
        if rw.kind == "identity":
            return total + part(1)
        out = total
        if rw.slope:
            out = out + part(1).scale(rw.slope)
        if rw.intercept:
            out = out + part(0).scale(rw.intercept)
        return out

    def tilted(self, shift: float) -> "TiltedDistribution":
        return TiltedDistribution(self, shift)

    def replace_reward(self, reward: RewardSpec) -> "ModelSpec":
        return ModelSpec(self.waiting, self.potential, reward, self.name)

    def replace_potential(self, potential: PotentialSpec) -> "ModelSpec":
        return ModelSpec(self.waiting, potential, self.reward, self.name)


@dataclass(frozen=True)
class TiltedDistribution:
    """Weights ``q(s) = exp(v(s) - shift*s) p(s)``.

    With ``shift = ell`` this is the effective weight ``p_o``; with
    ``shift = zeta`` it is the tilted law that normalizes a localized model.
    """

    model: ModelSpec
    shift: float

    def pmf(self, s: int) -> float:
        if s < 1:
            raise ValueError("waiting time must be >= 1")
        p = self.model.waiting.pmf(s)
        if p == 0:
            return 0.0
        return math.exp(self.model.potential(s) - self.shift * s) * p

    def pmf_array(self, T: int) -> np.ndarray:
        return self.model.weight_array(T, self.shift)

    @cached_property
    def mass(self) -> Bracket:
        return self.model.weighted_sum(self.shift, "one")

    @cached_property
    def mean(self) -> Bracket:
        """``sum_s s q(s)``; raises :class:`RegimeError` when infinite."""
        return self.model.weighted_sum(self.shift, "s")

    @cached_property
    def reward_mean(self) -> Bracket:
        return self.model.weighted_sum(self.shift, "reward")

    @property
    def is_probability(self) -> bool:
        m = self.mass
        return abs(m.value - 1.0) <= 1e-12 + m.error

    @property
    def kappa(self) -> float | None:
        tail = self.model.waiting.tail
        return None if tail is None else tail.kappa

    def slowly_varying(self, x):
        """``L(x) = q(x) x^{kappa+1}`` on the power tail, extended to real ``x``."""
        tail = self.model.waiting.tail
        if tail is None or self.shift != 0.0:
            raise RegimeError("slowly varying part requires an untilted power tail")
        x = np.asarray(x, dtype=float)
        out = (tail.scale * math.exp(self.model.potential.beta)
               * np.exp(tail.log_power * np.log(np.log(np.e + x))))
        return out if out.ndim else float(out)

    def tail(self, x: float) -> Bracket:
        """Certified ``sum_{s > x} q(s)``."""
        return self.model.weighted_sum(self.shift, "one", start=int(math.floor(x)) + 1)


def eval_p(model: ModelSpec, s: int) -> float:
    """Waiting-time probability ``p(s)``; zero off the support."""
    return model.waiting.pmf(s)


def tail_Q(dist: TiltedDistribution, x: float) -> Bracket:
    """Tail ``Q(x) = sum_{s > x} p_o(s)`` of an effective distribution.

    The returned bracket's half-width is the certified absolute error.
    """
    if not x > 0:
        raise ValueError(f"tail_Q needs x > 0, got {x}")
    if not dist.is_probability:
        raise RegimeError("tail_Q needs a genuine probability distribution")
    return dist.tail(x)


def _projection(classification) -> tuple[float, float]:
    rho, r = classification.rho, classification.r
    if abs(rho - r) <= 1e-10:
        raise RegimeError("rho == r: the half-space projection is undefined")
    return rho, r


def eval_g(model: ModelSpec, classification, s: int) -> float:
    """Projected reward ``g(s) = (f(s) - r s) / (rho - r)``, zero off the support."""
    rho, r = _projection(classification)
    if s < 1:
        raise ValueError("waiting time must be >= 1")
    if model.waiting.pmf(s) == 0:
        return 0.0
    return (model.reward(s) - r * s) / (rho - r)


def g_array(model: ModelSpec, classification, T: int) -> np.ndarray:
    """``[0, g(1), ..., g(T)]``."""
    rho, r = _projection(classification)
    s = np.arange(T + 1, dtype=float)
    g = (model.reward.array(T) - r * s) / (rho - r)
    g[model.waiting.pmf_array(T) == 0] = 0.0
    g[0] = 0.0
    return g
