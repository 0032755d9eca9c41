"""Precise asymptotics at criticality and their numerical checks.

At a critical model with ``rho != r`` the probability that ``W_t / t``
lands in the half-space ``H_alpha`` decays like ``C t^{1-kappa} L(t)``.
This module evaluates ``C``, runs ladder studies of the exact
probabilities against that prediction, checks the tail and product-moment
lemmas the limit rests on, and measures exponential slopes away from
criticality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ModelError, NumericError, RegimeError
from .exact import (HalfSpaceQuery, RenewalTables, build_tables, count_probabilities,
                    halfspace_probabilities, product_moment)
from .model import ModelSpec, RewardSpec, tail_Q
from .series import Bracket
from .thermo import Classification, RateFunctionNt, Regime, classify, rate_function_Nt

IDENTITY_ATOL = 1e-12
IDENTITY_RTOL = 1e-12


def _require_critical(c: Classification) -> None:
    if c.regime is not Regime.CRITICAL:
        raise RegimeError(f"regime {c.regime.value}: the precise limit requires Critical with rho != r")
    if c.kappa is None or c.mean_s is None:
        raise RegimeError("precise limit requires a power-tail critical law with finite mean")


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")


def jump_bracket(alpha: float, kappa: float) -> float:
    """Closed form of ``alpha (1-alpha)^-kappa - int_{1-alpha}^1 x^-kappa dx``."""
    _check_alpha(alpha)
    if kappa == 1:
        return alpha / (1 - alpha) + math.log1p(-alpha)
    return (1 + (alpha * kappa - 1) * (1 - alpha) ** (-kappa)) / (kappa - 1)


def jump_integral(alpha: float, kappa: float) -> float:
    """Same quantity with the integral done by quadrature in ``y = ln x``."""
    _check_alpha(alpha)
    if alpha == 0:
        return 0.0
    lo = math.log1p(-alpha)
    val, _ = quad(lambda y: math.exp((1 - kappa) * y), lo, 0.0, epsabs=0.0, epsrel=1e-13)
    return alpha * (1 - alpha) ** (-kappa) - val


def limit_constant_closed(alpha: float, kappa: float, mean_s: float) -> float:
    """``C(alpha, kappa)`` in closed form, prefactor ``1 / E_o[S]``."""
    if kappa == 1:
        return jump_bracket(alpha, 1.0) / mean_s
    return jump_bracket(alpha, kappa) / kappa / mean_s


def limit_constant_from_functional(alpha: float, kappa: float, mean_s: float) -> float:
    """``C(alpha, kappa)`` rebuilt from the asymptotics of the unnormalized functional.

    The half-space functional satisfies
    ``E(t) ~ t Q(t) B / E_o[S]^2`` with ``B`` from :func:`jump_integral``.
    Dividing by ``u(t) -> 1 / E_o[S]`` and using ``t Q(t) ~ t^{1-kappa} L(t) / kappa``
    leaves ``P / (t^{1-kappa} L(t)) -> B / (kappa E_o[S])``: one factor of
    ``E_o[S]`` is absorbed by the normalization.
    """
    e_over_tq = jump_integral(alpha, kappa) / mean_s ** 2
    u_limit = 1.0 / mean_s
    tq_over_l = 1.0 / kappa
    return e_over_tq / u_limit * tq_over_l


def constants_agree(a: float, b: float) -> bool:
    return abs(a - b) <= IDENTITY_ATOL + IDENTITY_RTOL * max(abs(a), abs(b))


def theorem2_constant(classification: Classification, alpha: float) -> float:
    """Limit of ``P_t^c[W_t/t in H_alpha] / (t^{1-kappa} L(t))``.

    Both the closed form and the functional-based form are evaluated; a
    mismatch raises :class:`NumericError`.
    """
    _check_alpha(alpha)
    _require_critical(classification)
    k, es = classification.kappa, classification.mean_s
    closed = limit_constant_closed(alpha, k, es)
    rebuilt = limit_constant_from_functional(alpha, k, es)
    if not constants_agree(closed, rebuilt):
        raise NumericError(f"limit constant forms disagree: {closed!r} vs {rebuilt!r}")
    return closed


def aitken(x0: float, x1: float, x2: float) -> float:
    """Aitken delta-squared extrapolation of three successive terms."""
    d1, d2 = x1 - x0, x2 - x1
    den = d2 - d1
    if den == 0:
        return x2
    return x2 - d2 * d2 / den


# -- convergence study -------------------------------------------------------

@dataclass(frozen=True)
class LadderRow:
    t: int
    prob: Bracket
    scale: float
    ratio: float
    ratio_err: float


@dataclass(frozen=True)
class AsymptoticReport:
    """Exact probabilities on a doubling ladder against the predicted decay."""

    model_id: str
    alpha: float
    kappa: float
    constant: float
    rows: tuple[LadderRow, ...]
    extrapolated: float | None = None
    notes: tuple[str, ...] = field(default=())

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r.ratio for r in self.rows])

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.ratios)

    @property
    def shrinking(self) -> bool:
        """Whether successive ratio increments shrink in magnitude."""
        d = np.abs(self.increments)
        return bool(np.all(d[1:] < d[:-1]))

    def rel_gap(self, value: float) -> float:
        if self.constant == 0:
            return abs(value)
        return value / self.constant - 1.0


def check_ladder(t_ladder: Sequence[int]) -> list[int]:
    ts = [int(t) for t in t_ladder]
    if not ts or ts[0] < 1:
        raise ValueError("ladder must be nonempty with t >= 1")
    if any(b != 2 * a for a, b in zip(ts, ts[1:])):
        raise ValueError(f"ladder must be strictly doubling, got {ts}")
    return ts


def convergence_study(model: ModelSpec, alpha: float, t_ladder: Sequence[int],
                      mode: str = "exact", delta: float | None = None,
                      classification: Classification | None = None,
                      tables: RenewalTables | None = None) -> AsymptoticReport:
    """Ratios ``R(t) = P_t^c[W_t/t in H_alpha] / (t^{1-kappa} L(t))`` on a doubling ladder."""
    ts = check_ladder(t_ladder)
    c = classification or classify(model)
    constant = theorem2_constant(c, alpha)
    T = ts[-1]
    if tables is None or tables.horizon < T:
        tables = build_tables(model, c, T)
    query = HalfSpaceQuery.for_model(model, c, alpha, T, mode=mode, delta=delta)
    probs = halfspace_probabilities(query, tables, ts)
    rows = []
    for t in ts:
        scale = t ** (1 - c.kappa) * c.slowly_varying(t)
        p = probs[t]
        rows.append(LadderRow(t, p, scale, p.value / scale, p.error / scale))
    extra = aitken(*(r.ratio for r in rows[-3:])) if len(rows) >= 3 else None
    return AsymptoticReport(model.name, alpha, c.kappa, constant, tuple(rows), extra)


# -- lemma checks --------------------------------------------------------------

@dataclass(frozen=True)
class CheckRow:
    """``value`` observed at ``point``, compared with ``predicted``."""

    point: float
    value: float
    predicted: float
    error: float

    @property
    def rel_gap(self) -> float:
        return self.value / self.predicted - 1.0 if self.predicted else self.value


def lemma1_check(classification: Classification, x_ladder: Sequence[float]) -> list[CheckRow]:
    """``kappa x^kappa Q(x) / L(x)``, which tends to 1."""
    _require_power_critical(classification)
    k, L = classification.kappa, classification.slowly_varying
    rows = []
    for x in x_ladder:
        q = tail_Q(classification.dist, x)
        f = k * x ** k / L(x)
        rows.append(CheckRow(float(x), q.value * f, 1.0, q.error * f))
    return rows


def regular_variation_probe(classification: Classification, x: float, gamma: float = 2.0) -> CheckRow:
    """``Q(gamma x) / Q(x)`` against ``gamma^-kappa``."""
    _require_power_critical(classification)
    a = tail_Q(classification.dist, gamma * x)
    b = tail_Q(classification.dist, x)
    r = a / b
    return CheckRow(float(x), r.value, gamma ** (-classification.kappa), r.error)


def _require_power_critical(c: Classification) -> None:
    if not c.is_critical or c.kappa is None:
        raise RegimeError(f"regime {c.regime.value}: tail checks need a critical power-tail law")


def lemma2_check(tables: RenewalTables, t_ladder: Sequence[int],
                 mean_s: float | None = None) -> tuple[list[CheckRow], bool]:
    """``E_o[(N_t/t) U_t] E_o[S]^2`` along the ladder and whether ``|value-1|`` shrinks."""
    es = mean_s if mean_s is not None else tables.mean_s
    if es is None:
        raise ValueError("mean waiting time required")
    rows = []
    for t in t_ladder:
        v = product_moment(tables, int(t)) * es * es
        rows.append(CheckRow(float(t), float(v), 1.0, 1e-13 * float(v)))
    gaps = [abs(r.value - 1) for r in rows]
    return rows, all(b < a for a, b in zip(gaps, gaps[1:]))


# -- exponential regime --------------------------------------------------------

@dataclass(frozen=True)
class SlopeRow:
    t: int
    m: int
    prob: float
    slope: float | None
    predicted: float
    skipped: bool = False

    @property
    def rel_gap(self) -> float | None:
        if self.slope is None:
            return None
        return self.slope / self.predicted - 1.0 if self.predicted else self.slope


def exponential_regime_check(model: ModelSpec, w: float, t_ladder: Sequence[int],
                             classification: Classification | None = None) -> list[SlopeRow]:
    """Slopes ``-(1/t) ln P_t^c[N_t <= w t]`` against ``I(w)`` for the renewal count."""
    if not model.potential.is_constant:
        raise ModelError("slope check needs a constant potential")
    model = model.replace_reward(RewardSpec.count())
    c = classification or classify(model)
    if c.regime not in (Regime.LOCALIZED, Regime.CRITICAL):
        raise RegimeError(f"regime {c.regime.value}: slope check needs Localized or Critical")
    if not 0 <= w <= c.rho:
        raise ValueError(f"w must lie in [0, rho={c.rho:.6g}]")
    predicted = rate_function_Nt(RateFunctionNt.from_model(model), w)
    ts = sorted(int(t) for t in t_ladder)
    tables = build_tables(model, c, ts[-1])
    pairs = [(t, _floor(w * t)) for t in ts]
    probs = count_probabilities(tables, pairs)
    rows = []
    for t, m in pairs:
        p = probs[(t, m)]
        if p > 0:
            rows.append(SlopeRow(t, m, p, -math.log(p) / t, predicted))
        else:
            rows.append(SlopeRow(t, m, p, None, predicted, skipped=True))
    return rows


def _floor(x: float) -> int:
    near = round(x)
    return int(near) if abs(x - near) <= 1e-9 * max(1.0, abs(x)) else math.floor(x)
