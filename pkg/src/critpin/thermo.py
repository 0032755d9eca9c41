"""Thermodynamic classification and the rate function of the renewal count.

All constants carry certified error bars inherited from
:mod:`critpin.series`; root finding is bisection throughout, since every
equation solved here is monotone on a known bracket.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import bisect

from .errors import ModelError, NumericError, RegimeError
from .model import ModelSpec, TiltedDistribution
from .series import EPS, Bracket

MASS_TOL = 1e-12
RHO_TOL = 1e-10
MAX_BISECT = 200


class Regime(str, enum.Enum):
    LOCALIZED = "Localized"
    CRITICAL = "Critical"
    DELOCALIZED = "Delocalized"
    EXCEPTIONAL_CRITICAL = "ExceptionalCritical"


@dataclass(frozen=True)
class Classification:
    """Regime data of a model.

    ``dist`` is the working renewal law: ``p_o`` unless the model is
    localized, in which case it is the ``zeta``-tilted law (a genuine
    probability in both critical and localized cases). ``errors`` holds
    the certified absolute error of each numeric field by name.
    """

    ell: float
    rho: float
    r: float
    regime: Regime
    zeta: float | None = None
    mass: float | None = None
    mean_s: float | None = None
    kappa: float | None = None
    beta_c: float | None = None
    w_c: float | None = None
    dist: TiltedDistribution | None = field(default=None, compare=False, repr=False)
    slowly_varying: Callable | None = field(default=None, compare=False, repr=False)
    errors: dict = field(default_factory=dict, compare=False)

    @property
    def is_critical(self) -> bool:
        return self.regime in (Regime.CRITICAL, Regime.EXCEPTIONAL_CRITICAL)

    @property
    def shift(self) -> float:
        """Exponential rate absorbed by the working law (``zeta`` or ``ell``)."""
        return self.zeta if self.zeta is not None else self.ell

    def as_dict(self) -> dict:
        """JSON-ready view; every numeric field is paired with ``<name>_err``."""
        out = {"regime": self.regime.value}
        for name in ("ell", "zeta", "rho", "r", "mean_s", "kappa", "beta_c", "w_c"):
            val = getattr(self, name)
            if val is not None and math.isinf(val):
                val = "-inf" if val < 0 else "inf"
            out[name] = val
            out[name + "_err"] = self.errors.get(name, 0.0 if val is not None else None)
        return out


def _mass_bracket(model: ModelSpec, shift: float) -> Bracket:
    return model.weighted_sum(shift, "one")


def effective_distribution(model: ModelSpec) -> TiltedDistribution:
    """``p_o(s) = exp(v(s) - ell s) p(s)``.

    The returned handle exposes certified ``mass`` and ``mean``; check
    ``is_probability`` before using it as a waiting-time law.
    """
    if model.ell == -math.inf:
        raise RegimeError("p_o undefined: ell = -inf (finite support)")
    return model.tilted(model.ell)


def _solve_zeta(model: ModelSpec) -> tuple[float, float]:
    ell = model.ell

    def F(z):
        return _mass_bracket(model, z).value - 1.0

    if ell == -math.inf:
        lo, hi = -1.0, 1.0
        for _ in range(64):
            if F(lo) > 0:
                break
            lo *= 2
        else:
            raise NumericError("could not bracket zeta from below")
    else:
        if not _mass_bracket(model, ell).lower > 1.0 + MASS_TOL:
            raise RegimeError("zeta exists only when ell = -inf or sum p_o > 1")
        lo, hi = ell, max(2 * ell, 1.0) if ell > 0 else 1.0
    for _ in range(64):
        if F(hi) < 0:
            break
        hi *= 2
    else:
        raise NumericError("could not bracket zeta from above")

    try:
        zeta = bisect(F, lo, hi, xtol=1e-300, rtol=4 * EPS, maxiter=MAX_BISECT)
    except RuntimeError as exc:
        raise NumericError(f"zeta bisection did not converge: {exc}") from exc
    mass = _mass_bracket(model, zeta)
    resid = mass.value - 1.0
    if abs(resid) > 1e-12:
        raise NumericError(f"zeta residual {resid:.3e} exceeds 1e-12")
    slope = model.weighted_sum(zeta, "s").value
    err = (abs(resid) + mass.error) / slope + 4 * EPS * abs(zeta)
    return zeta, err


def solve_zeta(model: ModelSpec) -> float:
    """Unique ``zeta > ell`` with ``sum_s exp(v(s) - zeta s) p(s) = 1``."""
    return _solve_zeta(model)[0]


def _beta_c(model: ModelSpec) -> Bracket:
    if not model.potential.is_constant:
        raise ModelError("beta_c is defined for a constant potential")
    if model.ell == -math.inf:
        raise RegimeError("beta_c needs ell > -inf")
    tail = model.waiting.tail
    if not tail.moment_converges(1):
        raise RegimeError("sum s exp(-ell s) p(s) diverges: no discontinuous transition")
    norm = model.waiting.normalization
    return Bracket(-math.log(norm.upper), -math.log(norm.lower))


def beta_critical(model: ModelSpec) -> float:
    """``beta_c = -ln sum_s exp(-ell s) p(s)`` for a constant potential."""
    return _beta_c(model).value


def _w_c(model: ModelSpec) -> Bracket:
    bare = model.replace_potential(type(model.potential)(beta=0.0))
    return bare.weighted_sum(model.ell, "one") / bare.weighted_sum(model.ell, "s")


def compute_rho(model: ModelSpec) -> Classification:
    """Limit ``rho`` of ``W_t / t`` and the regime it belongs to."""
    ell = model.ell
    r = model.reward.r
    errors = {"ell": 0.0, "r": 0.0}

    def localized(zeta, zerr, mass=None):
        dist = model.tilted(zeta)
        rho = dist.reward_mean / dist.mean
        errors.update(zeta=zerr, rho=rho.error)
        return dict(regime=Regime.LOCALIZED, zeta=zeta, rho=rho.value, dist=dist, mass=mass)

    if ell == -math.inf:
        kw = localized(*_solve_zeta(model))
        return Classification(ell=ell, r=r, errors=errors, **kw)

    po = model.tilted(ell)
    mass = po.mass
    errors["mass"] = mass.error
    mean_s = None
    if model.waiting.tail.moment_converges(1):
        mean_s = po.mean
        errors["mean_s"] = mean_s.error
    if mass.lower > 1.0 + MASS_TOL:
        kw = localized(*_solve_zeta(model), mass=mass.value)
    elif abs(mass.value - 1.0) <= MASS_TOL + mass.error and mean_s is not None:
        rho = po.reward_mean / mean_s
        errors["rho"] = rho.error
        regime = Regime.EXCEPTIONAL_CRITICAL if abs(rho.value - r) <= RHO_TOL else Regime.CRITICAL
        kw = dict(regime=regime, rho=rho.value, dist=po, mass=mass.value)
    else:
        errors["rho"] = 0.0
        kw = dict(regime=Regime.DELOCALIZED, rho=r, dist=po, mass=mass.value)
    return Classification(ell=ell, r=r, errors=errors,
                          mean_s=None if mean_s is None else mean_s.value, **kw)


def classify(model: ModelSpec) -> Classification:
    """Full classification, adding ``kappa``, ``L``, ``beta_c`` and ``w_c``."""
    c = compute_rho(model)
    extra = {}
    errors = dict(c.errors)
    if c.is_critical and model.waiting.tail is not None:
        extra["kappa"] = model.waiting.tail.kappa
        extra["slowly_varying"] = c.dist.slowly_varying
        errors["kappa"] = 0.0
    if model.potential.is_constant and model.ell > -math.inf:
        try:
            bc = _beta_c(model)
        except RegimeError:
            pass
        else:
            wc = _w_c(model)
            extra.update(beta_c=bc.value, w_c=wc.value)
            errors.update(beta_c=bc.error, w_c=wc.error)
    return replace(c, errors=errors, **extra)


def working_distribution(model: ModelSpec, classification: Classification | None = None) -> TiltedDistribution:
    """Probability law under which the constrained model is a plain renewal bridge."""
    c = classification or compute_rho(model)
    if c.dist is None or not c.dist.is_probability:
        raise RegimeError(f"regime {c.regime.value}: no normalizing tilt, p_o is defective")
    return c.dist


# -- rate function of N_t ---------------------------------------------------

@dataclass(frozen=True)
class RateFunctionNt:
    """Rate function of ``N_t / t`` for a standard model ``v = beta``."""

    model: ModelSpec
    beta: float
    beta_c: float
    ell: float
    w_c: float
    zeta: float | None = None
    eta_xtol: float = 1e-15
    monotone_grid: int = 9

    @classmethod
    def from_model(cls, model: ModelSpec) -> "RateFunctionNt":
        bc = beta_critical(model)
        beta = model.potential.beta
        zeta = None
        # beta == beta_c to rounding is the critical model itself.
        if beta > bc and model.tilted(model.ell).mass.lower > 1.0 + MASS_TOL:
            zeta = solve_zeta(model)
        return cls(model=model, beta=beta, beta_c=bc, ell=model.ell, w_c=_w_c(model).value, zeta=zeta)

    @property
    def offset(self) -> float:
        return self.zeta if self.zeta is not None else self.ell

    def _bare(self, eta: float, phi: str) -> float:
        # Sums of exp(-eta s) p(s) without the potential.
        return self.model.weighted_sum(eta, phi).value * math.exp(-self.beta)

    def ratio(self, eta: float) -> float:
        return self._bare(eta, "one") / self._bare(eta, "s")


@lru_cache(maxsize=256)
def _check_monotone(rf: RateFunctionNt, lo: float, hi: float) -> None:
    grid = np.linspace(lo, hi, rf.monotone_grid)
    vals = [rf.ratio(x) for x in grid]
    if any(b < a * (1 - 1e-13) for a, b in zip(vals, vals[1:])):
        raise NumericError(f"ratio not monotone on eta bracket [{lo}, {hi}]")


def solve_eta(rf: RateFunctionNt, w: float) -> float:
    """``eta > ell`` with ``sum e^{-eta s}p(s) / sum s e^{-eta s}p(s) = w``."""
    if not rf.w_c < w < 1:
        raise ValueError("eta is defined for w in (w_c, 1)")
    lo, hi = rf.ell, 1.0
    while rf.ratio(hi) <= w:
        hi *= 2
        if hi > 512:
            raise NumericError(f"could not bracket eta for w={w}")
    _check_monotone(rf, lo, hi)
    try:
        return bisect(lambda e: rf.ratio(e) - w, lo, hi, xtol=rf.eta_xtol,
                      rtol=4 * EPS, maxiter=MAX_BISECT)
    except (RuntimeError, ValueError) as exc:
        raise NumericError(f"eta bisection failed: {exc}") from exc


def rate_function_Nt(rf: RateFunctionNt, w: float) -> float:
    """``I(w)`` for the renewal count; ``+inf`` outside ``[0, 1]``."""
    if not 0.0 <= w <= 1.0:
        return math.inf
    if w <= rf.w_c:
        return w * (rf.beta_c - rf.beta) - rf.ell + rf.offset
    p1 = rf.model.waiting.pmf(1)
    if w == 1.0:
        return math.inf if p1 == 0 else -(rf.beta + math.log(p1)) + rf.offset
    if p1 == 0:
        s_min = min(s for s in range(2, rf.model.explicit_max + 2) if rf.model.waiting.pmf(s) > 0)
        if w >= 1.0 / s_min:
            return math.inf
    eta = solve_eta(rf, w)
    return -w * math.log(math.exp(rf.beta) * rf._bare(eta, "one")) - eta + rf.offset
