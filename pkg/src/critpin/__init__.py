"""Constrained pinning models at and around criticality.

Submodules
----------
model
    Waiting-time laws, potentials, rewards and the projected reward ``g``.
thermo
    Regime classification (``ell``, ``zeta``, ``rho``) and the rate function of ``N_t``.
exact
    Renewal masses, renewal-count layers and exact half-space probabilities.
mc
    Renewal-bridge sampler and Monte Carlo estimates.
asymptotics
    Limit constants at criticality, ladder studies and lemma checks.
io
    JSON model files.
cli
    Command-line front end (``critpin``).
"""

from .errors import (BudgetError, ConditioningError, CritpinError, ModelError, NumericError,
                     RegimeError)
from .model import (ModelSpec, PotentialSpec, PowerTail, RewardSpec, WaitingTimeSpec, eval_g,
                    eval_p, g_array, tail_Q)
from .thermo import (Classification, RateFunctionNt, Regime, beta_critical, classify, compute_rho,
                     effective_distribution, rate_function_Nt, solve_zeta)

__all__ = [
    "BudgetError", "ConditioningError", "CritpinError", "ModelError", "NumericError", "RegimeError",
    "ModelSpec", "PotentialSpec", "PowerTail", "RewardSpec", "WaitingTimeSpec",
    "eval_g", "eval_p", "g_array", "tail_Q",
    "Classification", "RateFunctionNt", "Regime", "beta_critical", "classify", "compute_rho",
    "effective_distribution", "rate_function_Nt", "solve_zeta",
]
