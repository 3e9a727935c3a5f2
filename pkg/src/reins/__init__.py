"""Equilibrium solver for the alpha-robust Stackelberg reinsurance-investment game.

The reinsurer (leader) sets a premium loading; the insurer (follower) answers
with an excess-of-loss retention and both invest in a Heston market.  The
public surface is re-exported here; see the submodules for details.
"""

from ._backend import BACKEND
from .equilibrium import (
    StackelbergEquilibrium,
    rayleigh_foc_closed_form,
    rayleigh_foc_derived,
    reinsurer_foc,
    retention_foc,
    retention_policy,
    retention_sensitivity,
    solve_premium,
    solve_retention,
    solve_stackelberg,
)
from .model import (
    DiscreteAtoms,
    InsurerPrefs,
    MarketParams,
    ModelBundle,
    RayleighCompoundPoisson,
    ReinsurerPrefs,
    SolverConventions,
    ValidationReport,
    bundle_from_dict,
    bundle_to_dict,
    load_config,
    premium_rate,
    validate,
)
from .numerics import (
    QuadratureResult,
    TimeGrid,
    integrate_backward,
    integrate_claim,
    normal_cdf,
)
from .riccati import (
    ExistenceBound,
    RiccatiSolution,
    existence_bound,
    horizon_bound,
    insurer_rhs,
    reinsurer_rhs,
    solve_riccati,
)
from .strategies import (
    StrategyProfile,
    build_profile,
    investment,
    distortions_insurer,
    distortions_reinsurer,
    penalty_rate,
    pi_insurer,
    pi_no_sv,
    pi_reinsurer,
    pi_tilde,
    value_function,
    value_intercept,
)

__version__ = "0.1.0"
