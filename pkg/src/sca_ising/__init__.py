"""Stochastic cellular automata and Glauber dynamics for finite Ising models.

The package provides:

* exact model arithmetic (energies, cavity fields, flip costs) for
  arbitrary finite spin systems with pair couplings and local fields,
* single-site Glauber and synchronous pinned-block ("SCA") update rules
  with reproducible counter-based random streams,
* an exact enumeration oracle for small systems (stationary laws,
  transition matrices, order-preservation checks, ground states),
* closed-form parameter bounds relating the pinning strength to flip
  activity and to closeness of the stationary law to the Gibbs law,
* an ensemble ground-state search driver,
* a FastAPI service exposing all of the above, and a thin CLI client.
"""

__version__ = "0.1.0"

from .bounds import ParameterPlan, beta_ceiling, plan, q_lower_close, q_upper_flips
from .dynamics import (
    SamplerParams,
    StepStats,
    chain_rng,
    expected_flips_glauber,
    expected_flips_sca,
    glauber_step,
    sca_flip_factors,
    sca_step,
)
from .errors import (
    CapacityError,
    DegenerateModelError,
    DimensionMismatchError,
    ModelFormatError,
    ScaIsingError,
)
from .model import IsingModel, ModelConstants, load_model, save_model
from .oracle import (
    ClosenessReport,
    DiscreteDistribution,
    check_order_preservation,
    gibbs_distribution,
    ground_states,
    sca_distribution,
    tilde_hamiltonian,
    transition_matrix,
    tv_distance,
)
from .search import ChainResult, EnsembleProfile, SearchConfig, ensemble_search, run_chain

__all__ = [
    "CapacityError",
    "ChainResult",
    "ClosenessReport",
    "DegenerateModelError",
    "DimensionMismatchError",
    "DiscreteDistribution",
    "EnsembleProfile",
    "IsingModel",
    "ModelConstants",
    "ModelFormatError",
    "ParameterPlan",
    "SamplerParams",
    "ScaIsingError",
    "SearchConfig",
    "StepStats",
    "beta_ceiling",
    "chain_rng",
    "check_order_preservation",
    "ensemble_search",
    "expected_flips_glauber",
    "expected_flips_sca",
    "gibbs_distribution",
    "glauber_step",
    "ground_states",
    "load_model",
    "plan",
    "q_lower_close",
    "q_upper_flips",
    "run_chain",
    "save_model",
    "sca_distribution",
    "sca_flip_factors",
    "sca_step",
    "tilde_hamiltonian",
    "transition_matrix",
    "tv_distance",
    "__version__",
]
