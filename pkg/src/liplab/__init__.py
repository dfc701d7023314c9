"""Lipschitz constants of randomly initialized ReLU networks."""

from .net_core import (
    ActivationPattern,
    LayerTrace,
    NetworkParams,
    forward,
    gradient_at,
    linear_collapse,
    make_network,
    pattern_gradient,
)
from .rand_init import BiasSpec, InitConfig, derive_trial_rng, sample_network
from .exact_lip import exact_lipschitz, enumerate_regions, pattern_count_check, sup_all_patterns

__all__ = [
    "ActivationPattern",
    "BiasSpec",
    "InitConfig",
    "LayerTrace",
    "NetworkParams",
    "derive_trial_rng",
    "enumerate_regions",
    "exact_lipschitz",
    "forward",
    "gradient_at",
    "linear_collapse",
    "make_network",
    "pattern_count_check",
    "pattern_gradient",
    "sample_network",
    "sup_all_patterns",
]
