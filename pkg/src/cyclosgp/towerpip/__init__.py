"""Classical emulation of the tower principal-ideal algorithm and its quantum cost model."""

from .hsp import HSPInstance, NeedMoreSamples, hsp_sample, recover_relations
from .pip import PrincipalIdeal, pip_base_case, relative_norm_ideal, tower_pip
from .resources import ResourceEstimate, resource_estimate

__all__ = [
    "HSPInstance",
    "NeedMoreSamples",
    "PrincipalIdeal",
    "ResourceEstimate",
    "hsp_sample",
    "pip_base_case",
    "recover_relations",
    "relative_norm_ideal",
    "resource_estimate",
    "tower_pip",
]
