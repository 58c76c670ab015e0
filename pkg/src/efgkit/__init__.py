"""Exact solver toolkit for finite extensive-form games.

The package computes equilibrium components, fixed-point indices,
quasi-perfect refinements, limit beliefs and structured game
transformations, keeping every acceptance-critical quantity in exact
rational arithmetic.
"""

from .games import (
    GameTree,
    GameFormatError,
    ValidationError,
    OutcomeDistribution,
    build_builtin,
    builtin_names,
    outcome_of,
    parse_game,
    serialize_game,
    validate_perfect_recall,
)
from .indices import (
    ComponentIndex,
    DecompositionError,
    NonRegularError,
    OutcomeDecomposition,
    ProductIdentityReport,
    component_index,
    decompose_outcome,
    index_via_enabling,
    jacobian_component_index,
    nash_map,
    nash_map_zeta,
    product_identity_check,
    prune_to_outcome,
    regular_equilibrium_index,
)

__version__ = "0.1.0"

__all__ = [
    "GameTree",
    "GameFormatError",
    "ValidationError",
    "OutcomeDistribution",
    "build_builtin",
    "builtin_names",
    "outcome_of",
    "parse_game",
    "serialize_game",
    "validate_perfect_recall",
    "ComponentIndex",
    "DecompositionError",
    "NonRegularError",
    "OutcomeDecomposition",
    "ProductIdentityReport",
    "component_index",
    "decompose_outcome",
    "index_via_enabling",
    "jacobian_component_index",
    "nash_map",
    "nash_map_zeta",
    "product_identity_check",
    "prune_to_outcome",
    "regular_equilibrium_index",
    "__version__",
]
