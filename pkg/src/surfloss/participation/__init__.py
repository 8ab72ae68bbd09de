from .factors import (
    REFERENCE_FACTORS,
    ScalingFactors,
    compute_scaling_factors,
    edge_scaling_factors,
    wiring_edge_profile,
    wiring_scaling_factors,
)
from .ratios import (
    ParticipationBreakdown,
    compute_breakdown,
    inner_participation,
    perimeter_participation,
    reference_breakdown,
    total_participation,
    wiring_participation,
)
from .reconstruct import build_reference_field_map
from .sweep import SweepParameter, SweepResult, match_charging_energy, sweep

__all__ = [
    "REFERENCE_FACTORS",
    "ParticipationBreakdown",
    "ScalingFactors",
    "SweepParameter",
    "SweepResult",
    "build_reference_field_map",
    "compute_breakdown",
    "compute_scaling_factors",
    "edge_scaling_factors",
    "inner_participation",
    "match_charging_energy",
    "perimeter_participation",
    "reference_breakdown",
    "sweep",
    "total_participation",
    "wiring_edge_profile",
    "wiring_participation",
]
