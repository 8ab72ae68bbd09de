import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from surfloss.exceptions import TargetUnreachableError
from surfloss.fields.surface import capacitance, coarse_surface_fields
from surfloss.geometry.design import QubitDesign
from surfloss.participation.factors import (
    REFERENCE_FACTORS,
    ScalingFactors,
    compute_scaling_factors,
)
from surfloss.participation.ratios import ParticipationBreakdown, compute_breakdown
from surfloss.types import Element, Resolution

logger = logging.getLogger(__name__)

#: Transmon charging energy held during sweeps, MHz
TARGET_CHARGING_ENERGY_MHZ = 220.0

#: Pad widths searched when matching the charging energy, μm
PAD_WIDTH_BOUNDS = (10.0, 5000.0)


class SweepParameter(str, Enum):
    gap = "gap"
    lead_width = "lead_width"


def match_charging_energy(
    design: QubitDesign,
    target_mhz: float = TARGET_CHARGING_ENERGY_MHZ,
    tolerance_mhz: float = 2.0,
    bounds: Tuple[float, float] = PAD_WIDTH_BOUNDS,
    max_iterations: int = 100,
) -> QubitDesign:
    """
    Bisect the pad width W, keeping the footprint pad_height = 2W + G, until
    E_C lies within ``tolerance_mhz`` of ``target_mhz``.

    :raises TargetUnreachableError: No pad width within ``bounds`` reaches
        the target
    """

    def _sized(width: float) -> QubitDesign:
        return design.replace(pad_width=width, pad_height=2 * width + design.gap)

    def _charging_energy(width: float) -> float:
        return capacitance(_sized(width)).charging_energy_mhz

    lo = max(bounds[0], 2 * design.lead_width)
    hi = bounds[1]
    # E_C falls as the pads grow
    if not _charging_energy(hi) <= target_mhz <= _charging_energy(lo):
        raise TargetUnreachableError(
            f"E_C = {target_mhz} MHz is out of reach for pad widths {lo}–{hi} μm "
            f"at gap G = {design.gap} μm"
        )
    for _ in range(max_iterations):
        mid = 0.5 * (lo + hi)
        ec = _charging_energy(mid)
        logger.debug("W = %.4f μm gives E_C = %.4f MHz", mid, ec)
        if abs(ec - target_mhz) <= tolerance_mhz:
            return _sized(mid)
        if ec > target_mhz:
            lo = mid
        else:
            hi = mid
    raise TargetUnreachableError(
        f"Pad-width bisection did not settle within {tolerance_mhz} MHz of {target_mhz} MHz"
    )


@dataclass(frozen=True)
class SweepPoint:
    value: float

    #: The design after matching the charging energy
    design: QubitDesign

    breakdown: ParticipationBreakdown

    charging_energy_mhz: float

    @property
    def p_pads(self) -> float:
        return self.breakdown.total(Element.pads)

    @property
    def p_wiring(self) -> float:
        return self.breakdown.wiring_total


@dataclass(frozen=True)
class SweepResult:
    parameter: SweepParameter

    points: Tuple[SweepPoint, ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    @property
    def p_pads(self) -> np.ndarray:
        return np.array([p.p_pads for p in self.points])

    @property
    def p_wiring(self) -> np.ndarray:
        return np.array([p.p_wiring for p in self.points])

    @property
    def normalized_pads(self) -> np.ndarray:
        return self.p_pads / self.p_pads[0]

    @property
    def normalized_wiring(self) -> np.ndarray:
        return self.p_wiring / self.p_wiring[0]

    def crossover(self) -> Optional[float]:
        """
        Where wiring participation first exceeds the pads', by linear
        interpolation, or None
        """
        excess = self.p_wiring / self.p_pads - 1
        values = self.values
        for i in range(1, excess.size):
            if excess[i - 1] <= 0 < excess[i]:
                frac = -excess[i - 1] / (excess[i] - excess[i - 1])
                return float(values[i - 1] + frac * (values[i] - values[i - 1]))
        return None


def _design_at(template: QubitDesign, parameter: SweepParameter, value: float) -> QubitDesign:
    if parameter == SweepParameter.gap:
        # The leads lengthen to keep bridging the gap
        return template.replace(
            gap=value,
            pad_height=2 * template.pad_width + value,
            lead_length=template.lead_length + (value - template.gap) / 2,
        )
    return template.replace(lead_width=value)


def sweep(
    template: QubitDesign,
    parameter: SweepParameter,
    values: Sequence[float],
    target_mhz: float = TARGET_CHARGING_ENERGY_MHZ,
    tolerance_mhz: float = 2.0,
    factors: Optional[ScalingFactors] = REFERENCE_FACTORS,
    resolution: Resolution = Resolution.medium,
) -> SweepResult:
    """
    Pads and wiring participation as ``parameter`` varies, with the pad
    width re-matched to hold E_C at each point.

    With ``factors=None`` the scaling factors are recomputed from the
    cross-section solver at every point.

    :raises TargetUnreachableError: E_C cannot be held at some point
    """
    parameter = SweepParameter(parameter)
    points = []
    for value in sorted(values):
        design = match_charging_energy(
            _design_at(template, parameter, float(value)), target_mhz, tolerance_mhz
        )
        point_factors = (
            compute_scaling_factors(design, resolution) if factors is None else factors
        )
        breakdown = compute_breakdown(
            coarse_surface_fields(design),
            point_factors,
            design_label=f"{parameter.value}={value:g}",
        )
        points.append(
            SweepPoint(
                value=float(value),
                design=design,
                breakdown=breakdown,
                charging_energy_mhz=capacitance(design).charging_energy_mhz,
            )
        )
        logger.info(
            "%s = %g: W = %.1f μm, P_pads = %.3e, P_wiring = %.3e",
            parameter.value,
            value,
            design.pad_width,
            breakdown.total(Element.pads),
            breakdown.wiring_total,
        )
    return SweepResult(parameter=parameter, points=tuple(points))
