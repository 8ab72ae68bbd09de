"""
Scaling factors that turn a convergence-band integral from the coarse stage
into the participation of a whole perimeter or wiring cross-section.
"""
import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from surfloss.constants import DEFAULT_X0_UM, DEFAULT_X0_WIRING_UM, NM, UM
from surfloss.exceptions import (
    BandUnresolvedError,
    InvalidCrossSectionError,
    ScalingFactorMismatchError,
)
from surfloss.fields.cross_section import CrossSectionKind, Medium, design_cross_sections
from surfloss.fields.grid import cells_within
from surfloss.fields.laplace import FieldSolution, field_probe, solve_cross_section
from surfloss.fields.surface import SurfaceFieldMap
from surfloss.geometry.design import InterfaceSpec, QubitDesign
from surfloss.types import InterfaceKind, Resolution

logger = logging.getLogger(__name__)

#: Fewest grid cells allowed across a denominator band
MIN_BAND_CELLS = 8

_ALL = (-np.inf, np.inf)


@dataclass(frozen=True)
class ScalingFactors:
    #: Pad-edge factors F per interface
    edge: Optional[Mapping[InterfaceKind, float]] = None

    #: Wiring factors F′ per interface
    wiring: Optional[Mapping[InterfaceKind, float]] = None

    #: Band boundary the edge factors were computed for, μm
    x0_um: float = DEFAULT_X0_UM

    #: Band half-width the wiring factors were computed for, μm
    x0_wiring_um: float = DEFAULT_X0_WIRING_UM

    def __post_init__(self):
        for kind in (InterfaceKind.ma, InterfaceKind.ms):
            if self.edge is not None and kind in self.edge and self.edge[kind] < 1:
                raise ScalingFactorMismatchError(
                    f"F_{kind.value} = {self.edge[kind]} is below 1"
                )

    def edge_factor(self, kind: InterfaceKind) -> float:
        if self.edge is None or kind not in self.edge:
            raise ScalingFactorMismatchError(f"No pad-edge factor for {InterfaceKind(kind).value}")
        return self.edge[kind]

    def wiring_factor(self, kind: InterfaceKind) -> float:
        if self.wiring is None or kind not in self.wiring:
            raise ScalingFactorMismatchError(f"No wiring factor for {InterfaceKind(kind).value}")
        return self.wiring[kind]

    def check_bands(self, field_map: SurfaceFieldMap) -> None:
        """
        :raises ScalingFactorMismatchError: The map's bands were sampled at a
            different x0 or x0′
        """
        if not np.isclose(field_map.x0_um, self.x0_um) or not np.isclose(
            field_map.x0_wiring_um, self.x0_wiring_um
        ):
            raise ScalingFactorMismatchError(
                f"Field map bands (x0 = {field_map.x0_um} μm, "
                f"x0′ = {field_map.x0_wiring_um} μm) "
                f"differ from the factors' (x0 = {self.x0_um} μm, x0′ = {self.x0_wiring_um} μm)"
            )

    def merged(self, other: "ScalingFactors") -> "ScalingFactors":
        """
        Take edge factors from self and wiring factors from ``other`` where
        self lacks them
        """
        return ScalingFactors(
            edge=self.edge if self.edge is not None else other.edge,
            wiring=self.wiring if self.wiring is not None else other.wiring,
            x0_um=self.x0_um if self.edge is not None else other.x0_um,
            x0_wiring_um=self.x0_wiring_um if self.wiring is not None else other.x0_wiring_um,
        )


#: Illustrative factors used with the bundled reference field maps and as the
#: sweep default
REFERENCE_FACTORS = ScalingFactors(
    edge={InterfaceKind.ma: 5.0, InterfaceKind.ms: 4.5, InterfaceKind.sa: 4.0},
    wiring={InterfaceKind.ma: 3.6, InterfaceKind.ms: 3.6, InterfaceKind.sa: 3.4},
)


def _overlap(edges: np.ndarray, start: float, stop: float) -> np.ndarray:
    """
    Length of each cell lying within [start, stop]
    """
    return np.clip(np.minimum(edges[1:], stop) - np.maximum(edges[:-1], start), 0.0, None)


def band_integral(
    sol: FieldSolution,
    medium: Medium,
    x_range: Tuple[float, float],
    z_range: Tuple[float, float] = _ALL,
) -> float:
    """
    ∬|E|² over the cells of ``medium`` within the given ranges (metres).

    Midpoint rule on the solver grid: each cell's mean |E|² times the area
    it shares with the ranges.
    """
    mesh = sol.mesh
    weight = np.outer(_overlap(mesh.x, *x_range), _overlap(mesh.z, *z_range))
    return float(np.sum(sol.cell_e2 * weight, where=mesh.medium == medium))


def _check_resolved(sol: FieldSolution, name: str, start: float, stop: float) -> None:
    cells = cells_within(sol.mesh.x, start, stop)
    if cells < MIN_BAND_CELLS:
        raise BandUnresolvedError(name, cells, MIN_BAND_CELLS)


def _ratio(numerator: float, denominator: float, name: str) -> float:
    if not denominator > 0:
        raise BandUnresolvedError(name, 0, MIN_BAND_CELLS)
    return numerator / denominator


def edge_scaling_factors(sol: FieldSolution, x0_um: Optional[float] = None) -> ScalingFactors:
    """
    F_MS, F_MA and F_SA at a pad edge: the field over the whole perimeter
    strip 0 < x < x0 (and the side face for MA, the substrate side for SA)
    relative to the band x0/2 < x < x0.

    :raises BandUnresolvedError: The band spans fewer than 8 cells
    """
    cs = sol.cross_section
    if cs.kind != CrossSectionKind.pad_edge:
        raise InvalidCrossSectionError("Edge factors need a pad-edge cross-section")
    x0 = cs.x0 if x0_um is None else x0_um * UM
    t_ma = cs.thickness(InterfaceKind.ma)
    _check_resolved(sol, "x0/2 < x < x0", x0 / 2, x0)

    ms_band = band_integral(sol, Medium.ms, (x0 / 2, x0))
    ma_band = band_integral(sol, Medium.ma, (x0 / 2, x0))
    factors = {
        InterfaceKind.ms: _ratio(band_integral(sol, Medium.ms, (0.0, x0)), ms_band, "MS"),
        InterfaceKind.ma: _ratio(band_integral(sol, Medium.ma, (-t_ma, x0)), ma_band, "MA"),
        InterfaceKind.sa: _ratio(band_integral(sol, Medium.sa, (-x0, 0.0)), ms_band, "SA"),
    }
    logger.debug("Edge scaling factors at x0 = %.3g μm: %s", x0 / UM, factors)
    return ScalingFactors(edge=factors, x0_um=x0 / UM)


def wiring_scaling_factors(
    sol: FieldSolution, x0_wiring_um: Optional[float] = None
) -> ScalingFactors:
    """
    F′_MS, F′_MA and F′_SA across a wiring strip: the full strip width (with
    both side faces for MA, and substrate bands 2·x0 wide either side for SA)
    relative to the central band of half-width x0′.

    :raises InvalidCrossSectionError: Half the strip width does not exceed x0′
    :raises BandUnresolvedError: The central band spans fewer than 8 cells
    """
    cs = sol.cross_section
    if cs.kind != CrossSectionKind.wiring:
        raise InvalidCrossSectionError("Wiring factors need a wiring cross-section")
    x0p = cs.x0_wiring if x0_wiring_um is None else x0_wiring_um * UM
    half = cs.conductor_width / 2
    if half <= x0p:
        raise InvalidCrossSectionError(
            f"Half the strip width ({half / UM} μm) must exceed x0′ = {x0p / UM} μm"
        )
    c = cs.strip_centre
    t_ma = cs.thickness(InterfaceKind.ma)
    side = 2 * cs.x0
    _check_resolved(sol, "-x0′ < x < x0′", c - x0p, c + x0p)

    ms_band = band_integral(sol, Medium.ms, (c - x0p, c + x0p))
    ma_band = band_integral(sol, Medium.ma, (c - x0p, c + x0p))
    sa_outer = band_integral(sol, Medium.sa, (c - half - side, c - half)) + band_integral(
        sol, Medium.sa, (c + half, c + half + side)
    )
    factors = {
        InterfaceKind.ms: _ratio(
            band_integral(sol, Medium.ms, (c - half, c + half)), ms_band, "MS"
        ),
        InterfaceKind.ma: _ratio(
            band_integral(sol, Medium.ma, (c - half - t_ma, c + half + t_ma)), ma_band, "MA"
        ),
        InterfaceKind.sa: _ratio(sa_outer, ms_band, "SA"),
    }
    logger.debug("Wiring scaling factors at x0′ = %.3g μm: %s", x0p / UM, factors)
    return ScalingFactors(wiring=factors, x0_wiring_um=x0p / UM)


def wiring_edge_profile(
    sol: FieldSolution,
    distances_um: Sequence[float],
    reference_um: float = 0.1,
) -> np.ndarray:
    """
    |E|² in the SA layer at ``distances_um`` from the inner edge of the
    integrated strip, into the gap between the strips, normalized to its
    value at ``reference_um``.

    Unlike F′, which grows with the strip width, this shape is set by the
    edge alone once the strip and spacing are wide compared with the
    distances.
    """
    cs = sol.cross_section
    if cs.kind != CrossSectionKind.wiring:
        raise InvalidCrossSectionError("Edge profiles need a wiring cross-section")
    edge = (cs.strip_centre + cs.conductor_width / 2) / UM
    depth = -cs.thickness(InterfaceKind.sa) / NM / 2
    distances = np.asarray(distances_um, dtype=float)
    if np.any(distances <= 0) or np.any(distances >= cs.spacing / UM / 2):
        raise InvalidCrossSectionError("Profile points must lie in the near half of the gap")

    e2 = np.square(field_probe(sol, edge + distances, np.full(distances.shape, depth)))
    reference = field_probe(sol, edge + reference_um, depth) ** 2
    return e2 / reference


def compute_scaling_factors(
    design: QubitDesign,
    resolution: Resolution = Resolution.medium,
    interfaces: Optional[Mapping[InterfaceKind, InterfaceSpec]] = None,
) -> ScalingFactors:
    """
    Both factor sets for a design from the fine cross-section stage
    """
    pad_edge, wiring = design_cross_sections(design, interfaces=interfaces)
    edge = edge_scaling_factors(solve_cross_section(pad_edge, resolution))
    wire = wiring_scaling_factors(solve_cross_section(wiring, resolution))
    logger.info("Computed scaling factors for %s at %s resolution", design.design_label, resolution)
    return edge.merged(wire)
