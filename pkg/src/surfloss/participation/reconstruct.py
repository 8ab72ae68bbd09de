"""
Field maps rebuilt from the published per-interface participations, by
running the inner, perimeter and wiring formulas backwards. Each region gets
one uniform tile whose area comes from the bundled design.
"""
import logging
from typing import List, Mapping, Optional

from surfloss.constants import DEFAULT_X0_UM, DEFAULT_X0_WIRING_UM, EPSILON_0, UM
from surfloss.exceptions import DesignValidationError
from surfloss.fields.surface import (
    FieldSample,
    SurfaceFieldMap,
    capacitance_for_charging_energy,
)
from surfloss.geometry.design import (
    InterfaceSpec,
    QubitDesign,
    builtin_design,
    participation_interfaces,
)
from surfloss.geometry.reference import reference_dataset
from surfloss.participation.factors import REFERENCE_FACTORS, ScalingFactors
from surfloss.types import Element, InterfaceKind, Provenance, Region

logger = logging.getLogger(__name__)


def region_areas(
    design: QubitDesign,
    x0_um: float = DEFAULT_X0_UM,
    x0_wiring_um: float = DEFAULT_X0_WIRING_UM,
) -> Mapping[Element, Mapping[Region, Mapping[InterfaceKind, float]]]:
    """
    Tile areas in μm² for every (element, region, interface) the
    reconstruction fills
    """
    d = design
    inner_metal = 2 * (d.pad_width - 2 * x0_um) * (d.pad_height - 2 * x0_um)
    perimeter_band = 2 * 2 * (d.pad_width + d.pad_height) * x0_um / 2
    leads_band = 2 * d.lead_length * 2 * x0_wiring_um
    squid_band = 4 * d.squid_loop_side * 2 * x0_wiring_um
    return {
        Element.pads: {
            Region.inner: {
                InterfaceKind.ma: inner_metal,
                InterfaceKind.ms: inner_metal,
                InterfaceKind.sa: d.gap * d.pad_height,
            },
            Region.band: {kind: perimeter_band for kind in InterfaceKind},
        },
        Element.leads: {Region.band: {kind: leads_band for kind in InterfaceKind}},
        Element.squid: {Region.band: {kind: squid_band for kind in InterfaceKind}},
    }


def build_reference_field_map(
    label: str,
    factors: ScalingFactors = REFERENCE_FACTORS,
    inner_share: float = 0.5,
    interfaces: Optional[Mapping[InterfaceKind, InterfaceSpec]] = None,
    excitation: float = 1.0,
) -> SurfaceFieldMap:
    """
    A field map that reproduces the published participations of a bundled
    design when fed back through :func:`compute_breakdown` with ``factors``.

    U_tot = C·V²/2 with C from the measured anharmonicity (E_C ≈ η). The pads
    participation is split between the inner region (``inner_share``) and
    the perimeter.
    """
    if not 0 < inner_share < 1:
        raise DesignValidationError("inner_share", "must lie strictly between 0 and 1")
    dataset = reference_dataset()
    entries = dataset.interface_participation(label)
    design = builtin_design(label)
    interfaces = participation_interfaces() if interfaces is None else interfaces

    c = capacitance_for_charging_energy(dataset.anharmonicity_mhz[label])
    total_energy = 0.5 * c * excitation**2
    areas = region_areas(design, factors.x0_um, factors.x0_wiring_um)

    samples: List[FieldSample] = []

    def _tile(element: Element, region: Region, kind: InterfaceKind, p: float, factor: float):
        iface = interfaces[kind]
        area = areas[element][region][kind]
        weight = iface.thickness_m * iface.relative_permittivity * EPSILON_0 / 2 / total_energy
        samples.append(
            FieldSample(
                element=element,
                interface=kind,
                region=region,
                x_um=0.0,
                y_um=0.0,
                e2=p / (factor * weight * area * UM**2),
                area_um2=area,
            )
        )

    for kind in InterfaceKind:
        p = entries[(Element.pads, kind)]
        _tile(Element.pads, Region.inner, kind, inner_share * p, 1.0)
        _tile(Element.pads, Region.band, kind, (1 - inner_share) * p, factors.edge_factor(kind))
        for element in (Element.leads, Element.squid):
            _tile(element, Region.band, kind, entries[(element, kind)], factors.wiring_factor(kind))

    logger.debug("Rebuilt the %s field map with U_tot = %.4e J", label, total_energy)
    return SurfaceFieldMap(
        samples=tuple(samples),
        total_energy=total_energy,
        excitation=excitation,
        x0_um=factors.x0_um,
        x0_wiring_um=factors.x0_wiring_um,
        provenance=Provenance.imported_field,
    )
