import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

from surfloss.constants import EPSILON_0
from surfloss.exceptions import MissingEntryError, MissingRegionError, MissingSegmentError
from surfloss.fields.surface import SurfaceFieldMap
from surfloss.geometry.design import InterfaceSpec, participation_interfaces
from surfloss.geometry.reference import reference_dataset
from surfloss.participation.factors import ScalingFactors
from surfloss.types import (
    BREAKDOWN_ELEMENTS,
    SUMMATION_ORDER,
    Element,
    InterfaceKind,
    Provenance,
    Region,
)

logger = logging.getLogger(__name__)

Entry = Tuple[Element, InterfaceKind]

#: Elements counted as pads; the ground plane's edges face the pads across
#: the same gap
PAD_ELEMENTS = (Element.pads, Element.ground)

WIRING_ELEMENTS = (Element.leads, Element.squid)


def _energy_weight(iface: InterfaceSpec, field_map: SurfaceFieldMap) -> float:
    """
    t·(ε ε0/2)/U_tot
    """
    return (
        iface.thickness_m
        * iface.relative_permittivity
        * EPSILON_0
        / 2
        / field_map.total_energy
    )


def _present(
    field_map: SurfaceFieldMap, region: Region, elements: Sequence[Element]
) -> Tuple[Element, ...]:
    return tuple(e for e in elements if field_map.has(e, region))


def inner_participation(
    field_map: SurfaceFieldMap,
    iface: InterfaceSpec,
    elements: Optional[Sequence[Element]] = None,
) -> Dict[Element, float]:
    """
    p_int = t·∬(ε/2)|E|²dxdy/U_tot over the inner regions, per element.

    By default every element with inner-region samples is integrated.

    :raises MissingRegionError: A requested element, or every element, lacks
        inner-region samples
    """
    if elements is None:
        elements = _present(field_map, Region.inner, tuple(Element))
        if not elements:
            raise MissingRegionError("Field map has no inner-region samples")
    weight = _energy_weight(iface, field_map)
    return {
        element: weight * field_map.integral(element, iface.kind, Region.inner)
        for element in elements
    }


def perimeter_participation(
    field_map: SurfaceFieldMap,
    factors: ScalingFactors,
    iface: InterfaceSpec,
    elements: Optional[Sequence[Element]] = None,
) -> Dict[Element, float]:
    """
    p_per = F·t·∫band(ε/2)|E|²/U_tot, the whole perimeter strip from its
    convergence band.

    :raises ScalingFactorMismatchError: ``factors`` lacks the interface or
        was computed for a different band
    """
    factors.check_bands(field_map)
    scale = factors.edge_factor(iface.kind) * _energy_weight(iface, field_map)
    if elements is None:
        elements = _present(field_map, Region.band, PAD_ELEMENTS)
        if not elements:
            raise MissingRegionError("Field map has no pad-edge band samples")
    return {
        element: scale * field_map.integral(element, iface.kind, Region.band)
        for element in elements
    }


def wiring_participation(
    field_map: SurfaceFieldMap,
    factors: ScalingFactors,
    iface: InterfaceSpec,
) -> Dict[Element, float]:
    """
    p = F′·t·∫band(ε/2)|E|²/U_tot for the leads and the SQUID, each from its
    own band samples

    :raises MissingSegmentError: Leads or SQUID band samples are missing
    """
    factors.check_bands(field_map)
    scale = factors.wiring_factor(iface.kind) * _energy_weight(iface, field_map)
    result = {}
    for element in WIRING_ELEMENTS:
        try:
            result[element] = scale * field_map.integral(element, iface.kind, Region.band)
        except MissingRegionError as e:
            raise MissingSegmentError(str(e)) from e
    return result


@dataclass(frozen=True)
class ParticipationBreakdown:
    """
    Participation per element and interface, with element totals summed in
    a fixed order
    """

    entries: Mapping[Entry, float]

    totals: Mapping[Element, float]

    provenance: Provenance

    design_label: str = "custom"

    #: Published totals when they differ from the row sums by rounding
    published_totals: Optional[Mapping[Element, float]] = field(default=None, compare=False)

    def p(self, element: Element, interface: InterfaceKind) -> float:
        return self.entries[(Element(element), InterfaceKind(interface))]

    def total(self, element: Element) -> float:
        return self.totals[Element(element)]

    @property
    def wiring_total(self) -> float:
        return self.totals[Element.leads] + self.totals[Element.squid]

    def row(self) -> Tuple[float, ...]:
        """
        Element totals in pads, leads, SQUID order
        """
        return tuple(self.totals[element] for element in BREAKDOWN_ELEMENTS)


def total_participation(
    entries: Mapping[Entry, float],
    provenance: Provenance = Provenance.computed,
    design_label: str = "custom",
) -> ParticipationBreakdown:
    """
    Sum the nine entries into element totals, interfaces in MA, SA, MS order.

    :raises MissingEntryError: An entry is missing or out of [0, 1)
    """
    ordered: Dict[Entry, float] = {}
    totals: Dict[Element, float] = {}
    for element in BREAKDOWN_ELEMENTS:
        total = 0.0
        for kind in SUMMATION_ORDER:
            if (element, kind) not in entries:
                raise MissingEntryError(f"Missing participation for {element.value} {kind.value}")
            value = float(entries[(element, kind)])
            if not 0 <= value < 1:
                raise MissingEntryError(
                    f"Participation for {element.value} {kind.value} must lie in [0, 1), "
                    f"got {value}"
                )
            total += value
        totals[element] = total
        for kind in InterfaceKind:
            ordered[(element, kind)] = float(entries[(element, kind)])

    return ParticipationBreakdown(
        entries=ordered,
        totals=totals,
        provenance=Provenance(provenance),
        design_label=design_label,
    )


def compute_breakdown(
    field_map: SurfaceFieldMap,
    factors: ScalingFactors,
    interfaces: Optional[Mapping[InterfaceKind, InterfaceSpec]] = None,
    design_label: str = "custom",
    provenance: Optional[Provenance] = None,
) -> ParticipationBreakdown:
    """
    All nine participations from a field map: pads (with the ground plane)
    as inner plus perimeter, leads and SQUID from the wiring bands
    """
    interfaces = participation_interfaces() if interfaces is None else interfaces
    entries: Dict[Entry, float] = {}
    for kind in InterfaceKind:
        iface = interfaces[kind]
        inner = inner_participation(
            field_map,
            iface,
            (Element.pads,) + _present(field_map, Region.inner, (Element.ground,)),
        )
        perimeter = perimeter_participation(field_map, factors, iface)
        entries[(Element.pads, kind)] = sum(inner.values()) + sum(perimeter.values())
        for element, p in wiring_participation(field_map, factors, iface).items():
            entries[(element, kind)] = p

    breakdown = total_participation(
        entries,
        provenance=field_map.provenance if provenance is None else provenance,
        design_label=design_label,
    )
    logger.debug("Participation for %s: %s", design_label, breakdown.totals)
    return breakdown


def reference_breakdown(label: str) -> ParticipationBreakdown:
    """
    The published per-interface participations for a bundled design
    """
    dataset = reference_dataset()
    breakdown = total_participation(
        dataset.interface_participation(label),
        provenance=Provenance.reference_table,
        design_label=label,
    )
    return ParticipationBreakdown(
        entries=breakdown.entries,
        totals=breakdown.totals,
        provenance=breakdown.provenance,
        design_label=label,
        published_totals=dataset.participation(label),
    )
