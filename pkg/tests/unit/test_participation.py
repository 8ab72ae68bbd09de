from dataclasses import replace

import numpy as np
import pytest

from surfloss.exceptions import (
    DesignValidationError,
    MissingEntryError,
    MissingRegionError,
    MissingSegmentError,
    ScalingFactorMismatchError,
    TargetUnreachableError,
)
from surfloss.fields.surface import capacitance, coarse_surface_fields
from surfloss.geometry.design import builtin_design, participation_interfaces
from surfloss.geometry.reference import reference_dataset
from surfloss.participation.factors import REFERENCE_FACTORS, ScalingFactors
from surfloss.participation.ratios import (
    compute_breakdown,
    inner_participation,
    perimeter_participation,
    reference_breakdown,
    total_participation,
    wiring_participation,
)
from surfloss.participation.reconstruct import build_reference_field_map
from surfloss.participation.sweep import (
    SweepParameter,
    SweepPoint,
    SweepResult,
    match_charging_energy,
    sweep,
)
from surfloss.types import BREAKDOWN_ELEMENTS, Element, InterfaceKind, Provenance, Region

TEST_DESIGNS = ["long", "regular", "wide"]


def _entries(pads: float, leads: float, squid: float):
    """
    Nine entries with each element's total split evenly over the interfaces
    """
    return {
        (element, kind): total / 3
        for element, total in zip(BREAKDOWN_ELEMENTS, (pads, leads, squid))
        for kind in InterfaceKind
    }


def test_total_participation():
    breakdown = total_participation(_entries(3e-4, 1.5e-4, 0.6e-4), design_label="made-up")
    assert breakdown.row() == pytest.approx((3e-4, 1.5e-4, 0.6e-4))
    assert breakdown.wiring_total == pytest.approx(2.1e-4)
    assert breakdown.p(Element.leads, InterfaceKind.sa) == pytest.approx(0.5e-4)
    assert breakdown.provenance == Provenance.computed
    assert breakdown.design_label == "made-up"


def test_total_participation_missing_entry():
    entries = _entries(3e-4, 1.5e-4, 0.6e-4)
    del entries[(Element.squid, InterfaceKind.ms)]
    with pytest.raises(MissingEntryError):
        total_participation(entries)


@pytest.mark.parametrize("value", [-1e-6, 1.0, 2.5])
def test_total_participation_out_of_range(value):
    entries = _entries(3e-4, 1.5e-4, 0.6e-4)
    entries[(Element.pads, InterfaceKind.ma)] = value
    with pytest.raises(MissingEntryError):
        total_participation(entries)


@pytest.mark.parametrize("label", TEST_DESIGNS)
def test_reference_breakdown(label):
    breakdown = reference_breakdown(label)
    published = reference_dataset().participation(label)
    assert breakdown.provenance == Provenance.reference_table
    assert breakdown.published_totals == published
    for element in BREAKDOWN_ELEMENTS:
        assert breakdown.total(element) == pytest.approx(published[element], rel=1e-3)


@pytest.mark.parametrize("label", TEST_DESIGNS)
def test_reconstructed_map_reproduces_reference(label):
    field_map = build_reference_field_map(label)
    breakdown = compute_breakdown(field_map, REFERENCE_FACTORS, design_label=label)
    expected = reference_dataset().interface_participation(label)
    assert breakdown.provenance == Provenance.imported_field
    for entry, value in expected.items():
        assert breakdown.entries[entry] == pytest.approx(value, rel=1e-9)


def test_reconstructed_map_inner_share():
    field_map = build_reference_field_map("regular", inner_share=0.25)
    iface = participation_interfaces()[InterfaceKind.ms]
    inner = inner_participation(field_map, iface)
    expected = reference_dataset().interface_participation("regular")
    assert list(inner) == [Element.pads]
    assert inner[Element.pads] == pytest.approx(
        0.25 * expected[(Element.pads, InterfaceKind.ms)]
    )


@pytest.mark.parametrize("share", [0.0, 1.0, -0.5])
def test_reconstructed_map_bad_share(share):
    with pytest.raises(DesignValidationError):
        build_reference_field_map("regular", inner_share=share)


def test_perimeter_factor_bands_must_match():
    field_map = build_reference_field_map("long")
    iface = participation_interfaces()[InterfaceKind.ma]
    other = ScalingFactors(edge=REFERENCE_FACTORS.edge, x0_um=2.0)
    with pytest.raises(ScalingFactorMismatchError):
        perimeter_participation(field_map, other, iface)


def test_wiring_needs_both_segments():
    field_map = build_reference_field_map("long")
    pads_only = replace(
        field_map, samples=tuple(s for s in field_map.samples if s.element == Element.pads)
    )
    iface = participation_interfaces()[InterfaceKind.sa]
    with pytest.raises(MissingSegmentError):
        wiring_participation(pads_only, REFERENCE_FACTORS, iface)


def test_inner_needs_samples():
    field_map = build_reference_field_map("long")
    bands_only = replace(
        field_map, samples=tuple(s for s in field_map.samples if s.region == Region.band)
    )
    with pytest.raises(MissingRegionError):
        inner_participation(bands_only, participation_interfaces()[InterfaceKind.ms])


@pytest.fixture(scope="module")
def coarse_breakdowns():
    return {
        label: compute_breakdown(
            coarse_surface_fields(builtin_design(label)), REFERENCE_FACTORS, design_label=label
        )
        for label in TEST_DESIGNS
    }


def test_coarse_breakdowns_are_ratios(coarse_breakdowns):
    for breakdown in coarse_breakdowns.values():
        assert breakdown.provenance == Provenance.computed
        assert all(0 < value < 1 for value in breakdown.entries.values())


def test_coarse_leads_ordering(coarse_breakdowns):
    leads = {label: b.total(Element.leads) for label, b in coarse_breakdowns.items()}
    assert leads["long"] > leads["regular"] > leads["wide"]


def test_match_charging_energy():
    design = match_charging_energy(builtin_design("regular"))
    assert capacitance(design).charging_energy_mhz == pytest.approx(220.0, abs=2.0)
    assert design.pad_height == pytest.approx(2 * design.pad_width + design.gap)


def test_match_charging_energy_unreachable():
    with pytest.raises(TargetUnreachableError):
        match_charging_energy(builtin_design("regular"), target_mhz=1e5)


def test_lead_width_sweep():
    result = sweep(builtin_design("regular"), SweepParameter.lead_width, [10.0, 2.5, 5.0])
    assert result.values.tolist() == [2.5, 5.0, 10.0]
    assert result.normalized_pads[0] == pytest.approx(1.0)
    assert result.normalized_wiring[0] == pytest.approx(1.0)
    for point in result.points:
        assert point.charging_energy_mhz == pytest.approx(220.0, abs=2.0)
    # Wider leads dilute the field at their surfaces
    assert result.p_wiring[-1] < result.p_wiring[0]


def test_gap_sweep_lengthens_leads():
    result = sweep(builtin_design("regular"), "gap", [60.0, 240.0])
    short, long = (point.design for point in result.points)
    assert long.lead_length - short.lead_length == pytest.approx(90.0)
    assert long.gap == 240.0


def test_gap_sweep_crossover():
    result = sweep(builtin_design("regular"), SweepParameter.gap, np.arange(60.0, 201.0, 20.0))
    # Wider gaps dilute the pads' field and lengthen the leads
    assert np.all(np.diff(result.p_pads) < 0)
    assert np.all(np.diff(result.p_wiring) > 0)
    assert 80.0 <= result.crossover() <= 150.0


def _point(value: float, pads: float, wiring: float) -> SweepPoint:
    return SweepPoint(
        value=value,
        design=builtin_design("regular"),
        breakdown=total_participation(_entries(pads, wiring / 2, wiring / 2)),
        charging_energy_mhz=220.0,
    )


def test_crossover():
    result = SweepResult(
        parameter=SweepParameter.gap,
        points=(_point(0.0, 2e-4, 1e-4), _point(1.0, 2e-4, 3e-4), _point(2.0, 1e-4, 4e-4)),
    )
    assert result.crossover() == pytest.approx(0.5)


def test_no_crossover():
    result = SweepResult(
        parameter=SweepParameter.gap,
        points=(_point(0.0, 2e-4, 1e-4), _point(1.0, 2e-4, 1.5e-4)),
    )
    assert result.crossover() is None
