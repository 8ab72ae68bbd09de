import numpy as np
import pytest
from scipy.integrate import quad

from surfloss.constants import EPSILON_0
from surfloss.exceptions import (
    DegenerateExcitationError,
    FieldMapParseError,
    MissingRegionError,
)
from surfloss.fields.surface import (
    FIELD_MAP_COLUMNS,
    StripPair,
    capacitance,
    capacitance_for_charging_energy,
    charging_energy_mhz,
    coarse_surface_fields,
    effective_permittivity,
    export_field_map,
    import_field_map,
    strip_pairs,
)
from surfloss.geometry.design import builtin_design
from surfloss.types import BREAKDOWN_ELEMENTS, Element, InterfaceKind, Provenance, Region
from surfloss.warnings import SurflossExperimentalWarning

TEST_CAPACITANCES_AND_CHARGING_ENERGIES = [
    (88e-15, 220.1),
    (100e-15, 193.7),
    (64e-15, 302.7),
]


@pytest.fixture(scope="module")
def regular_map():
    return coarse_surface_fields(builtin_design("regular"))


@pytest.mark.parametrize("capacitance_f,expected", TEST_CAPACITANCES_AND_CHARGING_ENERGIES)
def test_charging_energy(capacitance_f, expected):
    assert charging_energy_mhz(capacitance_f) == pytest.approx(expected, rel=1e-3)
    assert capacitance_for_charging_energy(charging_energy_mhz(capacitance_f)) == pytest.approx(
        capacitance_f
    )


def test_symmetric_strip_pair_capacitance():
    # K(k) = K(k′) when k = 1/√2
    pair = StripPair(Element.pads, a=1.0, b=np.sqrt(2.0), length=1.0)
    assert pair.capacitance_per_length(1.0) == pytest.approx(EPSILON_0)


def test_cell_means_match_quadrature():
    pair = StripPair(Element.leads, a=5.0, b=7.5, length=60.0)
    edges = np.array([5.5, 6.0, 6.25, 7.0])
    means = pair.cell_means(edges)
    for lo, hi, mean in zip(edges[:-1], edges[1:], means):
        expected = quad(pair.shape, lo, hi)[0] / (hi - lo)
        assert mean == pytest.approx(expected, rel=1e-6)


def test_strip_pairs_follow_design():
    design = builtin_design("long")
    pads, leads, squid = strip_pairs(design)
    assert [p.element for p in (pads, leads, squid)] == list(BREAKDOWN_ELEMENTS)
    assert pads.a == pytest.approx(design.gap / 2)
    assert pads.b - pads.a == pytest.approx(design.pad_width)
    assert leads.length == pytest.approx(design.lead_length)
    assert squid.b - squid.a == pytest.approx(design.squid_wire_width)


def test_coarse_stage_is_experimental():
    with pytest.warns(SurflossExperimentalWarning):
        coarse_surface_fields(builtin_design("wide"))


def test_coarse_map_regions(regular_map):
    assert regular_map.elements == BREAKDOWN_ELEMENTS
    assert regular_map.has(Element.pads, Region.inner)
    assert regular_map.has(Element.pads, Region.band)
    assert not regular_map.has(Element.leads, Region.inner)
    assert regular_map.provenance == Provenance.computed
    with pytest.raises(MissingRegionError):
        regular_map.integral(Element.squid, InterfaceKind.ma, Region.inner)


def test_coarse_map_is_mirrored(regular_map):
    xs = [
        s.x_um
        for s in regular_map.samples
        if s.element == Element.pads and s.interface == InterfaceKind.ms
    ]
    assert sorted(xs) == pytest.approx(sorted(-x for x in xs))


def test_excitation_scaling(regular_map):
    doubled = coarse_surface_fields(builtin_design("regular"), excitation=2.0)
    assert doubled.total_energy == pytest.approx(4 * regular_map.total_energy)
    for element in BREAKDOWN_ELEMENTS:
        ratio = doubled.integral(element, InterfaceKind.ma, Region.band) / doubled.total_energy
        expected = (
            regular_map.integral(element, InterfaceKind.ma, Region.band)
            / regular_map.total_energy
        )
        assert ratio == pytest.approx(expected)


def test_scaled(regular_map):
    scaled = regular_map.scaled(3.0)
    assert scaled.total_energy == pytest.approx(3 * regular_map.total_energy)
    assert scaled.integral(Element.pads, InterfaceKind.sa, Region.inner) == pytest.approx(
        3 * regular_map.integral(Element.pads, InterfaceKind.sa, Region.inner)
    )


def test_zero_excitation():
    with pytest.raises(DegenerateExcitationError):
        coarse_surface_fields(builtin_design("regular"), excitation=0.0)


def test_capacitance_is_positive_and_consistent():
    estimate = capacitance(builtin_design("regular"))
    assert 10e-15 < estimate.capacitance < 500e-15
    assert estimate.charging_energy_mhz == pytest.approx(
        charging_energy_mhz(estimate.capacitance)
    )
    # Wider pads add capacitance
    wider = capacitance(builtin_design("regular").replace(pad_width=300.0))
    assert wider.capacitance > estimate.capacitance


def test_effective_permittivity():
    assert effective_permittivity(11.0) == pytest.approx(6.0)


def test_field_map_file(regular_map, tmp_path):
    path = tmp_path / "regular.csv"
    export_field_map(regular_map, path, header=["surfloss test"])
    text = path.read_text(encoding="utf-8")
    assert text.startswith("# surfloss test\n")
    assert ",".join(FIELD_MAP_COLUMNS) in text

    assert import_field_map(path) == regular_map


def test_field_map_without_provenance(tmp_path):
    path = tmp_path / "solver.csv"
    path.write_text(
        ",".join(FIELD_MAP_COLUMNS) + "\npads,MA,inner,1,1,1,1\nU_tot_J,1\nV_excitation,1\n",
        encoding="utf-8",
    )
    assert import_field_map(path).provenance == Provenance.imported_field


def test_missing_field_map(tmp_path):
    with pytest.raises(FileNotFoundError):
        import_field_map(tmp_path / "nothing.csv")


TEST_BAD_FIELD_MAPS = [
    "",
    "element,interface\n",
    ",".join(FIELD_MAP_COLUMNS) + "\npads,MA,inner,1,1,1,1\nV_excitation,1\n",
    ",".join(FIELD_MAP_COLUMNS) + "\npads,xx,inner,1,1,1,1\nU_tot_J,1\nV_excitation,1\n",
    ",".join(FIELD_MAP_COLUMNS) + "\npads,MA,inner,1,1,-1,1\nU_tot_J,1\nV_excitation,1\n",
    ",".join(FIELD_MAP_COLUMNS) + "\npads,MA,inner,1,1,1,1\nU_tot_J,0\nV_excitation,1\n",
    ",".join(FIELD_MAP_COLUMNS)
    + "\npads,MA,inner,1,1,1,1\nU_tot_J,1\nV_excitation,1\nprovenance,measured\n",
]


@pytest.mark.parametrize("content", TEST_BAD_FIELD_MAPS)
def test_bad_field_map(content, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(FieldMapParseError):
        import_field_map(path)
