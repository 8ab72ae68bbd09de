"""
Coarse surface-field stage and the field-map file format.

The built-in coarse stage models each conductor element as a pair of
coplanar sheet strips in an effective medium of (ε_sub + 1)/2, solved by
conformal mapping. It is qualitative: it captures where the field
concentrates and how it moves with geometry, not the absolute participations
of a full 3-D solve. Quantitative work imports an external field map.
"""
import csv
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import ellipk

from surfloss.constants import (
    DEFAULT_X0_UM,
    DEFAULT_X0_WIRING_UM,
    ELEMENTARY_CHARGE,
    EPSILON_0,
    PLANCK,
    SUBSTRATE_PERMITTIVITY,
    UM,
)
from surfloss.exceptions import (
    DegenerateExcitationError,
    FieldMapParseError,
    MissingRegionError,
)
from surfloss.geometry.design import QubitDesign
from surfloss.types import Element, InterfaceKind, Provenance, Region
from surfloss.warnings import experimental

logger = logging.getLogger(__name__)

FIELD_MAP_COLUMNS = (
    "element",
    "interface",
    "region",
    "x_um",
    "y_um",
    "e2_density_V2_per_m2",
    "area_um2",
)
FLOAT_FORMAT = "%.17e"

#: Cells per inner region and per band in the coarse stage
INNER_CELLS = 32
BAND_CELLS = 8


@dataclass(frozen=True)
class FieldSample:
    element: Element

    interface: InterfaceKind

    region: Region

    #: Cell centre across the element, μm
    x_um: float

    #: Position along the element, μm
    y_um: float

    #: Mean squared field over the cell, V²/m²
    e2: float

    #: Quadrature weight, μm²
    area_um2: float


@dataclass(frozen=True)
class SurfaceFieldMap:
    """
    Squared-field samples on the MA, MS and SA surfaces of each element, for
    inner regions and the convergence bands
    """

    samples: Tuple[FieldSample, ...]

    #: Total field energy, J
    total_energy: float

    #: Potential difference across the pads, V
    excitation: float

    #: Pad-edge band boundary the band samples were taken at, μm
    x0_um: float = DEFAULT_X0_UM

    #: Wiring band half-width, μm
    x0_wiring_um: float = DEFAULT_X0_WIRING_UM

    provenance: Provenance = Provenance.computed

    def __post_init__(self):
        if not self.total_energy > 0:
            raise DegenerateExcitationError(
                f"Total field energy must be positive, got {self.total_energy}"
            )
        for sample in self.samples:
            if sample.e2 < 0 or sample.area_um2 < 0:
                raise FieldMapParseError(
                    f"Negative density or area for {sample.element.value} "
                    f"{sample.interface.value} {sample.region.value}"
                )

    @property
    def elements(self) -> Tuple[Element, ...]:
        return tuple(dict.fromkeys(s.element for s in self.samples))

    def has(self, element: Element, region: Region) -> bool:
        return any(s.element == element and s.region == region for s in self.samples)

    def integral(self, element: Element, interface: InterfaceKind, region: Region) -> float:
        """
        ∬|E|² over the region's samples, V²
        """
        selected = [
            s
            for s in self.samples
            if s.element == element and s.interface == interface and s.region == region
        ]
        if not selected:
            raise MissingRegionError(
                f"No {region.value} samples for {element.value} {interface.value}"
            )
        return float(sum(s.e2 * s.area_um2 for s in selected)) * UM**2

    def scaled(self, factor: float) -> "SurfaceFieldMap":
        """
        Multiply every density and the total energy by ``factor``
        """
        return replace(
            self,
            samples=tuple(replace(s, e2=s.e2 * factor) for s in self.samples),
            total_energy=self.total_energy * factor,
        )


@dataclass(frozen=True)
class StripPair:
    """
    Two coplanar sheet strips with inner edges at ±a and outer edges at ±b
    """

    element: Element

    #: Half the spacing between the strips, μm
    a: float

    #: Distance from the centre to the outer edges, μm
    b: float

    #: Length along the strips, μm
    length: float

    @property
    def k(self) -> float:
        return self.a / self.b

    def capacitance_per_length(self, effective_permittivity: float) -> float:
        """
        C′ in F/m
        """
        m = self.k**2
        return effective_permittivity * EPSILON_0 * ellipk(1 - m) / ellipk(m)

    def amplitude(self, excitation: float) -> float:
        """
        A in |E|² = A²/|(x² − a²)(x² − b²)|, with x in metres
        """
        return excitation * self.b * UM / (2 * ellipk(self.k**2))

    def shape(self, x_um: np.ndarray) -> np.ndarray:
        """
        1/|(x² − a²)(x² − b²)| in m⁻⁴
        """
        x = x_um * UM
        return 1 / np.abs((x**2 - (self.a * UM) ** 2) * (x**2 - (self.b * UM) ** 2))

    def cell_means(self, edges_um: np.ndarray) -> np.ndarray:
        """
        Exact averages of the shape over consecutive cells
        """
        lo, hi = edges_um[:-1], edges_um[1:]
        integral, _ = quad_vec(lambda u: self.shape(lo + u * (hi - lo)), 0.0, 1.0)
        return integral


def effective_permittivity(substrate_permittivity: Optional[float] = None) -> float:
    eps = SUBSTRATE_PERMITTIVITY if substrate_permittivity is None else substrate_permittivity
    return (eps + 1) / 2


def strip_pairs(design: QubitDesign) -> Tuple[StripPair, ...]:
    """
    The coarse-stage model of each element: pads across the gap, the two
    leads, and the SQUID arms facing across the loop
    """
    d = design
    return (
        StripPair(Element.pads, d.gap / 2, d.gap / 2 + d.pad_width, d.pad_height),
        StripPair(
            Element.leads,
            d.lead_spacing / 2,
            d.lead_spacing / 2 + d.lead_width,
            d.lead_length,
        ),
        StripPair(
            Element.squid,
            d.squid_loop_side / 2 - d.squid_wire_width,
            d.squid_loop_side / 2,
            2 * d.squid_loop_side,
        ),
    )


def _mirrored(edges: np.ndarray) -> List[np.ndarray]:
    return [edges, -edges[::-1]]


def _region_samples(
    pair: StripPair,
    region: Region,
    interfaces: Sequence[InterfaceKind],
    spans: Iterable[Tuple[float, float]],
    cells: int,
    amplitude_sq: float,
) -> List[FieldSample]:
    samples = []
    for start, stop in spans:
        for edges in _mirrored(np.linspace(start, stop, cells + 1)):
            means = pair.cell_means(edges) * amplitude_sq
            centres = 0.5 * (edges[1:] + edges[:-1])
            widths = np.diff(edges)
            for kind in interfaces:
                samples += [
                    FieldSample(
                        element=pair.element,
                        interface=kind,
                        region=region,
                        x_um=float(x),
                        y_um=pair.length / 2,
                        e2=float(e2),
                        area_um2=float(w * pair.length),
                    )
                    for x, e2, w in zip(centres, means, widths)
                ]
    return samples


def _element_samples(
    pair: StripPair,
    excitation: float,
    x0: float,
    x0_wiring: float,
) -> List[FieldSample]:
    amplitude_sq = pair.amplitude(excitation) ** 2
    a, b = pair.a, pair.b
    metal = (InterfaceKind.ma, InterfaceKind.ms)

    if pair.element != Element.pads:
        centre = (a + b) / 2
        return _region_samples(
            pair,
            Region.band,
            tuple(InterfaceKind),
            [(centre - x0_wiring, centre + x0_wiring)],
            BAND_CELLS,
            amplitude_sq,
        )

    samples = _region_samples(
        pair, Region.inner, metal, [(a + x0, b - x0)], INNER_CELLS, amplitude_sq
    )
    samples += _region_samples(
        pair, Region.inner, (InterfaceKind.sa,), [(0.0, a - x0)], INNER_CELLS // 2, amplitude_sq
    )
    samples += _region_samples(
        pair, Region.inner, (InterfaceKind.sa,), [(b + x0, 2 * b)], INNER_CELLS, amplitude_sq
    )
    # The SA band reuses the metal-side band of the MS layer
    samples += _region_samples(
        pair,
        Region.band,
        tuple(InterfaceKind),
        [(a + x0 / 2, a + x0), (b - x0, b - x0 / 2)],
        BAND_CELLS,
        amplitude_sq,
    )
    return samples


def _total_energy(
    design: QubitDesign, excitation: float, substrate_permittivity: Optional[float]
) -> float:
    eps = effective_permittivity(substrate_permittivity)
    return 0.5 * excitation**2 * sum(
        pair.capacitance_per_length(eps) * pair.length * UM for pair in strip_pairs(design)
    )


@experimental("The coarse surface-field stage is qualitative")
def coarse_surface_fields(
    design: QubitDesign,
    excitation: float = 1.0,
    x0_um: float = DEFAULT_X0_UM,
    x0_wiring_um: float = DEFAULT_X0_WIRING_UM,
    substrate_permittivity: Optional[float] = None,
) -> SurfaceFieldMap:
    """
    Squared-field samples for every element of ``design`` from the
    coplanar-strip model.

    :raises DegenerateExcitationError: ``excitation`` is zero
    """
    if excitation == 0:
        raise DegenerateExcitationError("Zero excitation gives no field energy")

    samples: List[FieldSample] = []
    for pair in strip_pairs(design):
        samples += _element_samples(pair, excitation, x0_um, x0_wiring_um)

    total = _total_energy(design, excitation, substrate_permittivity)
    logger.debug(
        "Coarse stage for %s: %d samples, U_tot = %.4e J",
        design.design_label,
        len(samples),
        total,
    )
    return SurfaceFieldMap(
        samples=tuple(samples),
        total_energy=total,
        excitation=excitation,
        x0_um=x0_um,
        x0_wiring_um=x0_wiring_um,
    )


@dataclass(frozen=True)
class CapacitanceEstimate:
    #: Capacitance, F
    capacitance: float

    #: Charging energy E_C / h, MHz
    charging_energy_mhz: float


def charging_energy_mhz(capacitance_f: float) -> float:
    """
    E_C = e²/2C, in MHz
    """
    return ELEMENTARY_CHARGE**2 / (2 * capacitance_f) / PLANCK / 1e6


def capacitance_for_charging_energy(charging_energy: float) -> float:
    """
    The capacitance, in F, giving a charging energy in MHz
    """
    return ELEMENTARY_CHARGE**2 / (2 * charging_energy * 1e6 * PLANCK)


def capacitance(
    design: QubitDesign,
    substrate_permittivity: Optional[float] = None,
) -> CapacitanceEstimate:
    """
    C = 2·U_tot/V² from the coarse stage
    """
    c = 2 * _total_energy(design, 1.0, substrate_permittivity)
    return CapacitanceEstimate(capacitance=c, charging_energy_mhz=charging_energy_mhz(c))


def export_field_map(
    field_map: SurfaceFieldMap,
    path: Union[str, Path],
    header: Sequence[str] = (),
) -> None:
    """
    Write a field map as CSV, preceded by ``#`` comment lines
    """
    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in header:
            f.write(f"# {line}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(FIELD_MAP_COLUMNS)
        for s in field_map.samples:
            writer.writerow(
                [
                    s.element.value,
                    s.interface.value,
                    s.region.value,
                    FLOAT_FORMAT % s.x_um,
                    FLOAT_FORMAT % s.y_um,
                    FLOAT_FORMAT % s.e2,
                    FLOAT_FORMAT % s.area_um2,
                ]
            )
        writer.writerow(["U_tot_J", FLOAT_FORMAT % field_map.total_energy])
        writer.writerow(["V_excitation", FLOAT_FORMAT % field_map.excitation])
        writer.writerow(["x0_um", FLOAT_FORMAT % field_map.x0_um])
        writer.writerow(["x0_wiring_um", FLOAT_FORMAT % field_map.x0_wiring_um])
        writer.writerow(["provenance", field_map.provenance.value])


_METADATA_KEYS = ("U_tot_J", "V_excitation", "x0_um", "x0_wiring_um")


def import_field_map(path: Union[str, Path]) -> SurfaceFieldMap:
    """
    Read a field map written by :func:`export_field_map` or an external
    solver using the same layout. Files without a ``provenance`` row are
    taken as imported fields.

    :raises FileNotFoundError: ``path`` does not exist
    :raises FieldMapParseError: The file does not match the layout
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Field map not found: {path}")

    lines = [
        line
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    if not lines:
        raise FieldMapParseError(f"{path} is empty")

    rows = list(csv.reader(lines))
    if tuple(rows[0]) != FIELD_MAP_COLUMNS:
        raise FieldMapParseError(f"{path}: expected columns {','.join(FIELD_MAP_COLUMNS)}")

    samples = []
    metadata: Dict[str, float] = {}
    provenance = Provenance.imported_field
    for number, row in enumerate(rows[1:], start=2):
        try:
            if row and row[0] == "provenance":
                provenance = Provenance(row[1])
                continue
            if row and row[0] in _METADATA_KEYS:
                metadata[row[0]] = float(row[1])
                continue
            element, interface, region, x, y, e2, area = row
            sample = FieldSample(
                element=Element(element),
                interface=InterfaceKind(interface),
                region=Region(region),
                x_um=float(x),
                y_um=float(y),
                e2=float(e2),
                area_um2=float(area),
            )
        except (ValueError, IndexError) as e:
            raise FieldMapParseError(f"{path}, row {number}: {e}") from e
        if sample.e2 < 0 or sample.area_um2 < 0:
            raise FieldMapParseError(f"{path}, row {number}: negative density or area")
        samples.append(sample)

    if "U_tot_J" not in metadata:
        raise FieldMapParseError(f"{path}: missing U_tot_J")
    if "V_excitation" not in metadata:
        raise FieldMapParseError(f"{path}: missing V_excitation")

    try:
        return SurfaceFieldMap(
            samples=tuple(samples),
            total_energy=metadata["U_tot_J"],
            excitation=metadata["V_excitation"],
            x0_um=metadata.get("x0_um", DEFAULT_X0_UM),
            x0_wiring_um=metadata.get("x0_wiring_um", DEFAULT_X0_WIRING_UM),
            provenance=provenance,
        )
    except DegenerateExcitationError as e:
        raise FieldMapParseError(f"{path}: {e}") from e
