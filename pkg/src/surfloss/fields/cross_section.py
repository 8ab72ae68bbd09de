"""
2-D cross-sections through a pad edge or a pair of wiring strips, assembled
from rectangles, and their discretisation onto a graded grid.

Coordinates are metres. The substrate fills z < 0 and air z > 0; conductors
sit on the substrate surface, from z = 0 to the film thickness h.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from surfloss.constants import (
    DEFAULT_X0_UM,
    DEFAULT_X0_WIRING_UM,
    NM,
    SUBSTRATE_PERMITTIVITY,
    UM,
)
from surfloss.exceptions import GridTooLargeError, InvalidCrossSectionError
from surfloss.fields.grid import (
    COARSE_DIVISOR,
    MAX_NODES,
    graded_axis,
    grid_spec,
    mirrored_axis,
)
from surfloss.geometry.design import InterfaceSpec, QubitDesign, participation_interfaces
from surfloss.types import InterfaceKind, Resolution

logger = logging.getLogger(__name__)

#: Domain extent as a multiple of the largest feature
DOMAIN_MULTIPLE = 11.0


class CrossSectionKind(str, Enum):
    pad_edge = "pad-edge"
    wiring = "wiring"
    parallel_plate = "parallel-plate"


class BoundaryCondition(str, Enum):
    #: Far-field potential fixed at zero
    dirichlet = "dirichlet"
    #: Zero normal field on the outer boundary
    neumann = "neumann"


class Medium(IntEnum):
    substrate = 0
    ms = 1
    sa = 2
    ma = 3
    air = 4
    conductor = 5


MEDIUM_FOR_INTERFACE = {
    InterfaceKind.ms: Medium.ms,
    InterfaceKind.sa: Medium.sa,
    InterfaceKind.ma: Medium.ma,
}


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    z0: float
    z1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.z1 - self.z0

    def overlaps(self, other: "Rect", tolerance: float) -> bool:
        return (
            min(self.x1, other.x1) - max(self.x0, other.x0) > tolerance
            and min(self.z1, other.z1) - max(self.z0, other.z0) > tolerance
        )


@dataclass(frozen=True)
class Conductor:
    rect: Rect

    #: Potential, V
    potential: float


@dataclass(frozen=True)
class Layer:
    medium: Medium

    rect: Rect

    permittivity: float


@dataclass(frozen=True)
class CrossSection:
    """
    A 2-D electrostatic problem. ``keys_x``/``keys_z`` force grid nodes at
    integration limits in addition to every rectangle edge.
    """

    kind: CrossSectionKind

    conductors: Tuple[Conductor, ...]

    layers: Tuple[Layer, ...]

    domain: Rect

    #: Width of the conductor of interest, m
    conductor_width: float

    #: Gap g or lead spacing g′, m
    spacing: float

    #: Film thickness h, m
    film_thickness: float

    substrate_permittivity: float = SUBSTRATE_PERMITTIVITY

    air_permittivity: float = 1.0

    boundary: BoundaryCondition = BoundaryCondition.dirichlet

    interfaces: Mapping[InterfaceKind, InterfaceSpec] = field(
        default_factory=participation_interfaces
    )

    #: Pad-edge band boundary x0, m
    x0: float = DEFAULT_X0_UM * UM

    #: Wiring band half-width x0′, m
    x0_wiring: float = DEFAULT_X0_WIRING_UM * UM

    #: Centre of the strip whose bands are integrated (wiring only), m
    strip_centre: float = 0.0

    keys_x: Tuple[float, ...] = ()

    keys_z: Tuple[float, ...] = ()

    #: Build the x axis mirrored about x = 0
    mirrored: bool = False

    def __post_init__(self):
        tolerance = self.fine_length * 1e-3
        for layer in self.layers:
            for conductor in self.conductors:
                if layer.rect.overlaps(conductor.rect, tolerance):
                    raise InvalidCrossSectionError(
                        f"{layer.medium.name} layer overlaps a conductor"
                    )
        if min(self.domain.width, self.domain.height) < 10 * self.largest_feature * (
            1 - 1e-9
        ):
            raise InvalidCrossSectionError(
                "Domain must extend at least 10 times the largest feature"
            )

    @property
    def largest_feature(self) -> float:
        x0 = min(c.rect.x0 for c in self.conductors)
        x1 = max(c.rect.x1 for c in self.conductors)
        z0 = min(c.rect.z0 for c in self.conductors)
        z1 = max(c.rect.z1 for c in self.conductors)
        return max(x1 - x0, z1 - z0)

    @property
    def fine_length(self) -> float:
        """
        Thinnest feature that needs resolving
        """
        lengths = [layer.rect.height for layer in self.layers if layer.rect.height > 0]
        lengths += [layer.rect.width for layer in self.layers if layer.rect.width > 0]
        lengths += [c.rect.height for c in self.conductors]
        return min(lengths)

    @property
    def excitation(self) -> float:
        """
        Potential difference across the conductors
        """
        potentials = [c.potential for c in self.conductors]
        return max(potentials) - min(potentials)

    def thickness(self, kind: InterfaceKind) -> float:
        return self.interfaces[kind].thickness_m

    def discretize(
        self,
        resolution: Resolution = Resolution.medium,
        max_nodes: int = MAX_NODES,
    ) -> "Mesh":
        spec = grid_spec(resolution)
        fine = self.fine_length / spec.cells_per_layer
        coarse = max(self.domain.width, self.domain.height) / COARSE_DIVISOR

        keys_x = [self.domain.x0, self.domain.x1, *self.keys_x]
        keys_z = [self.domain.z0, self.domain.z1, 0.0, *self.keys_z]
        for rect in [c.rect for c in self.conductors] + [layer.rect for layer in self.layers]:
            keys_x += [rect.x0, rect.x1]
            keys_z += [rect.z0, rect.z1]

        if self.mirrored:
            x = mirrored_axis(keys_x, fine, spec.growth, coarse)
        else:
            x = graded_axis(keys_x, fine, spec.growth, coarse)
        z = graded_axis(keys_z, fine, spec.growth, coarse)

        nodes = x.size * z.size
        if nodes > max_nodes:
            raise GridTooLargeError(nodes, max_nodes)
        logger.info(
            "Discretised %s cross-section at %s resolution: %d x %d nodes",
            self.kind.value,
            Resolution(resolution).value,
            x.size,
            z.size,
        )

        xc = 0.5 * (x[1:] + x[:-1])
        zc = 0.5 * (z[1:] + z[:-1])
        above = np.broadcast_to(zc > 0, (xc.size, zc.size))
        medium = np.where(above, Medium.air, Medium.substrate).astype(np.int8)
        permittivity = np.where(above, self.air_permittivity, self.substrate_permittivity)

        def _cells(rect: Rect) -> np.ndarray:
            inside_x = (xc > rect.x0) & (xc < rect.x1)
            inside_z = (zc > rect.z0) & (zc < rect.z1)
            return np.outer(inside_x, inside_z)

        for layer in self.layers:
            cells = _cells(layer.rect)
            medium[cells] = layer.medium
            permittivity[cells] = layer.permittivity

        fixed = np.zeros((x.size, z.size), dtype=bool)
        fixed_potential = np.zeros((x.size, z.size))
        if self.boundary == BoundaryCondition.dirichlet:
            fixed[[0, -1], :] = True
            fixed[:, [0, -1]] = True

        tolerance = fine * 1e-2
        for conductor in self.conductors:
            rect = conductor.rect
            medium[_cells(rect)] = Medium.conductor
            permittivity[_cells(rect)] = 1.0
            inside_x = (x >= rect.x0 - tolerance) & (x <= rect.x1 + tolerance)
            inside_z = (z >= rect.z0 - tolerance) & (z <= rect.z1 + tolerance)
            nodes_inside = np.outer(inside_x, inside_z)
            fixed[nodes_inside] = True
            fixed_potential[nodes_inside] = conductor.potential

        return Mesh(
            cross_section=self,
            resolution=Resolution(resolution),
            x=x,
            z=z,
            medium=medium,
            permittivity=permittivity,
            fixed=fixed,
            fixed_potential=fixed_potential,
        )


@dataclass(frozen=True, eq=False)
class Mesh:
    cross_section: CrossSection

    resolution: Resolution

    #: Node coordinates, m
    x: np.ndarray

    z: np.ndarray

    #: Medium per cell, shape (nx - 1, nz - 1)
    medium: np.ndarray

    #: Relative permittivity per cell
    permittivity: np.ndarray

    #: Nodes with an imposed potential
    fixed: np.ndarray

    fixed_potential: np.ndarray

    @property
    def dx(self) -> np.ndarray:
        return np.diff(self.x)

    @property
    def dz(self) -> np.ndarray:
        return np.diff(self.z)

    @property
    def x_centres(self) -> np.ndarray:
        return 0.5 * (self.x[1:] + self.x[:-1])

    @property
    def z_centres(self) -> np.ndarray:
        return 0.5 * (self.z[1:] + self.z[:-1])

    @property
    def node_count(self) -> int:
        return self.x.size * self.z.size


def _interfaces(
    interfaces: Optional[Mapping[InterfaceKind, InterfaceSpec]],
) -> Dict[InterfaceKind, InterfaceSpec]:
    return dict(interfaces) if interfaces is not None else participation_interfaces()


def _surface_layers(
    conductors: Tuple[Rect, ...],
    exposed: Tuple[Tuple[float, float], ...],
    interfaces: Mapping[InterfaceKind, InterfaceSpec],
) -> Tuple[Layer, ...]:
    """
    MS under each conductor, SA over the exposed substrate, and MA over the
    top and both side faces of each conductor
    """
    ms = interfaces[InterfaceKind.ms]
    sa = interfaces[InterfaceKind.sa]
    ma = interfaces[InterfaceKind.ma]
    layers = []
    for rect in conductors:
        layers.append(
            Layer(Medium.ms, Rect(rect.x0, rect.x1, -ms.thickness_m, 0.0), ms.relative_permittivity)
        )
    for start, stop in exposed:
        layers.append(
            Layer(Medium.sa, Rect(start, stop, -sa.thickness_m, 0.0), sa.relative_permittivity)
        )
    for rect in conductors:
        t = ma.thickness_m
        top = rect.z1 + t
        eps = ma.relative_permittivity
        layers += [
            Layer(Medium.ma, Rect(rect.x0, rect.x1, rect.z1, top), eps),
            Layer(Medium.ma, Rect(rect.x0 - t, rect.x0, 0.0, top), eps),
            Layer(Medium.ma, Rect(rect.x1, rect.x1 + t, 0.0, top), eps),
        ]
    return tuple(layers)


def pad_edge_cross_section(
    pad_width_um: float,
    gap_um: float,
    film_thickness_nm: float = 120.0,
    interfaces: Optional[Mapping[InterfaceKind, InterfaceSpec]] = None,
    x0_um: float = DEFAULT_X0_UM,
    substrate_permittivity: Optional[float] = None,
    boundary: BoundaryCondition = BoundaryCondition.dirichlet,
    excitation: float = 1.0,
) -> CrossSection:
    """
    The pad edge facing the ground plane across the gap. The pad occupies
    0 < x < w at the excitation potential; the ground, of equal width, ends
    at x = -g. The band integrals run over the pad edge at x = 0.
    """
    if pad_width_um <= 2 * x0_um or gap_um <= x0_um:
        raise InvalidCrossSectionError("Pad width and gap must exceed the x0 bands")
    ifaces = _interfaces(interfaces)
    w, g, h, x0 = pad_width_um * UM, gap_um * UM, film_thickness_nm * NM, x0_um * UM

    pad = Rect(0.0, w, 0.0, h)
    ground = Rect(-g - w, -g, 0.0, h)
    feature = 2 * w + g
    centre = (w - g - w) / 2
    half = DOMAIN_MULTIPLE * feature / 2
    domain = Rect(centre - half, centre + half, -half, half)

    layers = _surface_layers(
        (pad, ground),
        ((domain.x0, ground.x0), (ground.x1, pad.x0), (pad.x1, domain.x1)),
        ifaces,
    )
    return CrossSection(
        kind=CrossSectionKind.pad_edge,
        conductors=(Conductor(pad, excitation), Conductor(ground, 0.0)),
        layers=layers,
        domain=domain,
        conductor_width=w,
        spacing=g,
        film_thickness=h,
        substrate_permittivity=(
            SUBSTRATE_PERMITTIVITY if substrate_permittivity is None else substrate_permittivity
        ),
        boundary=BoundaryCondition(boundary),
        interfaces=ifaces,
        x0=x0,
        keys_x=(-x0, -x0 / 2, x0 / 2, x0),
    )


def wiring_cross_section(
    lead_width_um: float,
    lead_spacing_um: float,
    film_thickness_nm: float = 120.0,
    interfaces: Optional[Mapping[InterfaceKind, InterfaceSpec]] = None,
    x0_wiring_um: float = DEFAULT_X0_WIRING_UM,
    x0_um: float = DEFAULT_X0_UM,
    substrate_permittivity: Optional[float] = None,
    boundary: BoundaryCondition = BoundaryCondition.dirichlet,
    excitation: float = 1.0,
) -> CrossSection:
    """
    Two parallel strips of width w′ at ±V/2, a distance g′ apart and
    symmetric about x = 0. Band integrals use the strip at +V/2, centred at
    x = -(w′ + g′)/2.
    """
    if lead_width_um / 2 <= x0_wiring_um:
        raise InvalidCrossSectionError(
            f"Half the strip width ({lead_width_um / 2} μm) must exceed "
            f"x0′ = {x0_wiring_um} μm"
        )
    ifaces = _interfaces(interfaces)
    w, g, h = lead_width_um * UM, lead_spacing_um * UM, film_thickness_nm * NM
    x0p, x0 = x0_wiring_um * UM, x0_um * UM
    pitch = w + g
    centre = -pitch / 2

    strip_a = Rect(centre - w / 2, centre + w / 2, 0.0, h)
    strip_b = Rect(-strip_a.x1, -strip_a.x0, 0.0, h)
    feature = 2 * w + g
    half = DOMAIN_MULTIPLE * feature / 2
    domain = Rect(-half, half, -half, half)

    layers = _surface_layers(
        (strip_a, strip_b),
        ((domain.x0, strip_a.x0), (strip_a.x1, strip_b.x0), (strip_b.x1, domain.x1)),
        ifaces,
    )
    band_keys = (
        centre - x0p,
        centre + x0p,
        strip_a.x0 - 2 * x0,
        strip_a.x1 + 2 * x0,
    )
    return CrossSection(
        kind=CrossSectionKind.wiring,
        conductors=(Conductor(strip_a, excitation / 2), Conductor(strip_b, -excitation / 2)),
        layers=layers,
        domain=domain,
        conductor_width=w,
        spacing=g,
        film_thickness=h,
        substrate_permittivity=(
            SUBSTRATE_PERMITTIVITY if substrate_permittivity is None else substrate_permittivity
        ),
        boundary=BoundaryCondition(boundary),
        interfaces=ifaces,
        x0=x0,
        x0_wiring=x0p,
        strip_centre=centre,
        keys_x=band_keys + tuple(-k for k in band_keys),
        mirrored=True,
    )


def parallel_plate_cross_section(
    width_um: float,
    spacing_um: float,
    thickness_um: float,
    permittivity: float = 1.0,
    excitation: float = 1.0,
) -> CrossSection:
    """
    Two facing plates in a uniform dielectric, the upper one at the
    excitation potential
    """
    w, s, th = width_um * UM, spacing_um * UM, thickness_um * UM
    bottom = Rect(-w / 2, w / 2, -s / 2 - th, -s / 2)
    top = Rect(-w / 2, w / 2, s / 2, s / 2 + th)
    half = DOMAIN_MULTIPLE * max(w, s + 2 * th) / 2
    return CrossSection(
        kind=CrossSectionKind.parallel_plate,
        conductors=(Conductor(top, excitation), Conductor(bottom, 0.0)),
        layers=(),
        domain=Rect(-half, half, -half, half),
        conductor_width=w,
        spacing=s,
        film_thickness=th,
        substrate_permittivity=permittivity,
        air_permittivity=permittivity,
    )


def design_cross_sections(
    design: QubitDesign,
    interfaces: Optional[Mapping[InterfaceKind, InterfaceSpec]] = None,
    substrate_permittivity: Optional[float] = None,
) -> Tuple[CrossSection, CrossSection]:
    """
    The pad-edge and wiring cross-sections of a design
    """
    return (
        pad_edge_cross_section(
            design.pad_width,
            design.gap,
            design.film_thickness,
            interfaces=interfaces,
            substrate_permittivity=substrate_permittivity,
        ),
        wiring_cross_section(
            design.lead_width,
            design.lead_spacing,
            design.film_thickness,
            interfaces=interfaces,
            substrate_permittivity=substrate_permittivity,
        ),
    )
