"""
Monte Carlo bath of individual TLS defects coupled to the qubit.

Defects are drawn region by region (pad perimeters, leads, SQUID) as a
Poisson process in the TLS-hosting interface volume. Each defect couples
through the local field of the rms vacuum voltage, and the relaxation
spectrum sums their Lorentzian contributions on top of a background rate.

Rates are angular and in μs⁻¹; frequencies are GHz and detunings MHz.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import median_abs_deviation, truncnorm

from surfloss.constants import DEBYE, DEFAULT_SEED, EPSILON_0, HBAR, PLANCK, UM
from surfloss.exceptions import InvalidDefectError, MissingTangentError, TlsException
from surfloss.fields.surface import SurfaceFieldMap
from surfloss.geometry.design import (
    PARTICIPATION_PERMITTIVITY,
    PARTICIPATION_THICKNESS_NM,
    TLS_DENSITY,
    TLS_THICKNESS_NM,
    InterfaceSpec,
    QubitDesign,
    builtin_design,
    participation_interfaces,
)
from surfloss.participation.factors import REFERENCE_FACTORS, ScalingFactors
from surfloss.participation.ratios import (
    ParticipationBreakdown,
    inner_participation,
    perimeter_participation,
    wiring_participation,
)
from surfloss.participation.reconstruct import build_reference_field_map
from surfloss.types import Element, InterfaceKind, Region

logger = logging.getLogger(__name__)

#: Interface tangents used for the background rate
KNOWN_TANGENTS = {
    InterfaceKind.ma: 3.9e-3,
    InterfaceKind.ms: 7.1e-4,
    InterfaceKind.sa: 5.9e-4,
}

#: Defects summed per block when building a spectrum
CHUNK_SIZE = 2048

#: Frequency window the designs are simulated over, GHz
SIMULATION_WINDOW = (4.0, 5.0)

TLS_ELEMENTS = (Element.pads, Element.leads, Element.squid)


@dataclass(frozen=True)
class DipoleDistribution:
    """
    Gaussian dipole moments truncated below at ``minimum_debye``
    """

    mean_debye: float = 2.6

    std_debye: float = 1.6

    minimum_debye: float = 0.1

    def __post_init__(self):
        if not self.std_debye > 0 or not self.minimum_debye > 0:
            raise TlsException("Dipole spread and truncation must be positive")

    @property
    def distribution(self):
        a = (self.minimum_debye - self.mean_debye) / self.std_debye
        return truncnorm(a, np.inf, loc=self.mean_debye, scale=self.std_debye)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.distribution.rvs(size=size, random_state=rng)

    @property
    def second_moment(self) -> float:
        """
        ⟨d²⟩ in D²
        """
        return float(self.distribution.moment(2))


@dataclass(frozen=True)
class TlsEnsembleConfig:
    #: TLS volume density ρ0, (μm³·GHz)⁻¹
    density: float = TLS_DENSITY

    dipoles: DipoleDistribution = field(default_factory=DipoleDistribution)

    #: TLS-hosting thickness per interface, nm
    thickness_nm: Mapping[InterfaceKind, float] = field(
        default_factory=lambda: dict(TLS_THICKNESS_NM)
    )

    #: Band the defects are spread over, MHz
    band_mhz: float = 300.0

    #: Band centre, GHz
    centre_ghz: float = 4.5

    #: Log-uniform range of the defect relaxation rate, μs⁻¹
    gamma_range: Tuple[float, float] = (0.1, 10.0)

    #: Permittivity of the TLS-hosting layers
    relative_permittivity: float = PARTICIPATION_PERMITTIVITY

    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.density < 0:
            raise TlsException(f"TLS density must not be negative, got {self.density}")
        if not self.band_mhz > 0:
            raise TlsException(f"Band must be positive, got {self.band_mhz} MHz")
        lo, hi = self.gamma_range
        if not 0 < lo <= hi:
            raise TlsException(f"Invalid relaxation-rate range {self.gamma_range}")

    @property
    def band_start_ghz(self) -> float:
        return self.centre_ghz - self.band_mhz / 2e3

    def replace(self, **changes) -> "TlsEnsembleConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class TlsDefect:
    element: Element

    interface: InterfaceKind

    #: Position across and along the region, μm
    x_um: float

    y_um: float

    dipole_debye: float

    #: Relaxation rate Γ_1TLS, μs⁻¹
    gamma_per_us: float

    #: Frequency above the band start, MHz
    detuning_mhz: float

    #: Coupling g/2π, MHz
    coupling_mhz: float

    def __post_init__(self):
        if not self.dipole_debye > 0:
            raise TlsException("Dipole moment must be positive")
        if not self.gamma_per_us > 0:
            raise TlsException("Relaxation rate must be positive")
        if self.coupling_mhz < 0:
            raise TlsException("Coupling must not be negative")

    @property
    def coupling_per_us(self) -> float:
        """
        Angular coupling g, μs⁻¹
        """
        return 2 * np.pi * self.coupling_mhz


@dataclass(frozen=True)
class TlsEnsemble:
    defects: Tuple[TlsDefect, ...]

    band_start_ghz: float

    band_mhz: float

    #: Defects dropped for coupling faster than they relax
    rejected: int = 0

    design_label: str = "custom"

    def count(self, element: Element) -> int:
        return sum(1 for d in self.defects if d.element == element)

    def per_ghz(self, element: Element) -> float:
        return self.count(element) / (self.band_mhz / 1e3)

    def __len__(self) -> int:
        return len(self.defects)


@dataclass(frozen=True)
class TlsRegion:
    """
    A region hosting defects, with its participation and mean squared field
    """

    element: Element

    interface: InterfaceKind

    #: Along the region, μm
    length_um: float

    #: Across the region, μm
    width_um: float

    #: Participation in the 3 nm, ε = 10 layer
    participation: float

    #: Band samples giving the field shape across the region
    samples: Tuple

    @property
    def area_um2(self) -> float:
        return self.length_um * self.width_um


def region_dimensions(
    design: QubitDesign, x0_um: float
) -> Dict[Tuple[Element, InterfaceKind], Tuple[float, float]]:
    """
    (length, width) in μm of each TLS region: pad perimeters, the two leads
    and the SQUID wire
    """
    d = design
    h = d.film_thickness * 1e-3
    perimeter = 4 * (d.pad_width + d.pad_height)
    dims = {(Element.pads, kind): (perimeter, x0_um) for kind in InterfaceKind}
    for element, length, width in (
        (Element.leads, 2 * d.lead_length, d.lead_width),
        (Element.squid, 4 * d.squid_loop_side, d.squid_wire_width),
    ):
        dims[(element, InterfaceKind.ma)] = (length, width + 2 * h)
        dims[(element, InterfaceKind.ms)] = (length, width)
        dims[(element, InterfaceKind.sa)] = (length, 4 * x0_um)
    return dims


def tls_regions(
    design: QubitDesign,
    field_map: SurfaceFieldMap,
    factors: ScalingFactors = REFERENCE_FACTORS,
    interfaces: Optional[Mapping[InterfaceKind, InterfaceSpec]] = None,
) -> List[TlsRegion]:
    interfaces = participation_interfaces() if interfaces is None else interfaces
    dims = region_dimensions(design, field_map.x0_um)
    regions = []
    for kind in InterfaceKind:
        iface = interfaces[kind]
        participation = {
            Element.pads: sum(perimeter_participation(field_map, factors, iface).values()),
            **wiring_participation(field_map, factors, iface),
        }
        for element in TLS_ELEMENTS:
            length, width = dims[(element, kind)]
            samples = tuple(
                s
                for s in field_map.samples
                if s.element == element and s.interface == kind and s.region == Region.band
            )
            regions.append(
                TlsRegion(element, kind, length, width, participation[element], samples)
            )
    return regions


def vacuum_energy(frequency_ghz: float) -> float:
    """
    Field energy at the rms vacuum voltage, ħω/4, J
    """
    return HBAR * 2 * np.pi * frequency_ghz * 1e9 / 4


def _mean_squared_field(region: TlsRegion, energy: float, relative_permittivity: float) -> float:
    t = PARTICIPATION_THICKNESS_NM * 1e-9
    area = region.area_um2 * UM**2
    return 2 * region.participation * energy / (t * relative_permittivity * EPSILON_0 * area)


def _draw_rates(
    rng: np.random.Generator, size: int, gamma_range: Tuple[float, float]
) -> np.ndarray:
    lo, hi = np.log(gamma_range[0]), np.log(gamma_range[1])
    return np.exp(rng.uniform(lo, hi, size))


def sample_ensemble(
    design: QubitDesign,
    field_map: SurfaceFieldMap,
    cfg: TlsEnsembleConfig = TlsEnsembleConfig(),
    rng: Optional[np.random.Generator] = None,
    factors: ScalingFactors = REFERENCE_FACTORS,
) -> TlsEnsemble:
    """
    Draw a defect ensemble for ``design``.

    Per region: a Poisson count with mean ρ0·t·A·band, truncated-Gaussian
    dipoles with isotropic orientation, positions weighted by sample area,
    uniform detunings and log-uniform relaxation rates. A defect with
    Γ_1TLS ≤ g is redrawn once and then dropped.

    :raises MissingRegionError: The field map lacks a region's samples
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    energy = vacuum_energy(cfg.centre_ghz)
    band_ghz = cfg.band_mhz / 1e3

    defects: List[TlsDefect] = []
    rejected = 0
    for region in tls_regions(design, field_map, factors):
        volume = cfg.thickness_nm[region.interface] * 1e-3 * region.area_um2
        n = int(rng.poisson(cfg.density * volume * band_ghz))
        if n == 0:
            continue

        mean_e2 = _mean_squared_field(region, energy, cfg.relative_permittivity)
        if region.samples:
            areas = np.array([s.area_um2 for s in region.samples])
            e2 = np.array([s.e2 for s in region.samples])
            shape = e2 / (np.sum(e2 * areas) / np.sum(areas))
            picks = rng.choice(len(region.samples), size=n, p=areas / areas.sum())
            x = np.array([region.samples[i].x_um for i in picks])
            local_e2 = mean_e2 * shape[picks]
        else:
            x = rng.uniform(0.0, region.width_um, n)
            local_e2 = np.full(n, mean_e2)
        y = rng.uniform(0.0, region.length_um, n)

        dipoles = cfg.dipoles.sample(rng, n)
        cos_theta = rng.uniform(-1.0, 1.0, n)
        coupling_mhz = np.sqrt(local_e2) * dipoles * DEBYE * np.abs(cos_theta) / PLANCK / 1e6
        detuning = rng.uniform(0.0, cfg.band_mhz, n)

        gamma = _draw_rates(rng, n, cfg.gamma_range)
        invalid = gamma <= 2 * np.pi * coupling_mhz
        gamma[invalid] = _draw_rates(rng, int(invalid.sum()), cfg.gamma_range)
        keep = gamma > 2 * np.pi * coupling_mhz
        rejected += int(n - keep.sum())

        defects += [
            TlsDefect(
                element=region.element,
                interface=region.interface,
                x_um=float(x[i]),
                y_um=float(y[i]),
                dipole_debye=float(dipoles[i]),
                gamma_per_us=float(gamma[i]),
                detuning_mhz=float(detuning[i]),
                coupling_mhz=float(coupling_mhz[i]),
            )
            for i in np.flatnonzero(keep)
        ]

    if rejected:
        logger.warning("Rejected %d defects coupling faster than they relax", rejected)
    logger.info("Sampled %d defects for %s", len(defects), design.design_label)
    return TlsEnsemble(
        defects=tuple(defects),
        band_start_ghz=cfg.band_start_ghz,
        band_mhz=cfg.band_mhz,
        rejected=rejected,
        design_label=design.design_label,
    )


@dataclass(frozen=True)
class SpectrumGrid:
    start_ghz: float

    stop_ghz: float

    step_mhz: float = 1.0

    @property
    def frequencies(self) -> np.ndarray:
        n = int(round((self.stop_ghz - self.start_ghz) * 1e3 / self.step_mhz)) + 1
        return self.start_ghz + np.arange(n) * self.step_mhz / 1e3


@dataclass(frozen=True, eq=False)
class RelaxationSpectrum:
    frequency_ghz: np.ndarray

    #: Γ1 per point, μs⁻¹
    gamma1_per_us: np.ndarray

    #: Γ_bg, μs⁻¹
    background_per_us: float

    @property
    def omega_per_us(self) -> np.ndarray:
        return 2 * np.pi * self.frequency_ghz * 1e3

    @property
    def q(self) -> np.ndarray:
        return self.omega_per_us / self.gamma1_per_us

    @property
    def median_q(self) -> float:
        return float(np.median(self.q))


def relaxation_spectrum(
    defects: Union[TlsEnsemble, Sequence[TlsDefect]],
    background_per_us: float,
    grid: Union[SpectrumGrid, np.ndarray],
    band_start_ghz: Optional[float] = None,
) -> RelaxationSpectrum:
    """
    Γ1(f) = Γ_bg + Σ 2g²Γ_1TLS/(Γ_1TLS² + Δ²), summed in fixed-size blocks
    in defect order.

    Defect frequencies are the band start plus their detuning; the band
    start defaults to the ensemble's, or the grid start for a bare list.

    :raises InvalidDefectError: A defect has Γ_1TLS ≤ g
    """
    frequencies = grid.frequencies if isinstance(grid, SpectrumGrid) else np.asarray(grid)
    if isinstance(defects, TlsEnsemble):
        start = defects.band_start_ghz if band_start_ghz is None else band_start_ghz
        defects = defects.defects
    else:
        start = float(frequencies[0]) if band_start_ghz is None else band_start_ghz

    g = np.array([d.coupling_per_us for d in defects])
    gamma = np.array([d.gamma_per_us for d in defects])
    f_tls = start + np.array([d.detuning_mhz for d in defects]) / 1e3
    invalid = np.flatnonzero(gamma <= g)
    if invalid.size:
        raise InvalidDefectError(int(invalid[0]), "Γ_1TLS must exceed the coupling g")

    rates = np.full(frequencies.shape, float(background_per_us))
    for lo in range(0, len(defects), CHUNK_SIZE):
        hi = lo + CHUNK_SIZE
        detuning = 2 * np.pi * (f_tls[None, lo:hi] - frequencies[:, None]) * 1e3
        excess = 2 * g[lo:hi] ** 2 * gamma[lo:hi] / (gamma[lo:hi] ** 2 + detuning**2)
        rates += excess.sum(axis=1)

    return RelaxationSpectrum(
        frequency_ghz=frequencies,
        gamma1_per_us=rates,
        background_per_us=float(background_per_us),
    )


def background_rate(
    participation: Union[ParticipationBreakdown, Mapping[InterfaceKind, float]],
    tangents: Mapping[InterfaceKind, float],
    frequency_ghz: float,
    inner_fraction: float = 1.0,
) -> float:
    """
    Γ_bg = ω·Σ p_i·tanδ_i over the pads' interfaces, μs⁻¹.

    ``participation`` is either per-interface inner participations or a
    breakdown whose pads entries are scaled by ``inner_fraction``.

    :raises MissingTangentError: A tangent is missing for an interface
    """
    if isinstance(participation, ParticipationBreakdown):
        participation = {
            kind: participation.p(Element.pads, kind) * inner_fraction for kind in InterfaceKind
        }
    omega = 2 * np.pi * frequency_ghz * 1e3
    total = 0.0
    for kind, p in participation.items():
        if kind not in tangents:
            raise MissingTangentError(f"No loss tangent for {InterfaceKind(kind).value}")
        total += p * tangents[kind]
    return omega * total


def density_to_tangent(
    density: float = TLS_DENSITY,
    dipoles: DipoleDistribution = DipoleDistribution(),
    relative_permittivity: float = PARTICIPATION_PERMITTIVITY,
) -> float:
    """
    tanδ = π·ρ0·⟨d²⟩/(3·ε·ε0), with ρ0 in (μm³·GHz)⁻¹ converted to per
    volume per energy
    """
    if not density > 0 or not relative_permittivity > 0:
        raise TlsException("Density and permittivity must be positive")
    rho = density * 1e18 / 1e9 / PLANCK
    d2 = dipoles.second_moment * DEBYE**2
    return np.pi * rho * d2 / (3 * relative_permittivity * EPSILON_0)


def effective_tangents(cfg: TlsEnsembleConfig = TlsEnsembleConfig()) -> Dict[InterfaceKind, float]:
    """
    Tangents of the 3 nm participation layers that the sampled defects
    amount to, per interface
    """
    base = density_to_tangent(cfg.density, cfg.dipoles, cfg.relative_permittivity)
    return {
        kind: base * cfg.thickness_nm[kind] / PARTICIPATION_THICKNESS_NM for kind in InterfaceKind
    }


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """
    Independent random stream for one trial, whatever order trials run in
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


@dataclass(frozen=True, eq=False)
class DesignSimulation:
    design: QubitDesign

    spectra: Tuple[RelaxationSpectrum, ...]

    #: Defects per element in each trial
    counts: Tuple[Mapping[Element, int], ...]

    #: Width of the band the defects were spread over, MHz
    band_mhz: float

    rejected: int = 0

    #: Kept only when asked for
    ensembles: Tuple[TlsEnsemble, ...] = ()

    @property
    def label(self) -> str:
        return self.design.design_label

    @property
    def pooled_q(self) -> np.ndarray:
        return np.concatenate([s.q for s in self.spectra])

    @property
    def median_q(self) -> float:
        return float(np.median(self.pooled_q))

    @property
    def median_q_error(self) -> float:
        """
        Standard error of :attr:`median_q`: the spread of the per-trial
        medians over √trials, or for one trial the large-sample error of a
        median, √(π/2)·σ/√n
        """
        if len(self.spectra) > 1:
            medians = [s.median_q for s in self.spectra]
            return float(np.std(medians, ddof=1) / np.sqrt(len(medians)))
        q = self.pooled_q
        return float(
            np.sqrt(np.pi / 2) * median_abs_deviation(q, scale="normal") / np.sqrt(q.size)
        )

    def defects_per_ghz(self, element: Element) -> float:
        return float(np.mean([c[element] for c in self.counts])) / (self.band_mhz / 1e3)


def simulate_designs(
    designs: Sequence[Union[str, QubitDesign]] = ("long", "regular", "wide"),
    cfg: TlsEnsembleConfig = TlsEnsembleConfig(),
    trials: int = 20,
    field_maps: Optional[Mapping[str, SurfaceFieldMap]] = None,
    factors: ScalingFactors = REFERENCE_FACTORS,
    tangents: Mapping[InterfaceKind, float] = KNOWN_TANGENTS,
    window: Tuple[float, float] = SIMULATION_WINDOW,
    step_mhz: float = 1.0,
    keep_ensembles: bool = False,
) -> Dict[str, DesignSimulation]:
    """
    Relaxation spectra for each design over ``window``, one per trial.

    Field maps default to the bundled reconstructions. The background rate
    uses the inner pads participation and ``tangents`` at the window centre.
    """
    if trials < 1:
        raise TlsException(f"Need at least one trial, got {trials}")
    start, stop = window
    window_cfg = cfg.replace(band_mhz=(stop - start) * 1e3, centre_ghz=(start + stop) / 2)
    grid = SpectrumGrid(start, stop, step_mhz)

    results = {}
    for entry in designs:
        design = builtin_design(entry) if isinstance(entry, str) else entry
        label = design.design_label
        if field_maps is not None and label in field_maps:
            field_map = field_maps[label]
        else:
            field_map = build_reference_field_map(label, factors)

        inner = {
            kind: inner_participation(field_map, iface, (Element.pads,))[Element.pads]
            for kind, iface in participation_interfaces().items()
        }
        background = background_rate(inner, tangents, window_cfg.centre_ghz)

        spectra, counts, ensembles = [], [], []
        rejected = 0
        for trial in range(trials):
            ensemble = sample_ensemble(
                design, field_map, window_cfg, trial_rng(cfg.seed, trial), factors
            )
            spectra.append(relaxation_spectrum(ensemble, background, grid))
            counts.append({element: ensemble.count(element) for element in TLS_ELEMENTS})
            rejected += ensemble.rejected
            if keep_ensembles:
                ensembles.append(ensemble)

        results[label] = DesignSimulation(
            design=design,
            spectra=tuple(spectra),
            counts=tuple(counts),
            band_mhz=window_cfg.band_mhz,
            rejected=rejected,
            ensembles=tuple(ensembles),
        )
        logger.info(
            "Simulated %s over %d trials: median Q = %.3e", label, trials, results[label].median_q
        )
    return results
