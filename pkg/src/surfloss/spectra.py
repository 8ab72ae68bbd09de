"""
Measured T1 data to Q statistics: exponential fits per frequency, T1 → Q,
masking of badly fitted points and parasitic-mode dips, and the median
statistics that feed extraction.
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.ndimage import median_filter
from scipy.optimize import curve_fit
from scipy.signal import find_peaks
from typing_extensions import Protocol, runtime_checkable

from surfloss.constants import DEFAULT_SEED
from surfloss.exceptions import (
    FitConvergenceError,
    InvalidRecordError,
    SpectrumException,
    T1OutOfRangeError,
    TooFewPointsError,
)
from surfloss.sle import QStatistics
from surfloss.types import MaskFlag, Process
from surfloss.warnings import experimental

logger = logging.getLogger(__name__)

#: Accepted T1 range, μs
T1_RANGE = (0.0, 1e4)

#: Fewest delays a decay fit accepts
MIN_DELAYS = 5

#: Points with a larger relative T1 error are flagged high-error
DEFAULT_ERROR_THRESHOLD = 0.10

#: Fewest kept points statistics are computed from
MIN_KEPT_POINTS = 10

#: Scale from median absolute deviation to a Gaussian σ
MAD_SCALE = 1.4826

DEFAULT_DELAYS_US = np.linspace(10.0, 400.0, 21)


@runtime_checkable
class QProfile(Protocol):
    """
    Anything with a frequency grid and Q per point
    """

    frequency_ghz: np.ndarray

    @property
    def q(self) -> np.ndarray:
        ...


@dataclass(frozen=True, eq=False)
class T1Record:
    frequency_ghz: float

    delays_us: np.ndarray

    #: Excited-state population per delay
    populations: np.ndarray

    shots: int = 4000

    def __post_init__(self):
        delays = np.asarray(self.delays_us, dtype=float)
        populations = np.asarray(self.populations, dtype=float)
        object.__setattr__(self, "delays_us", delays)
        object.__setattr__(self, "populations", populations)
        if delays.shape != populations.shape or delays.ndim != 1:
            raise InvalidRecordError("Delays and populations must be 1-D and the same length")
        if np.any(np.diff(delays) <= 0):
            raise InvalidRecordError(f"Delays at {self.frequency_ghz} GHz must strictly increase")
        if np.any(populations < -0.1) or np.any(populations > 1.1):
            raise InvalidRecordError(
                f"Populations at {self.frequency_ghz} GHz must lie within [-0.1, 1.1]"
            )
        if not self.frequency_ghz > 0 or not self.shots > 0:
            raise InvalidRecordError("Frequency and shots must be positive")


@dataclass(frozen=True)
class T1Fit:
    t1_us: float

    #: σ(T1)/T1 from the fit covariance
    rel_err: float

    amplitude: float

    offset: float


def _decay(t, amplitude, t1, offset):
    return amplitude * np.exp(-t / t1) + offset


def _initial_guess(rec: T1Record) -> Tuple[float, float, float]:
    """
    B from the last three points, A = first − B, and T1 where the data
    cross A/e + B
    """
    t, p = rec.delays_us, rec.populations
    offset = float(np.mean(p[-3:]))
    amplitude = float(p[0] - offset)
    if not amplitude > 0:
        raise FitConvergenceError(f"No decay to fit at {rec.frequency_ghz} GHz")
    target = amplitude / np.e + offset
    t1 = float(np.interp(target, p[::-1], t[::-1]))
    return amplitude, max(t1, t[0] / 10), offset


def fit_t1(rec: T1Record) -> T1Fit:
    """
    Least-squares fit of P(t) = A·exp(−t/T1) + B.

    :raises InvalidRecordError: Fewer than 5 delays
    :raises FitConvergenceError: The data show no decay or the fit fails
    :raises T1OutOfRangeError: T1 lies outside (0, 10⁴) μs
    """
    if rec.delays_us.size < MIN_DELAYS:
        raise InvalidRecordError(f"Need at least {MIN_DELAYS} delays, got {rec.delays_us.size}")
    p0 = _initial_guess(rec)
    try:
        popt, pcov = curve_fit(_decay, rec.delays_us, rec.populations, p0=p0, maxfev=5000)
    except (RuntimeError, ValueError) as e:
        raise FitConvergenceError(f"T1 fit at {rec.frequency_ghz} GHz failed: {e}") from e

    amplitude, t1, offset = (float(v) for v in popt)
    if not T1_RANGE[0] < t1 < T1_RANGE[1]:
        raise T1OutOfRangeError(f"T1 = {t1:.4g} μs at {rec.frequency_ghz} GHz is out of range")
    variance = pcov[1, 1]
    if not np.isfinite(variance):
        raise FitConvergenceError(f"T1 fit at {rec.frequency_ghz} GHz has no error estimate")
    rel_err = float(np.sqrt(variance) / t1)
    return T1Fit(t1_us=t1, rel_err=rel_err, amplitude=amplitude, offset=offset)


def bootstrap_t1(
    rec: T1Record,
    replicas: int = 100,
    seed: int = DEFAULT_SEED,
) -> np.ndarray:
    """
    T1 refitted on ``replicas`` residual-resampled copies of the record
    """
    fit = fit_t1(rec)
    model = _decay(rec.delays_us, fit.amplitude, fit.t1_us, fit.offset)
    residuals = rec.populations - model
    rng = np.random.default_rng(seed)

    values = []
    for _ in range(replicas):
        resampled = model + rng.choice(residuals, size=residuals.size, replace=True)
        try:
            popt, _ = curve_fit(
                _decay,
                rec.delays_us,
                resampled,
                p0=(fit.amplitude, fit.t1_us, fit.offset),
                maxfev=5000,
            )
        except (RuntimeError, ValueError):
            continue
        values.append(popt[1])
    return np.array(values)


def t1_to_q(t1_us: Union[float, np.ndarray], frequency_ghz: Union[float, np.ndarray]):
    """
    Q = ω·T1 with ω = 2πf
    """
    t1 = np.asarray(t1_us, dtype=float)
    f = np.asarray(frequency_ghz, dtype=float)
    if np.any(t1 <= 0) or np.any(f <= 0):
        raise InvalidRecordError("T1 and frequency must be positive")
    q = 2 * np.pi * f * 1e9 * t1 * 1e-6
    return float(q) if q.ndim == 0 else q


@dataclass(frozen=True, eq=False)
class QSpectrum:
    frequency_ghz: np.ndarray

    q: np.ndarray

    #: Relative T1 error per point
    rel_err: np.ndarray

    mask: Tuple[MaskFlag, ...] = ()

    qubit: str = ""

    design: str = ""

    process: Process = Process.simulated

    def __post_init__(self):
        f = np.asarray(self.frequency_ghz, dtype=float)
        q = np.asarray(self.q, dtype=float)
        err = np.asarray(self.rel_err, dtype=float)
        mask = tuple(MaskFlag(m) for m in self.mask) or (MaskFlag.kept,) * f.size
        object.__setattr__(self, "frequency_ghz", f)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "rel_err", err)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "process", Process(self.process))
        if not f.shape == q.shape == err.shape == (len(mask),):
            raise InvalidRecordError("Spectrum columns must have equal lengths")
        if np.any(np.diff(f) <= 0):
            raise InvalidRecordError("Spectrum frequencies must strictly increase")
        if np.any(q <= 0):
            raise InvalidRecordError("Q must be positive")

    @property
    def kept(self) -> np.ndarray:
        return np.array([m == MaskFlag.kept for m in self.mask], dtype=bool)

    def count(self, flag: MaskFlag) -> int:
        return sum(1 for m in self.mask if m == flag)

    def with_mask(self, mask: Sequence[MaskFlag]) -> "QSpectrum":
        return replace(self, mask=tuple(mask))


def as_q_spectrum(profile: QProfile, rel_err: float = 0.0, **labels) -> QSpectrum:
    """
    Wrap a simulated profile as an unmasked spectrum
    """
    if not isinstance(profile, QProfile):
        raise InvalidRecordError(f"{type(profile).__name__} has no frequency grid and Q")
    return QSpectrum(
        frequency_ghz=profile.frequency_ghz,
        q=profile.q,
        rel_err=np.full(np.shape(profile.q), rel_err),
        **labels,
    )


def fit_spectrum(
    records: Sequence[T1Record],
    qubit: str = "",
    design: str = "",
    process: Process = Process.simulated,
) -> QSpectrum:
    """
    Fit every record and assemble the Q spectrum. Frequencies whose fit
    fails are left out.
    """
    rows = []
    for rec in sorted(records, key=lambda r: r.frequency_ghz):
        try:
            fit = fit_t1(rec)
        except SpectrumException as e:
            logger.warning("Skipping %.4f GHz: %s", rec.frequency_ghz, e)
            continue
        rows.append((rec.frequency_ghz, t1_to_q(fit.t1_us, rec.frequency_ghz), fit.rel_err))
    if not rows:
        raise TooFewPointsError("No T1 record could be fitted")
    f, q, err = (np.array(column) for column in zip(*rows))
    logger.info("Fitted %d of %d T1 records", len(rows), len(records))
    return QSpectrum(f, q, err, qubit=qubit, design=design, process=process)


@dataclass(frozen=True)
class DipParameters:
    #: Points in the running-median baseline
    baseline_window: int = 101

    #: Depth threshold in robust noise σ
    threshold_sigma: float = 3.0

    #: Narrowest dip, in grid steps
    min_width_steps: int = 3


@dataclass(frozen=True)
class LorentzianDip:
    centre_ghz: float

    #: Full width at half maximum, MHz
    fwhm_mhz: float

    #: Peak excess of 1/Q
    amplitude: float

    def window(self, frequency_ghz: np.ndarray) -> np.ndarray:
        return np.abs(frequency_ghz - self.centre_ghz) * 1e3 <= self.fwhm_mhz


def _lorentzian(f, base, amplitude, fwhm, centre):
    half = fwhm / 2
    return base + amplitude * half**2 / ((f - centre) ** 2 + half**2)


@experimental("Automated Lorentzian dip detection stands in for identifying parasitic modes by eye")
def find_dips(
    frequency_ghz: np.ndarray,
    q: np.ndarray,
    params: DipParameters = DipParameters(),
) -> List[LorentzianDip]:
    """
    Loss dips in a Q spectrum: peaks of 1/Q above a running-median baseline
    by more than ``threshold_sigma`` robust σ, each confirmed by a
    Lorentzian fit
    """
    f = np.asarray(frequency_ghz, dtype=float)
    loss = 1 / np.asarray(q, dtype=float)
    excess = loss - median_filter(loss, size=params.baseline_window, mode="nearest")
    sigma = MAD_SCALE * np.median(np.abs(excess - np.median(excess)))
    if not sigma > 0:
        return []

    step = float(np.median(np.diff(f)))
    threshold = params.threshold_sigma * sigma
    peaks, properties = find_peaks(excess, height=threshold, width=params.min_width_steps)

    dips = []
    for peak, width in zip(peaks, properties["widths"]):
        half_span = int(max(4 * width, 10))
        lo, hi = max(peak - half_span, 0), min(peak + half_span + 1, f.size)
        p0 = (0.0, excess[peak], width * step, f[peak])
        try:
            popt, _ = curve_fit(_lorentzian, f[lo:hi], excess[lo:hi], p0=p0, maxfev=5000)
        except (RuntimeError, ValueError):
            logger.debug("Dip candidate at %.4f GHz did not fit", f[peak])
            continue
        _, amplitude, fwhm, centre = popt
        fwhm = abs(fwhm)
        if amplitude > threshold and fwhm >= params.min_width_steps * step:
            dips.append(LorentzianDip(float(centre), float(fwhm * 1e3), float(amplitude)))
            logger.debug("Dip at %.4f GHz, FWHM %.2f MHz", centre, fwhm * 1e3)
    return dips


def mask_spectrum(
    spec: QSpectrum,
    err_threshold: float = DEFAULT_ERROR_THRESHOLD,
    dip_params: Optional[DipParameters] = DipParameters(),
) -> QSpectrum:
    """
    Flag points with rel_err above ``err_threshold`` as high-error and the
    window |f − f0| ≤ FWHM around each detected dip as parasitic. Pass
    ``dip_params=None`` to skip dip detection.
    """
    high_error = spec.rel_err > err_threshold
    parasitic = np.zeros(spec.q.size, dtype=bool)
    if dip_params is not None:
        for dip in find_dips(spec.frequency_ghz, spec.q, dip_params):
            parasitic |= dip.window(spec.frequency_ghz)

    mask = [
        MaskFlag.parasitic if p else MaskFlag.high_error if h else MaskFlag.kept
        for p, h in zip(parasitic, high_error)
    ]
    masked = spec.with_mask(mask)
    if masked.kept.sum() < spec.q.size / 2:
        logger.warning(
            "Masked %d of %d points", spec.q.size - int(masked.kept.sum()), spec.q.size
        )
    return masked


def spectrum_stats(spec: QSpectrum, min_points: int = MIN_KEPT_POINTS) -> QStatistics:
    """
    Median, spread and count of Q over the kept points only

    :raises TooFewPointsError: Fewer than ``min_points`` points are kept
    """
    kept = spec.kept
    count = int(kept.sum())
    if count < min_points:
        raise TooFewPointsError(f"Only {count} kept points, at least {min_points} needed")
    q = spec.q[kept]
    f = spec.frequency_ghz[kept]
    return QStatistics(
        qubit=spec.qubit,
        design=spec.design,
        process=spec.process,
        median_q=float(np.median(q)),
        std_q=float(np.std(q)),
        count=count,
        f_min_ghz=float(f.min()),
        f_max_ghz=float(f.max()),
    )


def synthesize_t1_record(
    frequency_ghz: float,
    t1_us: float,
    delays_us: np.ndarray = DEFAULT_DELAYS_US,
    shots: int = 4000,
    amplitude: float = 1.0,
    offset: float = 0.0,
    noise: float = 0.01,
    rng: Optional[np.random.Generator] = None,
) -> T1Record:
    """
    A decay measured with binomial shot noise plus Gaussian readout noise
    """
    rng = np.random.default_rng(DEFAULT_SEED) if rng is None else rng
    truth = np.clip(_decay(np.asarray(delays_us), amplitude, t1_us, offset), 0.0, 1.0)
    populations = rng.binomial(shots, truth) / shots
    if noise > 0:
        populations = populations + rng.normal(0.0, noise, populations.size)
    return T1Record(frequency_ghz, delays_us, np.clip(populations, -0.1, 1.1), shots)


@dataclass(frozen=True)
class InjectedDip:
    centre_ghz: float

    fwhm_mhz: float

    #: Peak excess of 1/Q in units of 1/median_q
    depth: float


def synthesize_q_spectrum(
    start_ghz: float,
    stop_ghz: float,
    median_q: float,
    step_mhz: float = 1.0,
    spread: float = 0.1,
    dips: Sequence[InjectedDip] = (),
    rel_err: float = 0.02,
    seed: int = DEFAULT_SEED,
    **labels,
) -> QSpectrum:
    """
    Log-normal Q scatter about ``median_q`` with optional Lorentzian loss
    dips added to 1/Q
    """
    rng = np.random.default_rng(seed)
    n = int(round((stop_ghz - start_ghz) * 1e3 / step_mhz)) + 1
    f = start_ghz + np.arange(n) * step_mhz / 1e3
    scatter = np.exp(-rng.normal(0.0, spread, n)) if spread > 0 else np.ones(n)
    loss = scatter / median_q
    for dip in dips:
        loss = loss + _lorentzian(f, 0.0, dip.depth / median_q, dip.fwhm_mhz / 1e3, dip.centre_ghz)
    return QSpectrum(f, 1 / loss, np.full(n, rel_err), **labels)
