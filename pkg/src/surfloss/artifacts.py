"""
CSV artifacts read and written by the command line. Every file starts with
``#`` header lines naming the tool version, the command line and the seed.
"""
import csv
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Type, Union

import numpy as np

from surfloss import __version__
from surfloss.exceptions import (
    ExtractionException,
    InvalidRecordError,
    ParticipationException,
    SurflossException,
)
from surfloss.participation.ratios import ParticipationBreakdown
from surfloss.participation.sweep import SweepResult
from surfloss.sle import LossTangentEstimate, PredictionRow, QStatistics
from surfloss.spectra import QSpectrum, T1Record
from surfloss.tlsbath import DesignSimulation, RelaxationSpectrum, TlsEnsemble
from surfloss.types import BREAKDOWN_ELEMENTS, SUMMATION_ORDER, Element, MaskFlag, Process

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.12g"

PARTICIPATION_COLUMNS = ("design", "element", "interface", "p", "provenance")
QSTATS_COLUMNS = (
    "qubit",
    "design",
    "process",
    "median_q",
    "std_q",
    "count",
    "f_min_GHz",
    "f_max_GHz",
)
ESTIMATE_COLUMNS = ("element", "tan_delta", "ci68_halfwidth", "process")
REPORT_COLUMNS = (
    "qubit",
    "design",
    "process",
    "q_predicted",
    "q_pred_ci",
    "q_measured",
    "q_meas_ci",
)
RELAXATION_COLUMNS = ("f_GHz", "gamma1_per_us", "Q")
SPECTRUM_COLUMNS = ("f_GHz", "Q", "rel_err", "mask")
ENSEMBLE_COLUMNS = (
    "interface",
    "x_um",
    "y_um",
    "d_debye",
    "gamma_tls_per_us",
    "delta_MHz",
    "g_MHz",
)
T1_COLUMNS = ("f_GHz", "delay_us", "population", "shots")
SWEEP_COLUMNS = ("param_value", "p_pads_norm", "p_wiring_norm")
MEDIANS_COLUMNS = (
    "design",
    "median_q",
    "trials",
    "pads_per_GHz",
    "leads_per_GHz",
    "squid_per_GHz",
    "rejected",
)

#: Interface column value of an element's total
TOTAL = "total"


@dataclass(frozen=True)
class ArtifactHeader:
    #: The command line, as typed
    command: str

    seed: int

    version: str = __version__

    def lines(self) -> Tuple[str, ...]:
        return (
            f"surfloss {self.version}",
            f"command: {self.command}",
            f"seed: {self.seed}",
        )

    @property
    def description(self) -> str:
        return "; ".join(self.lines())


def _format(value) -> str:
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def write_table(
    path: PathLike,
    columns: Sequence[str],
    rows: Iterable[Sequence],
    header: ArtifactHeader,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in header.lines():
            f.write(f"# {line}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(v) for v in row])
    logger.info("Wrote %s", path)
    return path


def read_table(
    path: PathLike,
    columns: Sequence[str],
    error: Type[SurflossException] = SurflossException,
) -> List[Dict[str, str]]:
    """
    Rows of a CSV artifact keyed by column, skipping ``#`` lines.

    :raises FileNotFoundError: ``path`` does not exist
    :raises error: The column row does not match ``columns``
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Input file not found: {path}")
    lines = [
        line
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != tuple(columns):
        raise error(f"{path}: expected columns {','.join(columns)}")
    return list(reader)


def _parse(path: PathLike, error: Type[SurflossException], func, *args):
    try:
        return func(*args)
    except (KeyError, ValueError, TypeError) as e:
        raise error(f"{path}: {e}") from e


def write_participation(
    path: PathLike,
    breakdowns: Sequence[ParticipationBreakdown],
    header: ArtifactHeader,
) -> Path:
    """
    Nine entries per design, then one ``total`` row per element. Published
    totals are written as printed when the breakdown carries them.
    """
    rows = []
    for b in breakdowns:
        for element in BREAKDOWN_ELEMENTS:
            for kind in SUMMATION_ORDER:
                rows.append((b.design_label, element, kind, b.p(element, kind), b.provenance))
        totals = b.published_totals if b.published_totals is not None else b.totals
        for element in BREAKDOWN_ELEMENTS:
            rows.append((b.design_label, element, TOTAL, float(totals[element]), b.provenance))
    return write_table(path, PARTICIPATION_COLUMNS, rows, header)


def read_participation(path: PathLike) -> Dict[str, Dict[Element, float]]:
    """
    Element totals per design, in file order
    """
    participation: Dict[str, Dict[Element, float]] = {}
    for row in read_table(path, PARTICIPATION_COLUMNS, ParticipationException):
        if row["interface"] != TOTAL:
            continue
        element = _parse(path, ParticipationException, Element, row["element"])
        value = _parse(path, ParticipationException, float, row["p"])
        participation.setdefault(row["design"], {})[element] = value

    for design, totals in participation.items():
        missing = [e.value for e in BREAKDOWN_ELEMENTS if e not in totals]
        if missing:
            raise ParticipationException(f"{path}: {design} has no total for {', '.join(missing)}")
    if not participation:
        raise ParticipationException(f"{path}: no participation totals")
    return participation


def write_q_statistics(
    path: PathLike, stats: Sequence[QStatistics], header: ArtifactHeader
) -> Path:
    rows = [
        (s.qubit, s.design, s.process, s.median_q, s.std_q, s.count, s.f_min_ghz, s.f_max_ghz)
        for s in stats
    ]
    return write_table(path, QSTATS_COLUMNS, rows, header)


def read_q_statistics(path: PathLike) -> List[QStatistics]:
    def _stat(row):
        return QStatistics(
            qubit=row["qubit"],
            design=row["design"],
            process=Process(row["process"]),
            median_q=float(row["median_q"]),
            std_q=float(row["std_q"]),
            count=int(row["count"]),
            f_min_ghz=float(row["f_min_GHz"]),
            f_max_ghz=float(row["f_max_GHz"]),
        )

    return [
        _parse(path, ExtractionException, _stat, row)
        for row in read_table(path, QSTATS_COLUMNS, ExtractionException)
    ]


def write_estimates(
    path: PathLike,
    estimates: Sequence[LossTangentEstimate],
    header: ArtifactHeader,
) -> Path:
    rows = [
        (element, est.central[element], est.ci68[element], est.process)
        for est in estimates
        for element in est.elements
    ]
    return write_table(path, ESTIMATE_COLUMNS, rows, header)


def read_estimates(
    path: PathLike, n_samples: int, seed: int
) -> Dict[Process, LossTangentEstimate]:
    """
    Estimates per process, with normal draws matching each interval
    """
    central: Dict[Process, Dict[Element, float]] = defaultdict(dict)
    ci: Dict[Process, Dict[Element, float]] = defaultdict(dict)
    for row in read_table(path, ESTIMATE_COLUMNS, ExtractionException):
        process = _parse(path, ExtractionException, Process, row["process"])
        element = _parse(path, ExtractionException, Element, row["element"])
        central[process][element] = _parse(path, ExtractionException, float, row["tan_delta"])
        ci[process][element] = _parse(path, ExtractionException, float, row["ci68_halfwidth"])

    rng = np.random.default_rng(seed)
    estimates = {}
    for process, values in central.items():
        elements = tuple(e for e in BREAKDOWN_ELEMENTS if e in values)
        samples = np.column_stack(
            [rng.normal(values[e], ci[process][e], n_samples) for e in elements]
        )
        estimates[process] = LossTangentEstimate(
            central=values,
            ci68=ci[process],
            process=process,
            samples=samples,
            elements=elements,
        )
    return estimates


def write_report(path: PathLike, report: Sequence[PredictionRow], header: ArtifactHeader) -> Path:
    rows = [
        (r.qubit, r.design, r.process, r.q_predicted, r.q_pred_ci, r.q_measured, r.q_meas_ci)
        for r in report
    ]
    return write_table(path, REPORT_COLUMNS, rows, header)


def write_relaxation_spectrum(
    path: PathLike, spectrum: RelaxationSpectrum, header: ArtifactHeader
) -> Path:
    rows = zip(
        spectrum.frequency_ghz.tolist(),
        spectrum.gamma1_per_us.tolist(),
        spectrum.q.tolist(),
    )
    return write_table(path, RELAXATION_COLUMNS, rows, header)


def write_medians(
    path: PathLike,
    simulations: Mapping[str, DesignSimulation],
    header: ArtifactHeader,
) -> Path:
    rows = [
        (
            label,
            sim.median_q,
            len(sim.spectra),
            sim.defects_per_ghz(Element.pads),
            sim.defects_per_ghz(Element.leads),
            sim.defects_per_ghz(Element.squid),
            sim.rejected,
        )
        for label, sim in simulations.items()
    ]
    return write_table(path, MEDIANS_COLUMNS, rows, header)


def write_ensemble(path: PathLike, ensemble: TlsEnsemble, header: ArtifactHeader) -> Path:
    rows = [
        (
            d.interface,
            d.x_um,
            d.y_um,
            d.dipole_debye,
            d.gamma_per_us,
            d.detuning_mhz,
            d.coupling_mhz,
        )
        for d in ensemble.defects
    ]
    return write_table(path, ENSEMBLE_COLUMNS, rows, header)


def write_q_spectrum(path: PathLike, spec: QSpectrum, header: ArtifactHeader) -> Path:
    rows = zip(spec.frequency_ghz.tolist(), spec.q.tolist(), spec.rel_err.tolist(), spec.mask)
    return write_table(path, SPECTRUM_COLUMNS, rows, header)


def read_q_spectrum(path: PathLike, **labels) -> QSpectrum:
    rows = read_table(path, SPECTRUM_COLUMNS, InvalidRecordError)
    if not rows:
        raise InvalidRecordError(f"{path} holds no spectrum points")

    def _columns():
        return (
            [float(r["f_GHz"]) for r in rows],
            [float(r["Q"]) for r in rows],
            [float(r["rel_err"]) for r in rows],
            [MaskFlag(r["mask"]) for r in rows],
        )

    f, q, err, mask = _parse(path, InvalidRecordError, _columns)
    return QSpectrum(f, q, err, mask=tuple(mask), **labels)


def write_t1_records(path: PathLike, records: Sequence[T1Record], header: ArtifactHeader) -> Path:
    rows = [
        (rec.frequency_ghz, float(t), float(p), rec.shots)
        for rec in records
        for t, p in zip(rec.delays_us, rec.populations)
    ]
    return write_table(path, T1_COLUMNS, rows, header)


def read_t1_records(path: PathLike) -> List[T1Record]:
    """
    One record per frequency, delays in file order
    """
    grouped: Dict[float, List[Tuple[float, float, int]]] = defaultdict(list)
    for row in read_table(path, T1_COLUMNS, InvalidRecordError):
        point = _parse(
            path,
            InvalidRecordError,
            lambda r: (float(r["delay_us"]), float(r["population"]), int(r["shots"])),
            row,
        )
        grouped[_parse(path, InvalidRecordError, float, row["f_GHz"])].append(point)
    if not grouped:
        raise InvalidRecordError(f"{path} holds no T1 data")

    records = []
    for frequency, points in grouped.items():
        delays, populations, shots = zip(*points)
        records.append(T1Record(frequency, np.array(delays), np.array(populations), shots[0]))
    return records


def write_sweep(path: PathLike, result: SweepResult, header: ArtifactHeader) -> Path:
    """
    Participations normalized to the first sweep point
    """
    rows = zip(
        result.values.tolist(),
        result.normalized_pads.tolist(),
        result.normalized_wiring.tolist(),
    )
    return write_table(path, SWEEP_COLUMNS, rows, header)
