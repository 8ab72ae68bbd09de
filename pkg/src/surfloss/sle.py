"""
Loss-tangent extraction: forward Q prediction from participations and
tangents, least-squares extraction of per-element tangents across designs,
and Monte Carlo propagation of the Q scatter.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import nnls
from scipy.stats import qmc, truncnorm

from surfloss.constants import DEFAULT_SEED
from surfloss.exceptions import (
    AllSamplesRejectedError,
    DimensionMismatchError,
    ExtractionException,
    LabelMismatchError,
    SingularMatrixError,
    ZeroLossError,
)
from surfloss.geometry.reference import reference_dataset
from surfloss.participation.ratios import ParticipationBreakdown
from surfloss.tlsbath import DesignSimulation
from surfloss.types import BREAKDOWN_ELEMENTS, Element, ExtractionMode, Process

logger = logging.getLogger(__name__)

#: Monte Carlo draws per extraction
DEFAULT_SAMPLES = 10_000

#: Participation matrices worse conditioned than this are refused
MAX_CONDITION_NUMBER = 1e12

#: Relative spread given to the reconstructed and published Q statistics
RECONSTRUCTED_SPREAD = 0.01
MEASURED_SPREAD = 0.20

ParticipationRows = Union[
    Sequence[ParticipationBreakdown],
    Mapping[str, Mapping[Element, float]],
]


@dataclass(frozen=True)
class QStatistics:
    qubit: str

    design: str

    process: Process

    median_q: float

    std_q: float

    #: Kept spectrum points the statistics came from
    count: int = 0

    f_min_ghz: float = float("nan")

    f_max_ghz: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "process", Process(self.process))
        if not self.median_q > 0:
            raise ExtractionException(f"{self.qubit}: median Q must be positive")
        if not self.std_q >= 0:
            raise ExtractionException(f"{self.qubit}: Q spread must not be negative")


@dataclass(frozen=True, eq=False)
class LossTangentEstimate:
    #: Mean over Monte Carlo draws
    central: Mapping[Element, float]

    #: Half the 16th–84th percentile range
    ci68: Mapping[Element, float]

    process: Process

    #: Per-draw tangents, shape (draws, elements)
    samples: Optional[np.ndarray] = None

    condition_number: float = float("nan")

    elements: Tuple[Element, ...] = BREAKDOWN_ELEMENTS

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.central[e] for e in self.elements])

    @property
    def poorly_determined(self) -> Tuple[Element, ...]:
        """
        Elements whose tangent is not positive or is smaller than its 68 %
        half-width
        """
        return tuple(
            e for e in self.elements if not self.central[e] > 0 or self.ci68[e] >= self.central[e]
        )

    @classmethod
    def from_table(
        cls,
        process: Process,
        n_samples: int = DEFAULT_SAMPLES,
        seed: int = DEFAULT_SEED,
    ) -> "LossTangentEstimate":
        """
        The published tangents for a process, with normal draws matching
        their intervals
        """
        dataset = reference_dataset()
        central = dataset.loss_tangents(process)
        ci = dataset.loss_tangent_intervals(process)
        rng = np.random.default_rng(seed)
        samples = np.column_stack(
            [rng.normal(central[e], ci[e], n_samples) for e in BREAKDOWN_ELEMENTS]
        )
        return cls(central=central, ci68=ci, process=Process(process), samples=samples)


def _as_vector(values: Union[Mapping[Element, float], Sequence[float]]) -> np.ndarray:
    if isinstance(values, Mapping):
        return np.array([values[e] for e in BREAKDOWN_ELEMENTS], dtype=float)
    return np.asarray(values, dtype=float)


def predict_q(
    p_row: Union[Mapping[Element, float], Sequence[float]],
    tangents: Union[Mapping[Element, float], Sequence[float]],
) -> float:
    """
    Q = 1/Σ p_i·tanδ_i

    :raises ZeroLossError: The total loss is not positive
    """
    p, tan = _as_vector(p_row), _as_vector(tangents)
    if p.shape != tan.shape:
        raise DimensionMismatchError(f"{p.size} participations but {tan.size} tangents")
    loss = float(np.sum(p * tan))
    if not loss > 0:
        raise ZeroLossError(f"Total loss {loss} gives no finite Q")
    return 1 / loss


def participation_matrix(rows: ParticipationRows) -> Tuple[Tuple[str, ...], np.ndarray]:
    """
    Design labels and the designs × elements participation matrix
    """
    if isinstance(rows, Mapping):
        labels = tuple(rows)
        matrix = np.array([_as_vector(rows[label]) for label in labels])
    else:
        labels = tuple(b.design_label for b in rows)
        matrix = np.array([b.row() for b in rows])
    return labels, matrix


def _ordered_stats(labels: Sequence[str], stats: Sequence[QStatistics]) -> List[QStatistics]:
    by_design = {s.design: s for s in stats}
    missing = set(labels) - set(by_design)
    unexpected = set(by_design) - set(labels)
    if missing or unexpected:
        raise LabelMismatchError(missing, unexpected)
    return [by_design[label] for label in labels]


def check_conditioning(matrix: np.ndarray) -> float:
    """
    :raises SingularMatrixError: The matrix is rank deficient or too badly
        conditioned
    """
    condition = float(np.linalg.cond(matrix))
    if np.linalg.matrix_rank(matrix) < min(matrix.shape) or not condition < MAX_CONDITION_NUMBER:
        raise SingularMatrixError(condition)
    return condition


def sample_q(
    stats: Sequence[QStatistics],
    n_samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Latin-hypercube draws of Q, shape (draws, qubits), each from a normal
    truncated to Q > 0
    """
    u = qmc.LatinHypercube(d=len(stats), seed=rng).random(n_samples)
    columns = []
    for j, s in enumerate(stats):
        if s.std_q == 0:
            columns.append(np.full(n_samples, s.median_q))
        else:
            a = -s.median_q / s.std_q
            columns.append(truncnorm.ppf(u[:, j], a, np.inf, loc=s.median_q, scale=s.std_q))
    return np.column_stack(columns)


def extract_tangents(
    participation: ParticipationRows,
    stats: Sequence[QStatistics],
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    mode: ExtractionMode = ExtractionMode.unconstrained,
    weighted: bool = False,
    process: Optional[Process] = None,
) -> LossTangentEstimate:
    """
    Solve [1/Q] = [P][tanδ] by least squares for every Monte Carlo draw of
    the measured Q and summarise the per-element tangents.

    Statistics are matched to participation rows by design label.

    :raises LabelMismatchError: Designs differ between the inputs
    :raises SingularMatrixError: The participation matrix is singular
    :raises AllSamplesRejectedError: No draw gave a finite solution
    """
    if n_samples < 1:
        raise DimensionMismatchError("Need at least one Monte Carlo sample")
    labels, matrix = participation_matrix(participation)
    ordered = _ordered_stats(labels, stats)
    condition = check_conditioning(matrix)
    logger.info("Participation matrix condition number %.3e", condition)

    rng = np.random.default_rng(seed)
    q = sample_q(ordered, n_samples, rng)
    finite = np.all(np.isfinite(q) & (q > 0), axis=1)
    if not finite.any():
        raise AllSamplesRejectedError("Every Q draw was rejected")
    if not finite.all():
        logger.warning("Rejected %d of %d Q draws", int((~finite).sum()), n_samples)
    loss = 1 / q[finite]

    weights = np.ones(len(ordered))
    if weighted:
        spread = np.array([s.std_q / s.median_q**2 for s in ordered])
        if np.all(spread > 0):
            weights = 1 / spread
        else:
            logger.warning("A qubit has zero Q spread, falling back to unweighted extraction")
    lhs = matrix * weights[:, None]
    rhs = loss * weights[None, :]

    mode = ExtractionMode(mode)
    if mode == ExtractionMode.unconstrained:
        tangents = rhs @ np.linalg.pinv(lhs).T
    else:
        tangents = np.array([nnls(lhs, row)[0] for row in rhs])

    central = tangents.mean(axis=0)
    low, high = np.percentile(tangents, [16, 84], axis=0)
    elements = BREAKDOWN_ELEMENTS[: matrix.shape[1]]
    if mode == ExtractionMode.unconstrained and np.any(central < 0):
        logger.warning("Unconstrained extraction gave negative tangents: %s", central)

    return LossTangentEstimate(
        central={e: float(v) for e, v in zip(elements, central)},
        ci68={e: float(v) for e, v in zip(elements, (high - low) / 2)},
        process=Process(process if process is not None else ordered[0].process),
        samples=tangents,
        condition_number=condition,
        elements=elements,
    )


def predict_with_uncertainty(
    p_row: Union[Mapping[Element, float], Sequence[float]],
    estimate: LossTangentEstimate,
) -> Tuple[float, float]:
    """
    Q from the central tangents, and the 68 % half-width of Q over the
    estimate's draws
    """
    central = predict_q(p_row, estimate.vector)
    if estimate.samples is None:
        return central, 0.0
    loss = estimate.samples @ _as_vector(p_row)
    q = 1 / loss[loss > 0]
    if q.size == 0:
        return central, float("nan")
    low, high = np.percentile(q, [16, 84])
    return central, float((high - low) / 2)


@dataclass(frozen=True)
class PredictionRow:
    qubit: str

    design: str

    process: Process

    q_predicted: float

    q_pred_ci: float

    q_measured: float

    q_meas_ci: float

    @property
    def ratio(self) -> float:
        return self.q_predicted / self.q_measured


def prediction_report(
    participation: ParticipationRows,
    estimates: Mapping[Process, LossTangentEstimate],
    measured: Sequence[QStatistics],
) -> List[PredictionRow]:
    """
    Predicted against measured Q for each measured qubit

    :raises DimensionMismatchError: Nothing was measured, or a process has
        no estimate
    :raises LabelMismatchError: A qubit's design has no participation row
    """
    if not measured:
        raise DimensionMismatchError("No measured qubits to compare against")
    labels, matrix = participation_matrix(participation)
    rows = dict(zip(labels, matrix))
    unknown = {s.design for s in measured} - set(rows)
    if unknown:
        raise LabelMismatchError((), unknown)

    report = []
    for s in measured:
        if s.process not in estimates:
            raise DimensionMismatchError(f"No tangent estimate for process {s.process.value}")
        q, ci = predict_with_uncertainty(rows[s.design], estimates[s.process])
        report.append(
            PredictionRow(
                qubit=s.qubit,
                design=s.design,
                process=s.process,
                q_predicted=q,
                q_pred_ci=ci,
                q_measured=s.median_q,
                q_meas_ci=s.std_q,
            )
        )
    return report


def reference_participation() -> Dict[str, Dict[Element, float]]:
    """
    The published element participations per design
    """
    dataset = reference_dataset()
    return {label: dataset.participation(label) for label in dataset.designs}


def reference_q_statistics(process: Process) -> List[QStatistics]:
    """
    Statistics whose medians are the Q implied by the published
    participations and tangents, with a 1 % spread.

    The published medians alone do not pin down the published tangents
    through a three-design solve, so extraction examples use these.
    """
    dataset = reference_dataset()
    tangents = dataset.loss_tangents(process)
    stats = []
    for record in dataset.qubits_for(process):
        q = predict_q(dataset.participation(record.design), tangents)
        stats.append(
            QStatistics(
                qubit=record.qubit,
                design=record.design,
                process=record.process,
                median_q=q,
                std_q=RECONSTRUCTED_SPREAD * q,
                f_min_ghz=record.frequency_ghz,
                f_max_ghz=record.frequency_ghz,
            )
        )
    return stats


def measured_q_statistics() -> List[QStatistics]:
    """
    The six published medians, with an illustrative 20 % spread
    """
    return [
        QStatistics(
            qubit=record.qubit,
            design=record.design,
            process=record.process,
            median_q=record.median_q,
            std_q=MEASURED_SPREAD * record.median_q,
            f_min_ghz=record.frequency_ghz,
            f_max_ghz=record.frequency_ghz,
        )
        for record in reference_dataset().qubits
    ]


def simulated_q_statistics(simulations: Mapping[str, DesignSimulation]) -> List[QStatistics]:
    """
    Median Q of each simulated design, with the standard error of that
    median as its spread
    """
    stats = []
    for label, sim in simulations.items():
        f = np.concatenate([s.frequency_ghz for s in sim.spectra])
        stats.append(
            QStatistics(
                qubit=label,
                design=label,
                process=Process.simulated,
                median_q=sim.median_q,
                std_q=sim.median_q_error,
                count=int(f.size),
                f_min_ghz=float(f.min()),
                f_max_ghz=float(f.max()),
            )
        )
    return stats


def reference_prediction_report(
    n_samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED
) -> List[PredictionRow]:
    """
    Published participations and tangents against the six measured qubits
    """
    estimates = {
        process: LossTangentEstimate.from_table(process, n_samples, seed)
        for process in (Process.lift_off, Process.etch)
    }
    return prediction_report(reference_participation(), estimates, measured_q_statistics())
