import numpy as np
import pytest

from surfloss.exceptions import (
    DimensionMismatchError,
    ExtractionException,
    LabelMismatchError,
    SingularMatrixError,
    ZeroLossError,
)
from surfloss.geometry.reference import reference_dataset
from surfloss.sle import (
    LossTangentEstimate,
    QStatistics,
    extract_tangents,
    measured_q_statistics,
    participation_matrix,
    predict_q,
    predict_with_uncertainty,
    prediction_report,
    reference_participation,
    reference_prediction_report,
    reference_q_statistics,
    sample_q,
)
from surfloss.types import BREAKDOWN_ELEMENTS, Element, ExtractionMode, Process

TEST_QUBITS_AND_PREDICTED_Q = [
    ("Q1", 1.92e6),
    ("Q3", 2.92e6),
    ("Q5", 3.29e6),
    ("Q6", 2.02e6),
    ("Q4", 2.90e6),
    ("Q2", 3.16e6),
]

MADE_UP_PARTICIPATION = {
    "a": {Element.pads: 2e-4, Element.leads: 3e-4, Element.squid: 0.5e-4},
    "b": {Element.pads: 2e-4, Element.leads: 1e-4, Element.squid: 0.7e-4},
    "c": {Element.pads: 2.2e-4, Element.leads: 0.5e-4, Element.squid: 1.5e-4},
}

MADE_UP_TANGENTS = {Element.pads: 1e-3, Element.leads: 8e-4, Element.squid: 4e-4}


def _stats(participation, tangents, spread=0.0, process=Process.lift_off):
    stats = []
    for i, (label, row) in enumerate(participation.items()):
        q = predict_q(row, tangents)
        stats.append(QStatistics(f"Q{i}", label, process, q, spread * q))
    return stats


@pytest.mark.parametrize("qubit, expected", TEST_QUBITS_AND_PREDICTED_Q)
def test_reference_prediction(qubit, expected):
    report = {row.qubit: row for row in reference_prediction_report(n_samples=500)}
    row = report[qubit]
    assert row.q_predicted == pytest.approx(expected, rel=5e-3)
    assert abs(row.ratio - 1) <= 0.15
    assert row.q_pred_ci > 0


def test_predict_q_scale_equivariance():
    row = MADE_UP_PARTICIPATION["a"]
    scaled_row = {e: 7 * p for e, p in row.items()}
    scaled_tangents = {e: t / 7 for e, t in MADE_UP_TANGENTS.items()}
    assert predict_q(scaled_row, scaled_tangents) == pytest.approx(
        predict_q(row, MADE_UP_TANGENTS)
    )


def test_predict_q_errors():
    with pytest.raises(ZeroLossError):
        predict_q([1e-4, 1e-4, 1e-4], [0.0, 0.0, 0.0])
    with pytest.raises(DimensionMismatchError):
        predict_q([1e-4, 1e-4], [1e-3, 1e-3, 1e-3])


def test_participation_matrix_order():
    labels, matrix = participation_matrix(reference_participation())
    assert labels == ("long", "regular", "wide")
    assert matrix[0] == pytest.approx([1.852e-4, 3.312e-4, 0.613e-4])


def test_noiseless_recovery():
    estimate = extract_tangents(
        MADE_UP_PARTICIPATION, _stats(MADE_UP_PARTICIPATION, MADE_UP_TANGENTS), n_samples=10
    )
    for element in BREAKDOWN_ELEMENTS:
        assert estimate.central[element] == pytest.approx(MADE_UP_TANGENTS[element], rel=1e-9)
        assert estimate.ci68[element] == pytest.approx(0.0, abs=1e-15)
    assert estimate.process == Process.lift_off
    assert estimate.samples.shape == (10, 3)


@pytest.mark.parametrize("process", [Process.lift_off, Process.etch])
def test_reference_extraction(process):
    dataset = reference_dataset()
    estimate = extract_tangents(
        reference_participation(), reference_q_statistics(process), n_samples=2000, seed=11
    )
    tangents = dataset.loss_tangents(process)
    intervals = dataset.loss_tangent_intervals(process)
    for element in BREAKDOWN_ELEMENTS:
        assert estimate.central[element] == pytest.approx(tangents[element], rel=0.02)
        assert abs(estimate.central[element] - tangents[element]) < intervals[element]
        assert estimate.ci68[element] > 0
    assert estimate.condition_number > 1


def test_non_negative_extraction():
    estimate = extract_tangents(
        reference_participation(),
        reference_q_statistics(Process.etch),
        n_samples=200,
        mode=ExtractionMode.non_negative,
    )
    assert np.all(estimate.samples >= 0)


def test_weighted_extraction():
    stats = _stats(MADE_UP_PARTICIPATION, MADE_UP_TANGENTS, spread=0.001)
    estimate = extract_tangents(MADE_UP_PARTICIPATION, stats, n_samples=500, weighted=True)
    assert estimate.vector == pytest.approx(
        [MADE_UP_TANGENTS[e] for e in BREAKDOWN_ELEMENTS], rel=0.01
    )


def test_extraction_is_seeded():
    stats = _stats(MADE_UP_PARTICIPATION, MADE_UP_TANGENTS, spread=0.05)
    first = extract_tangents(MADE_UP_PARTICIPATION, stats, n_samples=100, seed=3)
    second = extract_tangents(MADE_UP_PARTICIPATION, stats, n_samples=100, seed=3)
    assert np.array_equal(first.samples, second.samples)


def test_label_mismatch():
    stats = _stats(MADE_UP_PARTICIPATION, MADE_UP_TANGENTS)[:2]
    with pytest.raises(LabelMismatchError) as exc_info:
        extract_tangents(MADE_UP_PARTICIPATION, stats)
    assert exc_info.value.missing == ["c"]


def test_singular_matrix():
    row = MADE_UP_PARTICIPATION["a"]
    participation = {"a": row, "b": dict(row), "c": MADE_UP_PARTICIPATION["c"]}
    with pytest.raises(SingularMatrixError):
        extract_tangents(participation, _stats(participation, MADE_UP_TANGENTS))


def test_no_samples():
    with pytest.raises(DimensionMismatchError):
        extract_tangents(
            MADE_UP_PARTICIPATION, _stats(MADE_UP_PARTICIPATION, MADE_UP_TANGENTS), n_samples=0
        )


def test_sample_q():
    stats = [
        QStatistics("Q1", "a", Process.etch, 1e6, 0.0),
        QStatistics("Q2", "b", Process.etch, 2e6, 1.5e6),
    ]
    q = sample_q(stats, 1000, np.random.default_rng(0))
    assert q.shape == (1000, 2)
    assert np.all(q[:, 0] == 1e6)
    assert np.all(q[:, 1] > 0)


@pytest.mark.parametrize("median, std", [(0.0, 1.0), (-1e6, 1.0), (1e6, -1.0)])
def test_invalid_statistics(median, std):
    with pytest.raises(ExtractionException):
        QStatistics("Q1", "a", Process.etch, median, std)


def test_table_estimate():
    estimate = LossTangentEstimate.from_table(Process.lift_off, n_samples=100, seed=1)
    assert estimate.central[Element.pads] == pytest.approx(10.4e-4)
    assert estimate.ci68[Element.squid] == pytest.approx(2.1e-4)
    assert estimate.samples.shape == (100, 3)


def test_prediction_without_draws():
    estimate = LossTangentEstimate(
        central=MADE_UP_TANGENTS, ci68=MADE_UP_TANGENTS, process=Process.etch
    )
    q, ci = predict_with_uncertainty(MADE_UP_PARTICIPATION["b"], estimate)
    assert q == pytest.approx(predict_q(MADE_UP_PARTICIPATION["b"], MADE_UP_TANGENTS))
    assert ci == 0.0


def test_prediction_report_errors():
    estimates = {Process.lift_off: LossTangentEstimate.from_table(Process.lift_off, 10)}
    with pytest.raises(DimensionMismatchError):
        prediction_report(reference_participation(), estimates, [])
    with pytest.raises(DimensionMismatchError):
        prediction_report(reference_participation(), estimates, measured_q_statistics())
    stray = [QStatistics("Q9", "narrow", Process.lift_off, 1e6, 1e5)]
    with pytest.raises(LabelMismatchError):
        prediction_report(reference_participation(), estimates, stray)


def test_poorly_determined():
    estimate = LossTangentEstimate(
        central={Element.pads: -1e-4, Element.leads: 5e-4, Element.squid: 2e-4},
        ci68={Element.pads: 1e-4, Element.leads: 1e-4, Element.squid: 3e-4},
        process=Process.simulated,
    )
    assert estimate.poorly_determined == (Element.pads, Element.squid)


def test_interval_half_widths_converge():
    stats = _stats(MADE_UP_PARTICIPATION, MADE_UP_TANGENTS, spread=0.1)
    coarse = extract_tangents(MADE_UP_PARTICIPATION, stats, n_samples=10_000, seed=5)
    fine = extract_tangents(MADE_UP_PARTICIPATION, stats, n_samples=40_000, seed=5)
    for element in BREAKDOWN_ELEMENTS:
        assert coarse.ci68[element] == pytest.approx(fine.ci68[element], rel=0.05)


NOISY_REPETITIONS = 50
Q_NOISE = 0.15


def test_interval_coverage_under_noise():
    participation = reference_participation()
    tangents = reference_dataset().loss_tangents(Process.etch)
    covered = []
    for seed in range(NOISY_REPETITIONS):
        rng = np.random.default_rng(seed)
        stats = []
        for label, row in participation.items():
            q = predict_q(row, tangents) * (1 + Q_NOISE * rng.standard_normal())
            stats.append(QStatistics(label, label, Process.etch, q, Q_NOISE * q))
        estimate = extract_tangents(participation, stats, seed=seed)
        covered += [
            abs(estimate.central[e] - tangents[e]) <= estimate.ci68[e] for e in BREAKDOWN_ELEMENTS
        ]
    assert np.mean(covered) >= 0.6
