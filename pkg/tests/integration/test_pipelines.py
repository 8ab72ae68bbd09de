"""
Multi-stage runs chaining the command line's artifacts, the fine
cross-section stage on bundled geometries, and extraction from simulated
spectra.
"""
import numpy as np
import pytest

from surfloss.artifacts import ArtifactHeader, read_estimates, write_q_statistics
from surfloss.fields.cross_section import wiring_cross_section
from surfloss.fields.laplace import solve_cross_section
from surfloss.geometry.design import builtin_design
from surfloss.geometry.reference import reference_dataset
from surfloss.participation.factors import (
    compute_scaling_factors,
    wiring_edge_profile,
    wiring_scaling_factors,
)
from surfloss.participation.ratios import compute_breakdown
from surfloss.participation.reconstruct import build_reference_field_map
from surfloss.sle import (
    extract_tangents,
    predict_q,
    reference_participation,
    reference_q_statistics,
    simulated_q_statistics,
)
from surfloss.tlsbath import TlsEnsembleConfig, simulate_designs
from surfloss.types import BREAKDOWN_ELEMENTS, Element, InterfaceKind, Process, Resolution
from tests.integration.constants import TESTING_SAMPLES, TESTING_SEED


@pytest.mark.parametrize("process", [Process.lift_off, Process.etch])
def test_participation_extract_predict(run_cli, tmp_path, process):
    assert run_cli("participation", "--reference").exit_code == 0
    qstats = tmp_path / "qstats.csv"
    write_q_statistics(
        qstats, reference_q_statistics(process), ArtifactHeader("test", TESTING_SEED)
    )

    extract = run_cli(
        "extract",
        "--participation",
        str(tmp_path / "participation.csv"),
        "--qstats",
        str(qstats),
        "--process",
        process.value,
        "--samples",
        str(TESTING_SAMPLES),
    )
    assert extract.exit_code == 0
    estimates_path = tmp_path / f"estimates_{process.value}.csv"
    estimate = read_estimates(estimates_path, n_samples=10, seed=0)[process]
    dataset = reference_dataset()
    tangents = dataset.loss_tangents(process)
    intervals = dataset.loss_tangent_intervals(process)
    for element in BREAKDOWN_ELEMENTS:
        assert abs(estimate.central[element] - tangents[element]) < intervals[element]

    predict = run_cli(
        "predict",
        "--participation",
        str(tmp_path / "participation.csv"),
        "--estimates",
        str(estimates_path),
        "--qstats",
        str(qstats),
        "--samples",
        "500",
    )
    assert predict.exit_code == 0
    rows = [
        line.split(",")
        for line in (tmp_path / "prediction.csv").read_text(encoding="utf-8").splitlines()
        if not line.startswith("#")
    ][1:]
    assert len(rows) == 3
    for row in rows:
        predicted, measured = float(row[3]), float(row[5])
        assert predicted == pytest.approx(measured, rel=0.01)


def test_extract_mismatched_designs(run_cli, tmp_path):
    run_cli("participation", "--reference", "--builtin", "long", "--builtin", "wide")
    qstats = tmp_path / "qstats.csv"
    write_q_statistics(
        qstats, reference_q_statistics(Process.etch), ArtifactHeader("test", TESTING_SEED)
    )
    result = run_cli(
        "extract",
        "--participation",
        str(tmp_path / "participation.csv"),
        "--qstats",
        str(qstats),
    )
    assert result.exit_code == 7


def test_spectrum_to_statistics(run_cli, tmp_path):
    assert run_cli("spectrum", "fit", "--synthetic").exit_code == 0
    assert run_cli("spectrum", "mask", "--input", str(tmp_path / "spectrum.csv")).exit_code == 0
    stats = run_cli("spectrum", "stats", "--input", str(tmp_path / "spectrum_masked.csv"))
    assert stats.exit_code == 0
    assert "median Q" in stats.stdout


def test_computed_scaling_factors():
    design = builtin_design("regular")
    factors = compute_scaling_factors(design, Resolution.coarse)
    # The field crowds towards the edge, beyond the uniform-field value of 2
    assert factors.edge_factor(InterfaceKind.ms) > 2
    assert factors.wiring_factor(InterfaceKind.ms) > design.lead_width / (2 * 0.5)
    for kind in InterfaceKind:
        assert factors.edge_factor(kind) >= 1
        assert factors.wiring_factor(kind) > 0

    breakdown = compute_breakdown(build_reference_field_map("regular"), factors)
    assert all(value > 0 for value in breakdown.totals.values())


def test_scaling_factors_self_converge():
    design = builtin_design("regular")
    medium = compute_scaling_factors(design, Resolution.medium)
    fine = compute_scaling_factors(design, Resolution.fine)
    for kind in InterfaceKind:
        assert medium.edge_factor(kind) == pytest.approx(fine.edge_factor(kind), rel=0.02)
        assert medium.wiring_factor(kind) == pytest.approx(fine.wiring_factor(kind), rel=0.02)


TEST_LEAD_WIDTHS = [2.5, 5.0, 10.0]
TEST_LEAD_SPACINGS = [10.0, 20.0]

PROFILE_DISTANCES_UM = [0.05, 0.2]


@pytest.fixture(scope="module")
def wiring_solutions():
    return {
        (w, g): solve_cross_section(wiring_cross_section(w, g), Resolution.coarse)
        for w in TEST_LEAD_WIDTHS
        for g in TEST_LEAD_SPACINGS
    }


def test_wiring_edge_profile_shared(wiring_solutions):
    profiles = np.array(
        [wiring_edge_profile(sol, PROFILE_DISTANCES_UM) for sol in wiring_solutions.values()]
    )
    assert np.all(profiles[:, 0] > 1)
    assert np.all(profiles[:, 1] < 1)
    for profile in profiles:
        assert profile == pytest.approx(profiles[0], rel=0.05)


def test_wiring_factor_grows_with_width(wiring_solutions):
    for g in TEST_LEAD_SPACINGS:
        factors = [
            wiring_scaling_factors(wiring_solutions[w, g]).wiring_factor(InterfaceKind.ms)
            for w in TEST_LEAD_WIDTHS
        ]
        assert factors == sorted(factors)


SIMULATION_TRIALS = 20


@pytest.fixture(scope="module")
def simulations():
    return simulate_designs(cfg=TlsEnsembleConfig(seed=TESTING_SEED), trials=SIMULATION_TRIALS)


def test_simulated_statistics(simulations):
    stats = {s.design: s for s in simulated_q_statistics(simulations)}
    assert stats["long"].median_q < stats["regular"].median_q < stats["wide"].median_q
    for label, sim in simulations.items():
        assert stats[label].median_q == sim.median_q
        # The spread of a median over many trials, not of the pooled points
        assert stats[label].std_q < 0.02 * stats[label].median_q
        assert stats[label].std_q < np.std(sim.pooled_q) / 10


def test_simulated_extraction(simulations):
    participation = reference_participation()
    stats = simulated_q_statistics(simulations)
    estimate = extract_tangents(
        participation,
        stats,
        n_samples=TESTING_SAMPLES,
        seed=TESTING_SEED,
        process=Process.simulated,
    )
    assert np.all(np.isfinite(estimate.vector))
    for element in BREAKDOWN_ELEMENTS:
        assert 0 < estimate.ci68[element] < 2e-3
    # Leads are the one element the three designs separate well
    assert 2.0e-4 < estimate.central[Element.leads] < 11.6e-4
    for s in stats:
        assert predict_q(participation[s.design], estimate.central) == pytest.approx(
            s.median_q, rel=0.03
        )
