from pathlib import Path

import pytest

from surfloss import __version__
from surfloss.artifacts import read_q_spectrum
from surfloss.fields.surface import export_field_map
from surfloss.participation.reconstruct import build_reference_field_map
from tests.integration.constants import TESTING_SAMPLES, TESTING_TRIALS


def _data_lines(path: Path):
    return [
        line for line in path.read_text(encoding="utf-8").splitlines() if not line.startswith("#")
    ]


def test_version(run_cli):
    result = run_cli(options=["--version"])
    assert result.exit_code == 0
    assert __version__ in result.stdout


TEST_BAD_INVOCATIONS_AND_EXIT_CODES = [
    ((), 2),
    (("participation", "--builtin", "narrow"), 2),
    (("participation", "--field-map", "missing.csv", "--builtin", "regular"), 2),
    (("participation", "--sweep", "height", "1:2:1"), 2),
    (("participation", "--sweep", "gap", "5:1:1"), 2),
    (("tls-sim", "--trials", "0"), 2),
    (("tls-sim", "--designs", "missing.design"), 2),
    (("extract",), 2),
    (("extract", "--reference", "lift-off", "--samples", "0"), 2),
    (("predict",), 2),
    (("spectrum", "stats", "--input", "missing.csv"), 2),
]


@pytest.mark.parametrize("args, exit_code", TEST_BAD_INVOCATIONS_AND_EXIT_CODES)
def test_bad_invocations(run_cli, args, exit_code):
    result = run_cli(*args)
    assert result.exit_code == exit_code


def test_invalid_design_file(run_cli, tmp_path):
    design = tmp_path / "broken.design"
    design.write_text("{not json", encoding="utf-8")
    result = run_cli("participation", "--design", str(design))
    assert result.exit_code == 3
    assert "surfloss: error:" in result.stderr


def test_participation_reference(run_cli):
    result = run_cli("participation", "--reference")
    assert result.exit_code == 0
    lines = _data_lines(result.out / "participation.csv")
    assert lines[0] == "design,element,interface,p,provenance"
    assert "long,leads,total,0.0003312,reference-table" in lines
    assert "wide" in result.stdout


def test_participation_coarse_stage(run_cli):
    result = run_cli("participation", "--builtin", "regular", "--builtin", "wide")
    assert result.exit_code == 0
    lines = _data_lines(result.out / "participation.csv")
    assert len(lines) == 1 + 2 * 12
    assert all(line.endswith(",computed") for line in lines[1:])


def test_participation_imported_field_map(run_cli, tmp_path):
    path = tmp_path / "long_fields.csv"
    export_field_map(build_reference_field_map("long"), path)
    result = run_cli("participation", "--builtin", "long", "--field-map", str(path))
    assert result.exit_code == 0
    lines = _data_lines(result.out / "participation.csv")
    assert any(line.startswith("long,leads,total,0.0003312") for line in lines)


def test_participation_sweep(run_cli):
    result = run_cli("participation", "--sweep", "lead_width", "2.5:7.5:2.5")
    assert result.exit_code == 0
    lines = _data_lines(result.out / "sweep_lead_width.csv")
    assert lines[0] == "param_value,p_pads_norm,p_wiring_norm"
    assert lines[1] == "2.5,1,1"
    assert len(lines) == 4
    assert (result.out / "sweep_lead_width.svg").exists()


def test_tls_sim(run_cli):
    result = run_cli(
        "tls-sim",
        "--designs",
        "regular",
        "--trials",
        str(TESTING_TRIALS),
        "--band",
        "4.4:4.5",
        "--dump-ensemble",
    )
    assert result.exit_code == 0
    trial = _data_lines(result.out / "tls" / "regular" / "trial_000.csv")
    assert trial[0] == "f_GHz,gamma1_per_us,Q"
    assert len(trial) == 1 + 101
    assert (result.out / "tls" / "regular" / f"ensemble_{TESTING_TRIALS - 1:03d}.csv").exists()
    medians = _data_lines(result.out / "tls_medians.csv")
    assert medians[1].startswith("regular,")
    assert (result.out / "tls_histogram.svg").exists()


def test_tls_sim_extract(run_cli):
    result = run_cli("tls-sim", "--trials", str(TESTING_TRIALS), "--band", "4.4:4.5", "--extract")
    assert result.exit_code == 0
    assert "Loss tangents, simulated" in result.stdout
    estimates = _data_lines(result.out / "estimates_simulated.csv")
    assert len(estimates) == 1 + 3


def test_tls_sim_is_deterministic(run_cli, tmp_path):
    args = ("tls-sim", "--designs", "wide", "--trials", "1", "--band", "4.4:4.45")
    first = run_cli(*args, out=tmp_path / "first")
    second = run_cli(*args, out=tmp_path / "second")
    assert first.exit_code == second.exit_code == 0
    relative = Path("tls") / "wide" / "trial_000.csv"
    assert _data_lines(first.out / relative) == _data_lines(second.out / relative)


def test_tls_sim_seed_changes_spectra(run_cli, tmp_path):
    args = ("tls-sim", "--designs", "wide", "--trials", "1", "--band", "4.4:4.45")
    first = run_cli(*args, out=tmp_path / "first")
    other = run_cli(*args, out=tmp_path / "other", options=["--seed", "8"])
    relative = Path("tls") / "wide" / "trial_000.csv"
    assert _data_lines(first.out / relative) != _data_lines(other.out / relative)


def test_extract_reference(run_cli):
    result = run_cli("extract", "--reference", "etch", "--samples", str(TESTING_SAMPLES))
    assert result.exit_code == 0
    lines = _data_lines(result.out / "estimates_etch.csv")
    assert lines[0] == "element,tan_delta,ci68_halfwidth,process"
    assert [line.split(",")[0] for line in lines[1:]] == ["pads", "leads", "squid"]
    assert "condition number" in result.stdout


def test_predict_reference(run_cli):
    result = run_cli("predict", "--reference", "--samples", "500")
    assert result.exit_code == 0
    lines = _data_lines(result.out / "prediction.csv")
    assert len(lines) == 7
    assert (result.out / "prediction.svg").exists()
    assert "Q1" in result.stdout


def test_spectrum_commands(run_cli):
    fit = run_cli("spectrum", "fit", "--synthetic", "--qubit", "Q9", "--design", "regular")
    assert fit.exit_code == 0
    assert (fit.out / "t1_synthetic.csv").exists()
    assert len(_data_lines(fit.out / "spectrum.csv")) == 1 + 41

    spectrum = str(fit.out / "spectrum.csv")
    mask = run_cli("spectrum", "mask", "--input", spectrum, "--no-dips")
    assert mask.exit_code == 0
    assert (mask.out / "spectrum_masked.svg").exists()

    stats = run_cli(
        "spectrum",
        "stats",
        "--input",
        str(mask.out / "spectrum_masked.csv"),
        "--qubit",
        "Q9",
        "--design",
        "regular",
        "--process",
        "lift-off",
    )
    assert stats.exit_code == 0
    lines = _data_lines(stats.out / "qstats.csv")
    assert lines[1].startswith("Q9,regular,lift-off,")


def test_spectrum_fit_from_file(run_cli, tmp_path):
    run_cli("spectrum", "fit", "--synthetic")
    refit = run_cli(
        "spectrum",
        "fit",
        "--input",
        str(tmp_path / "t1_synthetic.csv"),
        "--output",
        "refit.csv",
    )
    assert refit.exit_code == 0
    original = read_q_spectrum(tmp_path / "spectrum.csv")
    again = read_q_spectrum(tmp_path / "refit.csv")
    assert again.frequency_ghz == pytest.approx(original.frequency_ghz)
    assert again.q == pytest.approx(original.q, rel=1e-6)


def test_report(run_cli):
    result = run_cli("report", "--samples", str(TESTING_SAMPLES))
    assert result.exit_code == 0
    summary = (result.out / "summary.txt").read_text(encoding="utf-8")
    assert summary.startswith(f"# surfloss {__version__}\n")
    assert "Predicted against measured median Q" in summary
    for name in ("participation.csv", "estimates.csv", "prediction.csv", "prediction.svg"):
        assert (result.out / name).exists()
    assert len(_data_lines(result.out / "estimates.csv")) == 1 + 6
