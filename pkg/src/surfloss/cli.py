"""
``surfloss`` command line: participation and sweeps, TLS simulation,
loss-tangent extraction, Q prediction, spectrum processing and the full
reference report.
"""
import argparse
import logging
import shlex
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from stringcase import snakecase

from surfloss import __version__, artifacts, plots
from surfloss.artifacts import ArtifactHeader
from surfloss.constants import DEFAULT_SEED
from surfloss.exceptions import SurflossException, UsageError, get_exit_code
from surfloss.fields.surface import coarse_surface_fields, import_field_map
from surfloss.geometry.design import BUILTIN_LABELS, QubitDesign, builtin_design, load_design
from surfloss.geometry.reference import reference_dataset
from surfloss.participation.factors import REFERENCE_FACTORS, compute_scaling_factors
from surfloss.participation.ratios import (
    ParticipationBreakdown,
    compute_breakdown,
    reference_breakdown,
)
from surfloss.participation.sweep import SweepParameter, sweep
from surfloss.sle import (
    DEFAULT_SAMPLES,
    LossTangentEstimate,
    extract_tangents,
    measured_q_statistics,
    prediction_report,
    reference_participation,
    reference_prediction_report,
    reference_q_statistics,
    simulated_q_statistics,
)
from surfloss.spectra import (
    DEFAULT_ERROR_THRESHOLD,
    DipParameters,
    fit_spectrum,
    mask_spectrum,
    spectrum_stats,
    synthesize_t1_record,
)
from surfloss.tlsbath import SIMULATION_WINDOW, TlsEnsembleConfig, simulate_designs
from surfloss.types import (
    BREAKDOWN_ELEMENTS,
    Element,
    ExtractionMode,
    MaskFlag,
    Process,
    Resolution,
)

logger = logging.getLogger(__name__)

#: Printed tangents are in units of this
TANGENT_UNIT = 1e-4


@dataclass(frozen=True)
class RunConfig:
    #: Subcommand name
    command: str

    #: Arguments after the program name
    argv: Tuple[str, ...]

    out: Path

    seed: int

    resolution: Resolution

    verbosity: int = 0

    @property
    def header(self) -> ArtifactHeader:
        return ArtifactHeader(command=shlex.join(("surfloss",) + self.argv), seed=self.seed)

    def path(self, *parts: str) -> Path:
        return self.out.joinpath(*parts)


def _float_range(text: str) -> np.ndarray:
    """
    ``START:STOP:STEP``, inclusive of STOP
    """
    try:
        start, stop, step = (float(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:STOP:STEP, got {text!r}")
    if not step > 0 or stop < start:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def _window(text: str) -> Tuple[float, float]:
    try:
        start, stop = (float(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:STOP in GHz, got {text!r}")
    if not 0 < start < stop:
        raise argparse.ArgumentTypeError(f"invalid window {text!r}")
    return start, stop


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surfloss",
        description="Surface dielectric loss budgeting for transmon qubits",
    )
    parser.add_argument("--version", action="version", version=f"surfloss {__version__}")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Random seed")
    parser.add_argument("--out", type=Path, default=Path("."), help="Output directory")
    parser.add_argument(
        "--resolution",
        type=Resolution,
        choices=list(Resolution),
        default=Resolution.medium,
        help="Cross-section grid preset",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("participation", help="Participation ratios and sweeps")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--builtin", choices=BUILTIN_LABELS, action="append")
    source.add_argument("--design", type=Path, action="append")
    p.add_argument("--field-map", type=Path, help="Imported surface field map")
    p.add_argument("--reference", action="store_true", help="Published tables verbatim")
    p.add_argument("--factors", choices=("reference", "computed"), default="reference")
    p.add_argument(
        "--sweep",
        nargs=2,
        metavar=("PARAMETER", "START:STOP:STEP"),
        help="Sweep gap or lead_width holding the charging energy",
    )

    p = commands.add_parser("tls-sim", help="Monte Carlo TLS spectra")
    p.add_argument("--designs", nargs="+", default=list(BUILTIN_LABELS))
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--density", type=float, help="TLS density, (μm³·GHz)⁻¹")
    p.add_argument("--band", type=_window, default=SIMULATION_WINDOW, help="START:STOP GHz")
    p.add_argument("--dump-ensemble", action="store_true")
    p.add_argument("--extract", action="store_true", help="Extract tangents from the spectra")

    p = commands.add_parser("extract", help="Loss tangents from Q statistics")
    p.add_argument("--participation", type=Path)
    p.add_argument("--qstats", type=Path)
    p.add_argument("--reference", type=Process, choices=[Process.lift_off, Process.etch])
    p.add_argument(
        "--mode",
        type=ExtractionMode,
        choices=list(ExtractionMode),
        default=ExtractionMode.unconstrained,
    )
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--process", type=Process, choices=list(Process))

    p = commands.add_parser("predict", help="Predicted against measured Q")
    p.add_argument("--reference", action="store_true")
    p.add_argument("--participation", type=Path)
    p.add_argument("--estimates", type=Path)
    p.add_argument("--qstats", type=Path)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)

    p = commands.add_parser("spectrum", help="T1 fits, masking and Q statistics")
    actions = p.add_subparsers(dest="action", required=True)
    fit = actions.add_parser("fit")
    fit_source = fit.add_mutually_exclusive_group(required=True)
    fit_source.add_argument("--input", type=Path, help="T1 CSV")
    fit_source.add_argument("--synthetic", action="store_true")
    fit.add_argument("--output", default="spectrum.csv")
    mask = actions.add_parser("mask")
    mask.add_argument("--input", type=Path, required=True)
    mask.add_argument("--output", default="spectrum_masked.csv")
    mask.add_argument("--threshold", type=float, default=DEFAULT_ERROR_THRESHOLD)
    mask.add_argument("--no-dips", action="store_true", help="Skip parasitic dip detection")
    stats = actions.add_parser("stats")
    stats.add_argument("--input", type=Path, required=True)
    stats.add_argument("--output", default="qstats.csv")
    for action in (fit, mask, stats):
        action.add_argument("--qubit", default="")
        action.add_argument("--design", default="")
        action.add_argument(
            "--process", type=Process, choices=list(Process), default=Process.simulated
        )

    p = commands.add_parser("report", help="Reference pipeline end to end")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)

    return parser


def _design(entry: str) -> QubitDesign:
    if entry in BUILTIN_LABELS:
        return builtin_design(entry)
    return load_design(entry)


def _print_breakdowns(breakdowns: Sequence[ParticipationBreakdown]) -> None:
    print(f"{'design':<10}" + "".join(f"{e.value:>12}" for e in BREAKDOWN_ELEMENTS) + "   (×1e-4)")
    for b in breakdowns:
        totals = b.published_totals if b.published_totals is not None else b.totals
        values = "".join(f"{totals[e] / 1e-4:>12.4g}" for e in BREAKDOWN_ELEMENTS)
        print(f"{b.design_label:<10}{values}")


def _print_estimate(estimate: LossTangentEstimate) -> None:
    print(f"Loss tangents, {estimate.process.value} (×1e-4):")
    for element in estimate.elements:
        central = estimate.central[element] / TANGENT_UNIT
        ci = estimate.ci68[element] / TANGENT_UNIT
        print(f"  {element.value:<8}{central:8.2f} ± {ci:.2f}")
    print(f"  condition number {estimate.condition_number:.3g}")
    if estimate.poorly_determined:
        names = ", ".join(e.value for e in estimate.poorly_determined)
        print(f"  warning: {names} poorly determined (not positive, or zero within its interval)")


def _cmd_participation(args: argparse.Namespace, run: RunConfig) -> None:
    if args.sweep is not None:
        _participation_sweep(args, run)
        return

    if args.reference:
        labels = args.builtin or list(BUILTIN_LABELS)
        breakdowns = [reference_breakdown(label) for label in labels]
    else:
        entries = args.design or args.builtin or list(BUILTIN_LABELS)
        designs = [_design(str(entry)) for entry in entries]
        if args.field_map is not None and len(designs) != 1:
            raise UsageError("--field-map applies to exactly one design")
        breakdowns = []
        for design in designs:
            if args.field_map is not None:
                field_map = import_field_map(args.field_map)
            else:
                field_map = coarse_surface_fields(design)
            factors = (
                compute_scaling_factors(design, run.resolution)
                if args.factors == "computed"
                else REFERENCE_FACTORS
            )
            breakdowns.append(
                compute_breakdown(field_map, factors, design_label=design.design_label)
            )

    artifacts.write_participation(run.path("participation.csv"), breakdowns, run.header)
    _print_breakdowns(breakdowns)


def _participation_sweep(args: argparse.Namespace, run: RunConfig) -> None:
    name, text = args.sweep
    try:
        parameter = SweepParameter(name)
    except ValueError:
        raise UsageError(f"Cannot sweep {name!r}, choose gap or lead_width")
    try:
        values = _float_range(text)
    except argparse.ArgumentTypeError as e:
        raise UsageError(str(e)) from e

    template = _design(str(args.design[0])) if args.design else builtin_design(
        (args.builtin or ["regular"])[0]
    )
    factors = None if args.factors == "computed" else REFERENCE_FACTORS
    result = sweep(template, parameter, values, factors=factors, resolution=run.resolution)

    artifacts.write_sweep(run.path(f"sweep_{parameter.value}.csv"), result, run.header)
    plots.plot_sweep(result, run.path(f"sweep_{parameter.value}.svg"), run.header)
    crossover = result.crossover()
    print(
        f"{parameter.value} sweep over {len(result.points)} points; "
        + (f"wiring overtakes pads at {crossover:.1f} μm" if crossover else "no crossover")
    )


def _cmd_tls_sim(args: argparse.Namespace, run: RunConfig) -> None:
    if args.trials < 1:
        raise UsageError(f"--trials must be at least 1, got {args.trials}")
    cfg = TlsEnsembleConfig(seed=run.seed)
    if args.density is not None:
        cfg = cfg.replace(density=args.density)

    designs = [_design(entry) for entry in args.designs]
    simulations = simulate_designs(
        designs,
        cfg,
        trials=args.trials,
        window=args.band,
        keep_ensembles=args.dump_ensemble,
    )

    for label, sim in simulations.items():
        for trial, spectrum in enumerate(sim.spectra):
            artifacts.write_relaxation_spectrum(
                run.path("tls", label, f"trial_{trial:03d}.csv"), spectrum, run.header
            )
        for trial, ensemble in enumerate(sim.ensembles):
            artifacts.write_ensemble(
                run.path("tls", label, f"ensemble_{trial:03d}.csv"), ensemble, run.header
            )
    artifacts.write_medians(run.path("tls_medians.csv"), simulations, run.header)
    plots.plot_q_histogram(simulations, run.path("tls_histogram.svg"), run.header)

    for label, sim in simulations.items():
        print(
            f"{label:<10} median Q {sim.median_q:.3e}  "
            f"leads {sim.defects_per_ghz(Element.leads):.0f}/GHz  "
            f"SQUID {sim.defects_per_ghz(Element.squid):.0f}/GHz"
        )

    if args.extract:
        participation = reference_participation()
        rows = {label: participation[label] for label in simulations}
        estimate = extract_tangents(
            rows,
            simulated_q_statistics(simulations),
            seed=run.seed,
            process=Process.simulated,
        )
        artifacts.write_estimates(run.path("estimates_simulated.csv"), [estimate], run.header)
        _print_estimate(estimate)


def _cmd_extract(args: argparse.Namespace, run: RunConfig) -> None:
    if args.reference is not None:
        participation = reference_participation()
        stats = reference_q_statistics(args.reference)
        process = args.reference
    else:
        if args.participation is None or args.qstats is None:
            raise UsageError("extract needs --reference, or both --participation and --qstats")
        participation = artifacts.read_participation(args.participation)
        stats = artifacts.read_q_statistics(args.qstats)
        if args.process is not None:
            stats = [s for s in stats if s.process == args.process]
        process = args.process

    if args.samples < 1:
        raise UsageError(f"--samples must be at least 1, got {args.samples}")
    estimate = extract_tangents(
        participation,
        stats,
        n_samples=args.samples,
        seed=run.seed,
        mode=args.mode,
        weighted=args.weighted,
        process=process,
    )
    artifacts.write_estimates(
        run.path(f"estimates_{estimate.process.value}.csv"), [estimate], run.header
    )
    _print_estimate(estimate)


def _cmd_predict(args: argparse.Namespace, run: RunConfig) -> None:
    if args.reference:
        report = reference_prediction_report(args.samples, run.seed)
    else:
        if args.participation is None or args.estimates is None:
            raise UsageError("predict needs --reference, or --participation and --estimates")
        measured = (
            artifacts.read_q_statistics(args.qstats)
            if args.qstats is not None
            else measured_q_statistics()
        )
        report = prediction_report(
            artifacts.read_participation(args.participation),
            artifacts.read_estimates(args.estimates, args.samples, run.seed),
            measured,
        )

    artifacts.write_report(run.path("prediction.csv"), report, run.header)
    plots.plot_prediction(report, run.path("prediction.svg"), run.header)
    for row in report:
        print(
            f"{row.qubit:<4}{row.design:<9}{row.process.value:<9}"
            f"predicted {row.q_predicted:.3e}  measured {row.q_measured:.3e}  "
            f"ratio {row.ratio:.2f}"
        )


def _synthetic_records(seed: int):
    """
    A 4.0–4.4 GHz sweep with T1 scattered about 100 μs
    """
    rng = np.random.default_rng(seed)
    frequencies = np.round(np.linspace(4.0, 4.4, 41), 6)
    t1 = 100.0 * np.exp(rng.normal(0.0, 0.15, frequencies.size))
    return [synthesize_t1_record(f, t, rng=rng) for f, t in zip(frequencies, t1)]


def _spectrum_fit(args: argparse.Namespace, run: RunConfig) -> None:
    if args.synthetic:
        records = _synthetic_records(run.seed)
        artifacts.write_t1_records(run.path("t1_synthetic.csv"), records, run.header)
    else:
        records = artifacts.read_t1_records(args.input)
    spec = fit_spectrum(records, qubit=args.qubit, design=args.design, process=args.process)
    artifacts.write_q_spectrum(run.path(args.output), spec, run.header)
    print(f"Fitted {spec.q.size} of {len(records)} frequencies, median Q {np.median(spec.q):.3e}")


def _spectrum_mask(args: argparse.Namespace, run: RunConfig) -> None:
    spec = artifacts.read_q_spectrum(
        args.input, qubit=args.qubit, design=args.design, process=args.process
    )
    masked = mask_spectrum(
        spec, err_threshold=args.threshold, dip_params=None if args.no_dips else DipParameters()
    )
    path = artifacts.write_q_spectrum(run.path(args.output), masked, run.header)
    plots.plot_spectrum(masked, path.with_suffix(".svg"), run.header)
    print(
        f"Kept {int(masked.kept.sum())} of {masked.q.size} points: "
        + ", ".join(f"{flag.value} {masked.count(flag)}" for flag in MaskFlag)
    )


def _spectrum_stats(args: argparse.Namespace, run: RunConfig) -> None:
    spec = artifacts.read_q_spectrum(
        args.input, qubit=args.qubit, design=args.design, process=args.process
    )
    stats = spectrum_stats(spec)
    artifacts.write_q_statistics(run.path(args.output), [stats], run.header)
    print(f"median Q {stats.median_q:.3e} ± {stats.std_q:.2e} over {stats.count} points")


def _cmd_spectrum(args: argparse.Namespace, run: RunConfig) -> None:
    globals()[f"_spectrum_{snakecase(args.action)}"](args, run)


def _cmd_report(args: argparse.Namespace, run: RunConfig) -> None:
    dataset = reference_dataset()
    lines = [f"surfloss {__version__} reference report", ""]

    deviations = dataset.table_consistency()
    worst = max(deviations.values())
    lines.append(f"Interface sums against element totals: worst deviation {worst:.2e}")

    breakdowns = [reference_breakdown(label) for label in dataset.designs]
    artifacts.write_participation(run.path("participation.csv"), breakdowns, run.header)

    estimates: Dict[Process, LossTangentEstimate] = {}
    for process in (Process.lift_off, Process.etch):
        estimates[process] = extract_tangents(
            reference_participation(),
            reference_q_statistics(process),
            n_samples=args.samples,
            seed=run.seed,
            process=process,
        )
        lines.append(f"Extracted tangents, {process.value} (×1e-4):")
        for element in BREAKDOWN_ELEMENTS:
            lines.append(
                f"  {element.value:<8}{estimates[process].central[element] / TANGENT_UNIT:8.2f}"
                f" ± {estimates[process].ci68[element] / TANGENT_UNIT:.2f}"
            )
    artifacts.write_estimates(run.path("estimates.csv"), list(estimates.values()), run.header)

    report = reference_prediction_report(args.samples, run.seed)
    artifacts.write_report(run.path("prediction.csv"), report, run.header)
    plots.plot_prediction(report, run.path("prediction.svg"), run.header)
    lines.append("Predicted against measured median Q:")
    for row in report:
        lines.append(
            f"  {row.qubit} {row.design:<8}{row.process.value:<9}"
            f"{row.q_predicted:.3e} vs {row.q_measured:.3e} ({row.ratio - 1:+.1%})"
        )

    summary = "\n".join(lines) + "\n"
    run.path("summary.txt").write_text(
        "".join(f"# {line}\n" for line in run.header.lines()) + summary, encoding="utf-8"
    )
    print(summary, end="")


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = tuple(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 0

    logging.basicConfig(
        level=max(logging.WARNING - 10 * args.verbose, logging.DEBUG),
        format="%(levelname)s %(name)s: %(message)s",
    )
    run = RunConfig(
        command=args.command,
        argv=argv,
        out=args.out,
        seed=args.seed,
        resolution=args.resolution,
        verbosity=args.verbose,
    )
    handler = globals()[f"_cmd_{snakecase(args.command)}"]
    try:
        run.out.mkdir(parents=True, exist_ok=True)
        handler(args, run)
    except (SurflossException, FileNotFoundError) as e:
        print(f"surfloss: error: {e}", file=sys.stderr)
        return get_exit_code(e)
    except Exception as e:
        logger.exception("Unexpected failure")
        return get_exit_code(e)
    return 0
