"""
SVG figures for the command line: participation sweeps, simulated Q
histograms, predicted against measured Q, and Q spectra.
"""
import logging
from pathlib import Path
from typing import Mapping, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from surfloss.artifacts import ArtifactHeader  # noqa: E402
from surfloss.participation.sweep import SweepParameter, SweepResult  # noqa: E402
from surfloss.sle import PredictionRow  # noqa: E402
from surfloss.spectra import QSpectrum  # noqa: E402
from surfloss.tlsbath import DesignSimulation  # noqa: E402
from surfloss.types import MaskFlag  # noqa: E402

logger = logging.getLogger(__name__)

# Element ids in SVG output are otherwise random
matplotlib.rcParams["svg.hashsalt"] = "surfloss"

FIGSIZE = (6.0, 4.0)

_AXIS_LABELS = {
    SweepParameter.gap: "Gap G (μm)",
    SweepParameter.lead_width: "Lead width w′ (μm)",
}

_MASK_STYLE = {
    MaskFlag.kept: ("tab:blue", "kept"),
    MaskFlag.high_error: ("tab:gray", "error > threshold"),
    MaskFlag.parasitic: ("tab:red", "parasitic"),
}


def _save(fig, path: Union[str, Path], header: ArtifactHeader) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(
        path,
        format="svg",
        metadata={"Date": None, "Description": header.description},
    )
    plt.close(fig)
    logger.info("Wrote %s", path)
    return path


def plot_sweep(result: SweepResult, path: Union[str, Path], header: ArtifactHeader) -> Path:
    """
    Pads and wiring participation, each normalized to its first point
    """
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(result.values, result.normalized_pads, "o-", label="pads")
    ax.plot(result.values, result.normalized_wiring, "s-", label="leads + SQUID")
    crossover = result.crossover()
    if crossover is not None:
        ax.axvline(crossover, color="k", linestyle=":", linewidth=1)
    ax.set_xlabel(_AXIS_LABELS[result.parameter])
    ax.set_ylabel("Normalized participation")
    ax.legend(frameon=False)
    return _save(fig, path, header)


def plot_q_histogram(
    simulations: Mapping[str, DesignSimulation],
    path: Union[str, Path],
    header: ArtifactHeader,
    bins: int = 60,
) -> Path:
    """
    Pooled simulated Q per design on shared logarithmic bins, medians marked
    """
    pooled = {label: sim.pooled_q for label, sim in simulations.items()}
    everything = np.concatenate(list(pooled.values()))
    edges = np.logspace(np.log10(everything.min()), np.log10(everything.max()), bins + 1)

    fig, ax = plt.subplots(figsize=FIGSIZE)
    for label, q in pooled.items():
        (patch,) = ax.hist(q, bins=edges, histtype="step", label=label)[2]
        ax.axvline(np.median(q), color=patch.get_edgecolor(), linestyle="--", linewidth=1)
    ax.set_xscale("log")
    ax.set_xlabel("Q")
    ax.set_ylabel("Points")
    ax.legend(frameon=False)
    return _save(fig, path, header)


def plot_prediction(
    report: Sequence[PredictionRow], path: Union[str, Path], header: ArtifactHeader
) -> Path:
    """
    Predicted against measured Q with the identity line
    """
    measured = np.array([r.q_measured for r in report])
    predicted = np.array([r.q_predicted for r in report])

    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.errorbar(
        measured,
        predicted,
        xerr=[r.q_meas_ci for r in report],
        yerr=[r.q_pred_ci for r in report],
        fmt="o",
        capsize=3,
    )
    for r in report:
        ax.annotate(
            r.qubit, (r.q_measured, r.q_predicted), textcoords="offset points", xytext=(4, 4)
        )
    lo = 0.8 * min(measured.min(), predicted.min())
    hi = 1.2 * max(measured.max(), predicted.max())
    ax.plot([lo, hi], [lo, hi], "k--", linewidth=1)
    ax.set_xlim(lo, hi)
    ax.set_ylim(lo, hi)
    ax.set_xlabel("Measured median Q")
    ax.set_ylabel("Predicted Q")
    return _save(fig, path, header)


def plot_spectrum(spec: QSpectrum, path: Union[str, Path], header: ArtifactHeader) -> Path:
    fig, ax = plt.subplots(figsize=FIGSIZE)
    flags = np.array([m.value for m in spec.mask])
    for flag, (colour, label) in _MASK_STYLE.items():
        selected = flags == flag.value
        if selected.any():
            ax.plot(
                spec.frequency_ghz[selected],
                spec.q[selected],
                ".",
                color=colour,
                label=label,
            )
    ax.set_yscale("log")
    ax.set_xlabel("Frequency (GHz)")
    ax.set_ylabel("Q")
    ax.legend(frameon=False)
    return _save(fig, path, header)
