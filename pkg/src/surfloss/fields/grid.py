"""
Graded tensor-product grids. Every key coordinate (conductor and layer edges,
integration band limits) is a node; cells grow geometrically away from each
key up to a coarse cap.
"""
from dataclasses import dataclass
from typing import Iterable, List

import numpy as np

from surfloss.types import Resolution

#: Upper bound on nodes in a single cross-section
MAX_NODES = 2_000_000

#: The coarse cap is the domain extent divided by this
COARSE_DIVISOR = 20


@dataclass(frozen=True)
class GridSpec:
    #: Cells across the thinnest layer
    cells_per_layer: int

    #: Ratio between neighbouring cell sizes
    growth: float


RESOLUTION_PRESETS = {
    Resolution.coarse: GridSpec(cells_per_layer=4, growth=1.5),
    Resolution.medium: GridSpec(cells_per_layer=6, growth=1.3),
    Resolution.fine: GridSpec(cells_per_layer=10, growth=1.2),
}


def grid_spec(resolution: Resolution) -> GridSpec:
    return RESOLUTION_PRESETS[Resolution(resolution)]


def _interval_steps(length: float, fine: float, growth: float, coarse: float) -> np.ndarray:
    steps: List[float] = []
    total = 0.0
    step = fine
    while total < length / 2:
        steps.append(step)
        total += step
        step = min(step * growth, coarse)

    full = np.array(steps + steps[::-1])
    return full * (length / full.sum())


def unique_keys(keys: Iterable[float], tolerance: float) -> np.ndarray:
    """
    Sort keys and merge any closer than ``tolerance``
    """
    ordered = np.sort(np.asarray(list(keys), dtype=float))
    merged = [ordered[0]]
    for key in ordered[1:]:
        if key - merged[-1] > tolerance:
            merged.append(key)
    return np.array(merged)


def graded_axis(
    keys: Iterable[float],
    fine: float,
    growth: float,
    coarse: float,
) -> np.ndarray:
    """
    Node coordinates through every key, refined to ``fine`` at each key
    """
    points = unique_keys(keys, fine / 10)
    nodes = [points[:1]]
    for start, stop in zip(points[:-1], points[1:]):
        steps = _interval_steps(stop - start, fine, growth, coarse)
        interior = start + np.cumsum(steps)[:-1]
        nodes.append(interior)
        nodes.append(np.array([stop]))
    return np.concatenate(nodes)


def mirrored_axis(
    keys: Iterable[float],
    fine: float,
    growth: float,
    coarse: float,
) -> np.ndarray:
    """
    An axis exactly symmetric about zero, built from the non-negative keys
    """
    half_keys = [abs(k) for k in keys] + [0.0]
    half = graded_axis(half_keys, fine, growth, coarse)
    return np.concatenate((-half[:0:-1], half))


def cells_within(axis: np.ndarray, start: float, stop: float) -> int:
    centres = 0.5 * (axis[1:] + axis[:-1])
    return int(np.count_nonzero((centres > start) & (centres < stop)))
