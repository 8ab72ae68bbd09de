"""
Published participation, loss-tangent and quality-factor tables for the three
lead designs. Values are stored exactly as printed; participations in units
of 1e-4, loss tangents in units of 1e-4.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Mapping, Tuple

from surfloss.exceptions import DesignValidationError
from surfloss.types import BREAKDOWN_ELEMENTS, Element, InterfaceKind, Process

#: Multiplier for the printed participations and tangents
REFERENCE_SCALE = 1e-4

DesignLabel = str
InterfaceEntry = Tuple[Element, InterfaceKind]


@dataclass(frozen=True)
class QubitRecord:
    #: Qubit number on the chip, e.g. "Q1"
    qubit: str

    design: DesignLabel

    process: Process

    #: Median quality factor over the measured spectrum
    median_q: float

    #: Sweet-spot frequency, GHz
    frequency_ghz: float


@dataclass(frozen=True)
class ReferenceDataset:
    #: Element participations per design, ×1e-4
    participation_table: Mapping[DesignLabel, Mapping[Element, float]]

    #: Element × interface participations per design, ×1e-4
    interface_participation_table: Mapping[DesignLabel, Mapping[InterfaceEntry, float]]

    #: (central value, 68 % CI half-width) per process and element, ×1e-4
    loss_tangent_table: Mapping[Process, Mapping[Element, Tuple[float, float]]]

    #: The six measured qubits
    qubits: Tuple[QubitRecord, ...]

    #: Measured anharmonicity per design, MHz
    anharmonicity_mhz: Mapping[DesignLabel, float]

    @property
    def designs(self) -> Tuple[DesignLabel, ...]:
        return tuple(self.participation_table)

    @property
    def measured_median_q(self) -> Dict[str, float]:
        return {record.qubit: record.median_q for record in self.qubits}

    def _check_design(self, design: DesignLabel) -> None:
        if design not in self.participation_table:
            raise DesignValidationError(
                "design_label", f"no reference data for design {design!r}"
            )

    def participation(self, design: DesignLabel) -> Dict[Element, float]:
        """
        Table element participations, as plain ratios
        """
        self._check_design(design)
        return {
            element: value * REFERENCE_SCALE
            for element, value in self.participation_table[design].items()
        }

    def interface_participation(self, design: DesignLabel) -> Dict[InterfaceEntry, float]:
        self._check_design(design)
        return {
            entry: value * REFERENCE_SCALE
            for entry, value in self.interface_participation_table[design].items()
        }

    def loss_tangents(self, process: Process) -> Dict[Element, float]:
        return {
            element: central * REFERENCE_SCALE
            for element, (central, _) in self.loss_tangent_table[Process(process)].items()
        }

    def loss_tangent_intervals(self, process: Process) -> Dict[Element, float]:
        return {
            element: half_width * REFERENCE_SCALE
            for element, (_, half_width) in self.loss_tangent_table[Process(process)].items()
        }

    def qubits_for(self, process: Process) -> Tuple[QubitRecord, ...]:
        return tuple(q for q in self.qubits if q.process == Process(process))

    def table_consistency(self) -> Dict[Tuple[DesignLabel, Element], float]:
        """
        Relative deviation between each interface triple's sum and the
        matching element total
        """
        deviations = {}
        for design, totals in self.participation_table.items():
            entries = self.interface_participation_table[design]
            for element in BREAKDOWN_ELEMENTS:
                triple = sum(
                    entries[(element, kind)]
                    for kind in (InterfaceKind.ma, InterfaceKind.ms, InterfaceKind.sa)
                )
                deviations[(design, element)] = abs(triple - totals[element]) / totals[element]
        return deviations


def _s1_row(*values: float) -> Dict[InterfaceEntry, float]:
    kinds = (InterfaceKind.ma, InterfaceKind.ms, InterfaceKind.sa)
    return {
        (element, kind): values[3 * i + j]
        for i, element in enumerate(BREAKDOWN_ELEMENTS)
        for j, kind in enumerate(kinds)
    }


@lru_cache(maxsize=None)
def reference_dataset() -> ReferenceDataset:
    """
    The bundled published tables
    """
    pads, leads, squid = BREAKDOWN_ELEMENTS
    return ReferenceDataset(
        participation_table={
            "long": {pads: 1.852, leads: 3.312, squid: 0.613},
            "regular": {pads: 1.938, leads: 1.247, squid: 0.694},
            "wide": {pads: 2.086, leads: 0.652, squid: 0.724},
        },
        interface_participation_table={
            "long": _s1_row(
                0.0362, 0.5435, 1.2723, 0.1905, 1.7733, 1.3484, 0.0353, 0.3282, 0.2496
            ),
            "regular": _s1_row(
                0.0487, 0.7033, 1.1862, 0.0718, 0.6679, 0.5078, 0.0399, 0.3714, 0.2824
            ),
            "wide": _s1_row(
                0.0170, 0.4105, 1.6588, 0.0359, 0.3605, 0.2555, 0.0398, 0.4003, 0.2837
            ),
        },
        loss_tangent_table={
            Process.lift_off: {pads: (10.4, 3.9), leads: (9.2, 4.5), squid: (3.7, 2.1)},
            Process.etch: {pads: (11.3, 3.4), leads: (7.9, 3.8), squid: (4.0, 1.7)},
        },
        qubits=(
            QubitRecord("Q1", "long", Process.lift_off, 1.78e6, 4.825),
            QubitRecord("Q3", "regular", Process.lift_off, 3.17e6, 4.999),
            QubitRecord("Q5", "wide", Process.lift_off, 2.99e6, 4.824),
            QubitRecord("Q6", "long", Process.etch, 1.98e6, 4.739),
            QubitRecord("Q4", "regular", Process.etch, 2.76e6, 5.164),
            QubitRecord("Q2", "wide", Process.etch, 3.30e6, 5.152),
        ),
        anharmonicity_mhz={"long": 179.0, "regular": 215.0, "wide": 182.0},
    )
