from enum import Enum
from typing import Mapping, Tuple


class Element(str, Enum):
    """
    A conductor element of the qubit
    """

    pads = "pads"
    ground = "ground"
    leads = "leads"
    squid = "squid"


class InterfaceKind(str, Enum):
    """
    A thin lossy interface layer
    """

    ma = "MA"
    ms = "MS"
    sa = "SA"


class Region(str, Enum):
    #: Further than x0 from any edge
    inner = "inner"
    #: Convergence band, where coarse and fine fields agree
    band = "band"


class Resolution(str, Enum):
    coarse = "coarse"
    medium = "medium"
    fine = "fine"


class Process(str, Enum):
    lift_off = "lift-off"
    etch = "etch"
    simulated = "simulated"


class ExtractionMode(str, Enum):
    unconstrained = "unconstrained"
    non_negative = "non-negative"


class MaskFlag(str, Enum):
    kept = "kept"
    high_error = "high-error"
    parasitic = "parasitic"


class Provenance(str, Enum):
    computed = "computed"
    reference_table = "reference-table"
    imported_field = "imported-field"


#: Elements of a participation breakdown, in reporting order
BREAKDOWN_ELEMENTS: Tuple[Element, ...] = (Element.pads, Element.leads, Element.squid)

#: Order in which interface contributions are summed
SUMMATION_ORDER: Tuple[InterfaceKind, ...] = (
    InterfaceKind.ma,
    InterfaceKind.sa,
    InterfaceKind.ms,
)

#: Per-element values, e.g. loss tangents or participations
ElementValues = Mapping[Element, float]

#: Per-interface values
InterfaceValues = Mapping[InterfaceKind, float]
