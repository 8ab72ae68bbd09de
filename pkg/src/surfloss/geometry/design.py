import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

from surfloss.constants import DEFAULT_X0_UM, DEFAULT_X0_WIRING_UM, NM
from surfloss.exceptions import DesignParseError, DesignValidationError
from surfloss.types import InterfaceKind

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"
DESIGN_SUFFIX = ".design"
BUILTIN_LABELS = ("long", "regular", "wide")

#: Thickness and permittivity used for participation ratios
PARTICIPATION_THICKNESS_NM = 3.0
PARTICIPATION_PERMITTIVITY = 10.0

#: Effective TLS-hosting thicknesses
TLS_THICKNESS_NM = {
    InterfaceKind.ma: 2.0,
    InterfaceKind.ms: 0.3,
    InterfaceKind.sa: 0.36,
}

#: TLS volume density in amorphous alumina, (μm³·GHz)⁻¹
TLS_DENSITY = 1800.0


@dataclass(frozen=True)
class InterfaceSpec:
    """
    A thin dielectric layer at one of the three surfaces
    """

    #: Which surface the layer sits on
    kind: InterfaceKind

    #: Layer thickness, nm
    thickness_nm: float = PARTICIPATION_THICKNESS_NM

    #: Relative permittivity of the layer
    relative_permittivity: float = PARTICIPATION_PERMITTIVITY

    #: TLS volume density, (μm³·GHz)⁻¹
    tls_volume_density: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", InterfaceKind(self.kind))
        if not self.thickness_nm > 0:
            raise DesignValidationError("thickness", "must be positive")
        if not self.relative_permittivity >= 1:
            raise DesignValidationError("relative_permittivity", "must be at least 1")
        if self.tls_volume_density is not None and self.tls_volume_density < 0:
            raise DesignValidationError("tls_volume_density", "must not be negative")

    @property
    def thickness_m(self) -> float:
        return self.thickness_nm * NM


def participation_interfaces() -> Dict[InterfaceKind, InterfaceSpec]:
    """
    The 3 nm, ε = 10 layers used for participation ratios
    """
    return {kind: InterfaceSpec(kind) for kind in InterfaceKind}


def tls_interfaces() -> Dict[InterfaceKind, InterfaceSpec]:
    """
    Layers with the effective TLS-hosting thicknesses
    """
    return {
        kind: InterfaceSpec(
            kind,
            thickness_nm=thickness,
            tls_volume_density=TLS_DENSITY,
        )
        for kind, thickness in TLS_THICKNESS_NM.items()
    }


@dataclass(frozen=True)
class QubitDesign:
    """
    Parametric layout of a floating transmon: two pads across a gap, joined
    by a pair of parallel leads through a square SQUID loop. Lengths are in
    μm, the film thickness in nm.
    """

    #: Pad width W
    pad_width: float

    #: Pad height, along the gap
    pad_height: float

    #: Gap G between the pads
    gap: float

    #: Lead width w′
    lead_width: float

    #: Length of each lead
    lead_length: float

    #: Distance g′ between the two parallel leads
    lead_spacing: float

    #: Side of the square SQUID loop
    squid_loop_side: float

    #: Width of the SQUID loop wire
    squid_wire_width: float

    #: Aluminium film thickness h, nm
    film_thickness: float = 120.0

    design_label: str = "custom"

    #: Free-text remark, such as "illustrative" for made-up dimensions
    note: str = field(default="", compare=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """
        Check every design invariant, raising ``DesignValidationError`` naming
        the first violated one
        """
        if not isinstance(self.note, str):
            raise DesignValidationError("note", "must be text")
        for f in fields(self):
            if f.name in _TEXT_FIELDS:
                continue
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise DesignValidationError(f.name, "must be a number")
            if not value > 0:
                raise DesignValidationError(_SYMBOLS.get(f.name, f.name), "must be positive")

        if not self.lead_width < self.pad_width:
            raise DesignValidationError("lead_width w′", "must be narrower than the pads")
        if not self.squid_loop_side < self.gap:
            raise DesignValidationError("squid_loop_side", "SQUID must fit within gap G")
        if not 2 * self.squid_wire_width < self.squid_loop_side:
            raise DesignValidationError("squid_wire_width", "wires must leave an open loop")
        if not 2 * self.lead_width + self.lead_spacing <= self.pad_height:
            raise DesignValidationError("lead_spacing g′", "leads must fit along the pads")
        if not 2 * self.lead_length + self.squid_loop_side >= self.gap:
            raise DesignValidationError("lead_length", "leads must bridge gap G")
        if not self.lead_width > 2 * DEFAULT_X0_WIRING_UM:
            raise DesignValidationError(
                "lead_width w′", f"must exceed {2 * DEFAULT_X0_WIRING_UM} μm"
            )
        if not self.squid_wire_width > 2 * DEFAULT_X0_WIRING_UM:
            raise DesignValidationError(
                "squid_wire_width", f"must exceed {2 * DEFAULT_X0_WIRING_UM} μm"
            )
        if not self.pad_width > 2 * DEFAULT_X0_UM:
            raise DesignValidationError("pad_width W", f"must exceed {2 * DEFAULT_X0_UM} μm")

    def replace(self, **changes: Any) -> "QubitDesign":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


_TEXT_FIELDS = ("design_label", "note")

_SYMBOLS = {
    "pad_width": "pad_width W",
    "gap": "gap G",
    "lead_width": "lead_width w′",
    "lead_spacing": "lead_spacing g′",
    "film_thickness": "film_thickness h",
}


def design_from_dict(data: Mapping[str, Any]) -> QubitDesign:
    """
    Build a design from its JSON object, rejecting unknown keys
    """
    if not isinstance(data, Mapping):
        raise DesignParseError("Design must be a JSON object")

    known = {f.name for f in fields(QubitDesign)}
    unknown = set(data) - known
    if unknown:
        raise DesignValidationError(
            ", ".join(sorted(unknown)), "unknown design key(s)"
        )
    try:
        return QubitDesign(**data)
    except TypeError as e:
        raise DesignParseError(f"Incomplete design: {e}") from e


def load_design(path: Union[str, Path]) -> QubitDesign:
    """
    Load and validate a design file
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Design file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise DesignParseError(f"Could not parse {path}: {e}") from e

    design = design_from_dict(data)
    logger.debug("Loaded design %s from %s", design.design_label, path)
    return design


def save_design(design: QubitDesign, path: Union[str, Path]) -> None:
    Path(path).write_text(
        json.dumps(design.to_dict(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def builtin_design(label: str) -> QubitDesign:
    if label not in BUILTIN_LABELS:
        raise DesignValidationError(
            "design_label", f"no builtin design {label!r}, choose from {BUILTIN_LABELS}"
        )
    return load_design(DATA_DIR / f"{label}{DESIGN_SUFFIX}")


def builtin_designs() -> List[QubitDesign]:
    """
    The three bundled designs: long, regular and wide leads. Pads and SQUID
    are identical; lead lengths are illustrative.
    """
    return [builtin_design(label) for label in BUILTIN_LABELS]
