from typing import Dict, Optional, Sequence, Type


class SurflossException(Exception):
    """
    Base exception for surfloss
    """


class UsageError(SurflossException):
    """Invalid command-line usage."""


class DesignException(SurflossException):
    """
    An issue with a qubit design
    """


class DesignParseError(DesignException):
    """The design file could not be read or is not valid JSON."""


class DesignValidationError(DesignException):
    """
    A design value violates an invariant. ``field`` names the offending
    quantity.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class FieldException(SurflossException):
    """
    An issue computing or reading electrostatic fields
    """


class FieldSolverError(FieldException):
    """The linear solve did not reach the residual tolerance."""

    def __init__(self, residual: float, tolerance: float):
        super().__init__(
            f"Field solve did not converge: residual {residual:.3e} "
            f"exceeds tolerance {tolerance:.1e}"
        )
        self.residual = residual


class GridTooLargeError(FieldException):
    """The requested resolution would need too many nodes."""

    def __init__(self, nodes: int, limit: int):
        super().__init__(
            f"Cross-section needs about {nodes} nodes at this resolution "
            f"(limit {limit})"
        )
        self.nodes = nodes


class BandUnresolvedError(FieldException):
    """An integration band spans too few grid cells."""

    def __init__(self, band: str, cells: int, required: int):
        super().__init__(
            f"Band {band} spans {cells} cells, at least {required} are required"
        )
        self.cells = cells


class DegenerateExcitationError(FieldException):
    """Zero excitation gives zero field energy, which nothing can divide by."""


class OutOfDomainError(FieldException):
    """A probe point lies outside the solved domain."""


class InvalidCrossSectionError(FieldException):
    """A cross-section is inconsistent with the requested operation."""


class FieldMapParseError(FieldException):
    """A field-map file does not match the documented layout."""


class ParticipationException(SurflossException):
    """
    An issue computing participation ratios
    """


class MissingRegionError(ParticipationException):
    """The field map has no samples for a required element region."""


class ScalingFactorMismatchError(ParticipationException):
    """Scaling factors do not match the interface or band definition."""


class MissingSegmentError(ParticipationException):
    """The field map lacks wiring band data for leads or SQUID."""


class MissingEntryError(ParticipationException):
    """A participation breakdown is missing one of its entries."""


class TargetUnreachableError(ParticipationException):
    """The charging-energy target cannot be met within geometry bounds."""


class TlsException(SurflossException):
    """
    An issue with the TLS bath simulation
    """


class InvalidDefectError(TlsException):
    """A defect lies outside the weak-coupling validity domain."""

    def __init__(self, index: int, message: str):
        super().__init__(f"Defect {index}: {message}")
        self.index = index


class MissingTangentError(TlsException):
    """A loss tangent needed for the background rate is missing."""


class ExtractionException(SurflossException):
    """
    An issue extracting loss tangents
    """


class SingularMatrixError(ExtractionException):
    """The participation matrix is singular or rank deficient."""

    def __init__(self, condition_number: float):
        super().__init__(
            "Participation matrix is singular "
            f"(condition number {condition_number:.3e})"
        )
        self.condition_number = condition_number


class AllSamplesRejectedError(ExtractionException):
    """Every Monte Carlo draw was rejected."""


class DimensionMismatchError(ExtractionException):
    """Inputs have inconsistent shapes or orderings."""


class LabelMismatchError(ExtractionException):
    """Design labels differ between inputs."""

    def __init__(self, missing: Sequence[str], unexpected: Sequence[str]):
        super().__init__(
            f"Design labels differ: missing {sorted(missing)}, "
            f"unexpected {sorted(unexpected)}"
        )
        self.missing = list(missing)
        self.unexpected = list(unexpected)


class ZeroLossError(ExtractionException):
    """The total loss is zero, so Q is unbounded."""


class SpectrumException(SurflossException):
    """
    An issue processing measured spectra
    """


class FitConvergenceError(SpectrumException):
    """A T1 decay fit did not converge."""


class T1OutOfRangeError(SpectrumException):
    """A fitted T1 lies outside the accepted range."""


class InvalidRecordError(SpectrumException):
    """Measurement data violates its invariants."""


class TooFewPointsError(SpectrumException):
    """Not enough kept points for statistics."""


EXIT_CODE_MAPPING: Dict[Type[BaseException], int] = {
    UsageError: 2,
    FileNotFoundError: 2,
    DesignException: 3,
    FieldException: 4,
    ParticipationException: 5,
    TlsException: 6,
    ExtractionException: 7,
    SpectrumException: 8,
}


def get_exit_code(exc: Optional[BaseException]) -> int:
    """
    Get the process exit code for an exception, falling back to 1 for
    anything unexpected
    """
    if exc is None:
        return 0

    for exception, code in EXIT_CODE_MAPPING.items():
        if isinstance(exc, exception):
            return code
    else:
        return 1
