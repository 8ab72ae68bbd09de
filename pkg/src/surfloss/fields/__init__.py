from .cross_section import (
    BoundaryCondition,
    CrossSection,
    CrossSectionKind,
    Medium,
    Mesh,
    design_cross_sections,
    pad_edge_cross_section,
    parallel_plate_cross_section,
    wiring_cross_section,
)
from .laplace import FieldSolution, field_probe, solve_cross_section
from .surface import (
    CapacitanceEstimate,
    FieldSample,
    SurfaceFieldMap,
    capacitance,
    capacitance_for_charging_energy,
    charging_energy_mhz,
    coarse_surface_fields,
    export_field_map,
    import_field_map,
)

__all__ = [
    "BoundaryCondition",
    "CapacitanceEstimate",
    "CrossSection",
    "CrossSectionKind",
    "FieldSample",
    "FieldSolution",
    "Medium",
    "Mesh",
    "SurfaceFieldMap",
    "capacitance",
    "capacitance_for_charging_energy",
    "charging_energy_mhz",
    "coarse_surface_fields",
    "design_cross_sections",
    "export_field_map",
    "field_probe",
    "import_field_map",
    "pad_edge_cross_section",
    "parallel_plate_cross_section",
    "solve_cross_section",
    "wiring_cross_section",
]
