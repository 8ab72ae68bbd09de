from .design import (
    InterfaceSpec,
    QubitDesign,
    builtin_design,
    builtin_designs,
    load_design,
    participation_interfaces,
    save_design,
    tls_interfaces,
)
from .reference import ReferenceDataset, reference_dataset

__all__ = [
    "InterfaceSpec",
    "QubitDesign",
    "ReferenceDataset",
    "builtin_design",
    "builtin_designs",
    "load_design",
    "participation_interfaces",
    "reference_dataset",
    "save_design",
    "tls_interfaces",
]
