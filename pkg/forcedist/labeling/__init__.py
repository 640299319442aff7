from .agreement import (
    AgreementReport,
    FtReading,
    agreement_report,
    ground_truth_rmse,
    synthetic_readings,
)
from .binning import (
    ForceDistributionLabel,
    IndentationMeta,
    LabelRanges,
    NodalForceField,
    bin_forces,
    label_ranges,
    total_force,
)
from .mesh import BinGrid, Rect, SurfaceMesh, assign_bins, regular_mesh
from .synthetic import contact_radius, synth_indentation

__all__ = [
    "AgreementReport",
    "BinGrid",
    "ForceDistributionLabel",
    "FtReading",
    "IndentationMeta",
    "LabelRanges",
    "NodalForceField",
    "Rect",
    "SurfaceMesh",
    "agreement_report",
    "assign_bins",
    "bin_forces",
    "contact_radius",
    "ground_truth_rmse",
    "label_ranges",
    "regular_mesh",
    "synth_indentation",
    "synthetic_readings",
    "total_force",
]
