"""Numerical laboratory for corner states of quarter-plane lattice models.

Build a Hamiltonian from its Fourier symbol, compress it to half-plane
edges and a quarter-plane corner, certify the edge spectral gaps, and
compute the integer invariants on both sides of the bulk-edge and
corner correspondences.
"""

from .errors import (
    EigensolverError,
    GapClosedError,
    GeometryError,
    ModelError,
    ResidualError,
    TrackingError,
)
from .symbol import (
    BuiltinModel,
    ChiralGrading,
    HamiltonianSymbol,
    builtin_models,
    check_chiral,
    chiral_shift_model,
    direct_sum,
    evaluate_bloch,
    extend_trivially,
    load_model,
    partial_bloch,
    perturb_onsite,
    product_hamiltonian,
    qwz_model,
    save_model,
)
from .geometry import (
    LatticeRegion,
    Slope,
    SlopePair,
    edge_supercell,
    in_half_plane,
    strip_depth,
    strip_region,
    wedge_region,
)
from .assembly import (
    AssembledOperator,
    assemble_bulk,
    assemble_corner,
    assemble_edge_strip,
    assemble_halfline,
)
from .spectra import (
    BranchTrack,
    Crossing,
    SpectralSlice,
    crossings,
    diagonalize,
    diagonalize_window,
    localization_weight,
    sharpen_degeneracies,
    track_branches,
)
from .invariants import (
    FlowDetail,
    InvariantReport,
    bulk_edge_pair,
    chern_number,
    compute_report,
    corner_spectral_flow,
    edge_gap_scan,
    edge_spectral_flow,
    kernel_signature,
    weak_invariants,
    winding_number,
)

__version__ = "0.1.0"

__all__ = [
    "AssembledOperator",
    "BranchTrack",
    "BuiltinModel",
    "ChiralGrading",
    "Crossing",
    "EigensolverError",
    "FlowDetail",
    "GapClosedError",
    "GeometryError",
    "HamiltonianSymbol",
    "InvariantReport",
    "LatticeRegion",
    "ModelError",
    "ResidualError",
    "Slope",
    "SlopePair",
    "SpectralSlice",
    "TrackingError",
    "assemble_bulk",
    "assemble_corner",
    "assemble_edge_strip",
    "assemble_halfline",
    "builtin_models",
    "bulk_edge_pair",
    "check_chiral",
    "chern_number",
    "chiral_shift_model",
    "compute_report",
    "corner_spectral_flow",
    "crossings",
    "diagonalize",
    "diagonalize_window",
    "direct_sum",
    "edge_gap_scan",
    "edge_spectral_flow",
    "edge_supercell",
    "evaluate_bloch",
    "extend_trivially",
    "in_half_plane",
    "kernel_signature",
    "load_model",
    "localization_weight",
    "partial_bloch",
    "perturb_onsite",
    "product_hamiltonian",
    "qwz_model",
    "save_model",
    "sharpen_degeneracies",
    "strip_depth",
    "strip_region",
    "track_branches",
    "wedge_region",
    "weak_invariants",
    "winding_number",
]
