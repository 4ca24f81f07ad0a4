"""Three-qubit unextendible product bases and their bound entangled states."""

from .filtering import (
    GapCertificate,
    GapSearchConfig,
    LocalFilter,
    OrbitPoint,
    SeparableSuperoperator,
    apply_filter,
    apply_separable,
    boundary_limit,
    certify_gap,
    maximize_fidelity,
    minimize_span_overlap,
    span_overlap,
)
from .linalg import (
    DensityMatrix,
    PartitionCut,
    complement_basis,
    eigh,
    fidelity,
    fidelity_projector_form,
    kron,
    partial_trace,
    partial_transpose,
    psd_sqrt,
)
from .product_search import (
    ProductVectorHit,
    SearchConfig,
    Subspace,
    find_product_vectors,
    is_extendible,
    residual,
)
from .upb import (
    UPB,
    CanonicalAngles,
    EquivalenceWitness,
    ProductState,
    build_canonical,
    canonicalize,
    equivalent,
    normal_form_residual,
    orthogonality_graphs,
    shifts,
    state_of,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "GapCertificate",
    "GapSearchConfig",
    "LocalFilter",
    "OrbitPoint",
    "SeparableSuperoperator",
    "apply_filter",
    "apply_separable",
    "boundary_limit",
    "certify_gap",
    "maximize_fidelity",
    "minimize_span_overlap",
    "span_overlap",
    "DensityMatrix",
    "PartitionCut",
    "complement_basis",
    "eigh",
    "fidelity",
    "fidelity_projector_form",
    "kron",
    "partial_trace",
    "partial_transpose",
    "psd_sqrt",
    "ProductVectorHit",
    "SearchConfig",
    "Subspace",
    "find_product_vectors",
    "is_extendible",
    "residual",
    "UPB",
    "CanonicalAngles",
    "EquivalenceWitness",
    "ProductState",
    "build_canonical",
    "canonicalize",
    "equivalent",
    "normal_form_residual",
    "orthogonality_graphs",
    "shifts",
    "state_of",
    "validate",
    "__version__",
]
