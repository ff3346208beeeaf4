"""Diagonalization of matrix paths in the classical Cartan families.

The package works with real symmetric / Hermitian eigendecompositions,
real / complex singular value decompositions and skew-symmetric normal
forms.  Public entry points are re-exported here.
"""
from .config import DEFAULT, Tolerances
from .engine import (
    DiagonalizedPath,
    analytic_flow,
    c1_lift,
    measurable_curve,
    pointwise_derivative,
    resolvent_crosscheck,
    simultaneous_diagonalize,
    sorted_curve,
)
from .errors import (
    CartanflowError,
    ClusterMismatch,
    MatchAmbiguous,
    MembershipError,
    NearSingularPoint,
    NotCommuting,
    NotInChamber,
    NotInImage,
    OutOfDomain,
    ShapeMismatch,
    SolverFailure,
    TooLarge,
    UnknownName,
    UnsupportedFamily,
)
from .families import (
    BlockPair,
    FamilyDescriptor,
    adjoint_action,
    diagonalize_point,
    embed_a,
    herm_evd,
    parse_family,
    project_a,
    real_svd,
    complex_svd,
    real_sym_evd,
    skew_evd,
    validate_p,
)
from .lie_ops import ad_inverse, bracket_kp, bracket_pp, commutant_projection, eigen_structure
from .paths import PathSpec, builtin, eval_path, path_from_json, path_to_json, trigpoly
from .weyl import WeylElement, apply, chamber_sort, face_of, in_chamber, match_jet

__version__ = "0.1.0"

__all__ = [
    "BlockPair",
    "CartanflowError",
    "ClusterMismatch",
    "DEFAULT",
    "DiagonalizedPath",
    "FamilyDescriptor",
    "MatchAmbiguous",
    "MembershipError",
    "NearSingularPoint",
    "NotCommuting",
    "NotInChamber",
    "NotInImage",
    "OutOfDomain",
    "PathSpec",
    "ShapeMismatch",
    "SolverFailure",
    "Tolerances",
    "TooLarge",
    "UnknownName",
    "UnsupportedFamily",
    "WeylElement",
    "ad_inverse",
    "adjoint_action",
    "analytic_flow",
    "apply",
    "bracket_kp",
    "bracket_pp",
    "builtin",
    "c1_lift",
    "chamber_sort",
    "commutant_projection",
    "complex_svd",
    "diagonalize_point",
    "eigen_structure",
    "embed_a",
    "eval_path",
    "face_of",
    "herm_evd",
    "in_chamber",
    "match_jet",
    "measurable_curve",
    "parse_family",
    "path_from_json",
    "path_to_json",
    "pointwise_derivative",
    "project_a",
    "real_svd",
    "real_sym_evd",
    "resolvent_crosscheck",
    "simultaneous_diagonalize",
    "skew_evd",
    "sorted_curve",
    "trigpoly",
    "validate_p",
]
