"""Exact analysis of piecewise affine contractions on boxes.

The package computes, in exact rational arithmetic: refined partitions and
stabilisation times, induced symbolic models and periodic attractors, the
associated iterated function system with its covers and word fixed points,
boundary preimages, perturbation searches, and certified metric estimates.
"""

from .geometry import (
    Box,
    ClosedBox,
    Facet,
    Partition,
    PartitionViolation,
    Rat,
    box_intersect,
    closure_strictly_inside,
    dedupe_facets,
    format_rat,
    parse_rat,
    set_distance,
    sup_dist,
    sup_norm,
    validate_partition,
)
from .dynamics import (
    DiagonalAffineMap,
    OrbitSegment,
    OutsideDomainError,
    PiecewiseContraction,
    ValidationError,
    evaluate,
    orbit,
)
from .refinement import (
    AttractorReport,
    Cell,
    MarkovReport,
    NotMarkovError,
    PeriodicOrbit,
    RefinedPartition,
    SymbolicModel,
    attractor,
    detect_markov,
    max_cells_sharing_point,
    partition_maximality_warnings,
    refine,
    refine_levels,
    stabilisation_check,
    symbolic_model,
)
from .ifs import (
    IFS,
    BoundaryPreimageSet,
    Collision,
    FixedPointTable,
    ThetaValue,
    admissible_words,
    associated_ifs,
    ball_return_fixed_point_check,
    boundary_preimages,
    check_attractor_inclusion,
    ifs_attractor_cover,
    ifs_cover_cells,
    invariant_box,
    primitive_root,
    replace_map,
    separation_check,
    symbolic_distance,
    theta,
    word_fixed_point,
)
from .perturb import (
    GRID_DENOMINATOR,
    TOOL_VERSION,
    BumpMap,
    IteratedFixedPoint,
    MarkovifyResult,
    MonteCarloReport,
    NotContractingError,
    RadiusTooLargeError,
    TrialOutcome,
    bump,
    bump_fixed_point,
    derive_rng,
    genericity_sweep,
    markovify_search,
    sample_delta,
    strong_contraction_exponent,
    translate,
)

__version__ = TOOL_VERSION
from .metrics import (
    D1Estimate,
    RhoEstimate,
    StabilityReport,
    d1_upper,
    d2,
    metric_bound,
    rho_upper,
    stability_margin,
    verify_stability,
)
from .serialize import (
    ConfigError,
    MapOptions,
    load_map,
    map_from_json,
    map_to_json,
)

__all__ = [
    "Box", "ClosedBox", "Facet", "Partition", "PartitionViolation", "Rat",
    "box_intersect", "closure_strictly_inside", "dedupe_facets",
    "format_rat", "parse_rat", "set_distance", "sup_dist",
    "sup_norm", "validate_partition",
    "DiagonalAffineMap", "OrbitSegment", "OutsideDomainError",
    "PiecewiseContraction", "ValidationError", "evaluate", "orbit",
    "AttractorReport", "Cell", "MarkovReport", "NotMarkovError",
    "PeriodicOrbit", "RefinedPartition", "SymbolicModel", "attractor",
    "detect_markov", "max_cells_sharing_point", "partition_maximality_warnings", "refine", "refine_levels",
    "stabilisation_check", "symbolic_model",
    "IFS", "BoundaryPreimageSet", "Collision", "FixedPointTable",
    "ThetaValue", "admissible_words", "associated_ifs",
    "ball_return_fixed_point_check", "boundary_preimages",
    "check_attractor_inclusion", "ifs_attractor_cover", "ifs_cover_cells",
    "invariant_box", "primitive_root", "replace_map", "separation_check",
    "symbolic_distance", "theta", "word_fixed_point",
    "BumpMap", "MarkovifyResult", "MonteCarloReport", "TrialOutcome", "IteratedFixedPoint",
    "GRID_DENOMINATOR", "TOOL_VERSION", "NotContractingError",
    "RadiusTooLargeError", "bump", "bump_fixed_point", "derive_rng", "sample_delta", "genericity_sweep",
    "markovify_search", "strong_contraction_exponent", "translate",
    "D1Estimate", "RhoEstimate", "StabilityReport", "d1_upper", "d2",
    "metric_bound", "rho_upper", "stability_margin", "verify_stability",
    "ConfigError", "MapOptions", "load_map", "map_from_json", "map_to_json",
    "__version__",
]
