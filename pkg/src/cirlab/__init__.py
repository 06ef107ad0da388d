"""Monte Carlo laboratory for strong approximation of CIR and squared Bessel processes."""
from .experiments import (
    CouplingVariant,
    ErrorEstimate,
    ProbabilityEstimate,
    RateFit,
    coupled_drivers,
    coupled_l1_distance,
    first_zero_hit,
    fit_rate,
    hitting_probabilities,
    hitting_probability,
    lower_bound_coupling,
    mean_estimate,
    strong_error,
    tail_constant,
    zero_hit_fraction,
)
from .model import (
    BesselParams,
    CirParams,
    FellerClass,
    chi_moment,
    delta_of,
    feller_class,
    from_bessel,
    hitting_tail_shape,
    l1_distance_exact,
    mean_at,
    mean_at_cir,
    to_bessel,
)
from .paths import (
    BridgePath,
    CellMarker,
    GridPath,
    bm_from_bridge,
    bridge_cov,
    concat_with_cell,
    grid_ceil_offsets,
    perturb_first_cell,
    refine,
    sample_bm,
    sample_bridge,
    scale_path,
)
from .sampling import SeedSpec, derive, exact_bessel_transition, gamma, noncentral_chisq, poisson, std_normal
from .schemes import SchemeError, SchemeKind, SolveResult, reference_solve, solve_path, step

__version__ = "0.1.0"

__all__ = [
    "BesselParams",
    "BridgePath",
    "CellMarker",
    "CirParams",
    "CouplingVariant",
    "ErrorEstimate",
    "FellerClass",
    "GridPath",
    "ProbabilityEstimate",
    "RateFit",
    "SchemeError",
    "SchemeKind",
    "SeedSpec",
    "SolveResult",
    "bm_from_bridge",
    "bridge_cov",
    "chi_moment",
    "concat_with_cell",
    "coupled_drivers",
    "coupled_l1_distance",
    "delta_of",
    "derive",
    "exact_bessel_transition",
    "feller_class",
    "first_zero_hit",
    "fit_rate",
    "from_bessel",
    "gamma",
    "grid_ceil_offsets",
    "hitting_probabilities",
    "hitting_probability",
    "hitting_tail_shape",
    "l1_distance_exact",
    "lower_bound_coupling",
    "mean_at",
    "mean_at_cir",
    "mean_estimate",
    "noncentral_chisq",
    "perturb_first_cell",
    "poisson",
    "reference_solve",
    "refine",
    "sample_bm",
    "sample_bridge",
    "scale_path",
    "solve_path",
    "std_normal",
    "step",
    "strong_error",
    "tail_constant",
    "to_bessel",
    "zero_hit_fraction",
]
