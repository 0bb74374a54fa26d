"""kronlab: integer solutions of torus approximation systems.

The library freezes real frequencies into fixed-point integers, scans for
integers q whose multiples land within eps of a target on the torus,
builds geometric denominator ladders with per-level error certificates,
constructs greedy almost periods from those ladders, and estimates
fractal dimensions (box-counting and inclusion-length slopes) to compare
against a theoretical bracket. The CLI in kronlab.cli drives the same
code and records every run in a replayable manifest.
"""
from .errors import (
    BoundUndefinedError,
    BudgetExceededError,
    DescriptorError,
    InsufficientDataError,
    KronlabError,
    PrecisionBudgetError,
    RationalFrequencyError,
    WindowTooNarrowError,
)
from .torus import (
    DEFAULT_BITS,
    FrequencyTuple,
    PrecisionReal,
    TorusPoint,
    evaluate_descriptor,
    frac_mult,
    torus_dist,
    torus_norm,
)
from .approx import (
    ContinuedFraction,
    ConvergentSequence,
    DiophantineOrderFit,
    SequenceDiagnostics,
    continued_fraction,
    convergent_sequence,
    dirichlet_search,
    estimate_diophantine_order,
    repair_monotone,
    verify_sequence_properties,
)
from .kron import (
    GOLDEN_CONJUGATE_STEP,
    AlmostPeriod,
    ExtendedSystem,
    FrequencyMatrix,
    GapScan,
    KroneckerInstance,
    LadderRow,
    QualityEntry,
    QualityRecord,
    WindowPolicy,
    almost_period_quality,
    build_extended,
    gap_scan,
    greedy_almost_period,
    inclusion_length_ladder,
    matrix_solution_scan,
    max_pair_residual,
    orbit_sample,
    solve_in_interval,
)
from .dim import (
    BoundBracket,
    BoxCountCurve,
    DimensionEstimate,
    box_count,
    box_dimension_fit,
    diophantine_dimension_fit,
    holder_bound,
    theoretical_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "AlmostPeriod",
    "BoundBracket",
    "BoundUndefinedError",
    "BoxCountCurve",
    "BudgetExceededError",
    "ContinuedFraction",
    "ConvergentSequence",
    "DEFAULT_BITS",
    "DescriptorError",
    "DimensionEstimate",
    "DiophantineOrderFit",
    "ExtendedSystem",
    "FrequencyMatrix",
    "FrequencyTuple",
    "GOLDEN_CONJUGATE_STEP",
    "GapScan",
    "InsufficientDataError",
    "KronlabError",
    "KroneckerInstance",
    "LadderRow",
    "PrecisionBudgetError",
    "PrecisionReal",
    "QualityEntry",
    "QualityRecord",
    "RationalFrequencyError",
    "SequenceDiagnostics",
    "TorusPoint",
    "WindowPolicy",
    "WindowTooNarrowError",
    "almost_period_quality",
    "box_count",
    "box_dimension_fit",
    "build_extended",
    "continued_fraction",
    "convergent_sequence",
    "diophantine_dimension_fit",
    "dirichlet_search",
    "estimate_diophantine_order",
    "evaluate_descriptor",
    "frac_mult",
    "gap_scan",
    "greedy_almost_period",
    "holder_bound",
    "inclusion_length_ladder",
    "matrix_solution_scan",
    "max_pair_residual",
    "orbit_sample",
    "repair_monotone",
    "solve_in_interval",
    "theoretical_bounds",
    "torus_dist",
    "torus_norm",
    "verify_sequence_properties",
]
