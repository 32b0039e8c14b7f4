"""Grid-based pooled testing with quantitative max-load readouts."""

from .design import (
    DesignError,
    GridDesign,
    build_design,
    certify_design,
    double_crossing_pair,
    smallest_prime_divisor,
    validate_design,
)
from .loads import INF, LoadGrid, LoadParams, quantize_load, sample_load_grid
from .decoder import (
    ConfusionCounts,
    DecodeResult,
    Measurements,
    Status,
    classify_outcomes,
    decode,
    measure,
)
from .rates import (
    DorfmanResult,
    NumericError,
    RateBounds,
    dorfman_efficiency,
    fn_bound,
    fnr_bound,
    fp_bound,
    fpr_bound,
    np_zero_equivalents,
    poisson_fnr,
    poisson_fpr_bound,
    pool_max_cdf,
)
from .optimize import (
    DesignChoice,
    Infeasible,
    ToleranceSpec,
    choose_n_fixed,
    choose_n_vanishing,
    efficiency_fixed,
    efficiency_vanishing_formula,
    empirical_optimize,
    optimal_design_asymptotic,
    optimal_lambda,
)
from .harness import (
    BaselineResult,
    CellSummary,
    SweepConfig,
    dorfman_simulate,
    probe_miss_rate,
    random_pool_baseline,
    run_cell,
    run_compare,
    run_sweep,
)

__version__ = "0.1.0"
