"""Stochastic calculus on time scales contained in [0, 1].

Exact time-scale representation and Guseinov measure, the sampled
Cameron-Martin space, sampled Brownian ensembles with Paley-Wiener
integrals and Girsanov densities, fixed-point solvers for drift SDEs
driven by sampled Brownian motion, and a verification harness.
"""

from .cameron_martin import (
    CMPath,
    density_from_path,
    evaluate,
    extend_isometric,
    indicator_path,
    inner_product,
    read_cmpath,
    write_cmpath,
    zero_path,
)
from .errors import (
    EnsembleTooSmallError,
    Error,
    EstimatorUndefinedError,
    GridMismatchError,
    IntervalOrderError,
    InvalidTimeScaleError,
    NotConvergedError,
    NotInTimeScaleError,
    OffNodeError,
    SpecParseError,
)
from .grid import DeltaGrid, build_grid
from .sde import (
    ConstantDrift,
    ContractionEstimate,
    DriftFunctional,
    LookaheadSinDrift,
    MarkovDrift,
    SinDelayDrift,
    SolutionMap,
    SolveReport,
    TabulatedPastDrift,
    clarke_solve,
    drift_matrix,
    estimate_contraction,
    fixed_point_defect,
    inverse_map,
    parse_drift,
    solve_forward,
    strong_solution_map,
)
from .timescale import (
    MeasureDecomposition,
    PointClass,
    TimeScale,
    backward_jump,
    classify,
    delta_integral,
    forward_jump,
    graininess,
    lebesgue_decomposition,
    measure_of_interval,
    parse_timescale,
)
from .verify import (
    TestReport,
    brownianity_suite,
    filtration_prefix_check,
    girsanov_mean_check,
    law_equivalence_check,
)
from .wiener import (
    PathEnsemble,
    SampledPath,
    girsanov_density,
    girsanov_log_density,
    paley_wiener,
    read_ensemble,
    sample_brownian,
    sample_ensemble,
    translate,
    write_ensemble,
    write_ensemble_meta,
)

__version__ = "0.1.0"
