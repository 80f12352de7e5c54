"""smdpcheck: timing analysis for semi-Markov decision processes."""

from .distributions import (
    CompositionOperator,
    Dirac,
    Distribution,
    DominanceVerdict,
    Exponential,
    GridSpec,
    MinMaxCdf,
    NumericConvolution,
    PhaseType,
    Shifted,
    Uniform,
    cdf_eval,
    compose_residence,
    convolve,
    convolve_power,
    dominates,
    phase_type,
)
from .model import (
    Scheduler,
    Smdp,
    dirac_scheduler,
    effective_transition,
    has_deterministic_kernel,
    parse_model,
    parse_scheduler,
    serialize_model,
    serialize_scheduler,
    uniform_scheduler,
    validate_model,
    validate_scheduler,
)
from .cylinders import (
    Interval,
    RectCylinder,
    RectStep,
    TimeBoundedCylinder,
    prob_cylinder_inductive,
    prob_cylinder_paths,
    prob_rect_cylinder,
    trace_probability,
)
from .composition import compose, composite_name
from .relations import (
    FasterThanVerdict,
    FtWitness,
    RelationResult,
    SchedulerSearchSpec,
    bisimilar,
    equally_fast_bounded,
    faster_than_bounded,
    simulates,
)
from .monotonicity import (
    MonotonicityReport,
    MonotonicityViolation,
    check_monotonicity_bounded,
    check_strong_monotonicity,
    enumerate_state_paths,
    path_bound,
)
from .montecarlo import Deadlock, TimedPath, estimate_cylinder, sample_path
from .smt import export_smt_dominance

__version__ = "0.1.0"
