"""Forward-backward-forward dynamics for monotone inclusions 0 in Ax + Bx.

Continuous-time trajectories with variable step-size schedules, the matching
discrete iteration, a catalog of desk-scale problems with certified
solutions, and monitors that verify the convergence guarantees numerically.
"""

from .diagnostics import (
    EnvelopeReport,
    LipschitzProbeReport,
    MonitorVerdict,
    ergodic_objective_monitor,
    exponential_envelope,
    fejer_monitor,
    inclusion_identity_monitor,
    lipschitz_probe,
    residual_integral_monitor,
    zdot_bound_monitor,
)
from .discrete import IterateRecord, discrete_ergodic_point, run_tseng, tseng_step
from .dynamics import (
    DivergenceError,
    ProblemInstance,
    StepSchedule,
    TrajectoryRecord,
    ergodic_point,
    fbf_vector_field,
    integrate,
    schedule_catalog,
)
from .operators import (
    ConstructionError,
    InvalidStateError,
    LipschitzOperator,
    MaximalOperator,
    ParameterError,
    check_resolvent_parameter_inequality,
    prox_catalog,
    resolvent,
    yosida,
)
from .problems import ProblemSpec, build, build_spec, default_instances, oracle_solve

__version__ = "0.1.0"

__all__ = [
    "ConstructionError",
    "DivergenceError",
    "EnvelopeReport",
    "InvalidStateError",
    "IterateRecord",
    "LipschitzOperator",
    "LipschitzProbeReport",
    "MaximalOperator",
    "MonitorVerdict",
    "ParameterError",
    "ProblemInstance",
    "ProblemSpec",
    "StepSchedule",
    "TrajectoryRecord",
    "build",
    "build_spec",
    "check_resolvent_parameter_inequality",
    "default_instances",
    "discrete_ergodic_point",
    "ergodic_objective_monitor",
    "ergodic_point",
    "exponential_envelope",
    "fbf_vector_field",
    "fejer_monitor",
    "inclusion_identity_monitor",
    "integrate",
    "lipschitz_probe",
    "oracle_solve",
    "prox_catalog",
    "resolvent",
    "residual_integral_monitor",
    "run_tseng",
    "schedule_catalog",
    "tseng_step",
    "yosida",
    "zdot_bound_monitor",
]
