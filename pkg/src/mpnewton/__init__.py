"""Mixed-precision inexact Newton-Krylov solver with energy accounting."""

from .errors import (
    CalibrationFailed,
    CounterUnavailable,
    IncompleteTrace,
    LineSearchFailure,
    NonFiniteInner,
    NonFiniteResidual,
    NumericsError,
    TooTightForSingle,
)
from .precision import TraceCounters, WorkingPrecision
from .problems import (
    ProblemInstance,
    ProblemName,
    jacobian_vector_product,
    laplace,
    residual,
    rosenbrock,
)
from .krylov import InnerResult, InnerStatus, bicgstab
from .newton import (
    AcceptedStep,
    OuterRecord,
    SolverConfig,
    SolveTrace,
    StepStatus,
    Termination,
    armijo_line_search,
    newton_solve,
    update_forcing,
)
from .energymodel import (
    EnergyModelParams,
    PrecisionLevel,
    RateKind,
    RatePair,
    attainable_accuracy,
    baseline_energy,
    energy_accuracy_curve,
    energy_ratio,
    hybrid_accuracy_bound,
    hybrid_energy,
    hybrid_k2_bound,
    improvement_factor_bound,
    iteration_energy,
    max_iterations,
    optimal_split,
    proportional_params,
)
from .metering import (
    BackendKind,
    CostTable,
    EnergySample,
    MeasuredMeter,
    ModeledMeter,
    PowercapCounter,
    StubCounter,
    calibrate_params,
    counter_delta_uj,
    measured_energy,
    modeled_energy,
)
from .meta import (
    LadderLevel,
    PrecisionLadder,
    ReinvestReport,
    ReinvestStatus,
    SweepEntry,
    concat_traces,
    gradation_sweep,
    reinvest_experiment,
    run_ladder,
)

__version__ = "0.1.0"
