"""Buy/sell order-signal transport over a finite-velocity line.

Three independent routes to the same physics: a Laplace-domain
impulse-response engine (`laplace`), a direct finite-difference
integrator of the coupled delay system (`takacs`), and a weighted
Monte Carlo oracle for the scalar workload (`workload_mc`), plus
fidelity metrics, model algebra, and a reproducible CLI.
"""
from .config import RunManifest, load_config
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateDataError,
    GridError,
    LightqueueError,
    PoleError,
    SingularMatrixError,
    StabilityError,
)
from .fields import (
    BoundaryConditions,
    GreenKernel,
    SampledFunction,
    SignalWaveform,
    SpaceTimeField,
)
from .laplace import (
    ContourSpec,
    bromwich_invert,
    default_contour_pair,
    green_kernel,
    respond,
    tau_residue_inverse,
    transfer_matrix,
)
from .metrics import MetricSeries, autocorrelation, cone_slice, kl_distance
from .model import (
    ClearingCurve,
    KernelSpec,
    ModelParams,
    clearing_curves,
    clearing_tau,
    decouple,
    kernel_b,
    kernel_beta,
    recombine,
    system_matrix,
)
from .takacs import SolverConfig, fd_solve, fd_solve_scalar
from .workload_mc import (
    EmpiricalCdf,
    SimConfig,
    compare_cdf,
    simulate_workload,
    stationary_workload_sampler,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryConditions",
    "ClearingCurve",
    "ConfigError",
    "ContourSpec",
    "ConvergenceError",
    "DegenerateDataError",
    "EmpiricalCdf",
    "GreenKernel",
    "GridError",
    "KernelSpec",
    "LightqueueError",
    "MetricSeries",
    "ModelParams",
    "PoleError",
    "RunManifest",
    "SampledFunction",
    "SignalWaveform",
    "SimConfig",
    "SingularMatrixError",
    "SolverConfig",
    "SpaceTimeField",
    "StabilityError",
    "autocorrelation",
    "bromwich_invert",
    "clearing_curves",
    "clearing_tau",
    "compare_cdf",
    "cone_slice",
    "decouple",
    "default_contour_pair",
    "fd_solve",
    "fd_solve_scalar",
    "green_kernel",
    "kernel_b",
    "kernel_beta",
    "kl_distance",
    "load_config",
    "recombine",
    "respond",
    "simulate_workload",
    "stationary_workload_sampler",
    "system_matrix",
    "tau_residue_inverse",
    "transfer_matrix",
]
