"""Directed polymers in a random environment under an external field:
partition-function dynamic programming, phase classification, free
energies, and fluctuation statistics."""

__version__ = "0.1.0"

from .disorder import Environment, WeightModel, log_mgf, log_mgf_prime, \
    relative_entropy, second_moment_ratio
from .kernels import StepKernel, TiltedKernel, discrete_gaussian, \
    simple_walk, table_kernel, tilt
from .engine import EndpointMeasure, PolymerField, RunResult, \
    endpoint_measure, run_polymer
from .phase import PhaseReport, classify
from .free_energy import FreeEnergyEstimate, P2PSurface, estimate_gpl, \
    legendre, monotonicity_sweep, p2p_surface
from .experiments import ExponentFit, fit_exponent, table1_statistics

__all__ = [
    "Environment", "WeightModel", "log_mgf", "log_mgf_prime",
    "relative_entropy", "second_moment_ratio",
    "StepKernel", "TiltedKernel", "discrete_gaussian", "simple_walk",
    "table_kernel", "tilt",
    "EndpointMeasure", "PolymerField", "RunResult", "endpoint_measure",
    "run_polymer",
    "PhaseReport", "classify",
    "FreeEnergyEstimate", "P2PSurface", "estimate_gpl", "legendre",
    "monotonicity_sweep", "p2p_surface",
    "ExponentFit", "fit_exponent", "table1_statistics",
]
