"""Quantum pendulum propagator: Bessel-series kernels, reference oracles,
verification harness and Green-function representations."""

from .kernel import KernelQuery, PendulumParams, Truncation, default_truncation, free_rotor_kernel, kernel_eq16, kernel_eq17
from .oracles import AngleGrid, SpectralSolution, build_hamiltonian, diagonalize, spectral_kernel, split_step_kernel, time_sliced_kernel
from .report import DeviationReport, compare

__all__ = [
    "AngleGrid",
    "DeviationReport",
    "KernelQuery",
    "PendulumParams",
    "SpectralSolution",
    "Truncation",
    "build_hamiltonian",
    "compare",
    "default_truncation",
    "diagonalize",
    "free_rotor_kernel",
    "kernel_eq16",
    "kernel_eq17",
    "spectral_kernel",
    "split_step_kernel",
    "time_sliced_kernel",
]
