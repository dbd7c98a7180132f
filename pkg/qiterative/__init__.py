"""Quantum Jacobi and Gauss-Seidel solvers for finite-differenced PDEs."""

__all__ = [
    "blockenc",
    "cli",
    "config",
    "errors",
    "experiments",
    "iterate",
    "lcu",
    "mmio",
    "models",
    "numkit",
    "pde",
    "qsim",
    "reporting",
    "worker",
]
