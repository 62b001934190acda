"""Transition-diagram perturbation theory for a two-level atom in a cavity.

The package builds effective Hamiltonians for the Rabi and Jaynes-Cummings
models by enumerating products of one-photon transition operators, weighting
them with exactly computed time weights and keeping the resonant ones.
Exact rational arithmetic is used throughout the symbolic layer; a small
numerical layer checks the results against brute-force dynamics.
"""

from .diagrams import ModelSpec, enumerate_diagrams, extract_zeroth_order, render_diagram
from .effective import build_correction, project_subspace, resonance_condition
from .errors import (
    ConfigError,
    DegenerateDetunings,
    JLMError,
    LeakageExceeded,
    NoPeak,
    NoSolution,
    NotEigenoperator,
    UnknownState,
    ZeroDetuning,
)
from .numerics import FockConfig
from .opalg import OperatorExpr, Scalar

__all__ = [
    "ModelSpec",
    "FockConfig",
    "OperatorExpr",
    "Scalar",
    "enumerate_diagrams",
    "extract_zeroth_order",
    "render_diagram",
    "build_correction",
    "project_subspace",
    "resonance_condition",
    "JLMError",
    "NotEigenoperator",
    "DegenerateDetunings",
    "ZeroDetuning",
    "UnknownState",
    "NoSolution",
    "LeakageExceeded",
    "NoPeak",
    "ConfigError",
]

__version__ = "0.1.0"
