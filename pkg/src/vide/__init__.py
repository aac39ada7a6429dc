"""Time stepping for linear Volterra integrodifferential equations

    u'(t) + A u(t) + (beta * A u)(t) = f(t),   u(0) = u0,

with Abel or exponential-sum memory kernels, plus z-transform and
convergence diagnostics.
"""
from ._backend import BACKEND
from .kernel import Abel, ExpSum, kernel_from_spec
from .operator import Diagonal, Laplacian1D, operator_from_spec
from .quadrature import Rule, WeightTable, build_table, memory_full, memory_half
from .stepper import History, Scheme, SchemeConfig, run

__all__ = [
    "BACKEND",
    "Abel",
    "ExpSum",
    "kernel_from_spec",
    "Diagonal",
    "Laplacian1D",
    "operator_from_spec",
    "Rule",
    "WeightTable",
    "build_table",
    "memory_full",
    "memory_half",
    "History",
    "Scheme",
    "SchemeConfig",
    "run",
]

__version__ = "0.1.0"
