"""Bayesian Tensor VAR with multiplicative gamma rank shrinkage."""

from ._accel import backend_name
from .tensor import CpTensor3, coefficient_matrix, cp_compose, mode1_matricize

__version__ = "0.1.0"

__all__ = ["CpTensor3", "backend_name", "coefficient_matrix", "cp_compose", "mode1_matricize", "__version__"]
