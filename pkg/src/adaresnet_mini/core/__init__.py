"""Numeric core: tensors, the autograd tape and gradient checking."""

from . import autograd, tensor
from .gradcheck import GradCheckReport, check_model_gradients, grad_check, relative_error

__all__ = [
    "autograd",
    "tensor",
    "GradCheckReport",
    "check_model_gradients",
    "grad_check",
    "relative_error",
]
