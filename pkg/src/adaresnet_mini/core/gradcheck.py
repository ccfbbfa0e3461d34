"""Finite-difference verification of tape gradients."""

import math
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from ..exceptions import NumericDivergenceError
from ..settings import GRAD_CHECK_EPSILON, GRAD_CHECK_TOLERANCE, RELATIVE_ERROR_FLOOR
from . import autograd as ag
from .tensor import rng_for


@dataclass
class GradCheckReport:
    """Maximum relative error per parameter name.

    ``relu_flips`` counts, per parameter, the relu units whose sign changed
    somewhere between theta - eps and theta + eps. Those crossings are held at
    the recorded pattern during perturbed evaluations, so they do not enter the errors.
    """

    errors: Dict[str, float] = field(default_factory=dict)
    tolerance: float = GRAD_CHECK_TOLERANCE
    relu_flips: Dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(err < self.tolerance for err in self.errors.values())

    @property
    def failures(self) -> List[str]:
        return [name for name, err in self.errors.items() if not err < self.tolerance]

    def __str__(self) -> str:
        lines = []
        for name, err in self.errors.items():
            flips = self.relu_flips.get(name, 0)
            lines.append(f"{name}: {err:.3e}" + (f" ({flips} relu flips held)" if flips else ""))
        status = "passed" if self.passed else f"FAILED ({', '.join(self.failures)})"
        return "\n".join(lines + [f"gradient check {status} at tolerance {self.tolerance:g}"])


def relative_error(a: float, b: float) -> float:
    """|a - b| / max(|a|, |b|, floor)."""
    return abs(a - b) / max(abs(a), abs(b), RELATIVE_ERROR_FLOOR)


def _sample_indices(size: int, max_entries: Optional[int], rng: np.random.Generator) -> np.ndarray:
    if max_entries is None or size <= max_entries:
        return np.arange(size)
    return np.sort(rng.choice(size, size=max_entries, replace=False))


def _loss_value(loss_fn: Callable[[], ag.Node], name: str, pattern: Optional[ag.ReluPattern]) -> float:
    if pattern is not None:
        pattern.replay()
    value = float(loss_fn().value)
    if not math.isfinite(value):
        raise NumericDivergenceError(f"grad_check: non-finite loss while perturbing {name}")
    return value


def grad_check(
    loss_fn: Callable[[], ag.Node],
    params: Sequence[ag.Parameter],
    eps: float = GRAD_CHECK_EPSILON,
    tolerance: float = GRAD_CHECK_TOLERANCE,
    max_entries: Optional[int] = None,
    seed: int = 0,
    hold_relu: bool = True,
) -> GradCheckReport:
    """Compare tape gradients with central differences.

    With hold_relu, every perturbed evaluation reuses the relu activation pattern of the
    unperturbed pass, so a step of eps never crosses a relu kink and the
    difference quotient measures the same linear piece the tape differentiated.

    Args:
        loss_fn: Zero-argument callable rebuilding the graph and returning a scalar node
        params: Parameters to check (each entry is perturbed in place and restored)
        eps: Finite-difference step
        tolerance: Relative error bound for ``passed``
        max_entries: Check at most this many entries per parameter, sampled with seed
        seed: Seed for the entry sampler
        hold_relu: Keep the relu pattern of the unperturbed point while perturbing

    Returns:
        GradCheckReport with the maximum relative error per parameter

    Raises:
        NumericDivergenceError: If a perturbed evaluation produces a non-finite loss
    """
    params = list(params)
    rng = rng_for(seed)
    report = GradCheckReport(tolerance=tolerance)
    pattern = ag.ReluPattern() if hold_relu else None

    with ag.relu_pattern(pattern) if pattern is not None else nullcontext():
        analytic = ag.backward(loss_fn(), params)

        for param in params:
            flat = param.value.reshape(-1)
            tape = analytic[param.name].reshape(-1)
            worst = 0.0
            flips = 0
            for idx in _sample_indices(flat.size, max_entries, rng):
                original = flat[idx]
                plus = flat.dtype.type(original + eps)
                minus = flat.dtype.type(original - eps)
                flat[idx] = plus
                f_plus = _loss_value(loss_fn, param.name, pattern)
                flips += pattern.flips if pattern is not None else 0
                flat[idx] = minus
                f_minus = _loss_value(loss_fn, param.name, pattern)
                flips += pattern.flips if pattern is not None else 0
                flat[idx] = original
                # divide by the step actually taken in this dtype
                numeric = (f_plus - f_minus) / float(plus - minus)
                worst = max(worst, relative_error(float(tape[idx]), numeric))
            report.errors[param.name] = worst
            report.relu_flips[param.name] = flips

    return report


def check_model_gradients(
    model,
    images: np.ndarray,
    onehot: np.ndarray,
    names: Optional[Sequence[str]] = None,
    eps: float = GRAD_CHECK_EPSILON,
    tolerance: float = GRAD_CHECK_TOLERANCE,
    max_entries: Optional[int] = None,
    dtype=np.float64,
    seed: int = 0,
) -> GradCheckReport:
    """Gradient-check a model's parameters on one batch.

    The model is copied to dtype first and batch-norm running statistics are
    left untouched, so every perturbed evaluation sees the same function. Relu
    patterns are held at the unperturbed point.

    Args:
        model: Model to check (not modified)
        images: Input batch N×C×H×W
        onehot: One-hot targets N×K
        names: Parameter names to check; all trainable skip parameters when omitted
        dtype: Floating type of the checked copy

    Returns:
        GradCheckReport keyed by parameter name
    """
    checked = model.astype(dtype)
    x = images.astype(dtype)
    y = onehot.astype(dtype)
    by_name = {p.name: p for p in checked.parameters()}
    if names is None:
        selected = [p for p in checked.skip_parameters() if p.trainable]
    else:
        selected = [by_name[name] for name in names]

    def loss_fn() -> ag.Node:
        return checked.loss(x, y, training=True, update_stats=False)

    return grad_check(loss_fn, selected, eps=eps, tolerance=tolerance, max_entries=max_entries, seed=seed)
