"""Central finite differences, used as the independent oracle for backward()."""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from .errors import ConfigurationError
from .tensor import Tensor, backward, zero_grads


def _scalar(value) -> float:
    return value.item() if isinstance(value, Tensor) else float(value)


def finite_diff_grad(f: Callable[[Tensor], Tensor | float], x: Tensor, eps: float = 1e-6) -> np.ndarray:
    """Estimate df/dx element by element with ``(f(x + eps e_i) - f(x - eps e_i)) / (2 eps)``.

    ``x.data`` is perturbed in place and restored afterwards, so ``f`` may
    close over ``x`` (e.g. a model parameter) instead of using its argument.
    """
    if eps <= 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    grad = np.zeros_like(x.data)
    flat = x.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = _scalar(f(x))
        flat[i] = orig - eps
        lo = _scalar(f(x))
        flat[i] = orig
        out[i] = (hi - lo) / (2.0 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """Max abs difference scaled by the larger of the two max magnitudes."""
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), floor)
    return float(np.abs(analytic - numeric).max() / scale)


def group_name(param_name: str) -> str:
    """``mnet.conv3.weight`` -> ``mnet.conv3``: one group per layer."""
    return param_name.rsplit(".", 1)[0]


def check_gradients(
    loss_fn: Callable[[], Tensor],
    named_params: Iterable[tuple[str, Tensor]],
    eps: float = 1e-6,
) -> dict[str, float]:
    """Relative error of backward vs. finite differences, per parameter group."""
    named_params = list(named_params)
    zero_grads(p for _, p in named_params)
    backward(loss_fn())
    analytic: dict[str, list[np.ndarray]] = {}
    numeric: dict[str, list[np.ndarray]] = {}
    for name, param in named_params:
        group = group_name(name)
        analytic.setdefault(group, []).append(param.grad.ravel().copy())
        numeric.setdefault(group, []).append(finite_diff_grad(lambda _: loss_fn(), param, eps).ravel())
    zero_grads(p for _, p in named_params)
    return {
        g: relative_error(np.concatenate(analytic[g]), np.concatenate(numeric[g]))
        for g in analytic
    }
