"""Differentiable kernels.

Spatial ops take ``[C, L]`` inputs or a batch ``[B, C, L]``; vector ops take
``[p]`` or ``[B, p]``. Convolutions are cross-correlations with zero padding.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError, DimensionError, InputError
from .tensor import Tensor, make_result


def _as_batch(x: np.ndarray, rank: int) -> np.ndarray:
    return x if x.ndim == rank + 1 else x[None]


def conv1d_output_length(length: int, kernel: int, stride: int, padding: int) -> int:
    return (length + 2 * padding - kernel) // stride + 1


def conv_transpose1d_output_length(length: int, kernel: int, stride: int, padding: int) -> int:
    return (length - 1) * stride - 2 * padding + kernel


def _conv1d_forward(x, w, b, stride, padding):
    """Batched forward; returns the output and the window view needed for backward."""
    k = w.shape[2]
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding)))
    windows = sliding_window_view(xp, k, axis=2)[:, :, ::stride, :]
    out = np.einsum("bilk,oik->bol", windows, w) + b[None, :, None]
    return out, windows


def _conv1d_backward(g, x, w, windows, stride, padding):
    k = w.shape[2]
    l_out = g.shape[2]
    gw = np.einsum("bilk,bol->oik", windows, g)
    gb = g.sum(axis=(0, 2))
    gxp = np.zeros((x.shape[0], x.shape[1], x.shape[2] + 2 * padding))
    span = stride * (l_out - 1) + 1
    for j in range(k):
        gxp[:, :, j : j + span : stride] += np.einsum("bol,oi->bil", g, w[:, :, j])
    gx = gxp[:, :, padding : padding + x.shape[2]]
    return gx, gw, gb


def conv1d(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """``out[o, t] = bias[o] + sum_{i, j} weight[o, i, j] * xpad[i, t*stride + j]``."""
    if stride < 1 or padding < 0:
        raise ConfigurationError(f"conv1d needs stride >= 1 and padding >= 0, got stride={stride} padding={padding}")
    if x.ndim not in (2, 3) or weight.ndim != 3 or x.shape[-2] != weight.shape[1]:
        raise DimensionError(f"conv1d input shape {x.shape} does not match weight shape {weight.shape}")
    if bias.shape != (weight.shape[0],):
        raise DimensionError(f"conv1d bias shape {bias.shape} does not match weight shape {weight.shape}")
    length, k = x.shape[-1], weight.shape[2]
    if length + 2 * padding < k:
        raise DimensionError(f"conv1d input shape {x.shape} is shorter than kernel of weight shape {weight.shape}")
    batched = x.ndim == 3
    xb = _as_batch(x.data, 2)
    out, windows = _conv1d_forward(xb, weight.data, bias.data, stride, padding)

    def grad_fn(g):
        gx, gw, gb = _conv1d_backward(_as_batch(g, 2), xb, weight.data, windows, stride, padding)
        return (gx if batched else gx[0]), gw, gb

    return make_result(out if batched else out[0], (x, weight, bias), grad_fn, "conv1d")


def _conv_transpose1d_forward(x, w, b, stride, padding):
    batch, _, length = x.shape
    k = w.shape[2]
    full_len = (length - 1) * stride + k
    full = np.zeros((batch, w.shape[1], full_len))
    span = stride * (length - 1) + 1
    for j in range(k):
        full[:, :, j : j + span : stride] += np.einsum("bil,io->bol", x, w[:, :, j])
    return full[:, :, padding : full_len - padding] + b[None, :, None]


def _conv_transpose1d_backward(g, x, w, stride, padding):
    length = x.shape[2]
    k = w.shape[2]
    full_len = (length - 1) * stride + k
    gfull = np.zeros((g.shape[0], g.shape[1], full_len))
    gfull[:, :, padding : full_len - padding] = g
    gx = np.zeros_like(x)
    gw = np.zeros_like(w)
    span = stride * (length - 1) + 1
    for j in range(k):
        window = gfull[:, :, j : j + span : stride]
        gx += np.einsum("bol,io->bil", window, w[:, :, j])
        gw[:, :, j] = np.einsum("bil,bol->io", x, window)
    return gx, gw, g.sum(axis=(0, 2))


def conv1d_transposed(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Adjoint of :func:`conv1d` along the spatial axis, plus bias; always lengthens the input.

    ``weight`` is laid out ``[C_in, C_out, k]``.
    """
    if x.ndim not in (2, 3) or weight.ndim != 3 or x.shape[-2] != weight.shape[0]:
        raise DimensionError(f"conv1d_transposed input shape {x.shape} does not match weight shape {weight.shape}")
    if bias.shape != (weight.shape[1],):
        raise DimensionError(f"conv1d_transposed bias shape {bias.shape} does not match weight shape {weight.shape}")
    length, k = x.shape[-1], weight.shape[2]
    if stride < 1 or padding < 0:
        raise ConfigurationError(f"conv1d_transposed needs stride >= 1 and padding >= 0, got {stride}, {padding}")
    l_out = conv_transpose1d_output_length(length, k, stride, padding)
    if l_out <= length:
        raise ConfigurationError(
            f"conv1d_transposed must expand: length {length}, kernel {k}, stride {stride}, "
            f"padding {padding} gives {l_out}"
        )
    batched = x.ndim == 3
    xb = _as_batch(x.data, 2)
    out = _conv_transpose1d_forward(xb, weight.data, bias.data, stride, padding)

    def grad_fn(g):
        gx, gw, gb = _conv_transpose1d_backward(_as_batch(g, 2), xb, weight.data, stride, padding)
        return (gx if batched else gx[0]), gw, gb

    return make_result(out if batched else out[0], (x, weight, bias), grad_fn, "conv1d_transposed")


def global_avg_pool(x: Tensor) -> Tensor:
    """Mean over the trailing spatial axis: ``[..., C, L] -> [..., C]``."""
    if x.ndim < 2:
        raise DimensionError(f"global_avg_pool needs a [C, L] or [B, C, L] input, got shape {x.shape}")
    length = x.shape[-1]
    shape = x.shape

    def grad_fn(g):
        return (np.broadcast_to(g[..., None] / length, shape),)

    return make_result(x.data.mean(axis=-1), (x,), grad_fn, "global_avg_pool")


def fully_connected(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """``weight @ x + bias`` for ``x`` of shape ``[p]`` or ``[B, p]``; ``weight`` is ``[q, p]``."""
    if weight.ndim != 2 or x.ndim not in (1, 2) or x.shape[-1] != weight.shape[1]:
        raise DimensionError(f"fully_connected input shape {x.shape} does not match weight shape {weight.shape}")
    if bias.shape != (weight.shape[0],):
        raise DimensionError(f"fully_connected bias shape {bias.shape} does not match weight shape {weight.shape}")
    xd, wd = x.data, weight.data
    out = xd @ wd.T + bias.data

    def grad_fn(g):
        g2 = g.reshape(-1, g.shape[-1])
        gw = g2.T @ xd.reshape(-1, xd.shape[-1])
        return g @ wd, gw, g2.sum(axis=0)

    return make_result(out, (x, weight, bias), grad_fn, "fully_connected")


_SIGMOID_LO = np.finfo(np.float64).tiny
_SIGMOID_HI = np.nextafter(1.0, 0.0)


def sigmoid(x: Tensor) -> Tensor:
    z = x.data
    e = np.exp(-np.abs(z))
    s = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    # keep gates strictly inside (0, 1) even where float64 saturates
    s = np.clip(s, _SIGMOID_LO, _SIGMOID_HI)
    return make_result(s, (x,), lambda g: (g * s * (1.0 - s),), "sigmoid")


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return make_result(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,), "relu")


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Cross-entropy of ``softmax(logits)`` against integer labels.

    ``[K]`` logits with an int label give a scalar; ``[B, K]`` logits with
    ``B`` labels give the ``[B]`` per-sample losses.
    """
    if logits.ndim not in (1, 2):
        raise DimensionError(f"softmax_cross_entropy needs [K] or [B, K] logits, got shape {logits.shape}")
    labels_arr = np.asarray(labels)
    k = logits.shape[-1]
    if labels_arr.shape != logits.shape[:-1]:
        raise DimensionError(f"labels shape {labels_arr.shape} does not match logits shape {logits.shape}")
    if not np.issubdtype(labels_arr.dtype, np.integer) or (labels_arr < 0).any() or (labels_arr >= k).any():
        raise InputError(f"labels must be integers in [0, {k}), got {labels_arr.tolist()}")
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    exp_z = np.exp(z)
    total = exp_z.sum(axis=-1, keepdims=True)
    log_probs = z - np.log(total)
    one_hot = np.zeros_like(z)
    np.put_along_axis(one_hot, labels_arr[..., None], 1.0, axis=-1)
    loss = -(log_probs * one_hot).sum(axis=-1)
    probs = exp_z / total

    def grad_fn(g):
        return (np.asarray(g)[..., None] * (probs - one_hot),)

    return make_result(loss, (logits,), grad_fn, "softmax_cross_entropy")


def transpose(x: Tensor) -> Tensor:
    """Swap the two trailing axes."""
    if x.ndim < 2:
        raise DimensionError(f"transpose needs rank >= 2, got shape {x.shape}")
    return make_result(np.swapaxes(x.data, -1, -2), (x,), lambda g: (np.swapaxes(g, -1, -2),), "transpose")


def stack(tensors: list[Tensor], axis: int = -1) -> Tensor:
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise DimensionError(f"stack needs equal shapes, got {sorted(shapes)}")
    out = np.stack([t.data for t in tensors], axis=axis)

    def grad_fn(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return make_result(out, tuple(tensors), grad_fn, "stack")


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    sizes = [t.shape[axis] for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum(sizes)[:-1]

    def grad_fn(g):
        return tuple(np.split(g, bounds, axis=axis))

    return make_result(out, tuple(tensors), grad_fn, "concat")


def scale_channels(x: Tensor, gates: Tensor) -> Tensor:
    """Multiply every row ``x[..., c, :]`` by the scalar ``gates[..., c]``."""
    if x.ndim < 2 or gates.shape != x.shape[:-1]:
        raise DimensionError(f"scale_channels input shape {x.shape} does not match gate shape {gates.shape}")
    xd, gd = x.data, gates.data

    def grad_fn(g):
        return g * gd[..., None], (g * xd).sum(axis=-1)

    return make_result(xd * gd[..., None], (x, gates), grad_fn, "scale_channels")
