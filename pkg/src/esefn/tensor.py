"""Dense float64 tensor with reverse-mode automatic differentiation.

Every operation that touches a tensor with ``requires_grad`` records its
parents and a closure mapping the upstream gradient to one gradient per
parent. :func:`backward` walks that record in reverse topological order.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, NonFiniteError, UsageError

MAX_RANK = 3

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.isfinite(values).all():
        raise NonFiniteError(f"non-finite value in {what}")


class Tensor:
    """Rank-0..3 array of float64 values with an optional gradient buffer.

    ``grad`` is a zero-initialised array of the same shape when
    ``requires_grad`` is set, and ``None`` otherwise.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "op")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        *,
        _parents: tuple[Tensor, ...] = (),
        _backward: BackwardFn | None = None,
        op: str = "",
    ):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim > MAX_RANK:
            raise DimensionError(f"rank {arr.ndim} exceeds the maximum of {MAX_RANK}: shape {arr.shape}")
        if any(n == 0 for n in arr.shape):
            raise DimensionError(f"empty extent in shape {arr.shape}")
        _check_finite(arr, op or "tensor data")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(arr) if self.requires_grad else None
        self._parents = _parents
        self._backward = _backward
        self.op = op

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag}, op={self.op or 'leaf'})"

    # arithmetic with numpy broadcasting

    def __add__(self, other) -> Tensor:
        other = as_tensor(other)
        return _binary(self, other, self.data + other.data, lambda g: (g, g), "add")

    __radd__ = __add__

    def __sub__(self, other) -> Tensor:
        other = as_tensor(other)
        return _binary(self, other, self.data - other.data, lambda g: (g, -g), "sub")

    def __rsub__(self, other) -> Tensor:
        return as_tensor(other) - self

    def __mul__(self, other) -> Tensor:
        other = as_tensor(other)
        a, b = self.data, other.data
        return _binary(self, other, a * b, lambda g: (g * b, g * a), "mul")

    __rmul__ = __mul__

    def __neg__(self) -> Tensor:
        return self * -1.0

    def sum(self, axis: int | None = None) -> Tensor:
        shape = self.shape
        out = self.data.sum(axis=axis)

        def grad_fn(g):
            if axis is not None:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape),)

        return make_result(out, (self,), grad_fn, "sum")

    def mean(self, axis: int | None = None) -> Tensor:
        count = self.data.size if axis is None else self.shape[axis]
        return self.sum(axis) * (1.0 / count)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _binary(a: Tensor, b: Tensor, out: np.ndarray, grad_fn, op: str) -> Tensor:
    def wrapped(g):
        ga, gb = grad_fn(g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return make_result(out, (a, b), wrapped, op)


def make_result(out: np.ndarray, parents: tuple[Tensor, ...], grad_fn: BackwardFn, op: str) -> Tensor:
    """Wrap an op output, recording the graph edge only when a parent needs gradients."""
    if any(p.requires_grad for p in parents):
        return Tensor(out, requires_grad=True, _parents=parents, _backward=grad_fn, op=op)
    return Tensor(out, op=op)


def topological_order(root: Tensor) -> list[Tensor]:
    """Nodes reachable from ``root``, each after all of its parents."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(t) into ``t.grad`` for every reachable tensor that requires it."""
    if loss.ndim != 0:
        raise UsageError(f"backward needs a scalar seed, got shape {loss.shape}")
    if not loss.requires_grad:
        raise UsageError("backward called on a tensor that does not require gradients")
    pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topological_order(loss)):
        g = pending.pop(id(node), None)
        if g is None:
            continue
        _check_finite(g, f"gradient of {node.op or 'leaf'}")
        node.grad += g
        if node._backward is None:
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = pending[key] + pg if key in pending else np.array(pg, dtype=np.float64)


def zero_grads(tensors: Iterable[Tensor]) -> None:
    for t in tensors:
        t.zero_grad()
