"""Minimal differentiable-computation kernels.

A small set of explicitly composed ops over float64 numpy arrays: dense
layers, pointwise activations, the losses used by the two models, Adam,
and the gradient-reversal node. Graphs are built per forward pass by the
model code; there is no general-purpose tape.
"""
from __future__ import annotations

import math
from typing import Callable, Iterable, Optional

import numpy as np

from .errors import InvalidArgument, InvalidState, TrainingDiverged
from .rng import SplitMix64


# -----------------------------
# Parameters
# -----------------------------
class Parameter:
    """A named tensor with its gradient accumulator and Adam moments."""

    __slots__ = ("name", "value", "grad", "m", "v")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.m = np.zeros_like(self.value)
        self.v = np.zeros_like(self.value)


class ParameterSet:
    """Ordered collection of uniquely named parameters plus the Adam step count."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}
        self.step_count = 0

    def add(self, name: str, value: np.ndarray) -> Parameter:
        if name in self._params:
            raise InvalidArgument(f"duplicate parameter name: {name}")
        p = Parameter(name, value)
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params.values())

    def names(self) -> list[str]:
        return list(self._params.keys())

    def zero_grads(self) -> None:
        for p in self._params.values():
            p.grad[...] = 0.0


def glorot_uniform(rng: SplitMix64, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform((fan_in, fan_out)) * (2.0 * limit) - limit


def add_dense_layer(params: ParameterSet, prefix: str, fan_in: int, fan_out: int,
                    rng: SplitMix64) -> tuple[Parameter, Parameter]:
    w = params.add(f"{prefix}.w", glorot_uniform(rng, fan_in, fan_out))
    b = params.add(f"{prefix}.b", np.zeros(fan_out))
    return w, b


# -----------------------------
# Graph nodes
# -----------------------------
class Node:
    """One value in a computation graph."""

    __slots__ = ("value", "grad", "parents", "backward_fn", "param")

    def __init__(self, value: np.ndarray, parents: tuple = (),
                 backward_fn: Optional[Callable[["Node"], None]] = None,
                 param: Optional[Parameter] = None):
        self.value = value
        self.grad: Optional[np.ndarray] = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.param = param


def const(value: np.ndarray) -> Node:
    return Node(np.asarray(value, dtype=np.float64))


def param(p: Parameter) -> Node:
    return Node(p.value, param=p)


def _accum(node: Node, g: np.ndarray) -> None:
    if node.grad is None:
        node.grad = np.zeros_like(node.value, dtype=np.float64)
    node.grad += g


def dense(x: Node, w: Node, b: Node) -> Node:
    """y = x @ W + b for x of shape (batch, in)."""
    if x.value.ndim != 2 or w.value.ndim != 2:
        raise InvalidArgument("dense expects 2-D input and weights")
    if x.value.shape[1] != w.value.shape[0] or b.value.shape != (w.value.shape[1],):
        raise InvalidArgument(
            f"dense shape mismatch: x{x.value.shape} w{w.value.shape} b{b.value.shape}")
    out = Node(x.value @ w.value + b.value, parents=(x, w, b))

    def backward(node: Node):
        g = node.grad
        _accum(x, g @ w.value.T)
        _accum(w, x.value.T @ g)
        _accum(b, g.sum(axis=0))

    out.backward_fn = backward
    return out


def tanh(x: Node) -> Node:
    t = np.tanh(x.value)
    out = Node(t, parents=(x,))

    def backward(node: Node):
        _accum(x, node.grad * (1.0 - t * t))

    out.backward_fn = backward
    return out


def exp(x: Node) -> Node:
    e = np.exp(x.value)
    out = Node(e, parents=(x,))

    def backward(node: Node):
        _accum(x, node.grad * e)

    out.backward_fn = backward
    return out


def square(x: Node) -> Node:
    out = Node(x.value * x.value, parents=(x,))

    def backward(node: Node):
        _accum(x, node.grad * (2.0 * x.value))

    out.backward_fn = backward
    return out


def add(a: Node, b: Node) -> Node:
    if a.value.shape != b.value.shape:
        raise InvalidArgument(f"add shape mismatch: {a.value.shape} vs {b.value.shape}")
    out = Node(a.value + b.value, parents=(a, b))

    def backward(node: Node):
        _accum(a, node.grad)
        _accum(b, node.grad)

    out.backward_fn = backward
    return out


def mul(a: Node, b: Node) -> Node:
    if a.value.shape != b.value.shape:
        raise InvalidArgument(f"mul shape mismatch: {a.value.shape} vs {b.value.shape}")
    out = Node(a.value * b.value, parents=(a, b))

    def backward(node: Node):
        _accum(a, node.grad * b.value)
        _accum(b, node.grad * a.value)

    out.backward_fn = backward
    return out


def scale(x: Node, s: float) -> Node:
    out = Node(x.value * s, parents=(x,))

    def backward(node: Node):
        _accum(x, node.grad * s)

    out.backward_fn = backward
    return out


def concat_cols(a: Node, b: Node) -> Node:
    if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[0] != b.value.shape[0]:
        raise InvalidArgument("concat_cols expects 2-D inputs with equal batch size")
    na = a.value.shape[1]
    out = Node(np.concatenate([a.value, b.value], axis=1), parents=(a, b))

    def backward(node: Node):
        _accum(a, node.grad[:, :na])
        _accum(b, node.grad[:, na:])

    out.backward_fn = backward
    return out


def clamp(x: Node, lo: float, hi: float) -> Node:
    mask = (x.value >= lo) & (x.value <= hi)
    out = Node(np.clip(x.value, lo, hi), parents=(x,))

    def backward(node: Node):
        _accum(x, node.grad * mask)

    out.backward_fn = backward
    return out


def gradient_reversal(x: Node, lam: float) -> Node:
    """Identity forward; upstream gradient multiplied by -lam on the way back."""
    if lam < 0:
        raise InvalidArgument("gradient reversal strength must be >= 0")
    out = Node(x.value.copy(), parents=(x,))

    def backward(node: Node):
        _accum(x, node.grad * (-lam))

    out.backward_fn = backward
    return out


def straight_through(x: Node, values: np.ndarray) -> Node:
    """Forward the given values; route gradients to x as if it were identity."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape != x.value.shape:
        raise InvalidArgument(f"straight_through shape mismatch: {v.shape} vs {x.value.shape}")
    out = Node(v, parents=(x,))

    def backward(node: Node):
        _accum(x, node.grad)

    out.backward_fn = backward
    return out


def embed_rows(table: Node, indices: np.ndarray) -> Node:
    """Gather rows of a (k, d) table; backward scatter-adds into those rows."""
    idx = np.asarray(indices, dtype=np.int64)
    out = Node(table.value[idx], parents=(table,))

    def backward(node: Node):
        if table.grad is None:
            table.grad = np.zeros_like(table.value)
        np.add.at(table.grad, idx, node.grad)

    out.backward_fn = backward
    return out


def reduce_sum(x: Node) -> Node:
    out = Node(np.array(np.sum(x.value)), parents=(x,))

    def backward(node: Node):
        _accum(x, np.broadcast_to(node.grad, x.value.shape).copy())

    out.backward_fn = backward
    return out


def mse_loss(pred: Node, target: np.ndarray) -> Node:
    t = np.asarray(target, dtype=np.float64)
    if pred.value.shape != t.shape:
        raise InvalidArgument(f"mse shape mismatch: {pred.value.shape} vs {t.shape}")
    diff = pred.value - t
    out = Node(np.array(np.mean(diff * diff)), parents=(pred,))

    def backward(node: Node):
        _accum(pred, node.grad * (2.0 / diff.size) * diff)

    out.backward_fn = backward
    return out


def row_sq_error(x: Node, target: np.ndarray) -> Node:
    """Mean over rows of the squared L2 distance to target rows."""
    t = np.asarray(target, dtype=np.float64)
    if x.value.shape != t.shape:
        raise InvalidArgument(f"row_sq_error shape mismatch: {x.value.shape} vs {t.shape}")
    diff = x.value - t
    rows = x.value.shape[0]
    out = Node(np.array(np.sum(diff * diff) / rows), parents=(x,))

    def backward(node: Node):
        _accum(x, node.grad * (2.0 / rows) * diff)

    out.backward_fn = backward
    return out


def kl_gauss_std(mu: Node, logvar: Node) -> Node:
    """KL(N(mu, exp(logvar)) || N(0, 1)), summed over dims, mean over batch."""
    if mu.value.shape != logvar.value.shape:
        raise InvalidArgument(f"kl shape mismatch: {mu.value.shape} vs {logvar.value.shape}")
    ev = np.exp(logvar.value)
    batch = mu.value.shape[0] if mu.value.ndim > 1 else 1
    val = 0.5 * np.sum(mu.value ** 2 + ev - 1.0 - logvar.value) / batch
    out = Node(np.array(val), parents=(mu, logvar))

    def backward(node: Node):
        _accum(mu, node.grad * mu.value / batch)
        _accum(logvar, node.grad * 0.5 * (ev - 1.0) / batch)

    out.backward_fn = backward
    return out


def wsum(terms: Iterable[tuple[Node, float]]) -> Node:
    """Weighted sum of scalar nodes."""
    terms = list(terms)
    total = sum(float(n.value) * c for n, c in terms)
    out = Node(np.array(total), parents=tuple(n for n, _ in terms))

    def backward(node: Node):
        for n, c in terms:
            _accum(n, node.grad * c)

    out.backward_fn = backward
    return out


# -----------------------------
# Backward pass and optimizer
# -----------------------------
def backward(loss: Node) -> None:
    """Reverse-mode accumulation from a scalar loss into Parameter.grad."""
    if loss.value.size != 1:
        raise InvalidArgument("backward expects a scalar loss node")
    if loss.grad is not None:
        raise InvalidState("backward already ran on this graph")
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node.backward_fn is not None and node.grad is not None:
            node.backward_fn(node)
        if node.param is not None and node.grad is not None:
            node.param.grad += node.grad


def adam_step(params: ParameterSet, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8, sparse_rows: Optional[dict[str, np.ndarray]] = None) -> None:
    """One Adam update with bias correction; gradients are cleared afterward.

    sparse_rows maps a parameter name to the row indices touched this step;
    rows outside the set are left untouched (value and moments).
    """
    for p in params:
        if not np.all(np.isfinite(p.grad)):
            raise TrainingDiverged(f"non-finite gradient in {p.name}")
    params.step_count += 1
    t = params.step_count
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for p in params:
        rows = None if sparse_rows is None else sparse_rows.get(p.name)
        if rows is None:
            g = p.grad
            p.m = beta1 * p.m + (1.0 - beta1) * g
            p.v = beta2 * p.v + (1.0 - beta2) * (g * g)
            p.value -= lr * (p.m / bc1) / (np.sqrt(p.v / bc2) + eps)
        else:
            idx = np.unique(np.asarray(rows, dtype=np.int64))
            g = p.grad[idx]
            p.m[idx] = beta1 * p.m[idx] + (1.0 - beta1) * g
            p.v[idx] = beta2 * p.v[idx] + (1.0 - beta2) * (g * g)
            p.value[idx] -= lr * (p.m[idx] / bc1) / (np.sqrt(p.v[idx] / bc2) + eps)
        p.grad[...] = 0.0
