"""
Reverse-mode automatic differentiation on numpy arrays

A Tensor wraps an ndarray and, while gradient recording is enabled, remembers
the operation that produced it. Calling backward() on a scalar walks the
recorded graph in reverse topological order and accumulates gradients into the
leaf tensors (the parameters).
"""
from contextlib import contextmanager
from typing import Callable, Iterator, List, Optional, Sequence, Tuple
import threading
import numpy as np

from ..errors import ConfigurationError, InputError, UsageError

# Large negative logit used for masked attention scores. exp() of it underflows
# to exactly 0.0 in both float32 and float64.
NEG_INF = -1e9

_DEFAULT_DTYPE = np.float64
# per thread, so generation workers can run under no_grad independently
_grad_state = threading.local()

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


def get_default_dtype() -> np.dtype:
    """dtype used when constants are lifted into tensors"""
    return np.dtype(_DEFAULT_DTYPE)


def set_default_dtype(dtype) -> None:
    """Switch the default floating dtype (float64 or float32)"""
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ConfigurationError(f"Unsupported dtype: {dtype}")
    _DEFAULT_DTYPE = dtype.type


def is_grad_enabled() -> bool:
    return getattr(_grad_state, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block (evaluation, generation)"""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


class Tensor:
    """Dense array node in the differentiation graph"""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")
    # makes ndarray <op> Tensor dispatch to the Tensor's reflected operator
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        array = np.asarray(data)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(_DEFAULT_DTYPE)
        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None

    # -- introspection -------------------------------------------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise UsageError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        """Same values, cut from the graph"""
        return Tensor(self.data)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label}, requires_grad={self.requires_grad})"

    def __len__(self) -> int:
        return len(self.data)

    # -- differentiation -----------------------------------------------
    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's .grad"""
        if not self.requires_grad or self._backward is None:
            raise UsageError("backward() needs a tensor produced by a recorded forward pass")
        if grad is None:
            if self.data.size != 1:
                raise UsageError("backward() without an explicit gradient requires a scalar")
            grad = np.ones_like(self.data)

        pending = {id(self): np.asarray(grad, dtype=self.data.dtype)}
        for node in reversed(_topological_order(self)):
            node_grad = pending.pop(id(node), None)
            if node_grad is None:
                continue
            if node._backward is None:
                node.grad = node_grad.copy() if node.grad is None else node.grad + node_grad
                continue
            for parent, parent_grad in zip(node._parents, node._backward(node_grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad

    # -- operators -----------------------------------------------------
    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __truediv__(self, other): return div(self, other)
    def __rtruediv__(self, other): return div(other, self)
    def __neg__(self): return neg(self)
    def __pow__(self, exponent: float): return power(self, exponent)
    def __matmul__(self, other): return matmul(self, other)
    def __rmatmul__(self, other): return matmul(other, self)
    def __getitem__(self, index): return getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False): return sum_(self, axis, keepdims)
    def mean(self, axis=None, keepdims: bool = False): return mean(self, axis, keepdims)
    def reshape(self, *shape): return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape)
    def transpose(self, *axes): return transpose(self, axes[0] if len(axes) == 1 and isinstance(axes[0], (tuple, list)) else axes)
    def exp(self): return exp(self)
    def log(self): return log(self)
    def tanh(self): return tanh(self)
    def sigmoid(self): return sigmoid(self)
    def relu(self): return relu(self)


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def as_tensor(value, like: Optional[Tensor] = None) -> Tensor:
    """Lift constants into (non-differentiable) tensors"""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else _DEFAULT_DTYPE
    return Tensor(np.asarray(value, dtype=dtype))


def _result(data: np.ndarray, parents: Sequence[Tensor], backward: BackwardFn) -> Tensor:
    out = Tensor(data)
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _pair(a, b) -> Tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# elementwise arithmetic
# ---------------------------------------------------------------------------
def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    return _result(a.data + b.data, (a, b),
                   lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    return _result(a.data - b.data, (a, b),
                   lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    return _result(a.data * b.data, (a, b),
                   lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def div(a, b) -> Tensor:
    a, b = _pair(a, b)
    return _result(a.data / b.data, (a, b),
                   lambda g: (_unbroadcast(g / b.data, a.shape),
                              _unbroadcast(-g * a.data / (b.data * b.data), b.shape)))


def neg(a: Tensor) -> Tensor:
    return _result(-a.data, (a,), lambda g: (-g,))


def power(a: Tensor, exponent: float) -> Tensor:
    return _result(a.data ** exponent, (a,),
                   lambda g: (g * exponent * a.data ** (exponent - 1),))


def matmul(a, b) -> Tensor:
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise ConfigurationError(f"matmul needs at least 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ConfigurationError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        grad_a = g @ np.swapaxes(b.data, -1, -2)
        grad_b = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return _result(a.data @ b.data, (a, b), backward)


# ---------------------------------------------------------------------------
# reductions and shape manipulation
# ---------------------------------------------------------------------------
def _normalize_axes(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(ax % ndim for ax in axis))


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape),)

    return _result(a.data.sum(axis=axes, keepdims=keepdims), (a,), backward)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    return sum_(a, axes, keepdims) * (1.0 / count)


def reshape(a: Tensor, shape) -> Tensor:
    return _result(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _result(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def getitem(a: Tensor, index) -> Tensor:
    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return (full,)

    return _result(a.data[index], (a,), backward)


def embedding_lookup(table: Tensor, indices: np.ndarray) -> Tensor:
    """Gather rows of a 2-d table; indices may have any integer shape"""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        raise InputError(f"Embedding index out of range [0, {table.shape[0]})")

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, indices.reshape(-1), g.reshape(-1, table.shape[1]))
        return (full,)

    return _result(table.data[indices], (table,), backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    axis = axis % tensors[0].ndim
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _result(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = np.stack([t.data for t in tensors], axis=axis)
    axis = axis % out.ndim

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return _result(out, tensors, backward)


def where(condition: np.ndarray, a: Tensor, fill: float) -> Tensor:
    """Keep a where condition holds, use the constant fill elsewhere"""
    condition = np.asarray(condition, dtype=bool)
    out = np.where(condition, a.data, np.asarray(fill, dtype=a.dtype))
    return _result(out, (a,), lambda g: (_unbroadcast(np.where(condition, g, 0.0), a.shape),))


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------
def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _result(out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    return _result(np.log(a.data), (a,), lambda g: (g / a.data,))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _result(out, (a,), lambda g: (g * (1.0 - out * out),))


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    exp_x = np.exp(x[~positive])
    out[~positive] = exp_x / (1.0 + exp_x)
    return out


def sigmoid(a: Tensor) -> Tensor:
    out = _stable_sigmoid(a.data)
    return _result(out, (a,), lambda g: (g * out * (1.0 - out),))


def relu(a: Tensor) -> Tensor:
    return _result(np.maximum(a.data, 0.0), (a,), lambda g: (g * (a.data > 0),))


def softmax_array(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax_array(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    out = softmax_array(a.data, axis)
    return _result(out, (a,),
                   lambda g: (out * (g - (g * out).sum(axis=axis, keepdims=True)),))


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    out = log_softmax_array(a.data, axis)
    probs = np.exp(out)
    return _result(out, (a,), lambda g: (g - probs * g.sum(axis=axis, keepdims=True),))


# ---------------------------------------------------------------------------
# fused layers and losses
# ---------------------------------------------------------------------------
def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift"""
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    x_hat = centered * inv_std
    width = x.shape[-1]

    def backward(g):
        grad_gamma = _unbroadcast(g * x_hat, gamma.shape)
        grad_beta = _unbroadcast(g, beta.shape)
        d_hat = g * gamma.data
        grad_x = inv_std / width * (
            width * d_hat
            - d_hat.sum(axis=-1, keepdims=True)
            - x_hat * (d_hat * x_hat).sum(axis=-1, keepdims=True)
        )
        return grad_x, grad_gamma, grad_beta

    return _result(x_hat * gamma.data + beta.data, (x, gamma, beta), backward)


def cross_entropy(logits: Tensor, targets, ignore_index: int = -1, reduction: str = "mean") -> Tensor:
    """Softmax cross-entropy of 2-d logits against integer targets

    Rows whose target equals ignore_index contribute nothing. reduction="mean"
    averages over the remaining rows; "none" returns the per-row NLL.
    """
    if logits.ndim != 2:
        raise ConfigurationError(f"cross_entropy expects [rows, vocab] logits, got {logits.shape}")
    targets = np.asarray(targets, dtype=np.int64).reshape(-1)
    if targets.shape[0] != logits.shape[0]:
        raise ConfigurationError(f"{targets.shape[0]} targets for {logits.shape[0]} logit rows")
    vocab = logits.shape[1]
    valid = targets != ignore_index
    if np.any(targets[valid] < 0) or np.any(targets[valid] >= vocab):
        raise InputError(f"Target index out of range [0, {vocab})")
    count = int(valid.sum())
    if reduction == "mean" and count == 0:
        raise InputError("cross_entropy needs at least one non-ignored target")

    log_probs = log_softmax_array(logits.data, axis=-1)
    rows = np.arange(targets.shape[0])
    safe_targets = np.where(valid, targets, 0)
    nll = np.where(valid, -log_probs[rows, safe_targets], 0.0)

    def delta() -> np.ndarray:
        d = np.exp(log_probs)
        d[rows[valid], targets[valid]] -= 1.0
        d[~valid] = 0.0
        return d

    if reduction == "none":
        return _result(nll, (logits,), lambda g: (delta() * g[:, None],))
    if reduction != "mean":
        raise ConfigurationError(f"Unknown reduction: {reduction}")
    return _result(np.asarray(nll.sum() / count, dtype=logits.dtype), (logits,),
                   lambda g: (delta() * (g / count),))


def softmax_cross_entropy(logits: Tensor, targets) -> Tensor:
    """Mean -log softmax(logits)[target]; gradients come from backward()"""
    return cross_entropy(logits, targets)


def binary_cross_entropy_with_logits(logits: Tensor, targets) -> Tensor:
    """Mean sigmoid binary cross-entropy, numerically stable form"""
    targets = np.asarray(targets, dtype=logits.dtype).reshape(logits.shape)
    x = logits.data
    loss = np.maximum(x, 0.0) - x * targets + np.log1p(np.exp(-np.abs(x)))
    n = max(loss.size, 1)
    return _result(np.asarray(loss.sum() / n, dtype=logits.dtype), (logits,),
                   lambda g: ((_stable_sigmoid(x) - targets) * (g / n),))


def backward(loss: Tensor) -> None:
    """Functional form of Tensor.backward for a scalar loss"""
    if not isinstance(loss, Tensor):
        raise UsageError("backward() expects the Tensor returned by a forward pass")
    loss.backward()
