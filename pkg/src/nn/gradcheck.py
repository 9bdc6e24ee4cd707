"""
Finite-difference gradient checking
"""
from typing import Callable, Dict, Optional, Sequence, Tuple
import numpy as np

from .tensor import Tensor, no_grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Normwise relative error ||a - n|| / max(||a|| + ||n||, tiny)"""
    denom = max(float(np.linalg.norm(analytic) + np.linalg.norm(numeric)), 1e-12)
    return float(np.linalg.norm(analytic - numeric)) / denom


def compare_gradients(loss_fn: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-5,
                      max_entries: Optional[int] = None,
                      rng: Optional[np.random.Generator] = None) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
    """Analytic and central-difference gradients for each parameter

    loss_fn must rebuild the graph from the current parameter values on every
    call. With max_entries, only a random subset of each parameter's entries
    is perturbed. Returns (analytic, numeric) over the compared entries.
    """
    for param in params:
        param.grad = np.zeros_like(param.data)
    loss_fn().backward()
    analytic = {id(p): p.grad.copy() for p in params}

    pairs: Dict[str, Tuple[np.ndarray, np.ndarray]] = {}
    rng = rng or np.random.default_rng(0)
    for position, param in enumerate(params):
        flat = param.data.reshape(-1)
        indices = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            indices = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        numeric = np.zeros(len(indices))
        with no_grad():
            for k, index in enumerate(indices):
                original = flat[index]
                flat[index] = original + eps
                plus = float(loss_fn().data)
                flat[index] = original - eps
                minus = float(loss_fn().data)
                flat[index] = original
                numeric[k] = (plus - minus) / (2.0 * eps)
        name = param.name or f"param{position}"
        pairs[name] = (analytic[id(param)].reshape(-1)[indices], numeric)
        param.grad = np.zeros_like(param.data)
    return pairs


def gradient_check(loss_fn: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-5,
                   max_entries: Optional[int] = None,
                   rng: Optional[np.random.Generator] = None) -> Dict[str, float]:
    """Relative error per parameter between backward() and central differences"""
    pairs = compare_gradients(loss_fn, params, eps, max_entries, rng)
    return {name: relative_error(a, n) for name, (a, n) in pairs.items()}


def overall_gradient_error(loss_fn: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-5,
                           max_entries: Optional[int] = None,
                           rng: Optional[np.random.Generator] = None) -> float:
    """One normwise relative error over every compared entry of every parameter

    Parameters whose gradient is tiny everywhere carry finite-difference noise
    of the same order; pooling them with the rest keeps that noise from
    dominating the check.
    """
    pairs = compare_gradients(loss_fn, params, eps, max_entries, rng)
    analytic = np.concatenate([a for a, _ in pairs.values()])
    numeric = np.concatenate([n for _, n in pairs.values()])
    return relative_error(analytic, numeric)
