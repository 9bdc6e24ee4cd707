"""
Parameter storage and the adaptive-moment optimizer
"""
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple
import logging
import numpy as np

from ..errors import CheckpointError, ConfigurationError
from .tensor import Tensor

logger = logging.getLogger(__name__)


class ParamStore:
    """Named parameters, their gradient slots, and Adam state

    Parameters keep their registration order; that order is what checkpoints
    serialize, so building the same architecture twice yields the same layout.
    """

    def __init__(self, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self._params: Dict[str, Tensor] = {}
        self.first_moment: Dict[str, np.ndarray] = {}
        self.second_moment: Dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise ConfigurationError(f"Parameter '{name}' registered twice")
        param = Tensor(np.array(value, dtype=self.dtype), requires_grad=True, name=name)
        param.grad = np.zeros_like(param.data)
        self._params[name] = param
        self.first_moment[name] = np.zeros_like(param.data)
        self.second_moment[name] = np.zeros_like(param.data)
        return param

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self) -> List[Tuple[str, Tensor]]:
        return list(self._params.items())

    def tensors(self) -> List[Tensor]:
        return list(self._params.values())

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self._params.values()))

    def zero_grad(self) -> None:
        for param in self._params.values():
            param.grad = np.zeros_like(param.data)

    def grad_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in self._params.values()
                                 if p.grad is not None)))

    def state_arrays(self) -> Dict[str, np.ndarray]:
        """Flat name -> array view of parameters and optimizer moments"""
        arrays: Dict[str, np.ndarray] = {}
        for name, param in self._params.items():
            arrays[f"param/{name}"] = param.data
            arrays[f"adam_m/{name}"] = self.first_moment[name]
            arrays[f"adam_v/{name}"] = self.second_moment[name]
        return arrays

    def load_state_arrays(self, arrays: Dict[str, np.ndarray], step_count: int) -> None:
        """Overwrite parameters and moments in place from state_arrays() output"""
        for name, param in self._params.items():
            for prefix, target in (("param", param.data), ("adam_m", self.first_moment[name]),
                                   ("adam_v", self.second_moment[name])):
                key = f"{prefix}/{name}"
                if key not in arrays:
                    raise CheckpointError(f"Checkpoint lacks array '{key}'")
                if arrays[key].shape != target.shape:
                    raise CheckpointError(
                        f"Shape mismatch for '{key}': checkpoint {arrays[key].shape}, model {target.shape}")
                target[...] = arrays[key]
        self.step_count = int(step_count)
        self.zero_grad()


@dataclass
class Adam:
    """Adaptive-moment update rule; the moments live in the ParamStore"""
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: Optional[float] = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be positive, got {self.learning_rate}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigurationError("Adam betas must lie in [0, 1)")

    def step(self, store: ParamStore, learning_rate: Optional[float] = None) -> ParamStore:
        lr = self.learning_rate if learning_rate is None else learning_rate
        scale = 1.0
        if self.clip_norm is not None:
            norm = store.grad_norm()
            if norm > self.clip_norm:
                scale = self.clip_norm / norm

        store.step_count += 1
        t = store.step_count
        correction1 = 1.0 - self.beta1 ** t
        correction2 = 1.0 - self.beta2 ** t
        for name, param in store.items():
            grad = param.grad * scale
            m = store.first_moment[name]
            v = store.second_moment[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            param.data -= lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
        store.zero_grad()
        return store


def optimizer_step(params: ParamStore, learning_rate: float = 1e-3,
                   optimizer: Optional[Adam] = None) -> ParamStore:
    """Apply one Adam update from the accumulated gradients, then clear them"""
    optimizer = optimizer or Adam(learning_rate=learning_rate)
    return optimizer.step(params, learning_rate=learning_rate)
