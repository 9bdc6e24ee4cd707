"""
Neural network layers built on the autodiff Tensor

Layers register their weights in a shared ParamStore under a dotted name
prefix and are otherwise plain callables. Dropout is driven by a
DropoutControl that the trainer switches between training (with a seeded
random stream) and evaluation (deterministic).
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple
import math
import numpy as np

from ..errors import ConfigurationError
from . import tensor as T
from .optim import ParamStore
from .tensor import NEG_INF, Tensor


class DropoutControl:
    """Shared train/eval switch; holds the dropout random stream while training"""

    def __init__(self):
        self.rng: Optional[np.random.Generator] = None

    @property
    def training(self) -> bool:
        return self.rng is not None

    def train(self, rng: np.random.Generator) -> None:
        self.rng = rng

    def eval(self) -> None:
        self.rng = None


class Dropout:
    def __init__(self, rate: float, control: DropoutControl):
        if not 0.0 <= rate < 1.0:
            raise ConfigurationError(f"dropout_rate must lie in [0, 1), got {rate}")
        self.rate = rate
        self.control = control

    def __call__(self, x: Tensor) -> Tensor:
        if self.rate == 0.0 or not self.control.training:
            return x
        keep = self.control.rng.random(x.shape) >= self.rate
        return x * (keep.astype(x.dtype) / (1.0 - self.rate))


class Dense:
    """Affine map y = x W + b with fan-in scaled uniform init"""

    def __init__(self, store: ParamStore, name: str, in_dim: int, out_dim: int,
                 rng: np.random.Generator, bias: bool = True, init_scale: float = 1.0):
        bound = init_scale / math.sqrt(in_dim)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = store.add(f"{name}.weight", rng.uniform(-bound, bound, size=(in_dim, out_dim)))
        self.bias = store.add(f"{name}.bias", np.zeros(out_dim)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_dim:
            raise ConfigurationError(f"Dense expects last dim {self.in_dim}, got {x.shape}")
        out = x @ self.weight
        return out + self.bias if self.bias is not None else out


class Embedding:
    def __init__(self, store: ParamStore, name: str, num_embeddings: int, dim: int,
                 rng: np.random.Generator, scale: float = 0.1):
        self.num_embeddings = num_embeddings
        self.dim = dim
        self.table = store.add(f"{name}.table", rng.uniform(-scale, scale, size=(num_embeddings, dim)))

    def __call__(self, indices: np.ndarray) -> Tensor:
        return T.embedding_lookup(self.table, indices)


class LayerNorm:
    def __init__(self, store: ParamStore, name: str, dim: int, eps: float = 1e-5):
        self.eps = eps
        self.gamma = store.add(f"{name}.gamma", np.ones(dim))
        self.beta = store.add(f"{name}.beta", np.zeros(dim))

    def __call__(self, x: Tensor) -> Tensor:
        return T.layer_norm(x, self.gamma, self.beta, self.eps)


class FeedForward:
    def __init__(self, store: ParamStore, name: str, dim: int, hidden_dim: int,
                 rng: np.random.Generator, dropout: Dropout):
        self.up = Dense(store, f"{name}.up", dim, hidden_dim, rng)
        self.down = Dense(store, f"{name}.down", hidden_dim, dim, rng)
        self.dropout = dropout

    def __call__(self, x: Tensor) -> Tensor:
        return self.down(self.dropout(self.up(x).relu()))


def sinusoidal_positions(length: int, dim: int, dtype=np.float64) -> np.ndarray:
    positions = np.arange(length)[:, None]
    rates = np.exp(-math.log(10000.0) * (np.arange(0, dim, 2) / dim))
    table = np.zeros((length, dim), dtype=dtype)
    table[:, 0::2] = np.sin(positions * rates)
    table[:, 1::2] = np.cos(positions * rates[: dim // 2])
    return table


def causal_mask(length: int, memory_length: Optional[int] = None) -> np.ndarray:
    """Boolean [1, 1, T, S] mask; query i may see memory positions j <= i"""
    memory_length = length if memory_length is None else memory_length
    return np.tril(np.ones((length, memory_length), dtype=bool))[None, None]


def padding_mask(lengths: np.ndarray, max_length: int) -> np.ndarray:
    """Boolean [B, 1, 1, S] mask hiding positions past each sequence length"""
    lengths = np.asarray(lengths)
    return (np.arange(max_length)[None, :] < lengths[:, None])[:, None, None, :]


class MultiHeadAttention:
    """Scaled dot-product attention over several heads

    mask is boolean and broadcastable to [batch, heads, queries, keys]; True
    marks allowed positions. Disallowed scores get NEG_INF, so their weights
    are exactly zero.
    """

    def __init__(self, store: ParamStore, name: str, dim: int, num_heads: int,
                 rng: np.random.Generator, dropout: Dropout):
        if dim % num_heads != 0:
            raise ConfigurationError(f"model_dim {dim} is not divisible by num_heads {num_heads}")
        self.dim = dim
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.query = Dense(store, f"{name}.query", dim, dim, rng)
        self.key = Dense(store, f"{name}.key", dim, dim, rng)
        self.value = Dense(store, f"{name}.value", dim, dim, rng)
        self.output = Dense(store, f"{name}.output", dim, dim, rng)
        self.dropout = dropout

    def _heads(self, x: Tensor) -> Tensor:
        batch, length, _ = x.shape
        return x.reshape(batch, length, self.num_heads, self.head_dim).transpose(0, 2, 1, 3)

    def __call__(self, query: Tensor, memory: Optional[Tensor] = None,
                 mask: Optional[np.ndarray] = None) -> Tensor:
        memory = query if memory is None else memory
        if query.ndim != 3 or memory.ndim != 3 or query.shape[-1] != self.dim or memory.shape[-1] != self.dim:
            raise ConfigurationError(
                f"attention expects [batch, seq, {self.dim}] inputs, got {query.shape} and {memory.shape}")
        if query.shape[1] < 1 or memory.shape[1] < 1:
            raise ConfigurationError("attention needs at least one position")
        batch, length, _ = query.shape

        q = self._heads(self.query(query))
        k = self._heads(self.key(memory))
        v = self._heads(self.value(memory))
        scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(self.head_dim))
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            try:
                compatible = np.broadcast_shapes(mask.shape, scores.shape) == scores.shape
            except ValueError:
                compatible = False
            if not compatible:
                raise ConfigurationError(f"mask shape {mask.shape} incompatible with scores {scores.shape}")
            scores = scores + np.where(mask, 0.0, NEG_INF).astype(scores.dtype)
        weights = self.dropout(T.softmax(scores, axis=-1))
        context = (weights @ v).transpose(0, 2, 1, 3).reshape(batch, length, self.dim)
        return self.output(context)


@dataclass
class AttentionConfig:
    model_dim: int = 128
    num_heads: int = 8
    num_layers: int = 4
    dropout_rate: float = 0.0
    causal: bool = False
    use_positional_encoding: bool = False
    ff_multiplier: int = 4

    def __post_init__(self):
        if self.model_dim <= 0 or self.num_heads <= 0 or self.num_layers <= 0:
            raise ConfigurationError("model_dim, num_heads and num_layers must be positive")
        if self.model_dim % self.num_heads != 0:
            raise ConfigurationError(
                f"model_dim {self.model_dim} is not divisible by num_heads {self.num_heads}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")


class AttentionBlock:
    """Pre-norm block: attention, optional cross-attention, feed-forward

    Without memory the attention is self-attention over x. With memory the
    queries come from x and keys/values from the (normalized) memory; the
    prefix-set decoders use this to attend over item embeddings.
    """

    def __init__(self, store: ParamStore, name: str, cfg: AttentionConfig, rng: np.random.Generator,
                 control: DropoutControl, cross_attention: bool = False):
        dim = cfg.model_dim
        self.dropout = Dropout(cfg.dropout_rate, control)
        self.norm_attention = LayerNorm(store, f"{name}.norm_attention", dim)
        self.norm_memory = LayerNorm(store, f"{name}.norm_memory", dim)
        self.attention = MultiHeadAttention(store, f"{name}.attention", dim, cfg.num_heads, rng, self.dropout)
        self.norm_cross = None
        self.cross_attention = None
        if cross_attention:
            self.norm_cross = LayerNorm(store, f"{name}.norm_cross", dim)
            self.cross_attention = MultiHeadAttention(store, f"{name}.cross", dim, cfg.num_heads, rng, self.dropout)
        self.norm_ff = LayerNorm(store, f"{name}.norm_ff", dim)
        self.feed_forward = FeedForward(store, f"{name}.ff", dim, cfg.ff_multiplier * dim, rng, self.dropout)

    def __call__(self, x: Tensor, mask: Optional[np.ndarray] = None, memory: Optional[Tensor] = None,
                 context: Optional[Tensor] = None, context_mask: Optional[np.ndarray] = None,
                 context_scale: float = 1.0) -> Tensor:
        h = self.norm_attention(x)
        source = h if memory is None else self.norm_memory(memory)
        x = x + self.dropout(self.attention(h, source, mask))
        if self.cross_attention is not None and context is not None:
            attended = self.cross_attention(self.norm_cross(x), context, context_mask)
            if context_scale != 1.0:
                attended = attended * context_scale
            x = x + self.dropout(attended)
        return x + self.dropout(self.feed_forward(self.norm_ff(x)))


class AttentionStack:
    """num_layers AttentionBlocks followed by a final LayerNorm"""

    def __init__(self, store: ParamStore, name: str, cfg: AttentionConfig, rng: np.random.Generator,
                 control: DropoutControl, cross_attention: bool = False):
        self.cfg = cfg
        self.blocks: List[AttentionBlock] = [
            AttentionBlock(store, f"{name}.block{i}", cfg, rng, control, cross_attention)
            for i in range(cfg.num_layers)
        ]
        self.final_norm = LayerNorm(store, f"{name}.final_norm", cfg.model_dim)

    def __call__(self, x: Tensor, mask: Optional[np.ndarray] = None, memory: Optional[Tensor] = None,
                 context: Optional[Tensor] = None, context_mask: Optional[np.ndarray] = None,
                 context_scale: float = 1.0) -> Tensor:
        if self.cfg.use_positional_encoding:
            x = x + sinusoidal_positions(x.shape[1], x.shape[2], x.dtype)
        if self.cfg.causal:
            keys = x.shape[1] if memory is None else memory.shape[1]
            causal = causal_mask(x.shape[1], keys)
            mask = causal if mask is None else np.logical_and(mask, causal)
        for block in self.blocks:
            x = block(x, mask, memory, context, context_mask, context_scale)
        return self.final_norm(x)


def forward_attention(x: Tensor, stack: AttentionStack, mask: Optional[np.ndarray] = None) -> Tensor:
    """Run a configured attention stack over x: [batch, seq, model_dim]"""
    if x.ndim != 3 or x.shape[-1] != stack.cfg.model_dim:
        raise ConfigurationError(f"expected [batch, seq, {stack.cfg.model_dim}], got {x.shape}")
    return stack(x, mask)


class LSTMCell:
    """Standard LSTM cell with fused gate weights [input + hidden, 4 * hidden]"""

    def __init__(self, store: ParamStore, name: str, input_dim: int, hidden_size: int,
                 rng: np.random.Generator):
        bound = 1.0 / math.sqrt(hidden_size)
        self.input_dim = input_dim
        self.hidden_size = hidden_size
        self.weight = store.add(f"{name}.weight",
                                rng.uniform(-bound, bound, size=(input_dim + hidden_size, 4 * hidden_size)))
        self.bias = store.add(f"{name}.bias", np.zeros(4 * hidden_size))

    def zero_state(self, batch: int, dtype=np.float64) -> Tuple[Tensor, Tensor]:
        zeros = np.zeros((batch, self.hidden_size), dtype=dtype)
        return Tensor(zeros), Tensor(zeros.copy())

    def __call__(self, state: Tuple[Tensor, Tensor], x: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
        h, c = state
        if x.shape[-1] != self.input_dim or h.shape[-1] != self.hidden_size:
            raise ConfigurationError(
                f"LSTM expects input {self.input_dim} / hidden {self.hidden_size}, got {x.shape} / {h.shape}")
        size = self.hidden_size
        z = T.concat([x, h], axis=-1) @ self.weight + self.bias
        input_gate = z[:, :size].sigmoid()
        forget_gate = z[:, size:2 * size].sigmoid()
        candidate = z[:, 2 * size:3 * size].tanh()
        output_gate = z[:, 3 * size:].sigmoid()
        c_next = forget_gate * c + input_gate * candidate
        h_next = output_gate * c_next.tanh()
        return h_next, c_next, h_next


def lstm_step(cell: LSTMCell, state: Tuple[Tensor, Tensor], x: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
    return cell(state, x)
