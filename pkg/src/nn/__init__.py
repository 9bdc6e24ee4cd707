"""
nn-core Module

Dense tensors with reverse-mode differentiation, the layers the outfit models
are built from, and the Adam optimizer.
"""
from .tensor import (
    Tensor, NEG_INF, no_grad, is_grad_enabled, as_tensor, backward,
    get_default_dtype, set_default_dtype, concat, stack, where, embedding_lookup,
    softmax, log_softmax, softmax_array, log_softmax_array, layer_norm,
    cross_entropy, softmax_cross_entropy, binary_cross_entropy_with_logits,
)
from .optim import ParamStore, Adam, optimizer_step
from .layers import (
    AttentionConfig, AttentionBlock, AttentionStack, Dense, Dropout, DropoutControl,
    Embedding, FeedForward, LayerNorm, LSTMCell, MultiHeadAttention,
    causal_mask, padding_mask, sinusoidal_positions, forward_attention, lstm_step,
)
from .random import rng_stream, derive_seed
from .gradcheck import compare_gradients, gradient_check, overall_gradient_error, relative_error

__all__ = [
    "Tensor", "NEG_INF", "no_grad", "is_grad_enabled", "as_tensor", "backward",
    "get_default_dtype", "set_default_dtype", "concat", "stack", "where", "embedding_lookup",
    "softmax", "log_softmax", "softmax_array", "log_softmax_array", "layer_norm",
    "cross_entropy", "softmax_cross_entropy", "binary_cross_entropy_with_logits",
    "ParamStore", "Adam", "optimizer_step",
    "AttentionConfig", "AttentionBlock", "AttentionStack", "Dense", "Dropout", "DropoutControl",
    "Embedding", "FeedForward", "LayerNorm", "LSTMCell", "MultiHeadAttention",
    "causal_mask", "padding_mask", "sinusoidal_positions", "forward_attention", "lstm_step",
    "rng_stream", "derive_seed", "gradient_check", "compare_gradients", "overall_gradient_error", "relative_error",
]
