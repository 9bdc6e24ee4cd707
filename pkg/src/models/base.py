"""
Shared model plumbing: training examples, the base class, capability protocols
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence, Tuple, runtime_checkable
import logging
import numpy as np

from ..catalog import NUM_SPECIAL, STOP, UNK, Catalog, Outfit, UserContext, UserSample, Vocabulary, canonical_order
from ..errors import UsageError
from ..nn import DropoutControl, ParamStore, Tensor, rng_stream
from .config import ModelConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Example:
    """An outfit as vocabulary tokens in canonical order, with its optional user context"""
    tokens: np.ndarray
    context: Optional[UserContext] = None
    outfit: Optional[Outfit] = None
    anchor: Optional[str] = None

    def __len__(self) -> int:
        return len(self.tokens)


def encode_outfit(outfit: Outfit, vocab: Vocabulary, catalog: Catalog) -> np.ndarray:
    """Canonical-order tokens; out-of-vocabulary items come back as UNK"""
    return vocab.encode(canonical_order(outfit, catalog))


def make_examples(outfits: Sequence[Outfit], vocab: Vocabulary, catalog: Catalog,
                  samples: Optional[Sequence[UserSample]] = None,
                  min_length: int = 2) -> Tuple[List[Example], int]:
    """Examples from plain outfits or user samples; returns (examples, skipped)

    Out-of-vocabulary items are dropped from the token sequence; outfits left
    with fewer than min_length known items are skipped.
    """
    sources = samples if samples is not None else [None] * len(outfits)
    examples: List[Example] = []
    skipped = 0
    for position, sample in enumerate(sources):
        outfit = sample.outfit if sample is not None else outfits[position]
        tokens = encode_outfit(outfit, vocab, catalog)
        tokens = tokens[tokens != UNK]
        if len(tokens) < min_length:
            skipped += 1
            continue
        examples.append(Example(tokens, sample.context if sample is not None else None, outfit,
                                sample.anchor if sample is not None else None))
    if skipped:
        logger.warning(f"Skipped {skipped} outfits with fewer than {min_length} in-vocabulary items")
    return examples, skipped


def pad_tokens(sequences: Sequence[np.ndarray], fill: int = STOP,
               min_width: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """[B, L] token matrix and the true lengths"""
    lengths = np.array([len(s) for s in sequences], dtype=np.int64)
    width = max(int(lengths.max()) if len(lengths) else 0, min_width)
    batch = np.full((len(sequences), width), fill, dtype=np.int64)
    for row, sequence in enumerate(sequences):
        batch[row, :len(sequence)] = sequence
    return batch, lengths


def targets_with_stop(sequences: Sequence[np.ndarray], width: int) -> np.ndarray:
    """Targets [x1..xn, STOP] padded with -1 to width"""
    targets = np.full((len(sequences), width), -1, dtype=np.int64)
    for row, sequence in enumerate(sequences):
        targets[row, :len(sequence)] = sequence
        targets[row, len(sequence)] = STOP
    return targets


class OutfitModel(ABC):
    """Base class: parameters, dropout switch, vocabulary row lookup"""

    def __init__(self, config: ModelConfig, vocab: Vocabulary, catalog: Catalog, seed: int = 0):
        self.config = config
        self.vocab = vocab
        self.catalog = catalog
        self.seed = seed
        self.store = ParamStore(np.float32 if config.dtype == "float32" else np.float64)
        self.dropout_control = DropoutControl()
        self.forward_passes = 0
        rows = np.full(vocab.size, -1, dtype=np.int64)
        rows[NUM_SPECIAL:] = catalog.rows(vocab.item_ids)
        self.vocab_rows = rows
        self._build(rng_stream(seed, "init", config.family.value))
        logger.info(f"Built {config.family.value} model with {self.store.num_parameters()} parameters")

    @property
    def family(self) -> str:
        return self.config.family.value

    @property
    def vocab_size(self) -> int:
        return self.vocab.size

    @abstractmethod
    def _build(self, rng: np.random.Generator) -> None:
        """Register parameters and layers"""

    @abstractmethod
    def loss(self, examples: Sequence[Example], rng: np.random.Generator) -> Tensor:
        """Mean training loss of one batch"""

    def train_mode(self, rng: np.random.Generator) -> None:
        self.dropout_control.train(rng)

    def eval_mode(self) -> None:
        self.dropout_control.eval()

    def _require_contexts(self, contexts: Optional[Sequence[Optional[UserContext]]], batch: int):
        if not self.config.contextual:
            return None
        if contexts is None or len(contexts) != batch or any(c is None for c in contexts):
            raise UsageError(f"{self.family} needs one user context per sequence")
        return list(contexts)


@runtime_checkable
class NextItemModel(Protocol):
    def next_log_probs(self, prefixes: Sequence[np.ndarray],
                       contexts: Optional[Sequence[UserContext]] = None) -> np.ndarray: ...


@runtime_checkable
class MaskedItemModel(Protocol):
    def masked_log_probs(self, outfits: Sequence[np.ndarray], mask_positions: Sequence[int],
                         contexts: Optional[Sequence[UserContext]] = None) -> np.ndarray: ...


@runtime_checkable
class BidirectionalModel(Protocol):
    def direction_log_probs(self, prefixes: Sequence[np.ndarray], direction: str,
                            contexts: Optional[Sequence[UserContext]] = None) -> np.ndarray: ...

    def blank_log_probs(self, prefixes: Sequence[np.ndarray], suffixes: Sequence[np.ndarray],
                        contexts: Optional[Sequence[UserContext]] = None) -> np.ndarray: ...


@runtime_checkable
class OutfitScoringModel(Protocol):
    def outfit_scores(self, outfits: Sequence[np.ndarray]) -> np.ndarray: ...


@runtime_checkable
class SequenceScoringModel(Protocol):
    def item_log_likelihoods(self, sequences: Sequence[np.ndarray],
                             contexts: Optional[Sequence[UserContext]] = None) -> List[np.ndarray]: ...
