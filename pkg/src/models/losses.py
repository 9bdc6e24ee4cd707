"""
Per-family losses and scores as plain functions

Thin wrappers over the model methods, checking that the model belongs to the
family the loss is defined for. Sequences are vocabulary tokens.
"""
from typing import Optional, Sequence, Union
import numpy as np

from ..catalog import ActionSequence, Item, Outfit, UserContext
from ..errors import ConfigurationError, InputError
from ..nn import Tensor
from .bert import BERTModel
from .gpt import GPTModel
from .lstm import LSTMModel
from .s2s_lstm import Seq2SeqLSTMModel
from .siamese import SiameseModel
from .transformer import TransformerModel

TokenSequences = Union[np.ndarray, Sequence[np.ndarray]]


def _batch(sequences: TokenSequences):
    if isinstance(sequences, np.ndarray) and sequences.ndim == 1:
        return [sequences]
    return list(sequences)


def _require(model, cls, name: str) -> None:
    if not isinstance(model, cls):
        raise ConfigurationError(f"{name} needs a {cls.__name__}, got {type(model).__name__}")


def siamese_pair_score(model: SiameseModel, a: Item, b: Item) -> float:
    _require(model, SiameseModel, "siamese_pair_score")
    return model.pair_score(a, b)


def siamese_outfit_score(model: SiameseModel, outfit: Outfit) -> float:
    _require(model, SiameseModel, "siamese_outfit_score")
    return float(model.score_outfits([outfit])[0])


def lstm_loss(model: LSTMModel, sequences: TokenSequences,
              contexts: Optional[Sequence[UserContext]] = None) -> Tensor:
    _require(model, LSTMModel, "lstm_loss")
    return model.sequence_loss(_batch(sequences), contexts)


def gpt_loss(model: GPTModel, sequences: TokenSequences,
             contexts: Optional[Sequence[UserContext]] = None) -> Tensor:
    _require(model, GPTModel, "gpt_loss")
    return model.sequence_loss(_batch(sequences), contexts)


def bert_loss(model: BERTModel, sequences: TokenSequences, mask_positions: Union[int, Sequence[int]],
              contexts: Optional[Sequence[UserContext]] = None) -> Tensor:
    _require(model, BERTModel, "bert_loss")
    positions = [mask_positions] if isinstance(mask_positions, (int, np.integer)) else list(mask_positions)
    return model.masked_loss(_batch(sequences), positions, contexts)


def _require_actions(users: Sequence[ActionSequence]) -> None:
    for user in users:
        if not isinstance(user, ActionSequence) or len(user) == 0:
            raise InputError("Action sequence context is empty")


def transformer_loss(model: TransformerModel, users: Sequence[ActionSequence],
                     sequences: TokenSequences) -> Tensor:
    _require(model, TransformerModel, "transformer_loss")
    _require_actions(users)
    return model.sequence_loss(_batch(sequences), list(users))


def s2s_lstm_loss(model: Seq2SeqLSTMModel, users: Sequence[ActionSequence],
                  sequences: TokenSequences) -> Tensor:
    _require(model, Seq2SeqLSTMModel, "s2s_lstm_loss")
    _require_actions(users)
    return model.sequence_loss(_batch(sequences), list(users))
