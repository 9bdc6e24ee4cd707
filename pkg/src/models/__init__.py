"""
Models Module

The outfit model families: generalized Siamese net, bidirectional LSTM,
position-free GPT and BERT (plain and contextual), encoder-decoder
Transformer and sequence-to-sequence LSTM.
"""
from .config import ContextMode, Family, ModelConfig, PROFILES, model_config
from .base import (
    BidirectionalModel, Example, MaskedItemModel, NextItemModel, OutfitModel, OutfitScoringModel,
    SequenceScoringModel,
    encode_outfit, make_examples, pad_tokens, targets_with_stop,
)
from .encoders import ActionEncoder, ContextEncoder, ItemEncoder, QuestionnaireEncoder
from .decoder import PrefixSetDecoder
from .gpt import GPTModel
from .bert import BERTModel
from .lstm import LSTMModel
from .s2s_lstm import Seq2SeqLSTMModel
from .transformer import TransformerModel
from .siamese import SiameseModel
from .registry import MODEL_CLASSES, create_model
from .losses import (
    bert_loss, gpt_loss, lstm_loss, s2s_lstm_loss, siamese_outfit_score, siamese_pair_score, transformer_loss,
)

__all__ = [
    "ContextMode", "Family", "ModelConfig", "PROFILES", "model_config",
    "BidirectionalModel", "Example", "MaskedItemModel", "NextItemModel", "OutfitModel", "OutfitScoringModel",
    "SequenceScoringModel",
    "encode_outfit", "make_examples", "pad_tokens", "targets_with_stop",
    "ActionEncoder", "ContextEncoder", "ItemEncoder", "QuestionnaireEncoder", "PrefixSetDecoder",
    "GPTModel", "BERTModel", "LSTMModel", "Seq2SeqLSTMModel", "TransformerModel", "SiameseModel",
    "MODEL_CLASSES", "create_model",
    "bert_loss", "gpt_loss", "lstm_loss", "s2s_lstm_loss", "siamese_outfit_score", "siamese_pair_score",
    "transformer_loss",
]
