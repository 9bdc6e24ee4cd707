"""
Model construction by family name
"""
from typing import Dict, Type

from ..catalog import Catalog, Vocabulary
from ..errors import ConfigurationError
from .base import OutfitModel
from .bert import BERTModel
from .config import Family, ModelConfig
from .gpt import GPTModel
from .lstm import LSTMModel
from .s2s_lstm import Seq2SeqLSTMModel
from .siamese import SiameseModel
from .transformer import TransformerModel

MODEL_CLASSES: Dict[Family, Type[OutfitModel]] = {
    Family.SIAMESE: SiameseModel,
    Family.LSTM: LSTMModel,
    Family.GPT: GPTModel,
    Family.CTX_GPT: GPTModel,
    Family.BERT: BERTModel,
    Family.CTX_BERT: BERTModel,
    Family.TRANSFORMER: TransformerModel,
    Family.S2S_LSTM: Seq2SeqLSTMModel,
}


def create_model(config: ModelConfig, vocab: Vocabulary, catalog: Catalog, seed: int = 0) -> OutfitModel:
    """Instantiate the model class registered for config.family"""
    if config.family not in MODEL_CLASSES:
        raise ConfigurationError(f"No model registered for family '{config.family}'")
    return MODEL_CLASSES[config.family](config, vocab, catalog, seed)
