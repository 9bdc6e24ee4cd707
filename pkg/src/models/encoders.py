"""
Input encoders shared by the model families

ItemEncoder maps vocabulary tokens to vectors by featurizing the catalog
item (pseudo-image vector + attribute embeddings) and projecting it; the
special tokens (stop, mask, start) have learned vectors. ActionEncoder and
QuestionnaireEncoder turn user contexts into vectors of the same width.
"""
from typing import Dict, List, Optional, Sequence, Tuple
import numpy as np

from ..catalog import (
    EVENT_TYPES, NUM_SPECIAL, QUESTIONNAIRE_BANDS, ActionSequence, AttributeEmbeddings, Catalog,
    Questionnaire, featurize_rows,
)
from ..errors import InputError
from ..nn import Dense, Embedding, ParamStore, Tensor, concat
from ..synthgen.generators import MAX_ACTION_AGE

START = 2  # row of the start vector in the special table


class ItemEncoder:
    def __init__(self, store: ParamStore, name: str, catalog: Catalog, vocab_rows: np.ndarray, dim: int,
                 rng: np.random.Generator, attribute_dims: Dict[str, int]):
        self.catalog = catalog
        self.vocab_rows = vocab_rows
        self.dim = dim
        self.attributes = AttributeEmbeddings(store, f"{name}.attr", catalog.schema.cardinalities(), rng,
                                              attribute_dims)
        self.project = Dense(store, f"{name}.project", self.attributes.output_dim, dim, rng)
        self.special = Embedding(store, f"{name}.special", NUM_SPECIAL + 1, dim, rng)

    @property
    def feature_dim(self) -> int:
        return self.attributes.output_dim

    def features(self, rows: np.ndarray) -> Tensor:
        """Raw featurization of catalog rows, before projection"""
        return featurize_rows(rows, self.catalog, self.attributes)

    def rows(self, rows: np.ndarray) -> Tensor:
        return self.project(self.features(rows))

    def tokens(self, tokens: np.ndarray) -> Tensor:
        tokens = np.asarray(tokens, dtype=np.int64)
        if tokens.size and (tokens.min() < 0 or tokens.max() >= len(self.vocab_rows)):
            raise InputError(f"Token out of range [0, {len(self.vocab_rows)})")
        is_item = tokens >= NUM_SPECIAL
        rows = np.where(is_item, self.vocab_rows[np.where(is_item, tokens, NUM_SPECIAL)], 0)
        item_part = self.rows(rows) * is_item[..., None]
        if is_item.all():
            return item_part
        special_part = self.special(np.where(is_item, 0, tokens)) * (~is_item)[..., None]
        return item_part + special_part

    def start(self, batch: int) -> Tensor:
        return self.special(np.full(batch, START))


def action_arrays(sequences: Sequence[ActionSequence], catalog: Catalog,
                  max_actions: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Padded (rows, event one-hots, normalized ages, lengths), most recent max_actions kept"""
    if not sequences:
        raise InputError("No action sequences given")
    trimmed = []
    for sequence in sequences:
        if not isinstance(sequence, ActionSequence) or len(sequence) == 0:
            raise InputError("Action sequence context is empty")
        trimmed.append(sequence.actions[-max_actions:])
    width = max(len(actions) for actions in trimmed)
    rows = np.zeros((len(trimmed), width), dtype=np.int64)
    events = np.zeros((len(trimmed), width, len(EVENT_TYPES)))
    ages = np.zeros((len(trimmed), width, 1))
    lengths = np.array([len(actions) for actions in trimmed], dtype=np.int64)
    for b, actions in enumerate(trimmed):
        for t, action in enumerate(actions):
            rows[b, t] = catalog.row(action.item_id)
            events[b, t, EVENT_TYPES.index(action.event)] = 1.0
            ages[b, t, 0] = min(action.age_days / MAX_ACTION_AGE, 1.0)
    return rows, events, ages, lengths


class ActionEncoder:
    """Per-action input: item features ‖ one-hot event type ‖ normalized age, projected to dim"""

    def __init__(self, store: ParamStore, name: str, items: ItemEncoder, dim: int,
                 rng: np.random.Generator, max_actions: int = 20):
        self.items = items
        self.max_actions = max_actions
        self.project = Dense(store, f"{name}.project", items.feature_dim + len(EVENT_TYPES) + 1, dim, rng)

    def __call__(self, sequences: Sequence[ActionSequence]) -> Tuple[Tensor, np.ndarray]:
        rows, events, ages, lengths = action_arrays(sequences, self.items.catalog, self.max_actions)
        features = self.items.features(rows)
        extra = Tensor(np.concatenate([events, ages], axis=-1).astype(features.dtype))
        return self.project(concat([features, extra], axis=-1)), lengths

    def summary(self, sequences: Sequence[ActionSequence]) -> Tensor:
        """Masked mean over actions: [batch, dim]"""
        encoded, lengths = self(sequences)
        valid = (np.arange(encoded.shape[1])[None, :] < lengths[:, None]).astype(encoded.dtype)
        weights = valid / lengths[:, None]
        return (encoded * weights[..., None]).sum(axis=1)


LIST_FIELDS = ("favorite_brands", "favorite_colors", "nogo_categories")


class QuestionnaireEncoder:
    """Per-field embeddings averaged over fields, then projected to dim"""

    def __init__(self, store: ParamStore, name: str, catalog: Catalog, dim: int, field_dim: int,
                 num_styles: int, rng: np.random.Generator):
        cards = catalog.schema.cardinalities()
        # list fields get one extra row standing for "nothing selected"
        self.sizes: Dict[str, int] = {
            "favorite_brands": cards["brand"] + 1,
            "favorite_colors": cards["color"] + 1,
            "nogo_categories": cards["category"] + 1,
            "gender": cards["gender"],
            **QUESTIONNAIRE_BANDS,
            "style_archetype": num_styles,
        }
        self.tables = {field: Embedding(store, f"{name}.{field}", size, field_dim, rng)
                       for field, size in self.sizes.items()}
        self.project = Dense(store, f"{name}.project", field_dim, dim, rng)

    def _list_field(self, field: str, values: List[Tuple[int, ...]]) -> Tensor:
        none_index = self.sizes[field] - 1
        width = max(1, max(len(v) for v in values))
        index = np.full((len(values), width), none_index, dtype=np.int64)
        weights = np.zeros((len(values), width))
        for b, codes in enumerate(values):
            if codes:
                index[b, :len(codes)] = codes
                weights[b, :len(codes)] = 1.0 / len(codes)
            else:
                weights[b, 0] = 1.0
        if index.min() < 0 or index.max() > none_index:
            raise InputError(f"Questionnaire {field} code out of range")
        embedded = self.tables[field](index)
        return (embedded * weights[..., None].astype(embedded.dtype)).sum(axis=1)

    def __call__(self, questionnaires: Sequence[Questionnaire]) -> Tensor:
        if not questionnaires or any(not isinstance(q, Questionnaire) for q in questionnaires):
            raise InputError("Questionnaire context expected")
        parts = [self._list_field(field, [getattr(q, field) for q in questionnaires]) for field in LIST_FIELDS]
        for field in self.sizes:
            if field in LIST_FIELDS:
                continue
            codes = np.array([getattr(q, field) for q in questionnaires], dtype=np.int64)
            if codes.min() < 0 or codes.max() >= self.sizes[field]:
                raise InputError(f"Questionnaire {field} code out of range")
            parts.append(self.tables[field](codes))
        total = parts[0]
        for part in parts[1:]:
            total = total + part
        return self.project(total * (1.0 / len(parts)))


class ContextEncoder:
    """Context token for the contextual models: questionnaire or action-sequence summary"""

    def __init__(self, store: ParamStore, name: str, mode: str, items: ItemEncoder, catalog: Catalog,
                 dim: int, field_dim: int, num_styles: int, max_actions: int, rng: np.random.Generator):
        self.mode = mode
        self.questionnaire: Optional[QuestionnaireEncoder] = None
        self.actions: Optional[ActionEncoder] = None
        if mode == "questionnaire":
            self.questionnaire = QuestionnaireEncoder(store, f"{name}.questionnaire", catalog, dim, field_dim,
                                                      num_styles, rng)
        else:
            self.actions = ActionEncoder(store, f"{name}.actions", items, dim, rng, max_actions)

    def __call__(self, contexts: Sequence) -> Tensor:
        if self.questionnaire is not None:
            return self.questionnaire(contexts)
        return self.actions.summary(contexts)
