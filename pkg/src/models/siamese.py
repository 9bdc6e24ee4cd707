"""
Generalized Siamese compatibility network

Every category has its own two-layer subnet (weights are not shared). A pair
of encodings x, y is compared through [x y (x-y)^2 x*y]; a whole outfit is
scored from its per-category slot encodings plus the same interaction terms
over every pair of slots. Categories missing from an outfit use a learned
null vector for their slot.
"""
from itertools import combinations
from typing import List, Sequence
import numpy as np

from ..catalog import CATEGORIES, AttributeEmbeddings, Item, Outfit, featurize_rows
from ..errors import ConfigurationError, InputError
from ..nn import Dense, Tensor, binary_cross_entropy_with_logits, concat, no_grad
from ..synthgen.negatives import negative_sample
from .base import Example, OutfitModel

NUM_SLOTS = len(CATEGORIES)
SLOT_PAIRS = list(combinations(range(NUM_SLOTS), 2))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -x))


class SiameseModel(OutfitModel):
    def _build(self, rng: np.random.Generator) -> None:
        c = self.config
        units = c.siamese_units
        self.attributes = AttributeEmbeddings(self.store, "items.attr", self.catalog.schema.cardinalities(), rng,
                                              c.attribute_dims)
        feature_dim = self.attributes.output_dim
        self.subnets = {
            k: (Dense(self.store, f"subnet.{CATEGORIES[k]}.0", feature_dim, units, rng),
                Dense(self.store, f"subnet.{CATEGORIES[k]}.1", units, units, rng))
            for k in sorted(set(c.siamese_categories))
        }
        self.null_slots = self.store.add("null_slots", rng.uniform(-0.1, 0.1, size=(NUM_SLOTS, units)))
        self.pair_head = [Dense(self.store, "pair.0", 4 * units, units, rng),
                          Dense(self.store, "pair.1", units, units, rng),
                          Dense(self.store, "pair.out", units, 1, rng)]
        outfit_in = NUM_SLOTS * units + len(SLOT_PAIRS) * 2 * units
        self.outfit_head = [Dense(self.store, "outfit.0", outfit_in, units, rng),
                            Dense(self.store, "outfit.1", units, units, rng),
                            Dense(self.store, "outfit.out", units, 1, rng)]

    # -- encodings ------------------------------------------------------
    def encode_rows(self, rows: np.ndarray) -> Tensor:
        """Category-specific subnet encoding of catalog rows: [N, units]"""
        rows = np.asarray(rows, dtype=np.int64)
        categories = self.catalog.attribute_codes[rows, 0]
        missing = set(np.unique(categories).tolist()) - set(self.subnets)
        if missing:
            raise ConfigurationError(f"No subnet for categories {[CATEGORIES[k] for k in sorted(missing)]}")
        features = featurize_rows(rows, self.catalog, self.attributes)
        encoded = None
        for k, (first, second) in self.subnets.items():
            selected = np.flatnonzero(categories == k)
            if not len(selected):
                continue
            part = second(first(features[selected]).relu()).relu()
            scatter = np.zeros((len(rows), len(selected)), dtype=self.store.dtype)
            scatter[selected, np.arange(len(selected))] = 1.0
            placed = Tensor(scatter) @ part
            encoded = placed if encoded is None else encoded + placed
        return encoded

    def _slots(self, rows_per_outfit: Sequence[np.ndarray]) -> Tensor:
        """Per-category mean encodings [B, 7, units]; empty categories get the null slot"""
        if any(len(rows) == 0 for rows in rows_per_outfit):
            raise InputError("Cannot score an empty outfit")
        flat = np.concatenate([np.asarray(r, dtype=np.int64) for r in rows_per_outfit])
        owners = np.repeat(np.arange(len(rows_per_outfit)), [len(r) for r in rows_per_outfit])
        slot_of = owners * NUM_SLOTS + self.catalog.attribute_codes[flat, 0]
        counts = np.bincount(slot_of, minlength=len(rows_per_outfit) * NUM_SLOTS)
        assign = np.zeros((len(counts), len(flat)), dtype=self.store.dtype)
        assign[slot_of, np.arange(len(flat))] = 1.0 / counts[slot_of]
        encoded = self.encode_rows(flat)
        batch, units = len(rows_per_outfit), encoded.shape[1]
        slots = (Tensor(assign) @ encoded).reshape(batch, NUM_SLOTS, units)
        missing = (counts == 0).reshape(batch, NUM_SLOTS, 1).astype(self.store.dtype)
        return slots + self.null_slots.reshape(1, NUM_SLOTS, units) * missing

    @staticmethod
    def _mlp(layers: List[Dense], x: Tensor) -> Tensor:
        for layer in layers[:-1]:
            x = layer(x).relu()
        return layers[-1](x)

    def slot_logits(self, slots: Tensor) -> Tensor:
        batch, _, units = slots.shape
        first = slots[:, [a for a, _ in SLOT_PAIRS], :]
        second = slots[:, [b for _, b in SLOT_PAIRS], :]
        difference = first - second
        interactions = concat([difference * difference, first * second], axis=-1)
        features = concat([slots.reshape(batch, NUM_SLOTS * units),
                           interactions.reshape(batch, len(SLOT_PAIRS) * 2 * units)], axis=-1)
        return self._mlp(self.outfit_head, features).reshape(batch)

    def pair_logits(self, rows_a: np.ndarray, rows_b: np.ndarray) -> Tensor:
        x, y = self.encode_rows(rows_a), self.encode_rows(rows_b)
        difference = x - y
        return self._mlp(self.pair_head, concat([x, y, difference * difference, x * y], axis=-1)).reshape(len(rows_a))

    def outfit_logits(self, rows_per_outfit: Sequence[np.ndarray]) -> Tensor:
        return self.slot_logits(self._slots(rows_per_outfit))

    # -- training -------------------------------------------------------
    def _outfit_rows(self, outfit: Outfit) -> np.ndarray:
        return self.catalog.rows(list(outfit.items))

    def loss(self, examples: Sequence[Example], rng: np.random.Generator) -> Tensor:
        """Outfit BCE on positives vs corrupted copies plus pair BCE on within-outfit vs random pairs"""
        positives = [e.outfit for e in examples]
        negatives = [negative_sample(outfit, self.catalog, rng) for outfit in positives]
        rows = [self._outfit_rows(o) for o in positives + negatives]
        labels = np.concatenate([np.ones(len(positives)), np.zeros(len(negatives))])
        outfit_loss = binary_cross_entropy_with_logits(self.outfit_logits(rows), labels)

        first, second, pair_labels = [], [], []
        for outfit_rows in rows[:len(positives)]:
            i, j = rng.choice(len(outfit_rows), size=2, replace=False)
            first.extend([outfit_rows[i], outfit_rows[i]])
            second.extend([outfit_rows[j], int(rng.integers(len(self.catalog)))])
            pair_labels.extend([1.0, 0.0])
        pair_loss = binary_cross_entropy_with_logits(
            self.pair_logits(np.array(first), np.array(second)), np.array(pair_labels))
        return outfit_loss + pair_loss

    # -- scoring --------------------------------------------------------
    def pair_score(self, a: Item, b: Item) -> float:
        with no_grad():
            logit = self.pair_logits(self.catalog.rows([a.item_id]), self.catalog.rows([b.item_id]))
        return float(_sigmoid(logit.data)[0])

    def score_outfits(self, outfits: Sequence[Outfit]) -> np.ndarray:
        with no_grad():
            logits = self.outfit_logits([self._outfit_rows(o) for o in outfits])
        return _sigmoid(logits.data)

    def outfit_scores(self, outfits: Sequence[np.ndarray]) -> np.ndarray:
        """Compatibility probabilities of token-encoded outfits"""
        with no_grad():
            logits = self.outfit_logits([self.vocab_rows[np.asarray(t, dtype=np.int64)] for t in outfits])
        return _sigmoid(logits.data)

    def blank_scores(self, partial_rows: np.ndarray, candidate_rows: np.ndarray,
                     batch_size: int = 512) -> np.ndarray:
        """Score of partial outfit + c for every candidate row c"""
        partial_rows = np.asarray(partial_rows, dtype=np.int64)
        candidate_rows = np.asarray(candidate_rows, dtype=np.int64)
        scores = np.empty(len(candidate_rows))
        with no_grad():
            known = self.encode_rows(partial_rows).data if len(partial_rows) else None
            candidates = self.encode_rows(candidate_rows).data
            units = candidates.shape[1]
            sums = np.zeros((NUM_SLOTS, units))
            counts = np.zeros(NUM_SLOTS)
            if known is not None:
                np.add.at(sums, self.catalog.attribute_codes[partial_rows, 0], known)
                np.add.at(counts, self.catalog.attribute_codes[partial_rows, 0], 1.0)
            candidate_slots = self.catalog.attribute_codes[candidate_rows, 0]
            null = self.null_slots.data
            for start in range(0, len(candidate_rows), batch_size):
                stop = min(start + batch_size, len(candidate_rows))
                picked = np.arange(stop - start)
                slot_sums = np.repeat(sums[None], stop - start, axis=0)
                slot_counts = np.repeat(counts[None], stop - start, axis=0)
                slot_sums[picked, candidate_slots[start:stop]] += candidates[start:stop]
                slot_counts[picked, candidate_slots[start:stop]] += 1.0
                slots = np.where(slot_counts[..., None] > 0,
                                 slot_sums / np.maximum(slot_counts, 1.0)[..., None], null[None])
                scores[start:stop] = _sigmoid(self.slot_logits(Tensor(slots.astype(self.store.dtype))).data)
        return scores
