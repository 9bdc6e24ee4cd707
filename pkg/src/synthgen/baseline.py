"""
Logistic-regression sanity floor on oracle-labeled item pairs

Features are crossed one-hots per attribute: the unordered pair of codes
(a, b) of every categorical attribute selects one weight. If this linear
model cannot separate compatible from incompatible pairs, the planted signal
is too weak for the neural benchmark to mean anything.
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple
import logging
import numpy as np

from ..catalog import ATTRIBUTES, Catalog, Outfit
from ..nn import Adam, Embedding, ParamStore, Tensor, binary_cross_entropy_with_logits, no_grad, rng_stream
from .world import StyleWorld

logger = logging.getLogger(__name__)


@dataclass
class PairDataset:
    first: np.ndarray   # catalog rows
    second: np.ndarray
    labels: np.ndarray


def build_pair_dataset(world: StyleWorld, catalog: Catalog, outfits: Sequence[Outfit],
                       num_pairs: int, seed: int) -> PairDataset:
    """Half of the pairs come from curated outfits, half are uniform random; all labeled by the pair oracle"""
    rng = rng_stream(seed, "pairs")
    first: List[int] = []
    second: List[int] = []
    for index in range(num_pairs):
        if index % 2 == 0 and outfits:
            outfit = outfits[int(rng.integers(len(outfits)))]
            a, b = rng.choice(len(outfit), size=2, replace=False)
            first.append(catalog.row(outfit.items[a]))
            second.append(catalog.row(outfit.items[b]))
        else:
            a, b = rng.choice(len(catalog), size=2, replace=False)
            first.append(int(a))
            second.append(int(b))
    labels = np.array([world.pair_compatible(catalog.items[a], catalog.items[b])
                       for a, b in zip(first, second)], dtype=np.float64)
    return PairDataset(np.array(first), np.array(second), labels)


class LogisticPairBaseline:
    def __init__(self, catalog: Catalog, seed: int = 0):
        self.catalog = catalog
        self.cardinalities = catalog.schema.cardinalities()
        self.store = ParamStore()
        rng = rng_stream(seed, "baseline-init")
        self.tables = {
            attr: Embedding(self.store, f"cross.{attr}", self.cardinalities[attr] ** 2, 1, rng, scale=0.01)
            for attr in ATTRIBUTES
        }
        self.bias = self.store.add("bias", np.zeros(1))

    def _crossed(self, first: np.ndarray, second: np.ndarray) -> List[Tuple[str, np.ndarray]]:
        codes_a = self.catalog.attribute_codes[first]
        codes_b = self.catalog.attribute_codes[second]
        features = []
        for column, attr in enumerate(ATTRIBUTES):
            size = self.cardinalities[attr]
            low = np.minimum(codes_a[:, column], codes_b[:, column])
            high = np.maximum(codes_a[:, column], codes_b[:, column])
            features.append((attr, low * size + high))
        return features

    def logits(self, first: np.ndarray, second: np.ndarray) -> Tensor:
        total = self.bias
        for attr, index in self._crossed(first, second):
            total = total + self.tables[attr](index).reshape(-1)
        return total

    def fit(self, pairs: PairDataset, epochs: int = 30, batch_size: int = 256,
            learning_rate: float = 0.05, seed: int = 0) -> List[float]:
        optimizer = Adam(learning_rate=learning_rate)
        history = []
        for epoch in range(epochs):
            order = rng_stream(seed, "baseline-batches", epoch).permutation(len(pairs.labels))
            losses = []
            for start in range(0, len(order), batch_size):
                batch = order[start:start + batch_size]
                loss = binary_cross_entropy_with_logits(
                    self.logits(pairs.first[batch], pairs.second[batch]), pairs.labels[batch])
                loss.backward()
                optimizer.step(self.store)
                losses.append(float(loss.data))
            history.append(float(np.mean(losses)))
        logger.info(f"Logistic baseline trained for {epochs} epochs, final loss {history[-1]:.4f}")
        return history

    def predict(self, first: np.ndarray, second: np.ndarray) -> np.ndarray:
        with no_grad():
            return 1.0 / (1.0 + np.exp(-self.logits(first, second).data))


def sanity_floor(world: StyleWorld, catalog: Catalog, outfits: Sequence[Outfit], seed: int,
                 num_pairs: int = 20000, epochs: int = 30) -> float:
    """CP-AUC of the logistic baseline on a held-out 20% of oracle-labeled pairs"""
    from ..evaluation.metrics import roc_auc

    pairs = build_pair_dataset(world, catalog, outfits, num_pairs, seed)
    cut = int(0.8 * num_pairs)
    train = PairDataset(pairs.first[:cut], pairs.second[:cut], pairs.labels[:cut])
    model = LogisticPairBaseline(catalog, seed)
    model.fit(train, epochs=epochs, seed=seed)
    scores = model.predict(pairs.first[cut:], pairs.second[cut:])
    labels = pairs.labels[cut:]
    auc = roc_auc(scores[labels == 1], scores[labels == 0])
    logger.info(f"Logistic sanity floor: CP-AUC {auc:.3f} on {len(labels)} held-out pairs")
    return auc
