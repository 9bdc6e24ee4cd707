"""
Nearest-neighbour personalized ranking over precomputed candidate outfits

A candidate outfit x is scored against a user's history U as the mean over
items of x of the best cosine similarity (on image vectors) to any history
item. Candidates per anchor item are built once from training outfits and
random template-shaped sets that the Siamese model accepts.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import numpy as np

from ..catalog import ActionSequence, Catalog, Outfit, OutfitSource
from ..errors import AnchorNotFoundError, InputError, RankingError
from ..nn import rng_stream

logger = logging.getLogger(__name__)

DEFAULT_CANDIDATE_CAP = 100
DEFAULT_SCORE_THRESHOLD = 0.5


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    return vectors / np.where(norms > 0, norms, 1.0)


def nn_score(history: np.ndarray, outfit: np.ndarray) -> float:
    """Mean over outfit vectors of the max cosine similarity to the history vectors"""
    similarity = _unit_rows(outfit) @ _unit_rows(history).T
    return float(similarity.max(axis=1).mean())


def nn_rank(user: ActionSequence, candidates: Sequence[Outfit], catalog: Catalog) -> List[Tuple[Outfit, float]]:
    """Candidates with their scores, best first; ties keep the input order"""
    if not isinstance(user, ActionSequence) or len(user) == 0:
        raise RankingError("Cannot rank candidates for an empty history")
    history = catalog.image_matrix[catalog.rows(user.item_ids)]
    scores = [nn_score(history, catalog.image_matrix[catalog.rows(list(c.items))]) for c in candidates]
    order = sorted(range(len(candidates)), key=lambda i: -scores[i])
    return [(candidates[i], scores[i]) for i in order]


@dataclass
class CandidateOutfitIndex:
    """anchor item id -> up to cap candidate outfits, each containing the anchor"""
    cap: int = DEFAULT_CANDIDATE_CAP
    candidates: Dict[str, List[Outfit]] = field(default_factory=dict)

    def add(self, anchor: str, outfit: Outfit) -> bool:
        if anchor not in outfit:
            raise InputError(f"Candidate outfit does not contain its anchor {anchor}")
        bucket = self.candidates.setdefault(anchor, [])
        if len(bucket) >= self.cap or outfit in bucket:
            return False
        bucket.append(outfit)
        return True

    def get(self, anchor: str) -> List[Outfit]:
        if anchor not in self.candidates:
            raise AnchorNotFoundError(f"No candidate outfits for anchor {anchor}")
        return self.candidates[anchor]

    def __contains__(self, anchor: str) -> bool:
        return anchor in self.candidates

    def __len__(self) -> int:
        return len(self.candidates)


def _random_set(anchor: str, template: Outfit, catalog: Catalog, by_category: Dict[int, List[str]],
                rng: np.random.Generator) -> Optional[Outfit]:
    """Fill the category shape of template with random items, keeping the anchor in its slot"""
    anchor_category = catalog.category_of(anchor)
    categories = [catalog.category_of(item) for item in template.items]
    if anchor_category not in categories:
        return None
    categories.remove(anchor_category)
    items = [anchor]
    for category in categories:
        choices = by_category.get(category, [])
        if not choices:
            return None
        items.append(choices[int(rng.integers(len(choices)))])
    if len(set(items)) != len(items):
        return None
    return Outfit(tuple(items), source=OutfitSource.GENERATED)


def build_candidate_index(anchors: Sequence[str], training_outfits: Sequence[Outfit], scorer, catalog: Catalog,
                          seed: int = 0, cap: int = DEFAULT_CANDIDATE_CAP,
                          threshold: float = DEFAULT_SCORE_THRESHOLD, attempts: int = 200) -> CandidateOutfitIndex:
    """Candidates per anchor: training outfits containing it, then random template-shaped sets

    scorer maps a list of outfits to compatibility probabilities (the Siamese
    model's score_outfits); only candidates scoring above threshold are kept.
    """
    index = CandidateOutfitIndex(cap=cap)
    containing: Dict[str, List[Outfit]] = {}
    for outfit in training_outfits:
        for item in outfit.items:
            containing.setdefault(item, []).append(outfit)
    by_category: Dict[int, List[str]] = {}
    for item in catalog.items:
        by_category.setdefault(catalog.category_of(item.item_id), []).append(item.item_id)
    templates = [o for o in training_outfits if len(o) >= 2]

    for anchor in dict.fromkeys(anchors):
        if anchor not in catalog:
            logger.warning(f"Anchor {anchor} is not in the catalog; skipped")
            continue
        rng = rng_stream(seed, "candidates", anchor)
        proposals = list(containing.get(anchor, []))
        if templates:
            for _ in range(attempts):
                proposal = _random_set(anchor, templates[int(rng.integers(len(templates)))], catalog,
                                       by_category, rng)
                if proposal is not None:
                    proposals.append(proposal)
        if not proposals:
            continue
        scores = np.asarray(scorer(proposals))
        for proposal, score in zip(proposals, scores):
            if score > threshold:
                index.add(anchor, proposal)
            if len(index.candidates.get(anchor, [])) >= cap:
                break
    logger.info(f"Candidate index covers {len(index)} of {len(set(anchors))} anchors")
    return index


def personalized_siamese_recommend(user: ActionSequence, anchor: str, index: CandidateOutfitIndex,
                                   catalog: Catalog) -> Outfit:
    """Top-1 nearest-neighbour candidate among the anchor's precomputed outfits"""
    candidates = index.get(anchor)
    return nn_rank(user, candidates, catalog)[0][0]
