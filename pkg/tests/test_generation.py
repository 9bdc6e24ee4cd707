"""
Tests for sampling, beam search, Gibbs chains and the candidate index
"""
import itertools
import pytest
from collections import Counter
from pathlib import Path
from types import SimpleNamespace

import numpy as np

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.catalog import IMAGE_DIM, NUM_SPECIAL, STOP, ActionSequence, Action, Catalog, EventType, Outfit, build_vocabulary
from src.errors import AnchorNotFoundError, ConfigurationError, InputError, RankingError, UsageError
from src.generation import (
    CandidateOutfitIndex, GenerationRequest, SamplingOptions, allowed_tokens, autoregressive_generate,
    beam_search, beam_search_tokens, build_candidate_index, generate_outfits, gibbs_generate, gibbs_trajectory,
    nn_rank, nn_score, personalized_siamese_recommend,
)
from src.models import create_model, model_config
from src.nn import log_softmax_array
from tests.factories import make_item, outfits_of, small_catalog

TOY_OUTFITS = outfits_of(("c0-0", "c0-1"), ("c2-0", "c6-0"))


class ToyModel:
    """Shared plumbing for the hand-built models below"""
    family = "toy"

    def __init__(self, seed: int = 0):
        self.catalog = small_catalog()
        self.vocab = build_vocabulary(TOY_OUTFITS, threshold=1)
        self.vocab_size = self.vocab.size
        self.vocab_rows = np.full(self.vocab_size, -1, dtype=np.int64)
        self.vocab_rows[NUM_SPECIAL:] = self.catalog.rows(self.vocab.item_ids)
        self.config = SimpleNamespace(contextual=False)
        self.seed = seed

    def eval_mode(self):
        pass


class TableModel(ToyModel):
    """Next-item distribution drawn from a generator keyed by the prefix"""

    def next_log_probs(self, prefixes, contexts=None):
        rows = []
        for prefix in prefixes:
            rng = np.random.default_rng([self.seed, len(prefix)] + [int(t) for t in prefix])
            rows.append(log_softmax_array(3.0 * rng.normal(size=self.vocab_size)))
        return np.array(rows)


class PairModel(ToyModel):
    """Masked model whose conditionals come from a fixed joint over ordered pairs of distinct items"""

    def __init__(self, seed: int = 0):
        super().__init__(seed)
        n = self.vocab_size - NUM_SPECIAL
        joint = np.random.default_rng(seed).uniform(0.2, 1.0, size=(n, n))
        np.fill_diagonal(joint, 0.0)
        self.joint = joint / joint.sum()

    def masked_log_probs(self, outfits, mask_positions, contexts=None):
        rows = []
        for outfit, position in zip(outfits, mask_positions):
            other = int(outfit[1 - position]) - NUM_SPECIAL
            weights = self.joint[:, other] if position == 0 else self.joint[other, :]
            row = np.full(self.vocab_size, -50.0)
            row[NUM_SPECIAL:] = np.log(np.maximum(weights / weights.sum(), 1e-300))
            rows.append(row)
        return np.array(rows)


def _brute_force_pairs(model):
    """All two-item outfits with their perplexities, best first"""
    scored = []
    for a, b in itertools.permutations(range(NUM_SPECIAL, model.vocab_size), 2):
        nll = -model.next_log_probs([np.array([], dtype=np.int64)])[0][a]
        nll -= model.next_log_probs([np.array([a])])[0][b]
        scored.append((float(np.exp(nll / 2)), (a, b)))
    return sorted(scored)


class TestSampling:
    """Autoregressive construction"""

    def setup_method(self):
        self.model = TableModel()

    def test_same_seed_same_outfit(self):
        a = autoregressive_generate(self.model, rng_seed=4)
        b = autoregressive_generate(self.model, rng_seed=4)
        assert a.items == b.items

    def test_greedy_is_argmax(self):
        outfit = autoregressive_generate(self.model, temperature=0.0, max_len=2)
        first = self.model.next_log_probs([np.array([], dtype=np.int64)])[0]
        first[:NUM_SPECIAL] = -np.inf
        assert outfit.items[0] == self.model.vocab.item_at(int(np.argmax(first)))

    def test_no_duplicates_and_fixed_length(self):
        for seed in range(10):
            outfit = autoregressive_generate(self.model, rng_seed=seed, options=SamplingOptions(fixed_length=3))
            assert len(outfit) == 3 and len(set(outfit.items)) == 3

    def test_seed_items_kept(self):
        outfit = autoregressive_generate(self.model, ["c2-0"], rng_seed=1)
        assert outfit.items[0] == "c2-0"

    def test_unknown_seed_item(self):
        with pytest.raises(InputError):
            autoregressive_generate(self.model, ["c3-0"])

    def test_negative_temperature(self):
        with pytest.raises(InputError):
            SamplingOptions(temperature=-0.5)

    def test_allowed_tokens(self):
        vocab = self.model.vocab
        first = [vocab.index("c0-0")]
        allowed = allowed_tokens(self.model, first, SamplingOptions(category_cap=True))
        assert not allowed[STOP] and not allowed[vocab.index("c0-0")]
        # c0-1 shares the jacket slot
        assert not allowed[vocab.index("c0-1")] and allowed[vocab.index("c2-0")]
        two = first + [vocab.index("c2-0")]
        assert allowed_tokens(self.model, two, SamplingOptions())[STOP]


class TestBeamSearch:
    """Perplexity-ranked beams"""

    def setup_method(self):
        self.model = TableModel(seed=1)

    def test_wide_beam_matches_brute_force(self):
        expected = _brute_force_pairs(self.model)
        ranked = beam_search_tokens(self.model, [], width=12, max_len=2)
        assert len(ranked) == 12
        assert [h.tokens for h in ranked] == [tokens for _, tokens in expected]
        assert ranked[0].perplexity == pytest.approx(expected[0][0], rel=1e-12)

    def test_best_perplexity_never_worse_with_wider_beam(self):
        best = [beam_search_tokens(self.model, [], width=k, max_len=2)[0].perplexity for k in range(1, 6)]
        assert all(b <= a + 1e-12 for a, b in zip(best, best[1:]))

    def test_results_sorted_and_bounded(self):
        outfits = beam_search(self.model, [], width=3, max_len=3)
        assert 1 <= len(outfits) <= 3
        ranked = beam_search_tokens(self.model, [], width=3, max_len=3)
        perplexities = [h.perplexity for h in ranked]
        assert perplexities == sorted(perplexities)

    def test_zero_width(self):
        with pytest.raises(InputError):
            beam_search_tokens(self.model, [], width=0)


class TestGibbs:
    """Chains over a masked model"""

    def setup_method(self):
        self.model = PairModel(seed=2)

    def test_stationary_distribution(self):
        trajectory = gibbs_trajectory(self.model, 2, num_iters=100000, rng_seed=0)
        counts = Counter((int(s[0]), int(s[1])) for s in trajectory[1000:])
        total = sum(counts.values())
        n = self.model.vocab_size - NUM_SPECIAL
        tv = 0.5 * sum(abs(counts[(a + NUM_SPECIAL, b + NUM_SPECIAL)] / total - self.model.joint[a, b])
                       for a in range(n) for b in range(n))
        assert tv < 0.02

    def test_anchor_pinned(self):
        anchor = self.model.vocab.index("c6-0")
        trajectory = gibbs_trajectory(self.model, 2, num_iters=20000, rng_seed=4, anchor="c6-0")
        assert all(int(state[0]) == anchor for state in trajectory)
        # the free slot follows the conditional of the joint given the anchor
        counts = Counter(int(state[1]) for state in trajectory[100:])
        total = sum(counts.values())
        conditional = self.model.joint[anchor - NUM_SPECIAL] / self.model.joint[anchor - NUM_SPECIAL].sum()
        tv = 0.5 * sum(abs(counts[b + NUM_SPECIAL] / total - p) for b, p in enumerate(conditional))
        assert tv < 0.02
        for scan in ("random", "systematic"):
            for seed in range(10):
                assert "c6-0" in gibbs_generate(self.model, 2, rng_seed=seed, scan=scan, anchor="c6-0")

    def test_unknown_anchor(self):
        with pytest.raises(InputError):
            gibbs_trajectory(self.model, 2, anchor="c3-0")

    def test_states_stay_valid(self):
        for state in gibbs_trajectory(self.model, 2, num_iters=40, rng_seed=1, scan="systematic"):
            assert len(set(state.tolist())) == 2
            assert state.min() >= NUM_SPECIAL

    def test_deterministic(self):
        assert gibbs_generate(self.model, 2, rng_seed=3).items == gibbs_generate(self.model, 2, rng_seed=3).items

    def test_bad_arguments(self):
        with pytest.raises(InputError):
            gibbs_trajectory(self.model, 1)
        with pytest.raises(ConfigurationError):
            gibbs_trajectory(self.model, 2, num_iters=5)
        with pytest.raises(ConfigurationError):
            gibbs_trajectory(self.model, 2, scan="diagonal")
        with pytest.raises(InputError):
            gibbs_trajectory(self.model, 5)


def _image(k: int) -> np.ndarray:
    vector = np.zeros(IMAGE_DIM)
    vector[k] = 1.0
    return vector


class TestCandidateIndex:
    """Nearest-neighbour ranking over precomputed candidates"""

    def setup_method(self):
        self.catalog = Catalog([make_item(f"c{c}-{k}", c, image=_image(2 * c + k)) for c in range(7) for k in range(2)])
        self.history = ActionSequence((Action("c0-0", EventType.CLICK, 1), Action("c2-0", EventType.CART, 0)))

    def test_scores(self):
        history = self.catalog.image_matrix[self.catalog.rows(["c0-0", "c2-0"])]
        assert nn_score(history, history) == pytest.approx(1.0)
        assert nn_score(history, self.catalog.image_matrix[self.catalog.rows(["c4-1"])]) == pytest.approx(0.0)

    def test_rank_prefers_history_lookalikes(self):
        near, far = Outfit(("c0-0", "c2-0", "c4-0")), Outfit(("c0-1", "c2-1", "c4-0"))
        ranked = nn_rank(self.history, [far, near], self.catalog)
        assert ranked[0][0] == near
        assert ranked[0][1] == pytest.approx(2 / 3)

    def test_empty_history(self):
        with pytest.raises(RankingError):
            nn_rank(ActionSequence(()), [Outfit(("c0-0", "c2-0"))], self.catalog)

    def test_build_and_recommend(self):
        training = outfits_of(("c0-0", "c2-0", "c4-0"), ("c0-1", "c2-1", "c4-1"), ("c1-0", "c5-0"))
        index = build_candidate_index(["c4-0", "c4-0", "missing"], training, lambda outfits: np.ones(len(outfits)),
                                      self.catalog, seed=0, cap=5)
        assert "c4-0" in index and "missing" not in index
        candidates = index.get("c4-0")
        assert 1 <= len(candidates) <= 5
        assert all("c4-0" in c for c in candidates)
        assert len(set(candidates)) == len(candidates)
        recommended = personalized_siamese_recommend(self.history, "c4-0", index, self.catalog)
        assert recommended == Outfit(("c0-0", "c2-0", "c4-0"))

    def test_threshold_filters(self):
        training = outfits_of(("c0-0", "c2-0", "c4-0"))
        index = build_candidate_index(["c4-0"], training, lambda outfits: np.zeros(len(outfits)), self.catalog)
        assert len(index) == 0
        with pytest.raises(AnchorNotFoundError):
            index.get("c4-0")

    def test_candidate_must_contain_anchor(self):
        with pytest.raises(InputError):
            CandidateOutfitIndex().add("c4-0", Outfit(("c0-0", "c2-0")))


class TestDispatch:
    """Capability-based routing"""

    def test_sampling_requests(self):
        model = TableModel()
        outfits = generate_outfits(model, GenerationRequest(count=3, seed=5))
        again = generate_outfits(model, GenerationRequest(count=3, seed=5))
        assert len(outfits) == 3 and [o.items for o in outfits] == [o.items for o in again]

    def test_beam_request(self):
        outfits = generate_outfits(TableModel(), GenerationRequest(beam_width=2, max_len=3))
        assert 1 <= len(outfits) <= 2

    def test_masked_model_uses_gibbs(self):
        outfits = generate_outfits(PairModel(), GenerationRequest(count=2, fixed_length=2))
        assert [len(o) for o in outfits] == [2, 2]
        with pytest.raises(UsageError):
            generate_outfits(PairModel(), GenerationRequest(beam_width=2))

    def test_masked_model_keeps_anchor(self):
        outfits = generate_outfits(PairModel(seed=2), GenerationRequest(anchor="c6-0", count=20, fixed_length=2))
        assert len(outfits) == 20 and all("c6-0" in o for o in outfits)

    def test_siamese_needs_index(self):
        catalog = small_catalog()
        vocab = build_vocabulary(TOY_OUTFITS, threshold=1)
        model = create_model(model_config("siamese", siamese_units=4), vocab, catalog)
        with pytest.raises(UsageError):
            generate_outfits(model, GenerationRequest(anchor="c2-0"))

    def test_lstm_completes_around_anchor(self):
        catalog = small_catalog()
        vocab = build_vocabulary(outfits_of(("c0-0", "c2-0", "c4-0", "c6-0"), ("c1-1", "c2-1", "c5-1")),
                                 threshold=1)
        model = create_model(model_config("lstm", hidden_size=8, dropout_rate=0.0), vocab, catalog)
        for request in (GenerationRequest(anchor="c2-0", beam_width=2), GenerationRequest(anchor="c2-0", count=2)):
            outfits = generate_outfits(model, request)
            assert outfits and all("c2-0" in o for o in outfits)
            assert all(2 <= len(o) <= 7 for o in outfits)
