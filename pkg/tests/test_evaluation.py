"""
Tests for metric folds, scoring protocols and evaluation reports
"""
import io
import json
import math
import pytest
import tempfile
import shutil
from pathlib import Path

import numpy as np
from pydantic import ValidationError
from rich.console import Console

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.catalog import Action, ActionSequence, EventType, Outfit, UserSample, build_vocabulary
from src.errors import ConfigurationError, DataError, MetricError
from src.evaluation import (
    CTR, KR, EvalReport, RankCutoffs, attribute_match_rate, compatibility_auc, evaluation_examples, fitb,
    item_diversity, perplexity, perplexity_from_log_likelihoods, personalization_rate, personalized_metrics,
    print_reports, random_base_rate, rank_of, read_reports, recall_at, references_for, roc_auc, sample_outfits,
    validity_rate, write_reports,
)
from src.generation import DEFAULT_GIBBS_LENGTH
from src.models import create_model, model_config
from src.nn import log_softmax_array
from tests.factories import outfits_of, small_catalog

OUTFITS = outfits_of(("c0-0", "c2-0", "c4-0", "c6-0"), ("c1-1", "c2-1", "c4-1", "c6-1"),
                     ("c0-0", "c2-1", "c5-0"), ("c1-1", "c4-0", "c5-0"))


def _model(family, zero_output=False, **overrides):
    catalog = small_catalog()
    vocab = build_vocabulary(OUTFITS, threshold=1)
    config = model_config(family, **{"model_dim": 8, "num_heads": 2, "num_layers": 1, "siamese_units": 8,
                                     "dropout_rate": 0.0, **overrides})
    model = create_model(config, vocab, catalog)
    if zero_output:
        layers = {"gpt": lambda: [model.decoder.head], "bert": lambda: [model.head],
                  "siamese": lambda: [model.outfit_head[-1]]}[family]()
        for layer in layers:
            layer.weight.data[...] = 0.0
            layer.bias.data[...] = 0.0
    return model, vocab, catalog


def _sample(sample_id, outfit, anchor, kept=()):
    actions = ActionSequence((Action("c3-0", EventType.CLICK, 2), Action("c5-1", EventType.WISHLIST, 1)))
    return UserSample(sample_id, "u0", actions, Outfit(outfit), anchor=anchor, kept_items=tuple(kept))


def _random_outfits(rng, count, pool_size=40):
    pool = [f"c{i % 7}-{i}" for i in range(pool_size)]
    return [Outfit(tuple(str(i) for i in rng.choice(pool, size=int(rng.integers(2, 6)), replace=False)))
            for _ in range(count)]


class TestMetricFolds:
    """Pure aggregation"""

    def test_auc_worked_example(self):
        assert roc_auc([0.9, 0.4], [0.6, 0.1]) == pytest.approx(0.75)

    def test_auc_ties_count_half(self):
        assert roc_auc([0.5, 0.5], [0.5]) == pytest.approx(0.5)
        assert roc_auc([1.0], [0.0]) == 1.0

    def test_auc_needs_both_classes(self):
        with pytest.raises(MetricError):
            roc_auc([0.3], [])

    def test_rank_counts_strictly_higher(self):
        scores = np.array([0.1, 0.9, 0.5, 0.9])
        assert rank_of(scores, 2) == 3
        assert rank_of(scores, 1) == 1
        assert rank_of(scores, 2, allowed=np.array([True, False, True, True])) == 2

    def test_recall_at_cutoffs(self):
        assert recall_at([1, 3, 10], RankCutoffs((1, 5))) == {1: pytest.approx(1 / 3), 5: pytest.approx(2 / 3)}

    def test_cutoffs_validated_and_trimmed(self):
        with pytest.raises(ConfigurationError):
            RankCutoffs((5, 1))
        assert RankCutoffs((1, 5, 25, 250)).for_vocabulary(30).values == (1, 5, 25)
        with pytest.raises(ConfigurationError):
            RankCutoffs((5,)).for_vocabulary(3)

    def test_perplexity_of_fair_coin(self):
        assert perplexity_from_log_likelihoods([np.log([0.5, 0.5]), np.log([0.5])]) == pytest.approx(2.0)

    def test_personalization_and_diversity(self):
        a, b = Outfit(("x", "y")), Outfit(("y", "z"))
        assert personalization_rate([a, Outfit(("y", "x")), b]) == pytest.approx(2 / 3)
        assert item_diversity([Outfit(("a", "b")), Outfit(("a", "c"))]) == pytest.approx(0.75)
        with pytest.raises(MetricError):
            personalization_rate([])

    def test_attribute_match(self):
        catalog = small_catalog()
        recommended = [Outfit(("c0-0", "c2-1")), None]
        references = [["c0-0", "c2-0", "c4-1"], ["c0-0"]]
        # brand follows the item suffix, so only c0-0 matches on brand and category
        assert attribute_match_rate(recommended, references, "brand-category", catalog) == pytest.approx(1 / 4)
        with pytest.raises(ConfigurationError):
            attribute_match_rate(recommended, references, "size-category", catalog)
        with pytest.raises(MetricError):
            attribute_match_rate(recommended, references[:1], "color-category", catalog)

    def test_validity_rates(self):
        outfits = [Outfit(("a", "b")), Outfit(("c", "d")), Outfit(("a", "d"))]
        assert validity_rate(outfits, lambda o: "a" in o) == pytest.approx(2 / 3)
        catalog = small_catalog()
        rate = random_base_rate(catalog, lambda o: True, [2, 3], np.random.default_rng(0))
        assert rate == 1.0

    def test_random_scorer_recall_within_binomial_interval(self):
        rng = np.random.default_rng(7)
        num_items, trials = 50, 10_000
        ranks = [rank_of(rng.random(num_items), int(rng.integers(num_items))) for _ in range(trials)]
        recall = recall_at(ranks, RankCutoffs((1, 5, 25)))
        for cutoff, value in recall.items():
            expected = cutoff / num_items
            half_width = 2.576 * math.sqrt(expected * (1 - expected) / trials)
            assert abs(value - expected) <= half_width

    def test_auc_invariant_to_monotone_rescaling(self):
        rng = np.random.default_rng(3)
        positive, negative = rng.random(40) + 0.2, rng.random(60) + 0.1
        auc = roc_auc(positive, negative)
        assert roc_auc(np.exp(positive), np.exp(negative)) == pytest.approx(auc, abs=1e-12)
        assert roc_auc(np.log(positive), np.log(negative)) == pytest.approx(auc, abs=1e-12)

    def test_rates_invariant_to_user_order(self):
        outfits = _random_outfits(np.random.default_rng(5), 300)
        shuffled = [outfits[i] for i in np.random.default_rng(6).permutation(len(outfits))]
        assert personalization_rate(shuffled) == personalization_rate(outfits)
        assert item_diversity(shuffled) == item_diversity(outfits)

    def test_rates_match_recount(self):
        outfits = _random_outfits(np.random.default_rng(11), 1000)
        seen_outfits, seen_items, total = {}, {}, 0
        for outfit in outfits:
            seen_outfits["|".join(sorted(outfit.items))] = True
            for item in outfit.items:
                seen_items[item] = True
                total += 1
        assert personalization_rate(outfits) == pytest.approx(len(seen_outfits) / 1000, abs=1e-12)
        assert item_diversity(outfits) == pytest.approx(len(seen_items) / total, abs=1e-12)


class TestProtocols:
    """Perplexity, fill-in-the-blank and compatibility"""

    def test_uniform_model_perplexity_is_vocab_size(self):
        model, vocab, catalog = _model("gpt", zero_output=True)
        examples, skipped = evaluation_examples(OUTFITS, vocab, catalog)
        assert skipped == 0
        assert perplexity(model, examples).value == pytest.approx(vocab.size, rel=1e-9)

    def test_masked_model_perplexity(self):
        model, vocab, catalog = _model("bert", zero_output=True)
        examples, _ = evaluation_examples(OUTFITS, vocab, catalog)
        assert perplexity(model, examples).value == pytest.approx(vocab.size, rel=1e-9)

    def test_masked_perplexity_matches_next_item_chain(self):
        model, vocab, catalog = _model("bert")
        table = np.random.default_rng(4).normal(size=(vocab.size + 1, vocab.size))

        def conditional(prefix):
            # the last table row stands in for the empty prefix
            return log_softmax_array(table[list(prefix)].sum(axis=0) + table[-1])

        model.masked_log_probs = lambda outfits, positions, contexts=None: np.stack(
            [conditional(outfit[:position]) for outfit, position in zip(outfits, positions)])
        examples, _ = evaluation_examples(OUTFITS, vocab, catalog)
        chained = [np.array([conditional(e.tokens[:t])[e.tokens[t]] for t in range(len(e))]) for e in examples]
        assert perplexity(model, examples).value == pytest.approx(perplexity_from_log_likelihoods(chained),
                                                                  rel=1e-12)

    def test_out_of_vocabulary_outfits_skipped(self):
        model, vocab, catalog = _model("gpt")
        examples, skipped = evaluation_examples(OUTFITS + outfits_of(("c0-0", "c3-1")), vocab, catalog)
        assert skipped == 1 and len(examples) == len(OUTFITS)

    def test_fitb_ties_rank_first(self):
        model, vocab, catalog = _model("bert", zero_output=True)
        examples, _ = evaluation_examples(OUTFITS, vocab, catalog)
        result = fitb(model, examples, RankCutoffs((1, 5)))
        assert result.ranks == [1] * len(examples)
        assert result.recall == {1: 1.0, 5: 1.0}

    def test_fitb_for_every_scorer(self):
        for family in ("gpt", "lstm", "siamese"):
            model, vocab, catalog = _model(family, hidden_size=8)
            examples, _ = evaluation_examples(OUTFITS, vocab, catalog)
            result = fitb(model, examples, RankCutoffs((1, 5)), rng_seed=1)
            assert result.scored == len(examples)
            assert all(1 <= r <= vocab.num_items for r in result.ranks)
            assert result.recall[1] <= result.recall[5]

    def test_fitb_positions_seeded(self):
        model, vocab, catalog = _model("gpt")
        examples, _ = evaluation_examples(OUTFITS, vocab, catalog)
        assert fitb(model, examples, RankCutoffs((1,)), rng_seed=3).ranks == \
            fitb(model, examples, RankCutoffs((1,)), rng_seed=3).ranks

    def test_constant_scorer_auc_is_one_half(self):
        model, vocab, catalog = _model("siamese", zero_output=True)
        examples, _ = evaluation_examples(OUTFITS, vocab, catalog)
        result = compatibility_auc(model, examples)
        assert result.auc == pytest.approx(0.5)
        assert len(result.negative_scores) == len(examples)

    def test_auc_needs_two_outfits(self):
        model, vocab, catalog = _model("gpt")
        examples, _ = evaluation_examples(OUTFITS[:1], vocab, catalog)
        with pytest.raises(MetricError):
            compatibility_auc(model, examples)

    def test_sampling_independent_of_workers(self):
        model, _, _ = _model("gpt")
        serial = sample_outfits(model, 6, [3], seed=2)
        parallel = sample_outfits(model, 6, [3], seed=2, max_workers=3)
        assert [o.items for o in serial] == [o.items for o in parallel]
        with pytest.raises(MetricError):
            sample_outfits(_model("siamese")[0], 2, [3])


class TestPersonalized:
    """Anchor-conditioned recommendations"""

    def setup_method(self):
        self.samples = [_sample("s0", ("c0-0", "c2-0", "c4-0"), "c2-0", kept=("c4-0",)),
                        _sample("s1", ("c1-1", "c4-1", "c6-1"), "c4-1")]

    def test_references(self):
        assert references_for(self.samples[0], CTR) == ["c0-0", "c4-0"]
        assert references_for(self.samples[0], KR) == ["c4-0"]

    def test_generative_model_serves_every_sample(self):
        model, _, catalog = _model("gpt")
        result = personalized_metrics(model, self.samples, catalog, CTR)
        assert result.served == 2 and result.missing == 0
        for outfit, sample in zip(result.recommendations, self.samples):
            assert sample.anchor in outfit and len(outfit) == len(sample.outfit)
        assert set(result.match_rates) == {"brand-category", "color-category", "brand-color-category"}
        assert all(0.0 <= v <= 1.0 for v in result.match_rates.values())

    def test_gibbs_recommendations_keep_anchor(self):
        model, _, catalog = _model("bert")
        for fixed_length, expected in ((True, 3), (False, DEFAULT_GIBBS_LENGTH)):
            result = personalized_metrics(model, self.samples, catalog, fixed_length=fixed_length)
            assert result.served == 2
            for outfit, sample in zip(result.recommendations, self.samples):
                assert sample.anchor in outfit and len(outfit) == expected

    def test_recommendations_deterministic(self):
        model, _, catalog = _model("lstm", hidden_size=8)
        first = personalized_metrics(model, self.samples, catalog).recommendations
        second = personalized_metrics(model, self.samples, catalog).recommendations
        assert [o.items for o in first] == [o.items for o in second]

    def test_siamese_without_index_serves_nothing(self):
        model, _, catalog = _model("siamese")
        result = personalized_metrics(model, self.samples, catalog)
        assert result.served == 0 and result.personalization_rate is None
        assert all(v == 0.0 for v in result.match_rates.values())

    def test_unknown_mode(self):
        model, _, catalog = _model("gpt")
        with pytest.raises(MetricError):
            personalized_metrics(model, self.samples, catalog, mode="ndcg")


class TestReports:
    """EvalReport validation and JSON lines"""

    def setup_method(self):
        self.temp_dir = tempfile.mkdtemp()
        self.path = Path(self.temp_dir) / "reports.jsonl"

    def teardown_method(self):
        shutil.rmtree(self.temp_dir)

    def _report(self, **overrides):
        values = dict(model_id="gpt-desk", family="gpt", dataset_id="abc", seed=0, perplexity=42.0, cp_auc=0.8,
                      fitb={1: 0.1, 5: 0.3}, runtime_seconds=1.5)
        return EvalReport(**{**values, **overrides})

    def test_rates_validated(self):
        with pytest.raises(ValidationError):
            self._report(cp_auc=1.2)
        with pytest.raises(ValidationError):
            self._report(fitb={1: 0.5, 5: 0.2})
        with pytest.raises(ValidationError):
            self._report(perplexity=0.0)

    def test_write_read(self):
        reports = [self._report(), self._report(seed=1, match_mode="ctr", match_rates={"brand-category": 0.2})]
        assert write_reports(self.path, reports) == 2
        lines = self.path.read_text().splitlines()
        assert json.loads(lines[0])["model_id"] == "gpt-desk"
        loaded = read_reports(self.path)
        assert [r.deterministic_dump() for r in loaded] == [r.deterministic_dump() for r in reports]
        assert loaded[0].fitb == {1: 0.1, 5: 0.3}
        write_reports(self.path, [self._report(seed=2)], append=True)
        assert len(read_reports(self.path)) == 3

    def test_wall_clock_not_compared(self):
        assert self._report(runtime_seconds=1.0).deterministic_dump() == \
            self._report(runtime_seconds=9.0).deterministic_dump()

    def test_bad_files(self):
        with pytest.raises(DataError):
            read_reports(self.path)
        self.path.write_text('{"model_id": "x"}\n')
        with pytest.raises(DataError):
            read_reports(self.path)

    def test_table_columns(self):
        buffer = io.StringIO()
        print_reports([self._report()], console=Console(file=buffer, width=200))
        output = buffer.getvalue()
        for column in ("PP", "FITB@1", "FITB@5", "CP-AUC", "gpt-desk"):
            assert column in output
