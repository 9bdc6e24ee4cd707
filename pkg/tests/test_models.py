"""
Tests for the outfit model families
"""
import math
import pytest
import numpy as np
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.catalog import NUM_SPECIAL, Action, ActionSequence, EventType, Outfit, Questionnaire, build_vocabulary
from src.errors import ConfigurationError, InputError, UsageError
from src.models import (
    MODEL_CLASSES, BidirectionalModel, Family, MaskedItemModel, NextItemModel, OutfitScoringModel,
    SequenceScoringModel, bert_loss, create_model, gpt_loss, lstm_loss, make_examples, model_config,
    s2s_lstm_loss, siamese_outfit_score, siamese_pair_score, transformer_loss,
)
from src.nn import Adam, gradient_check, overall_gradient_error, rng_stream
from tests.factories import outfits_of, small_catalog

OUTFITS = outfits_of(("c0-0", "c2-0", "c4-0", "c6-0"), ("c1-1", "c2-1", "c4-1", "c6-1"))
SMALL = dict(model_dim=8, num_heads=2, num_layers=1, hidden_size=8, siamese_units=8, dropout_rate=0.0)


def _build(family, seed=0, **overrides):
    catalog = small_catalog()
    vocab = build_vocabulary(OUTFITS, threshold=1)
    config = model_config(family, **{**SMALL, **overrides})
    return create_model(config, vocab, catalog, seed), vocab, catalog


def _tokens(vocab, *item_ids):
    return vocab.encode(list(item_ids))


def _actions(*item_ids):
    return ActionSequence(tuple(Action(item_id, EventType.CLICK, age) for age, item_id in enumerate(item_ids)))


def _questionnaire(brand=1, color=2):
    return Questionnaire(favorite_brands=(brand,), favorite_colors=(color,), nogo_categories=(), gender=0,
                         height_band=0, weight_band=0, occasion=0, price_band=0, shoe_size=0, hair_color=0,
                         style_archetype=0)


def _zero(*layers):
    for layer in layers:
        layer.weight.data[...] = 0.0
        if layer.bias is not None:
            layer.bias.data[...] = 0.0


class TestConfig:
    """Profiles and validation"""

    def test_desk_attention_sizes(self):
        config = model_config("gpt")
        assert (config.model_dim, config.num_heads, config.num_layers) == (64, 4, 2)
        assert not config.use_positional_encoding

    def test_full_profile(self):
        config = model_config("transformer", profile="full")
        assert (config.model_dim, config.num_heads) == (216, 12)
        assert config.contextual

    def test_positional_encoding_rejected(self):
        with pytest.raises(ConfigurationError):
            model_config("gpt", use_positional_encoding=True)

    def test_action_families_need_action_context(self):
        with pytest.raises(ConfigurationError):
            model_config("s2s_lstm", context_mode="questionnaire")
        with pytest.raises(ConfigurationError):
            model_config("lstm", context_mode="action_sequence")

    def test_unknown_family_and_profile(self):
        with pytest.raises(ConfigurationError):
            model_config("rnn")
        with pytest.raises(ConfigurationError):
            model_config("gpt", profile="huge")

    def test_heads_must_divide_width(self):
        with pytest.raises(ConfigurationError):
            model_config("bert", model_dim=10, num_heads=4)


class TestRegistry:
    """Construction and capabilities"""

    def test_every_family_builds(self):
        for family in Family:
            model, _, _ = _build(family.value)
            assert isinstance(model, MODEL_CLASSES[family])
            assert model.family == family.value
            assert model.store.num_parameters() > 0

    def test_capabilities(self):
        gpt, _, _ = _build("gpt")
        bert, _, _ = _build("bert")
        lstm, _, _ = _build("lstm")
        siamese, _, _ = _build("siamese")
        assert isinstance(gpt, NextItemModel) and isinstance(gpt, SequenceScoringModel)
        assert isinstance(bert, MaskedItemModel) and not isinstance(bert, NextItemModel)
        assert isinstance(lstm, BidirectionalModel) and isinstance(lstm, NextItemModel)
        assert isinstance(siamese, OutfitScoringModel) and not isinstance(siamese, SequenceScoringModel)

    def test_same_seed_same_parameters(self):
        a, _, _ = _build("bert", seed=3)
        b, _, _ = _build("bert", seed=3)
        for name, array in a.store.state_arrays().items():
            np.testing.assert_array_equal(array, b.store.state_arrays()[name])

    def test_examples_skip_short_outfits(self):
        vocab = build_vocabulary(OUTFITS, threshold=1)
        outfits = OUTFITS + outfits_of(("c0-0", "c3-1"))
        examples, skipped = make_examples(outfits, vocab, small_catalog())
        assert skipped == 1 and len(examples) == 2
        # canonical order puts the category-6 items last
        assert vocab.item_at(int(examples[0].tokens[-1])) == "c6-0"


class TestGPT:
    """Position-free decoder"""

    def test_zero_head_gives_log_vocab_loss(self):
        model, vocab, _ = _build("gpt")
        _zero(model.decoder.head)
        loss = gpt_loss(model, _tokens(vocab, "c0-0", "c2-0", "c4-0"))
        assert loss.item() == pytest.approx(math.log(vocab.size), abs=1e-12)
        scores = model.item_log_likelihoods([_tokens(vocab, "c0-0", "c2-0")])[0]
        np.testing.assert_allclose(scores, -math.log(vocab.size) * np.ones(2), atol=1e-12)

    def test_prefix_order_does_not_matter(self):
        model, vocab, _ = _build("gpt")
        first = model.next_log_probs([_tokens(vocab, "c0-0", "c2-0", "c4-0")])
        second = model.next_log_probs([_tokens(vocab, "c4-0", "c0-0", "c2-0")])
        np.testing.assert_allclose(first, second, atol=1e-12)

    def test_next_log_probs_normalized(self):
        model, vocab, _ = _build("gpt")
        log_probs = model.next_log_probs([_tokens(vocab, "c0-0"), _tokens(vocab, "c1-1", "c2-1")])
        assert log_probs.shape == (2, vocab.size)
        np.testing.assert_allclose(np.exp(log_probs).sum(axis=1), np.ones(2), atol=1e-12)

    def test_loss_gradient(self):
        model, vocab, _ = _build("gpt")
        assert vocab.size == 10
        sequence = _tokens(vocab, "c0-0", "c6-0")
        errors = gradient_check(lambda: gpt_loss(model, sequence), model.store.tensors(), max_entries=3)
        assert max(errors.values()) < 1e-4

    def test_training_lowers_loss(self):
        model, vocab, _ = _build("gpt")
        sequences = [_tokens(vocab, *o.items) for o in OUTFITS]
        before = model.sequence_loss(sequences).item()
        optimizer = Adam(learning_rate=1e-2)
        for _ in range(30):
            model.sequence_loss(sequences).backward()
            optimizer.step(model.store)
        assert model.sequence_loss(sequences).item() < before

    def test_contextual_needs_contexts(self):
        model, vocab, _ = _build("ctx_gpt")
        sequence = _tokens(vocab, "c0-0", "c2-0")
        with pytest.raises(UsageError):
            model.next_log_probs([sequence])
        a = model.next_log_probs([sequence], [_questionnaire(1, 2)])
        b = model.next_log_probs([sequence], [_questionnaire(5, 7)])
        assert not np.allclose(a, b)

    def test_wrong_model_for_loss(self):
        model, vocab, _ = _build("bert")
        with pytest.raises(ConfigurationError):
            gpt_loss(model, _tokens(vocab, "c0-0", "c2-0"))


class TestBERT:
    """Masked-item encoder"""

    def test_zero_head_gives_log_vocab_loss(self):
        model, vocab, _ = _build("bert")
        _zero(model.head)
        loss = bert_loss(model, _tokens(vocab, "c0-0", "c2-0", "c4-0"), 1)
        assert loss.item() == pytest.approx(math.log(vocab.size), abs=1e-12)

    def test_unmasked_order_does_not_matter(self):
        model, vocab, _ = _build("bert")
        first = model.masked_log_probs([_tokens(vocab, "c0-0", "c2-0", "c4-0")], [0])
        second = model.masked_log_probs([_tokens(vocab, "c0-0", "c4-0", "c2-0")], [0])
        np.testing.assert_allclose(first, second, atol=1e-12)

    def test_masked_item_is_hidden(self):
        model, vocab, _ = _build("bert")
        first = model.masked_log_probs([_tokens(vocab, "c0-0", "c2-0", "c4-0")], [2])
        second = model.masked_log_probs([_tokens(vocab, "c0-0", "c2-0", "c4-1")], [2])
        np.testing.assert_array_equal(first, second)

    def test_bad_mask_position(self):
        model, vocab, _ = _build("bert")
        with pytest.raises(InputError):
            model.masked_log_probs([_tokens(vocab, "c0-0", "c2-0")], [2])

    def test_context_token_cannot_be_masked(self):
        model, vocab, _ = _build("ctx_bert")
        with pytest.raises(UsageError):
            model.masked_log_probs([_tokens(vocab, "c0-0", "c2-0")], [2], [_questionnaire()])

    def test_item_log_likelihoods_shape(self):
        model, vocab, _ = _build("bert")
        scores = model.item_log_likelihoods([_tokens(vocab, "c0-0", "c2-0", "c4-0"), _tokens(vocab, "c1-1", "c2-1")])
        assert [len(s) for s in scores] == [3, 2]
        assert all(np.all(s <= 0.0) for s in scores)


class TestLSTM:
    """Bidirectional LSTM and its sequence-to-sequence variant"""

    def test_zero_heads_give_twice_log_vocab(self):
        model, vocab, _ = _build("lstm")
        _zero(model.heads["forward"], model.heads["backward"])
        loss = lstm_loss(model, _tokens(vocab, "c0-0", "c2-0", "c4-0"))
        assert loss.item() == pytest.approx(2 * math.log(vocab.size), abs=1e-12)

    def test_single_item_rejected(self):
        model, vocab, _ = _build("lstm")
        with pytest.raises(InputError):
            lstm_loss(model, _tokens(vocab, "c0-0"))

    def test_blank_scores_combine_directions(self):
        model, vocab, _ = _build("lstm")
        prefix, suffix = _tokens(vocab, "c0-0"), _tokens(vocab, "c4-0", "c6-0")
        joint = model.blank_log_probs([prefix], [suffix])
        forward = model.direction_log_probs([prefix], "forward")
        backward = model.direction_log_probs([suffix[::-1]], "backward")
        np.testing.assert_allclose(joint, forward + backward, atol=1e-12)

    def test_s2s_uses_actions(self):
        model, vocab, _ = _build("s2s_lstm")
        sequence = _tokens(vocab, "c0-0", "c2-0")
        a = s2s_lstm_loss(model, [_actions("c1-0", "c3-0", "c5-1")], sequence).item()
        b = s2s_lstm_loss(model, [_actions("c6-1", "c0-1", "c2-1")], sequence).item()
        assert a != b

    def test_s2s_empty_actions(self):
        model, vocab, _ = _build("s2s_lstm")
        with pytest.raises(InputError):
            s2s_lstm_loss(model, [ActionSequence(())], _tokens(vocab, "c0-0", "c2-0"))


class TestTransformer:
    """Encoder-decoder over action histories"""

    def test_zero_head_gives_log_vocab_loss(self):
        model, vocab, _ = _build("transformer")
        _zero(model.decoder.head)
        loss = transformer_loss(model, [_actions("c1-0", "c3-0")], _tokens(vocab, "c0-0", "c2-0"))
        assert loss.item() == pytest.approx(math.log(vocab.size), abs=1e-12)

    def test_zero_cross_attention_matches_decoder_only(self):
        model, vocab, _ = _build("transformer")
        for block in model.decoder.stack.blocks:
            _zero(block.cross_attention.output)
        sequence = _tokens(vocab, "c0-0", "c2-0", "c4-0")
        contexts = [_actions("c1-0", "c3-0", "c5-0")]
        with_context = model.next_log_probs([sequence], contexts)
        model.use_context = False
        without_context = model.next_log_probs([sequence], contexts)
        np.testing.assert_allclose(with_context, without_context, atol=1e-12)

    def test_context_slots(self):
        model, vocab, _ = _build("transformer", context_slots=2)
        encoded, mask = model.encode([_actions("c1-0"), _actions("c1-0", "c3-0", "c5-0")])
        assert encoded.shape == (2, 5, 8)
        assert mask[0].sum() == 3 and mask[1].sum() == 5

    def test_empty_actions(self):
        model, vocab, _ = _build("transformer")
        with pytest.raises(InputError):
            transformer_loss(model, [ActionSequence(())], _tokens(vocab, "c0-0", "c2-0"))


class TestSiamese:
    """Pairwise and whole-outfit compatibility"""

    def test_zero_output_scores_one_half(self):
        model, _, catalog = _build("siamese")
        _zero(model.outfit_head[-1], model.pair_head[-1])
        assert siamese_outfit_score(model, OUTFITS[0]) == pytest.approx(0.5, abs=1e-12)
        assert siamese_pair_score(model, catalog.get("c0-0"), catalog.get("c2-0")) == pytest.approx(0.5, abs=1e-12)

    def test_blank_scores_match_full_outfits(self):
        model, _, catalog = _build("siamese")
        partial = ["c0-0", "c2-0"]
        candidates = ["c4-0", "c4-1", "c2-1"]
        blank = model.blank_scores(catalog.rows(partial), catalog.rows(candidates))
        full = model.score_outfits([Outfit(tuple(partial + [c])) for c in candidates])
        np.testing.assert_allclose(blank, full, atol=1e-10)

    def test_outfit_score_is_order_free(self):
        model, vocab, _ = _build("siamese")
        a = model.outfit_scores([_tokens(vocab, "c0-0", "c2-0", "c4-0")])
        b = model.outfit_scores([_tokens(vocab, "c4-0", "c0-0", "c2-0")])
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_missing_subnet(self):
        model, _, _ = _build("siamese", siamese_categories=[0, 1])
        with pytest.raises(ConfigurationError):
            model.score_outfits([OUTFITS[0]])

    def test_loss_is_finite(self):
        model, vocab, catalog = _build("siamese")
        examples, _ = make_examples(OUTFITS, vocab, catalog)
        loss = model.loss(examples, rng_stream(0, "test"))
        assert np.isfinite(loss.item()) and loss.item() > 0.0

    def test_wrong_model_for_score(self):
        model, _, _ = _build("gpt")
        with pytest.raises(ConfigurationError):
            siamese_outfit_score(model, OUTFITS[0])


def _shift_biases(model, seed=0):
    rng = np.random.default_rng(seed)
    for param in model.store.tensors():
        if (param.name or "").endswith((".bias", ".beta")):
            param.data += rng.normal(scale=0.1, size=param.data.shape)


class TestGradients:
    """Backward passes against central differences, one loss per family"""

    def _check(self, model, loss_fn):
        _shift_biases(model)
        error = overall_gradient_error(loss_fn, model.store.tensors(), max_entries=4)
        assert error < 1e-4

    def test_gpt(self):
        model, vocab, _ = _build("gpt")
        sequence = _tokens(vocab, "c0-0", "c2-0", "c6-0")
        self._check(model, lambda: gpt_loss(model, sequence))

    def test_ctx_gpt(self):
        model, vocab, _ = _build("ctx_gpt")
        sequence = _tokens(vocab, "c0-0", "c2-0", "c6-0")
        self._check(model, lambda: gpt_loss(model, sequence, [_questionnaire()]))

    def test_bert(self):
        model, vocab, _ = _build("bert")
        sequence = _tokens(vocab, "c0-0", "c2-0", "c4-0")
        self._check(model, lambda: bert_loss(model, sequence, 1))

    def test_ctx_bert(self):
        model, vocab, _ = _build("ctx_bert")
        sequence = _tokens(vocab, "c0-0", "c2-0", "c4-0")
        self._check(model, lambda: bert_loss(model, sequence, 0, [_questionnaire()]))

    def test_lstm(self):
        model, vocab, _ = _build("lstm")
        sequence = _tokens(vocab, "c1-1", "c2-1", "c4-1")
        self._check(model, lambda: lstm_loss(model, sequence))

    def test_s2s_lstm(self):
        model, vocab, _ = _build("s2s_lstm")
        sequence = _tokens(vocab, "c0-0", "c2-0")
        users = [_actions("c3-0", "c5-1")]
        self._check(model, lambda: s2s_lstm_loss(model, users, sequence))

    def test_transformer(self):
        model, vocab, _ = _build("transformer")
        sequence = _tokens(vocab, "c0-0", "c2-0")
        users = [_actions("c3-0", "c5-1")]
        self._check(model, lambda: transformer_loss(model, users, sequence))

    def test_siamese(self):
        model, vocab, catalog = _build("siamese")
        examples, _ = make_examples(OUTFITS, vocab, catalog)
        self._check(model, lambda: model.loss(examples, np.random.default_rng(0)))


def test_vocabulary_reserves_special_tokens():
    _, vocab, _ = _build("gpt")
    assert vocab.size == len(vocab.item_ids) + NUM_SPECIAL
