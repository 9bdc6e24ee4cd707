"""
Tests for the style world, the generators and negative sampling
"""
import dataclasses
import pytest
import tempfile
import shutil
from collections import Counter
from pathlib import Path

import numpy as np

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.catalog import ACCESSORY, CATEGORIES, Catalog, Outfit, load_dataset
from src.errors import ConfigurationError, InputError
from src.nn import rng_stream
from src.synthgen import (
    WorldConfig, build_world, generate_catalog, generate_click_dataset, generate_outfits, make_users,
    negative_sample, oracle_compatible, replace_one, sanity_floor, world_for,
)
from src.synthgen.generators import MIN_ACTIONS
from tests.factories import tiny_dataset

CAT = {name: code for code, name in enumerate(CATEGORIES)}


class TestWorld:
    """Planted compatibility rule"""

    def setup_method(self):
        self.world = build_world(WorldConfig(), seed=0)
        self.catalog = Catalog(generate_catalog(self.world, 2000, seed=0), self.world.schema)

    def test_templates_contain_shoes(self):
        for template in self.world.templates:
            assert CAT["shoes"] in dict(template)
            assert sum(n for _, n in template) <= 7
        assert all(palette for palette in self.world.palettes)

    def test_zero_noise_items_sit_on_centroids(self):
        items = generate_catalog(self.world, len(CATEGORIES), seed=1, image_noise=0.0)
        assert [item.category for item in items] == list(range(len(CATEGORIES)))
        for item in items:
            np.testing.assert_array_equal(item.image_vec,
                                          self.world.centroid(item.style, item.color, item.category))

    def test_catalog_is_seed_deterministic(self):
        again = generate_catalog(self.world, 2000, seed=0)
        assert [i.item_id for i in again] == [i.item_id for i in self.catalog.items]
        np.testing.assert_array_equal(np.array([i.image_vec for i in again]), self.catalog.image_matrix)

    def test_style_counts_near_uniform(self):
        counts = Counter(item.style for item in self.catalog.items)
        expected = len(self.catalog) / self.world.num_styles
        sigma = np.sqrt(expected * (1 - 1 / self.world.num_styles))
        assert all(abs(counts[s] - expected) < 4 * sigma for s in range(self.world.num_styles))

    def test_too_few_items(self):
        with pytest.raises(ConfigurationError):
            generate_catalog(self.world, 3, seed=0)

    def test_generated_outfits_pass_oracle(self):
        outfits = generate_outfits(self.world, self.catalog, 300, seed=2)
        assert len(outfits) > 250
        assert all(oracle_compatible(o, self.world, self.catalog) for o in outfits)

    def test_mean_length(self):
        outfits = generate_outfits(self.world, self.catalog, 1500, seed=3, mean_length=4.7)
        assert abs(np.mean([len(o) for o in outfits]) - 4.7) < 0.3

    def test_out_of_palette_color_breaks_outfit(self):
        outfit = generate_outfits(self.world, self.catalog, 1, seed=4)[0]
        items = [self.catalog.get(i) for i in outfit.items]
        others = {item.color for item in items[1:]}
        outside = next(c for c in range(self.world.config.num_colors)
                       if not any(others | {c} <= palette for palette in self.world.palettes))
        changed = dataclasses.replace(items[0], color=outside)
        assert not self.world.compatible([changed] + items[1:])

    def test_random_sets_rarely_compatible(self):
        rng = np.random.default_rng(5)
        ids = [item.item_id for item in self.catalog.items]
        hits = sum(oracle_compatible(Outfit(tuple(rng.choice(ids, size=5, replace=False))), self.world, self.catalog)
                   for _ in range(5000))
        assert hits / 5000 < 0.02

    def test_unknown_item(self):
        with pytest.raises(InputError):
            oracle_compatible(Outfit(("nope", "i0000")), self.world, self.catalog)

    def test_user_outfits_follow_preferences(self):
        user = make_users(self.world, 1, seed=6)[0]
        outfits = generate_outfits(self.world, self.catalog, 30, seed=6, user=user, noise=0.0)
        for outfit in outfits:
            for item_id in outfit.items:
                item = self.catalog.get(item_id)
                assert item.style == user.style and item.gender == user.gender
                assert item.color in self.world.palettes[user.palette]


class TestClickData:
    """Action histories paired with target outfits"""

    def setup_method(self):
        self.world = build_world(WorldConfig(), seed=0)
        self.catalog = Catalog(generate_catalog(self.world, 2000, seed=0), self.world.schema)

    def test_length_constraints(self):
        users = make_users(self.world, 3, seed=1)
        samples = generate_click_dataset(self.world, self.catalog, 150, seed=1, users=users, num_shards=3)
        assert samples
        for sample in samples:
            assert len(sample.context) >= MIN_ACTIONS
            core = [i for i in sample.outfit.items if self.catalog.category_of(i) != ACCESSORY]
            assert len(core) >= 4
            assert sample.anchor in sample.outfit
        counts = Counter(a.item_id for s in samples for a in s.context.actions)
        assert min(counts.values()) >= 3

    def test_sharded_generation_matches_threaded(self):
        serial = generate_click_dataset(self.world, self.catalog, 60, seed=2, num_shards=3, max_workers=1)
        threaded = generate_click_dataset(self.world, self.catalog, 60, seed=2, num_shards=3, max_workers=3)
        assert [s.sample_id for s in serial] == [s.sample_id for s in threaded]
        assert [s.outfit for s in serial] == [s.outfit for s in threaded]

    def test_noise_free_target_style_matches_clicks(self):
        users = make_users(self.world, 3, seed=3)
        samples = generate_click_dataset(self.world, self.catalog, 120, seed=3, users=users, noise=0.0)
        for sample in samples:
            clicked = Counter(self.catalog.get(a.item_id).style for a in sample.context.actions)
            target = Counter(self.catalog.get(i).style for i in sample.outfit.items)
            assert clicked.most_common(1)[0][0] == target.most_common(1)[0][0]


class TestNegatives:
    """Corrupted outfits"""

    def setup_method(self):
        self.world = build_world(WorldConfig(), seed=0)
        self.catalog = Catalog(generate_catalog(self.world, 200, seed=0), self.world.schema)
        self.ids = [item.item_id for item in self.catalog.items]

    def test_single_item_outfit_swaps_once(self):
        outfit = Outfit((self.ids[0],))
        negative = negative_sample(outfit, self.catalog, seed=1)
        assert len(negative) == 1 and negative != outfit

    def test_integer_seed_uses_named_stream(self):
        outfit = Outfit(tuple(self.ids[:4]))
        for seed in (0, 3, 11):
            assert negative_sample(outfit, self.catalog, seed).items == \
                negative_sample(outfit, self.catalog, rng_stream(seed, "negatives")).items
            assert replace_one(outfit, self.ids, seed).items == \
                replace_one(outfit, self.ids, rng_stream(seed, "negatives")).items

    def test_swap_count_uniform(self):
        outfit = Outfit(tuple(self.ids[:5]))
        rng = np.random.default_rng(2)
        counts = Counter(len(outfit.item_set - negative_sample(outfit, self.catalog, rng).item_set)
                         for _ in range(20000))
        # a swapped-in item can never equal an original one, so k equals the changed positions
        for k in range(1, 6):
            assert abs(counts[k] / 20000 - 0.2) < 0.015

    def test_replace_one_hamming_distance(self):
        outfit = Outfit(tuple(self.ids[:4]))
        for seed in range(20):
            negative = replace_one(outfit, self.ids, seed)
            assert sum(a != b for a, b in zip(outfit.items, negative.items)) == 1

    def test_category_matched_replacement(self):
        outfit = Outfit(tuple(self.ids[:4]))
        for seed in range(20):
            negative = replace_one(outfit, self.ids, seed, self.catalog, category_matched=True)
            position = next(k for k in range(4) if outfit.items[k] != negative.items[k])
            assert self.catalog.category_of(negative.items[position]) == self.catalog.category_of(outfit.items[position])

    def test_pool_too_small(self):
        with pytest.raises(InputError):
            negative_sample(Outfit(tuple(self.ids[:3])), self.catalog, 0, pool=self.ids[:3])


class TestDataset:
    """Whole datasets on disk"""

    def setup_method(self):
        self.temp_dir = tempfile.mkdtemp()

    def teardown_method(self):
        shutil.rmtree(self.temp_dir)

    def test_save_load_and_world(self):
        dataset = tiny_dataset()
        dataset_id = dataset.save(Path(self.temp_dir) / "data")
        loaded = load_dataset(Path(self.temp_dir) / "data")
        assert loaded.dataset_id == dataset_id
        assert loaded.outfits == dataset.outfits
        assert len(loaded.click_samples) == len(dataset.click_samples)
        world = world_for(loaded)
        assert all(oracle_compatible(o, world, loaded.catalog) for o in loaded.outfits)
        assert loaded.manifest["counts"]["outfits"] == len(dataset.outfits)

    def test_questionnaire_samples_respect_nogo(self):
        dataset = tiny_dataset()
        assert dataset.questionnaire_samples
        for sample in dataset.questionnaire_samples:
            categories = {dataset.catalog.category_of(i) for i in sample.outfit.items}
            assert not categories & set(sample.context.nogo_categories)
            assert set(sample.kept_items) <= sample.outfit.item_set

    @pytest.mark.slow
    def test_logistic_sanity_floor(self):
        world = build_world(WorldConfig(), seed=0)
        catalog = Catalog(generate_catalog(world, 5000, seed=0), world.schema)
        outfits = generate_outfits(world, catalog, 5000, seed=0)
        assert sanity_floor(world, catalog, outfits, seed=0) >= 0.8
