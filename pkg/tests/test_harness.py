"""
Tests for splits, experiment configs, checkpoints, training and comparison
"""
import json
import pytest
import tempfile
import shutil
from pathlib import Path
from types import SimpleNamespace

import numpy as np

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.catalog import build_vocabulary, load_dataset
from src.errors import CheckpointError, ComparisonError, ConfigurationError, EXIT_DATA, EXIT_OK, EXIT_USAGE
from src.evaluation import EvalReport, read_reports, write_reports
from src.harness import (
    CheckpointManager, Trainer, build_experiment_config, compare, experiment_files, load_checkpoint,
    load_experiment_config, load_run_model, prepare_data, random_split, restore_model, run_experiment,
    save_checkpoint, split, time_split, train_model,
)
from src.harness.experiment import CHECKPOINT_DIR, MANIFEST_FILE
from src.main import main
from src.models import create_model, make_examples, model_config
from tests.factories import outfits_of, small_catalog, tiny_dataset

EXPERIMENTS_DIR = Path(__file__).parent.parent / "data" / "experiments"
OUTFITS = outfits_of(("c0-0", "c2-0", "c4-0", "c6-0"), ("c1-1", "c2-1", "c4-1", "c6-1"),
                     ("c0-0", "c2-1", "c5-0"), ("c1-1", "c4-0", "c5-0"), ("c0-1", "c3-0", "c5-1"))


def _toy_model(family="gpt", seed=0, dropout_rate=0.1):
    catalog = small_catalog()
    vocab = build_vocabulary(OUTFITS, threshold=1)
    config = model_config(family, model_dim=8, num_heads=2, num_layers=1, hidden_size=8, siamese_units=8,
                          dropout_rate=dropout_rate, batch_size=2)
    model = create_model(config, vocab, catalog, seed)
    examples, _ = make_examples(OUTFITS, vocab, catalog)
    return model, examples, catalog


class TestSplits:
    """Train/validation partitions"""

    def test_random_split_ninety_ten(self):
        samples = list(range(100))
        train, validation = random_split(samples, seed=0)
        assert len(train) == 90 and len(validation) == 10
        assert sorted(train + validation) == samples
        assert random_split(samples, seed=0) == (train, validation)
        assert random_split(samples, seed=1) != (train, validation)

    def test_time_split_holds_out_last_days(self):
        samples = [SimpleNamespace(day=d) for d in range(10) for _ in range(10)]
        train, validation = time_split(samples, 0.1)
        assert len(validation) == 10
        assert max(s.day for s in train) < min(s.day for s in validation)

    def test_time_split_needs_days(self):
        with pytest.raises(ConfigurationError):
            time_split([SimpleNamespace(day=None), SimpleNamespace(day=1)])
        with pytest.raises(ConfigurationError):
            time_split([SimpleNamespace(day=3), SimpleNamespace(day=3)])

    def test_bad_policy_and_fraction(self):
        with pytest.raises(ConfigurationError):
            split(list(range(10)), "by_user")
        with pytest.raises(ConfigurationError):
            random_split(list(range(3)), seed=0, validation_fraction=0.1)


class TestExperimentConfig:
    """YAML experiments with includes"""

    def setup_method(self):
        self.temp_dir = tempfile.mkdtemp()
        self.dir = Path(self.temp_dir)

    def teardown_method(self):
        shutil.rmtree(self.temp_dir)

    def _write(self, name, text):
        path = self.dir / name
        path.write_text(text)
        return path

    def test_include_and_flat_model_keys(self):
        self._write("_base.yaml", "data_dir: data\nepochs: 3\nmodel_dim: 32\n")
        path = self._write("exp.yaml", "include: [_base.yaml]\nfamily: gpt\nepochs: 5\nnum_heads: 4\n")
        config = load_experiment_config(path, use_environment=False)
        assert config.name == "exp" and config.epochs == 5
        assert config.model == {"model_dim": 32, "num_heads": 4}
        model = config.build_model_config()
        assert (model.model_dim, model.num_heads) == (32, 4)
        assert config.training_data == "outfits" and not config.personalized

    def test_overrides_win(self):
        path = self._write("exp.yaml", "data_dir: data\nfamily: lstm\nepochs: 5\n")
        config = load_experiment_config(path, {"epochs": 1, "output_dir": None}, use_environment=False)
        assert config.epochs == 1 and config.output_dir == Path("runs")

    def test_include_cycle(self):
        self._write("a.yaml", "include: [b.yaml]\n")
        self._write("b.yaml", "include: [a.yaml]\n")
        with pytest.raises(ConfigurationError):
            load_experiment_config(self.dir / "a.yaml", use_environment=False)

    def test_invalid_values(self):
        with pytest.raises(ConfigurationError):
            load_experiment_config(self.dir / "missing.yaml", use_environment=False)
        bad_yaml = self._write("bad.yaml", "family: [gpt\n")
        with pytest.raises(ConfigurationError):
            load_experiment_config(bad_yaml, use_environment=False)
        with pytest.raises(ConfigurationError):
            build_experiment_config({"name": "x", "data_dir": "d", "family": "gpt", "split": "time_based"})
        with pytest.raises(ConfigurationError):
            build_experiment_config({"name": "x", "data_dir": "d", "family": "transformer",
                                     "training_data": "outfits"})
        with pytest.raises(ConfigurationError):
            build_experiment_config({"name": "x", "data_dir": "d", "family": "gpt", "num_heads": 5})

    def test_shipped_experiments_load(self):
        files = experiment_files(EXPERIMENTS_DIR)
        assert {p.stem for p in files} >= {"siamese", "lstm", "gpt", "bert", "ctx_gpt", "ctx_bert",
                                           "transformer", "s2s_lstm"}
        for path in files:
            config = load_experiment_config(path, use_environment=False)
            assert config.name == path.stem
        transformer = load_experiment_config(EXPERIMENTS_DIR / "transformer.yaml", use_environment=False)
        assert transformer.training_data == "clicks" and transformer.personalized


class TestCheckpoints:
    """Binary checkpoints and the per-run manager"""

    def setup_method(self):
        self.temp_dir = tempfile.mkdtemp()
        self.dir = Path(self.temp_dir)

    def teardown_method(self):
        shutil.rmtree(self.temp_dir)

    def test_round_trip(self):
        model, examples, catalog = _toy_model()
        Trainer(model, examples, seed=0).train(1)
        path = save_checkpoint(self.dir / "model.ckpt", model, epoch=1, meta={"loss": 1.5})
        checkpoint = load_checkpoint(path)
        assert checkpoint.epoch == 1 and checkpoint.meta == {"loss": 1.5}
        assert checkpoint.config == model.config and checkpoint.vocab == model.vocab
        restored = restore_model(checkpoint, catalog)
        assert restored.store.step_count == model.store.step_count
        for name, array in model.store.state_arrays().items():
            np.testing.assert_array_equal(restored.store.state_arrays()[name], array)
        prefix = [examples[0].tokens[:2]]
        np.testing.assert_array_equal(restored.next_log_probs(prefix), model.next_log_probs(prefix))

    def test_corrupt_files(self):
        (self.dir / "junk.ckpt").write_bytes(b"not a checkpoint")
        with pytest.raises(CheckpointError):
            load_checkpoint(self.dir / "junk.ckpt")
        with pytest.raises(CheckpointError):
            load_checkpoint(self.dir / "absent.ckpt")
        model, _, _ = _toy_model()
        path = save_checkpoint(self.dir / "model.ckpt", model, epoch=0)
        path.write_bytes(path.read_bytes()[:-16])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_manager_keeps_latest(self):
        model, _, _ = _toy_model()
        manager = CheckpointManager(self.dir / "checkpoints", keep=2)
        for epoch in range(1, 5):
            manager.save(model, epoch)
        assert [p.name for p in manager.checkpoints()] == ["epoch-0003.ckpt", "epoch-0004.ckpt"]
        assert manager.latest().name == "epoch-0004.ckpt"
        assert not list((self.dir / "checkpoints").glob("*.tmp"))

    def test_lock_is_exclusive(self):
        manager = CheckpointManager(self.dir / "checkpoints")
        with manager.lock():
            with pytest.raises(CheckpointError):
                with CheckpointManager(self.dir / "checkpoints").lock():
                    pass
        with manager.lock():
            pass


class TestTraining:
    """Trainer and resumption"""

    def setup_method(self):
        self.temp_dir = tempfile.mkdtemp()
        self.dir = Path(self.temp_dir)

    def teardown_method(self):
        shutil.rmtree(self.temp_dir)

    def test_history_and_finite_losses(self):
        model, examples, _ = _toy_model("bert")
        history = Trainer(model, examples, seed=0).train(3)
        assert [s.epoch for s in history] == [1, 2, 3]
        assert all(np.isfinite(s.loss) and s.batches == 3 for s in history)

    def test_resume_matches_uninterrupted_run(self):
        for family in ("gpt", "siamese"):
            straight, examples, catalog = _toy_model(family)
            Trainer(straight, examples, seed=4).train(2)

            interrupted, _, _ = _toy_model(family)
            manager = CheckpointManager(self.dir / family)
            Trainer(interrupted, examples, seed=4, checkpoints=manager).train(1)
            resumed = restore_model(load_checkpoint(manager.latest()), catalog)
            Trainer(resumed, examples, seed=4).train(2, start_epoch=1)

            for name, array in straight.store.state_arrays().items():
                np.testing.assert_allclose(resumed.store.state_arrays()[name], array, rtol=0, atol=1e-12)

    def test_no_examples(self):
        model, _, _ = _toy_model()
        with pytest.raises(ConfigurationError):
            Trainer(model, [])

    def test_full_batch_loss_decreases_every_epoch(self):
        model, examples, _ = _toy_model("gpt", dropout_rate=0.0)
        losses = [s.loss for s in Trainer(model, examples, seed=0, batch_size=len(examples)).train(5)]
        assert all(later < earlier for earlier, later in zip(losses, losses[1:]))

    def test_losses_carry_over_resume(self):
        model, examples, catalog = _toy_model()
        manager = CheckpointManager(self.dir / "carry")
        first = Trainer(model, examples, seed=1, checkpoints=manager)
        first.train(1)
        checkpoint = load_checkpoint(manager.latest())
        assert checkpoint.meta["losses"] == first.losses
        resumed = Trainer(restore_model(checkpoint, catalog), examples, seed=1, checkpoints=manager,
                          prior_losses=checkpoint.meta["losses"])
        resumed.train(2, start_epoch=1)
        assert len(resumed.losses) == 2 and resumed.losses[0] == first.losses[0]
        assert load_checkpoint(manager.latest()).meta["losses"] == resumed.losses


def _config(temp_dir: Path, data_dir: Path, **values):
    base = dict(name="gpt-test", data_dir=str(data_dir), output_dir=str(temp_dir / "runs"), family="gpt",
                epochs=1, model_dim=16, num_heads=2, num_layers=1, vocab_threshold=2, max_train_samples=120,
                max_eval_samples=30, validity_samples=5, fitb_cutoffs=[1, 5, 25])
    return build_experiment_config({**base, **values})


class TestExperiments:
    """End-to-end runs on a tiny generated dataset"""

    def setup_method(self):
        self.temp_dir = tempfile.mkdtemp()
        self.dir = Path(self.temp_dir)
        tiny_dataset().save(self.dir / "data")
        self.dataset = load_dataset(self.dir / "data")

    def teardown_method(self):
        shutil.rmtree(self.temp_dir)

    def test_prepare_data_splits(self):
        config = _config(self.dir, self.dir / "data", max_train_samples=None, max_eval_samples=None)
        data = prepare_data(config, self.dataset)
        assert len(data.train_outfits) + len(data.validation_outfits) == len(self.dataset.outfits)
        assert data.train_samples is None

    def test_run_writes_manifest_and_report(self):
        config = _config(self.dir, self.dir / "data")
        manifest, report = run_experiment(config, dataset=self.dataset)
        assert manifest.epochs_completed == 1 and len(manifest.losses) == 1
        assert report.dataset_id == self.dataset.dataset_id
        assert report.perplexity is not None and report.perplexity > 1.0
        assert set(report.fitb) == {1, 5, 25}
        assert report.validity_rate is not None
        assert read_reports(config.run_dir / "report.jsonl")[0].model_id == "gpt-test"
        model, loaded = load_run_model(config.run_dir, self.dataset)
        assert loaded.name == "gpt-test" and model.vocab_size == manifest.vocab_size

    def test_resume_continues_after_last_epoch(self):
        config = _config(self.dir, self.dir / "data")
        data = prepare_data(config, self.dataset)
        train_model(config, data)
        longer = config.model_copy(update={"epochs": 2})
        _, trainer, completed = train_model(longer, data)
        assert completed == 2
        assert [s.epoch for s in trainer.history] == [2]
        manager = CheckpointManager(config.run_dir / CHECKPOINT_DIR)
        assert manager.latest().name == "epoch-0002.ckpt"

    def test_manifest_losses_cover_every_epoch(self):
        config = _config(self.dir, self.dir / "data", validity_samples=0, personalized=False)
        first, _ = run_experiment(config, dataset=self.dataset)
        longer = config.model_copy(update={"epochs": 2})
        resumed, _ = run_experiment(longer, dataset=self.dataset)
        assert len(resumed.losses) == resumed.epochs_completed == 2
        assert resumed.losses[0] == first.losses[0]
        finished, _ = run_experiment(longer, dataset=self.dataset)
        assert finished.losses == resumed.losses

    def test_identical_runs_give_identical_reports(self):
        dumps = []
        for output in ("runs-a", "runs-b"):
            config = _config(self.dir, self.dir / "data", output_dir=str(self.dir / output))
            _, report = run_experiment(config, dataset=self.dataset)
            dumps.append(json.dumps(report.deterministic_dump(), sort_keys=True))
        assert dumps[0] == dumps[1]

    def test_untrained_model_is_near_uniform(self):
        config = _config(self.dir, self.dir / "data", epochs=0, validity_samples=0, personalized=False)
        manifest, report = run_experiment(config, dataset=self.dataset)
        assert manifest.epochs_completed == 0 and manifest.losses == []
        assert abs(report.perplexity - manifest.vocab_size) <= 0.2 * manifest.vocab_size

    def test_resume_rejects_changed_model(self):
        config = _config(self.dir, self.dir / "data")
        data = prepare_data(config, self.dataset)
        train_model(config, data)
        changed = _config(self.dir, self.dir / "data", model_dim=8)
        with pytest.raises(CheckpointError):
            train_model(changed, data)

    @pytest.mark.slow
    def test_personalized_run(self):
        config = _config(self.dir, self.dir / "data", name="s2s-test", family="s2s_lstm", hidden_size=16,
                         training_data="clicks", split="time_based", model_dim=None, num_heads=None,
                         num_layers=None)
        manifest, report = run_experiment(config, dataset=self.dataset)
        assert report.match_mode == "ctr"
        assert set(report.match_rates) == {"brand-category", "color-category", "brand-color-category"}
        assert (self.dir / "runs" / "s2s-test" / MANIFEST_FILE).exists()


def _report(model_id, seed, dataset_id="d0", **values):
    family = model_id.split("-")[0]
    return EvalReport(model_id=model_id, family=family, dataset_id=dataset_id, seed=seed, **values)


class TestCompare:
    """Rankings and directional claims"""

    def setup_method(self):
        self.reports = [
            _report("gpt-s0", 0, perplexity=50.0, fitb={1: 0.10}, cp_auc=0.70),
            _report("bert-s0", 0, perplexity=80.0, fitb={1: 0.20}, cp_auc=0.80),
            _report("gpt-s1", 1, perplexity=52.0, fitb={1: 0.12}, cp_auc=0.72),
            _report("bert-s1", 1, perplexity=81.0, fitb={1: 0.18}, cp_auc=0.79),
        ]

    def test_rankings(self):
        comparison = compare(self.reports)
        assert comparison.rankings["perplexity"] == ["gpt-s0", "gpt-s1", "bert-s0", "bert-s1"]
        assert comparison.rankings["fitb@1"][0] == "bert-s0"
        assert comparison.dataset_id == "d0"

    def test_claims_decided_per_seed(self):
        outcomes = {o.claim.key: o for o in compare(self.reports).outcomes}
        assert outcomes["a"].passed and outcomes["a"].votes == [True, True]
        assert outcomes["b"].passed
        assert not outcomes["c"].evaluated and not outcomes["d"].evaluated

    def test_single_report_skips_checklist(self):
        assert compare(self.reports[:1]).checklist_skipped

    def test_mixed_datasets_and_empty(self):
        with pytest.raises(ComparisonError):
            compare(self.reports + [_report("lstm-s0", 0, dataset_id="other", perplexity=60.0)])
        with pytest.raises(ComparisonError):
            compare([])


class TestCommandLine:
    """Exit codes"""

    def setup_method(self):
        self.temp_dir = tempfile.mkdtemp()
        self.dir = Path(self.temp_dir)

    def teardown_method(self):
        shutil.rmtree(self.temp_dir)

    def test_report_and_compare(self):
        path = self.dir / "reports.jsonl"
        write_reports(path, [_report("gpt-s0", 0, perplexity=50.0), _report("bert-s0", 0, perplexity=80.0)])
        assert main(["report", str(path)]) == EXIT_OK
        assert main(["compare", str(path)]) == EXIT_OK

    def test_missing_report_is_data_error(self):
        assert main(["report", str(self.dir / "none.jsonl")]) == EXIT_DATA

    def test_missing_config_is_usage_error(self):
        assert main(["train", str(self.dir / "none.yaml")]) == EXIT_USAGE

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as exit_info:
            main(["teleport"])
        assert exit_info.value.code == EXIT_USAGE
