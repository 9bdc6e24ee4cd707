"""
Experiment orchestration

run_experiment loads a dataset, splits it, trains one model with per-epoch
checkpoints (resuming from the latest one), evaluates every metric that
applies to the model and writes the report and the run manifest.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple
import json
import logging
from pydantic import BaseModel, ConfigDict, Field

from ..catalog import Outfit, OutfitDataset, UserSample, Vocabulary, build_vocabulary, load_dataset
from ..errors import CheckpointError, ConfigurationError, MetricError
from ..evaluation import (
    CTR, KR, EvalReport, RankCutoffs, compatibility_auc, evaluation_examples, fitb, generated_validity,
    personalized_metrics, perplexity, write_reports,
)
from ..generation import build_candidate_index
from ..models import Family, OutfitModel, SequenceScoringModel, create_model, make_examples
from ..synthgen import world_for
from ..utils.performance import monitor_operation
from .checkpoint import CheckpointManager, load_checkpoint, restore_model
from .config import ExperimentConfig
from .splits import split
from .trainer import Trainer

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
REPORT_FILE = "report.jsonl"
CHECKPOINT_DIR = "checkpoints"
SAMPLE_SOURCES = {"clicks": "click_samples", "questionnaires": "questionnaire_samples"}


class RunManifest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    name: str
    config: Dict[str, Any]
    dataset_id: str
    vocab_size: int
    train_size: int
    validation_size: int
    epochs_completed: int
    losses: List[float] = Field(default_factory=list)
    checkpoints: List[str] = Field(default_factory=list)
    report_path: str
    wall_clock_seconds: float = 0.0

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        return cls.model_validate_json(Path(path).read_text())


@dataclass
class ExperimentData:
    dataset: OutfitDataset
    train_outfits: List[Outfit]
    validation_outfits: List[Outfit]
    train_samples: Optional[List[UserSample]] = None
    validation_samples: Optional[List[UserSample]] = None


def _cap(items: List, limit: Optional[int]) -> List:
    return items if limit is None else items[:limit]


def prepare_data(config: ExperimentConfig, dataset: Optional[OutfitDataset] = None) -> ExperimentData:
    """Load (or take) the dataset and split the configured training source"""
    dataset = dataset or load_dataset(config.data_dir)
    if config.training_data == "outfits":
        train, validation = split(dataset.outfits, config.split, config.data_seed, config.validation_fraction)
        return ExperimentData(dataset, _cap(train, config.max_train_samples),
                              _cap(validation, config.max_eval_samples))
    samples = getattr(dataset, SAMPLE_SOURCES[config.training_data])
    train, validation = split(samples, config.split, config.data_seed, config.validation_fraction)
    train = _cap(train, config.max_train_samples)
    validation = _cap(validation, config.max_eval_samples)
    return ExperimentData(dataset, [s.outfit for s in train], [s.outfit for s in validation], train, validation)


def build_model(config: ExperimentConfig, data: ExperimentData,
                vocab: Optional[Vocabulary] = None) -> OutfitModel:
    vocab = vocab or build_vocabulary(data.train_outfits, config.vocab_threshold)
    return create_model(config.build_model_config(), vocab, data.dataset.catalog, config.init_seed)


def train_model(config: ExperimentConfig, data: ExperimentData, resume: bool = True,
                model: Optional[OutfitModel] = None) -> Tuple[OutfitModel, Trainer, int]:
    """Train under the run directory's lock; returns (model, trainer, epochs completed)"""
    manager = CheckpointManager(config.run_dir / CHECKPOINT_DIR, config.keep_checkpoints)
    with manager.lock():
        start_epoch = 0
        prior_losses: List[float] = []
        latest = manager.latest() if resume else None
        if latest is not None:
            checkpoint = load_checkpoint(latest)
            if checkpoint.config != config.build_model_config():
                raise CheckpointError(f"{latest} was written for a different model configuration")
            model = restore_model(checkpoint, data.dataset.catalog)
            start_epoch = min(checkpoint.epoch, config.epochs)
            prior_losses = list(checkpoint.meta.get("losses", []))[:start_epoch]
            logger.info(f"Resuming {config.name} after epoch {start_epoch} from {latest}")
        model = model or build_model(config, data)
        examples, _ = make_examples(data.train_outfits, model.vocab, data.dataset.catalog, data.train_samples)
        trainer = Trainer(model, examples, config.init_seed, checkpoints=manager, prior_losses=prior_losses)
        trainer.train(config.epochs, start_epoch)
        if manager.latest() is None:
            manager.save(model, 0)
    return model, trainer, max(start_epoch, config.epochs)


def personalized_samples(config: ExperimentConfig, data: ExperimentData) -> Tuple[List[UserSample], str]:
    """Validation samples for CTR/KR; outfit-trained models are served on held-out click samples"""
    if data.validation_samples is not None:
        return data.validation_samples, CTR if config.training_data == "clicks" else KR
    if not data.dataset.click_samples:
        return [], CTR
    _, held_out = split(data.dataset.click_samples, "random_90_10", config.data_seed, config.validation_fraction)
    return _cap(held_out, config.max_eval_samples), CTR


def evaluate_model(model: OutfitModel, config: ExperimentConfig, data: ExperimentData) -> EvalReport:
    """Every metric that applies to the model, on the validation split"""
    catalog = data.dataset.catalog
    with monitor_operation("evaluate", {"experiment": config.name}) as timing:
        examples, skipped = evaluation_examples(data.validation_outfits, model.vocab, catalog,
                                                data.validation_samples)
        values: Dict[str, Any] = {"skipped": {"oov_or_short": skipped}}
        if isinstance(model, SequenceScoringModel):
            values["perplexity"] = perplexity(model, examples, skipped).value
        values["fitb"] = fitb(model, examples, RankCutoffs(tuple(config.fitb_cutoffs)), config.eval_seed,
                              skipped).recall
        try:
            values["cp_auc"] = compatibility_auc(model, examples, config.eval_seed, config.hard_negatives).auc
        except MetricError as e:
            logger.warning(f"CP-AUC not computed: {e}")

        world = world_for(data.dataset)
        if world is not None and config.validity_samples and model.config.family != Family.SIAMESE:
            contexts = [e.context for e in examples if e.context is not None]
            validity = generated_validity(model, world, catalog, config.validity_samples,
                                          [len(e) for e in examples], contexts, config.eval_seed,
                                          max_workers=config.threads)
            values["validity_rate"] = validity.rate
            values["random_base_rate"] = validity.base_rate

        if config.personalized:
            samples, mode = personalized_samples(config, data)
            if samples:
                index = None
                if model.config.family == Family.SIAMESE:
                    index = build_candidate_index([s.anchor for s in samples if s.anchor is not None],
                                                  data.train_outfits, model.score_outfits, catalog,
                                                  config.eval_seed, config.candidate_cap)
                result = personalized_metrics(model, samples, catalog, mode, config.eval_seed,
                                              config.fixed_length, index)
                values.update(match_mode=mode, match_rates=result.match_rates,
                              personalization_rate=result.personalization_rate,
                              item_diversity=result.item_diversity)
                values["skipped"]["unserved"] = result.missing

    report = EvalReport(model_id=config.name, family=model.family, dataset_id=data.dataset.dataset_id,
                        seed=config.eval_seed, runtime_seconds=timing.duration, **values)
    logger.info(f"Evaluated {config.name}: PP {report.perplexity}, CP-AUC {report.cp_auc}, FITB {report.fitb}")
    return report


def run_experiment(config: ExperimentConfig, resume: bool = True,
                   dataset: Optional[OutfitDataset] = None) -> Tuple[RunManifest, EvalReport]:
    with monitor_operation("experiment", {"experiment": config.name}) as timing:
        config.run_dir.mkdir(parents=True, exist_ok=True)
        data = prepare_data(config, dataset)
        if not data.train_outfits or not data.validation_outfits:
            raise ConfigurationError(f"{config.name}: split left an empty train or validation set")
        with monitor_operation("train", {"experiment": config.name}):
            model, trainer, epochs_completed = train_model(config, data, resume)
        report = evaluate_model(model, config, data)
        report_path = config.run_dir / REPORT_FILE
        write_reports(report_path, [report])
    manager = CheckpointManager(config.run_dir / CHECKPOINT_DIR, config.keep_checkpoints)
    manifest = RunManifest(
        name=config.name,
        config=config.snapshot(),
        dataset_id=data.dataset.dataset_id,
        vocab_size=model.vocab_size,
        train_size=len(data.train_outfits),
        validation_size=len(data.validation_outfits),
        epochs_completed=epochs_completed,
        losses=trainer.losses,
        checkpoints=[str(p) for p in manager.checkpoints()],
        report_path=str(report_path),
        wall_clock_seconds=timing.duration,
    )
    manifest.save(config.run_dir / MANIFEST_FILE)
    logger.info(f"Run {config.name} finished in {manifest.wall_clock_seconds:.1f}s; report at {report_path}")
    return manifest, report


def load_run_model(run_dir: Path, dataset: Optional[OutfitDataset] = None) -> Tuple[OutfitModel, RunManifest]:
    """Latest checkpoint of a finished run, frozen for evaluation or serving"""
    manifest = RunManifest.load(Path(run_dir) / MANIFEST_FILE)
    config = ExperimentConfig(**manifest.config)
    dataset = dataset or load_dataset(config.data_dir)
    latest = CheckpointManager(Path(run_dir) / CHECKPOINT_DIR).latest()
    if latest is None:
        raise CheckpointError(f"No checkpoint under {run_dir}")
    model = restore_model(load_checkpoint(latest), dataset.catalog)
    model.eval_mode()
    return model, manifest
