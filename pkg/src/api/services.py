"""
OutfitService

Loads the latest checkpoint of every finished run under a directory and
answers generation and recommendation requests with the frozen models.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional
import asyncio
import logging

from ..catalog import Action, ActionSequence, Catalog, OutfitDataset, Outfit, Questionnaire, UserContext
from ..catalog import load_dataset
from ..errors import AnchorNotFoundError, OutfitGenError, UsageError
from ..generation import CandidateOutfitIndex, GenerationRequest, build_candidate_index, generate_outfits
from ..harness import RunManifest, load_run_model
from ..harness.experiment import MANIFEST_FILE
from ..models import OutfitModel, SiameseModel
from .models import UserContextPayload

logger = logging.getLogger(__name__)


class UnknownModelError(OutfitGenError, LookupError):
    """No loaded run has the requested name"""


@dataclass
class LoadedRun:
    model: OutfitModel
    manifest: RunManifest
    dataset: OutfitDataset
    # per-anchor candidate indices for the Siamese scorer
    indices: Dict[str, CandidateOutfitIndex] = field(default_factory=dict)


def context_from_payload(payload: Optional[UserContextPayload]) -> Optional[UserContext]:
    if payload is None:
        return None
    if payload.actions is not None:
        return ActionSequence(tuple(Action(a.item_id, a.event, a.age_days) for a in payload.actions))
    if payload.questionnaire is not None:
        answers = payload.questionnaire.model_dump()
        return Questionnaire(**{k: tuple(v) if isinstance(v, list) else v for k, v in answers.items()})
    return None


class OutfitService:
    """Frozen models shared across requests"""

    def __init__(self, run_dir: Path):
        self.run_dir = Path(run_dir)
        self.runs: Dict[str, LoadedRun] = {}
        self.initialized = False

    def initialize(self) -> bool:
        """Load every run directory that holds a manifest; broken runs are skipped"""
        datasets: Dict[str, OutfitDataset] = {}
        for manifest_path in sorted(self.run_dir.glob(f"*/{MANIFEST_FILE}")):
            run_path = manifest_path.parent
            try:
                data_dir = str(RunManifest.load(manifest_path).config.get("data_dir"))
                if data_dir not in datasets:
                    datasets[data_dir] = load_dataset(Path(data_dir))
                model, manifest = load_run_model(run_path, datasets[data_dir])
            except OutfitGenError as e:
                logger.warning(f"Skipping run {run_path.name}: {e}")
                continue
            self.runs[manifest.name] = LoadedRun(model, manifest, datasets[data_dir])
            logger.info(f"Loaded {manifest.name} ({model.family}, {manifest.epochs_completed} epochs)")
        self.initialized = bool(self.runs)
        if not self.runs:
            logger.warning(f"No finished runs under {self.run_dir}")
        return self.initialized

    def get_run(self, name: str) -> LoadedRun:
        if name not in self.runs:
            raise UnknownModelError(f"No loaded model named '{name}'")
        return self.runs[name]

    def list_models(self) -> List[Dict]:
        return [{"name": name, "family": run.model.family, "contextual": run.model.config.contextual,
                 "dataset_id": run.manifest.dataset_id, "vocab_size": run.manifest.vocab_size,
                 "epochs_completed": run.manifest.epochs_completed}
                for name, run in sorted(self.runs.items())]

    def _check_anchor(self, run: LoadedRun, anchor: Optional[str]) -> None:
        if anchor is not None and anchor not in run.model.vocab:
            raise AnchorNotFoundError(f"Item '{anchor}' is not in the vocabulary of {run.manifest.name}")

    def _index_for(self, run: LoadedRun, anchor: Optional[str]) -> Optional[CandidateOutfitIndex]:
        if not isinstance(run.model, SiameseModel) or anchor is None:
            return None
        if anchor not in run.indices:
            run.indices[anchor] = build_candidate_index([anchor], run.dataset.outfits, run.model.score_outfits,
                                                        run.dataset.catalog)
        return run.indices[anchor]

    def describe(self, catalog: Catalog, outfits: List[Outfit]) -> List[Dict]:
        categories = catalog.schema.categories
        return [{"items": list(o.items), "categories": [categories[catalog.category_of(i)] for i in o.items]}
                for o in outfits]

    def _generate(self, name: str, request: GenerationRequest) -> Dict:
        run = self.get_run(name)
        self._check_anchor(run, request.anchor)
        outfits = generate_outfits(run.model, request, self._index_for(run, request.anchor))
        return {"model_name": name, "family": run.model.family,
                "outfits": self.describe(run.dataset.catalog, outfits)}

    async def generate(self, name: str, request: GenerationRequest) -> Dict:
        return await asyncio.to_thread(self._generate, name, request)

    async def recommend(self, name: str, anchor: str, context: Optional[UserContext],
                        length: Optional[int] = None, seed: int = 0) -> Dict:
        """Argmax completion around the anchor; the Siamese model ranks its candidates"""
        run = self.get_run(name)
        if isinstance(run.model, SiameseModel) and not isinstance(context, ActionSequence):
            raise UsageError("The Siamese model needs an action history to personalize")
        request = GenerationRequest(anchor=anchor, context=context, temperature=0.0, fixed_length=length,
                                    seed=seed)
        return await self.generate(name, request)

    def cleanup(self) -> None:
        self.runs.clear()
        self.initialized = False
