"""
Training loop

Mini-batch Adam over a model's own loss. Every epoch draws its batch order,
dropout masks and loss-side randomness (negatives, masked positions,
shuffles) from streams keyed by (seed, epoch), so resuming from a checkpoint
after epoch k replays epochs k+1.. exactly as an uninterrupted run would.
"""
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence
import logging
import math
import time
import numpy as np

from ..errors import ConfigurationError, TrainingDivergedError
from ..models import Example, OutfitModel
from ..nn import Adam, rng_stream
from .checkpoint import CheckpointManager

logger = logging.getLogger(__name__)


@dataclass
class EpochStats:
    epoch: int
    loss: float
    batches: int
    seconds: float


class Trainer:
    def __init__(self, model: OutfitModel, examples: Sequence[Example], seed: int = 0,
                 batch_size: Optional[int] = None, checkpoints: Optional[CheckpointManager] = None,
                 on_epoch: Optional[Callable[[EpochStats], None]] = None, prior_losses: Sequence[float] = ()):
        if not examples:
            raise ConfigurationError("No training examples")
        self.model = model
        self.examples = list(examples)
        self.seed = seed
        self.batch_size = batch_size or model.config.batch_size
        self.checkpoints = checkpoints
        self.on_epoch = on_epoch
        self.optimizer = Adam(learning_rate=model.config.learning_rate, clip_norm=model.config.clip_norm)
        self.history: List[EpochStats] = []
        self.prior_losses = [float(v) for v in prior_losses]

    @property
    def losses(self) -> List[float]:
        """Mean loss of every completed epoch, including those trained before a resume"""
        return self.prior_losses + [stats.loss for stats in self.history]

    def train_epoch(self, epoch: int) -> EpochStats:
        """One pass over the examples; epoch is 1-based"""
        started = time.perf_counter()
        order = rng_stream(self.seed, "batches", epoch).permutation(len(self.examples))
        loss_rng = rng_stream(self.seed, "loss", epoch)
        self.model.train_mode(rng_stream(self.seed, "dropout", epoch))
        losses = []
        try:
            for number, start in enumerate(range(0, len(order), self.batch_size)):
                batch = [self.examples[i] for i in order[start:start + self.batch_size]]
                loss = self.model.loss(batch, loss_rng)
                value = float(loss.data)
                if not math.isfinite(value):
                    raise TrainingDivergedError(
                        f"{self.model.family} loss became {value} in epoch {epoch}, batch {number}",
                        {"epoch": epoch, "batch": number, "loss": value, "step": self.model.store.step_count,
                         "previous_losses": losses[-5:]})
                loss.backward()
                self.optimizer.step(self.model.store)
                losses.append(value)
                logger.debug(f"epoch {epoch} batch {number}: loss {value:.4f}")
        finally:
            self.model.eval_mode()
        stats = EpochStats(epoch, float(np.mean(losses)), len(losses), time.perf_counter() - started)
        logger.info(f"{self.model.family} epoch {epoch}: loss {stats.loss:.4f} over {stats.batches} batches "
                    f"({stats.seconds:.1f}s)")
        return stats

    def train(self, epochs: int, start_epoch: int = 0) -> List[EpochStats]:
        """Run epochs start_epoch+1..epochs, checkpointing after each"""
        for epoch in range(start_epoch + 1, epochs + 1):
            stats = self.train_epoch(epoch)
            self.history.append(stats)
            if self.checkpoints is not None:
                self.checkpoints.save(self.model, epoch, {"loss": stats.loss, "losses": self.losses})
            if self.on_epoch is not None:
                self.on_epoch(stats)
        return self.history
