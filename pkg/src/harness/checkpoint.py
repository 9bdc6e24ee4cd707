"""
Model checkpoints

Layout, little-endian throughout:

    magic  b"OUTFITCK"
    u32    format version
    u32 + utf-8   key=value text block (model config and trainer state, values as JSON)
    u32 + utf-8   vocabulary as JSON
    u32    number of arrays
    per array: u32 + utf-8 name, u32 ndim, i64 * ndim shape, float64 data

Arrays are the ParamStore's parameters and Adam moments, so a restored
model continues training exactly where it stopped.
"""
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, BinaryIO, Dict, List, Optional
import json
import logging
import os
import struct
import numpy as np

from ..catalog import Catalog, Vocabulary
from ..errors import CheckpointError
from ..models import ModelConfig, OutfitModel, create_model

logger = logging.getLogger(__name__)

MAGIC = b"OUTFITCK"
FORMAT_VERSION = 1
LOCK_FILE = ".lock"
CHECKPOINT_PATTERN = "epoch-*.ckpt"


@dataclass
class Checkpoint:
    config: ModelConfig
    vocab: Vocabulary
    epoch: int
    step_count: int
    seed: int
    arrays: Dict[str, np.ndarray]
    meta: Dict[str, Any] = field(default_factory=dict)


def _write_text(handle: BinaryIO, text: str) -> None:
    data = text.encode("utf-8")
    handle.write(struct.pack("<I", len(data)))
    handle.write(data)


def _read_exact(handle: BinaryIO, size: int) -> bytes:
    data = handle.read(size)
    if len(data) != size:
        raise CheckpointError("Checkpoint is truncated")
    return data


def _read_text(handle: BinaryIO) -> str:
    (size,) = struct.unpack("<I", _read_exact(handle, 4))
    return _read_exact(handle, size).decode("utf-8")


def _key_values(values: Dict[str, Any]) -> str:
    return "".join(f"{key}={json.dumps(value, sort_keys=True)}\n" for key, value in values.items())


def _parse_key_values(text: str) -> Dict[str, Any]:
    values = {}
    for line in text.splitlines():
        if not line:
            continue
        key, sep, raw = line.partition("=")
        if not sep:
            raise CheckpointError(f"Malformed config line '{line}'")
        values[key] = json.loads(raw)
    return values


def save_checkpoint(path: Path, model: OutfitModel, epoch: int, meta: Optional[Dict[str, Any]] = None) -> Path:
    """Write atomically: a temporary file is renamed over the target"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "config": model.config.to_flat(),
        "epoch": int(epoch),
        "step_count": int(model.store.step_count),
        "seed": int(model.seed),
        "meta": meta or {},
    }
    arrays = model.store.state_arrays()
    partial = path.with_suffix(path.suffix + ".tmp")
    with open(partial, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<I", FORMAT_VERSION))
        _write_text(handle, _key_values(header))
        _write_text(handle, json.dumps(model.vocab.to_dict()))
        handle.write(struct.pack("<I", len(arrays)))
        for name, array in arrays.items():
            _write_text(handle, name)
            handle.write(struct.pack("<I", array.ndim))
            handle.write(struct.pack(f"<{array.ndim}q", *array.shape))
            handle.write(np.ascontiguousarray(array, dtype="<f8").tobytes())
    os.replace(partial, path)
    logger.info(f"Checkpoint for epoch {epoch} written to {path}")
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint {path} does not exist")
    with open(path, "rb") as handle:
        if handle.read(len(MAGIC)) != MAGIC:
            raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(handle, 4))
        if version != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
        header = _parse_key_values(_read_text(handle))
        vocab = Vocabulary.from_dict(json.loads(_read_text(handle)))
        (count,) = struct.unpack("<I", _read_exact(handle, 4))
        arrays: Dict[str, np.ndarray] = {}
        for _ in range(count):
            name = _read_text(handle)
            (ndim,) = struct.unpack("<I", _read_exact(handle, 4))
            shape = struct.unpack(f"<{ndim}q", _read_exact(handle, 8 * ndim))
            size = int(np.prod(shape)) if ndim else 1
            arrays[name] = np.frombuffer(_read_exact(handle, 8 * size), dtype="<f8").reshape(shape).copy()
    try:
        config = ModelConfig(**header["config"])
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"{path}: invalid model config block: {e}") from e
    return Checkpoint(config, vocab, header["epoch"], header["step_count"], header["seed"], arrays,
                      header.get("meta", {}))


def restore_model(checkpoint: Checkpoint, catalog: Catalog) -> OutfitModel:
    """Rebuild the architecture and overwrite its parameters and optimizer state"""
    model = create_model(checkpoint.config, checkpoint.vocab, catalog, checkpoint.seed)
    model.store.load_state_arrays(checkpoint.arrays, checkpoint.step_count)
    return model


def load_model(path: Path, catalog: Catalog) -> OutfitModel:
    model = restore_model(load_checkpoint(path), catalog)
    model.eval_mode()
    return model


class CheckpointManager:
    """Per-epoch checkpoints in one directory, keeping the most recent few"""

    def __init__(self, directory: Path, keep: int = 2):
        if keep < 1:
            raise CheckpointError(f"Must keep at least one checkpoint, got {keep}")
        self.directory = Path(directory)
        self.keep = keep

    def path_for(self, epoch: int) -> Path:
        return self.directory / f"epoch-{epoch:04d}.ckpt"

    def checkpoints(self) -> List[Path]:
        return sorted(self.directory.glob(CHECKPOINT_PATTERN))

    def latest(self) -> Optional[Path]:
        found = self.checkpoints()
        return found[-1] if found else None

    def save(self, model: OutfitModel, epoch: int, meta: Optional[Dict[str, Any]] = None) -> Path:
        path = save_checkpoint(self.path_for(epoch), model, epoch, meta)
        for stale in self.checkpoints()[:-self.keep]:
            stale.unlink()
            logger.debug(f"Removed old checkpoint {stale}")
        return path

    @contextmanager
    def lock(self):
        """Exclusive ownership of the directory for one trainer"""
        self.directory.mkdir(parents=True, exist_ok=True)
        lock_path = self.directory / LOCK_FILE
        try:
            descriptor = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise CheckpointError(f"{self.directory} is locked by another trainer ({lock_path})") from None
        try:
            os.write(descriptor, str(os.getpid()).encode("ascii"))
            os.close(descriptor)
            yield self
        finally:
            lock_path.unlink(missing_ok=True)
