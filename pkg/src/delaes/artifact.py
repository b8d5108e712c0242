"""Bit-exact binary persistence of trained models.

Layout: the 8-byte magic ``DELAES01``, a length-prefixed JSON metadata block
(config, vocabulary, score range, optional creation timestamp), then a count
of named tensors, each as length-prefixed name, u32 rank, u32 dims and raw
little-endian float32 values.  Saving and reloading reproduces every tensor
bit for bit.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .corpus import ScoreRange, Vocabulary
from .errors import FormatError
from .network import ModelParameters

MAGIC = b"DELAES01"


@dataclass(frozen=True)
class ModelArtifact:
    params: ModelParameters
    vocab: Vocabulary
    score_range: ScoreRange
    created: str | None


def save_model(params: ModelParameters, vocab: Vocabulary,
               score_range: ScoreRange, path, created: str | None = None) -> None:
    """Write a model artifact.

    ``created`` is recorded verbatim when given; it defaults to None so that
    identical training runs produce byte-identical files.
    """
    meta = {
        "config": params.config.to_dict(),
        "vocabulary": vocab.corpus_tokens(),
        "score_range": {
            "prompt_id": score_range.prompt_id,
            "min": score_range.min_score,
            "max": score_range.max_score,
        },
        "created": created,
        "embedding_trainable": params.embedding_trainable,
    }
    blob = json.dumps(meta, sort_keys=True, ensure_ascii=False).encode("utf-8")
    tensors = list(params.named_tensors())
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(tensors)))
        for name, tensor in tensors:
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", tensor.ndim))
            for dim in tensor.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


class _Reader:
    def __init__(self, path):
        self.path = path
        with open(path, "rb") as fh:
            self.data = fh.read()
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise FormatError(f"{self.path}: truncated artifact")
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_model(path) -> ModelArtifact:
    """Read an artifact, rejecting unknown magic or tensor shape mismatches."""
    reader = _Reader(path)
    if reader.take(len(MAGIC)) != MAGIC:
        raise FormatError(f"{path}: not a DELAES01 artifact")
    try:
        meta = json.loads(reader.take(reader.u32()).decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: corrupt metadata block: {exc}") from None

    cfg = TrainConfig.from_dict(meta["config"])
    vocab = Vocabulary(meta["vocabulary"])
    rng = meta["score_range"]
    score_range = ScoreRange(rng["prompt_id"], rng["min"], rng["max"])

    tensors: dict[str, np.ndarray] = {}
    for _ in range(reader.u32()):
        name = reader.take(reader.u32()).decode("utf-8")
        ndim = reader.u32()
        shape = tuple(reader.u32() for _ in range(ndim))
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        raw = reader.take(count * 4)
        tensors[name] = np.frombuffer(raw, dtype="<f4").astype(
            np.float32).reshape(shape)
    if reader.offset != len(reader.data):
        raise FormatError(f"{path}: trailing bytes after last tensor")

    try:
        params = ModelParameters.from_tensor_map(
            cfg, tensors, embedding_trainable=meta.get("embedding_trainable", True),
            vocab_size=vocab.size)
    except Exception as exc:
        raise FormatError(f"{path}: {exc}") from None
    return ModelArtifact(params=params, vocab=vocab, score_range=score_range,
                         created=meta.get("created"))
