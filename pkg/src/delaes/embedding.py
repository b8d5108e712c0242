"""Pre-trained word vectors and the trainable embedding matrix."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import PAD_INDEX, Vocabulary
from .errors import DomainError, FormatError, UsageError


@dataclass(frozen=True)
class EmbeddingTable:
    """Read-only token -> vector map loaded from a text embedding file."""

    dimension: int
    vectors: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, token: str) -> bool:
        return token in self.vectors


@dataclass
class EmbeddingMatrix:
    """Vocabulary-aligned embedding rows; row 0 (PAD) is pinned to zero."""

    weights: np.ndarray
    trainable: bool = True


def load_embeddings(path, expected_dim: int, encoding: str = "utf-8") -> EmbeddingTable:
    """Parse a text embedding file: one token plus ``expected_dim`` reals per line.

    An optional first line of the form ``count dim`` is recognized and
    skipped.  Duplicate tokens keep their first occurrence.
    """
    if expected_dim < 1:
        raise DomainError("expected_dim must be >= 1")
    vectors: dict[str, np.ndarray] = {}
    with open(path, "r", encoding=encoding) as fh:
        for lineno, raw in enumerate(fh, start=1):
            fields = raw.split()
            if not fields:
                continue
            if lineno == 1 and len(fields) == 2 and _both_ints(fields):
                declared = int(fields[1])
                if declared != expected_dim:
                    raise FormatError(
                        f"{path}:1: header declares dimension {declared}, "
                        f"expected {expected_dim}"
                    )
                continue
            token, values = fields[0], fields[1:]
            if len(values) != expected_dim:
                raise FormatError(
                    f"{path}:{lineno}: expected {expected_dim} vector components, "
                    f"found {len(values)}"
                )
            try:
                vector = np.array([float(v) for v in values], dtype=np.float32)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if token not in vectors:
                vectors[token] = vector
    return EmbeddingTable(dimension=expected_dim, vectors=vectors)


def _both_ints(fields) -> bool:
    try:
        int(fields[0]), int(fields[1])
    except ValueError:
        return False
    return True


def build_embedding_matrix(vocab: Vocabulary, table: EmbeddingTable, seed: int,
                           trainable: bool = True,
                           dtype=np.float32) -> EmbeddingMatrix:
    """Assemble the trainable matrix: table rows copied, out-of-table rows
    drawn uniformly from [-0.05, 0.05] with a seeded generator, PAD row zero.

    The draw order follows vocabulary indices, so the same vocabulary, table
    and seed always reproduce the matrix bit for bit.
    """
    rng = np.random.default_rng(seed)
    weights = np.zeros((vocab.size, table.dimension), dtype=dtype)
    for idx in range(1, vocab.size):
        token = vocab.token_at(idx)
        known = table.vectors.get(token)
        if known is not None:
            weights[idx] = known.astype(dtype)
        else:
            weights[idx] = rng.uniform(-0.05, 0.05, table.dimension).astype(dtype)
    weights[PAD_INDEX] = 0.0
    return EmbeddingMatrix(weights=weights, trainable=trainable)


def embed(essay_tokens: Sequence[str], vocab: Vocabulary,
          matrix: EmbeddingMatrix) -> np.ndarray:
    """Look up token vectors as columns of a (dim, n_tokens) matrix.

    Unknown tokens map to the UNK row; the column count always equals the
    token count.
    """
    if len(essay_tokens) < 1:
        raise UsageError("cannot embed an empty token sequence")
    indices = vocab.encode(essay_tokens)
    return matrix.weights[indices].T.copy()
