"""ASAP essay data: loading, tokenization, vocabularies, and score scaling.

The input format is the tab-separated ASAP training file: a header row naming
at least ``essay_id``, ``essay_set``, ``essay`` and ``domain1_score``, then
one essay per line.  Gold scores are mapped linearly into [0, 1] for training
and rescaled to the original integer range for evaluation.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    DomainError,
    EncodingError,
    FormatError,
    ScoreRangeError,
    UsageError,
)

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_INDEX = 0
UNK_INDEX = 1

# Anonymization markers such as "@caps1" or "@num12" survive as single
# tokens; every other non-alphanumeric character is split off on its own.
_TOKEN_RE = re.compile(r"@[a-z]+\d*|\w+|[^\w\s]")

_REQUIRED_COLUMNS = ("essay_id", "essay_set", "essay", "domain1_score")

_ENCODINGS = {
    "latin1": "latin-1",
    "latin-1": "latin-1",
    "utf8": "utf-8",
    "utf-8": "utf-8",
}


def tokenize(text: str) -> list[str]:
    """Lowercase and split ``text`` into word, marker and punctuation tokens.

    Deterministic and rule-based: whitespace separates, runs of alphanumeric
    characters form words, any other character becomes a standalone token.
    Empty input yields an empty list.
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class ScoreRange:
    """Inclusive integer score range for one prompt."""

    prompt_id: int
    min_score: int
    max_score: int

    def __post_init__(self):
        if self.min_score >= self.max_score:
            raise DomainError(
                f"score range for prompt {self.prompt_id} must satisfy min < max, "
                f"got {self.min_score}..{self.max_score}"
            )

    @property
    def span(self) -> int:
        return self.max_score - self.min_score

    @property
    def n_ratings(self) -> int:
        return self.span + 1


#: Built-in score ranges for the eight public ASAP prompts.
DEFAULT_RANGES: dict[int, ScoreRange] = {
    1: ScoreRange(1, 2, 4),
    2: ScoreRange(2, 1, 6),
    3: ScoreRange(3, 0, 3),
    4: ScoreRange(4, 0, 3),
    5: ScoreRange(5, 0, 4),
    6: ScoreRange(6, 0, 4),
    7: ScoreRange(7, 0, 30),
    8: ScoreRange(8, 0, 60),
}


def default_range(prompt_id: int) -> ScoreRange:
    try:
        return DEFAULT_RANGES[prompt_id]
    except KeyError:
        raise DomainError(
            f"no built-in score range for prompt {prompt_id}; supply one explicitly"
        ) from None


def normalize_score(raw_score: int, score_range: ScoreRange) -> float:
    """Map an integer gold score linearly onto [0, 1]."""
    if not score_range.min_score <= raw_score <= score_range.max_score:
        raise ScoreRangeError(
            f"score {raw_score} outside range "
            f"{score_range.min_score}-{score_range.max_score}"
        )
    return (raw_score - score_range.min_score) / score_range.span


def denormalize_score(y: float, score_range: ScoreRange) -> int:
    """Rescale a normalized score back to the integer range.

    Half-way values round away from zero; the result is clamped to the range.
    """
    if not 0.0 <= y <= 1.0:
        raise DomainError(f"normalized score {y} outside [0, 1]")
    x = score_range.min_score + y * score_range.span
    rounded = math.floor(x + 0.5) if x >= 0 else math.ceil(x - 0.5)
    return min(max(rounded, score_range.min_score), score_range.max_score)


@dataclass(frozen=True)
class Essay:
    essay_id: int
    prompt_id: int
    tokens: tuple[str, ...]
    raw_score: int
    normalized_score: float


@dataclass(frozen=True)
class EssaySet:
    """Ordered collection of essays for one prompt."""

    prompt_id: int
    essays: tuple[Essay, ...]
    score_range: ScoreRange

    def __post_init__(self):
        seen = set()
        for essay in self.essays:
            if essay.prompt_id != self.prompt_id:
                raise UsageError(
                    f"essay {essay.essay_id} belongs to prompt {essay.prompt_id}, "
                    f"not {self.prompt_id}"
                )
            if essay.essay_id in seen:
                raise UsageError(f"duplicate essay id {essay.essay_id}")
            seen.add(essay.essay_id)

    def __len__(self) -> int:
        return len(self.essays)

    def __iter__(self):
        return iter(self.essays)

    def subset(self, essay_ids: Iterable[int]) -> "EssaySet":
        wanted = set(essay_ids)
        kept = tuple(e for e in self.essays if e.essay_id in wanted)
        return EssaySet(self.prompt_id, kept, self.score_range)


class Vocabulary:
    """Immutable token-to-index map with reserved PAD (0) and UNK (1) slots.

    Corpus tokens occupy indices >= 2, assigned by descending frequency with
    lexicographic tie-breaking, so construction is deterministic.
    """

    def __init__(self, corpus_tokens: Sequence[str]):
        index = {PAD_TOKEN: PAD_INDEX, UNK_TOKEN: UNK_INDEX}
        for token in corpus_tokens:
            if token in index:
                raise UsageError(f"token {token!r} duplicated or reserved")
            index[token] = len(index)
        self._token_to_index = index
        self._index_to_token = list(index)

    @property
    def size(self) -> int:
        return len(self._token_to_index)

    def __len__(self) -> int:
        return self.size

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_index

    def index(self, token: str) -> int:
        return self._token_to_index.get(token, UNK_INDEX)

    def token_at(self, index: int) -> str:
        return self._index_to_token[index]

    def encode(self, tokens: Iterable[str]) -> list[int]:
        get = self._token_to_index.get
        return [get(t, UNK_INDEX) for t in tokens]

    def corpus_tokens(self) -> list[str]:
        """Tokens in index order, excluding PAD and UNK."""
        return self._index_to_token[2:]


def build_vocabulary(sets: Iterable[EssaySet], min_count: int = 1) -> Vocabulary:
    """Build a vocabulary of tokens occurring at least ``min_count`` times."""
    if min_count < 1:
        raise UsageError("min_count must be >= 1")
    counts: Counter[str] = Counter()
    for essay_set in sets:
        for essay in essay_set:
            counts.update(essay.tokens)
    kept = [(token, n) for token, n in counts.items() if n >= min_count]
    kept.sort(key=lambda item: (-item[1], item[0]))
    return Vocabulary([token for token, _ in kept])


def _decode(path, encoding: str) -> str:
    codec = _ENCODINGS.get(encoding.lower())
    if codec is None:
        raise UsageError(f"unsupported encoding {encoding!r} (use latin1 or utf8)")
    raw = Path(path).read_bytes()
    try:
        return raw.decode(codec)
    except UnicodeDecodeError as exc:
        raise EncodingError(f"{path}: cannot decode input as {codec}: {exc}") from None


def _parse_header(path, lines: list[str], required: Sequence[str]) -> dict[str, int]:
    header = lines[0].split("\t")
    positions = {name: i for i, name in enumerate(header)}
    for name in required:
        if name not in positions:
            raise FormatError(f"{path}: missing required column {name!r}")
    return positions


def _split_row(path, lineno: int, line: str, n_columns: int) -> list[str]:
    fields = line.split("\t")
    if len(fields) != n_columns:
        raise FormatError(
            f"{path}:{lineno}: expected {n_columns} tab-separated fields, found "
            f"{len(fields)} (embedded tabs inside the essay field are not supported)"
        )
    return fields


def _parse_int(path, lineno: int, column: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise FormatError(
            f"{path}:{lineno}: cannot parse {column}={value!r} as an integer"
        ) from None


def load_dataset(path, prompt_id: int, score_range: ScoreRange,
                 encoding: str = "latin1") -> EssaySet:
    """Load the essays of one prompt from an ASAP-format TSV file.

    Rows whose ``essay_set`` differs from ``prompt_id`` are skipped.  A file
    with a header but zero matching rows yields an empty :class:`EssaySet`.
    """
    text = _decode(path, encoding)
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise FormatError(f"{path}: empty file, header row required")
    positions = _parse_header(path, lines, _REQUIRED_COLUMNS)
    n_columns = len(lines[0].split("\t"))

    essays = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = _split_row(path, lineno, line, n_columns)
        essay_set = _parse_int(path, lineno, "essay_set", fields[positions["essay_set"]])
        if essay_set != prompt_id:
            continue
        essay_id = _parse_int(path, lineno, "essay_id", fields[positions["essay_id"]])
        raw_score = _parse_int(path, lineno, "domain1_score",
                               fields[positions["domain1_score"]])
        if not score_range.min_score <= raw_score <= score_range.max_score:
            raise ScoreRangeError(
                f"essay {essay_id}: score {raw_score} outside range "
                f"{score_range.min_score}-{score_range.max_score}"
            )
        tokens = tuple(tokenize(fields[positions["essay"]]))
        if not tokens:
            raise FormatError(f"essay {essay_id}: no tokens after tokenization")
        essays.append(Essay(
            essay_id=essay_id,
            prompt_id=prompt_id,
            tokens=tokens,
            raw_score=raw_score,
            normalized_score=normalize_score(raw_score, score_range),
        ))
    return EssaySet(prompt_id, tuple(essays), score_range)


def load_unscored(path, prompt_id: int, encoding: str = "latin1"
                  ) -> list[tuple[int, tuple[str, ...]]]:
    """Load (essay_id, tokens) pairs for scoring; gold scores are not needed.

    A file with no content at all is treated as zero rows.
    """
    text = _decode(path, encoding)
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        return []
    positions = _parse_header(path, lines, ("essay_id", "essay_set", "essay"))
    n_columns = len(lines[0].split("\t"))

    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = _split_row(path, lineno, line, n_columns)
        essay_set = _parse_int(path, lineno, "essay_set", fields[positions["essay_set"]])
        if essay_set != prompt_id:
            continue
        essay_id = _parse_int(path, lineno, "essay_id", fields[positions["essay_id"]])
        tokens = tuple(tokenize(fields[positions["essay"]]))
        if not tokens:
            raise FormatError(f"essay {essay_id}: no tokens after tokenization")
        rows.append((essay_id, tokens))
    return rows
