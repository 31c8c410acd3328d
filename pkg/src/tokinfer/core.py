"""Domain types shared across the package and boundary extraction."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence

from .bytemap import BYTE_SPACE, CHAR_TO_BYTE
from .errors import ConfigurationError, ConsistencyError, MalformedSegmentationError

METASPACE = "\u2581"
UNK_TOKEN = "<unk>"


class Marker(str, enum.Enum):
    """Word-boundary marker convention of a vocabulary."""

    NONE = "none"
    METASPACE = "metaspace-prefix"
    BYTE_LEVEL = "byte-level-prefix"

    @property
    def char(self) -> str:
        return {Marker.NONE: "", Marker.METASPACE: METASPACE, Marker.BYTE_LEVEL: BYTE_SPACE}[self]


class VocabEntry(NamedTuple):
    id: int
    score: Optional[float] = None


class Vocabulary:
    """An immutable token inventory with optional log-domain scores.

    Ids follow insertion order starting at 0.
    """

    def __init__(
        self,
        tokens: Iterable[str],
        scores: Optional[Sequence[Optional[float]]] = None,
        marker: Marker = Marker.NONE,
        byte_level: bool = False,
    ):
        tokens = list(tokens)
        if scores is None:
            scores = [None] * len(tokens)
        scores = list(scores)
        if len(scores) != len(tokens):
            raise ConfigurationError("tokens and scores differ in length")

        entries: dict[str, VocabEntry] = {}
        for i, (tok, score) in enumerate(zip(tokens, scores)):
            if not isinstance(tok, str) or not tok:
                raise ConfigurationError(f"token {i} is empty")
            if tok in entries:
                raise ConfigurationError(f"duplicate token {tok!r} (ids {entries[tok].id} and {i})")
            if score is not None:
                score = float(score)
                if not math.isfinite(score):
                    raise ConfigurationError(f"token {tok!r} has non-finite score {score}")
            entries[tok] = VocabEntry(i, score)

        self.entries: Mapping[str, VocabEntry] = MappingProxyType(entries)
        self.marker = Marker(marker)
        self.byte_level = bool(byte_level)

    def __contains__(self, token: object) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def __repr__(self) -> str:
        return (
            f"Vocabulary({len(self)} tokens, marker={self.marker.value}, "
            f"byte_level={self.byte_level}, scored={self.has_scores})"
        )

    def __reduce__(self):
        return (
            Vocabulary,
            (list(self.entries), [e.score for e in self.entries.values()], self.marker, self.byte_level),
        )

    def id_of(self, token: str) -> int:
        return self.entries[token].id

    def score_of(self, token: str) -> Optional[float]:
        return self.entries[token].score

    @cached_property
    def has_scores(self) -> bool:
        """True when every token carries a score."""
        return len(self) > 0 and all(e.score is not None for e in self.entries.values())

    @cached_property
    def token_set(self) -> frozenset[str]:
        return frozenset(self.entries)

    @cached_property
    def scores(self) -> Mapping[str, float]:
        return MappingProxyType({t: e.score for t, e in self.entries.items() if e.score is not None})

    @cached_property
    def max_token_length(self) -> int:
        return max((len(t) for t in self.entries), default=0)


class MergeTable:
    """Ordered BPE merge rules; rank is list position (0 = learned first)."""

    def __init__(self, rules: Iterable[tuple[str, str]], vocab: Optional[Vocabulary] = None):
        rules = tuple((str(left), str(right)) for left, right in rules)
        ranks: dict[tuple[str, str], int] = {}
        for rank, pair in enumerate(rules):
            if not pair[0] or not pair[1]:
                raise ConsistencyError(f"merge rule {rank} has an empty side: {pair}")
            if pair in ranks:
                raise ConsistencyError(f"duplicate merge rule {pair[0]!r} {pair[1]!r} at rank {rank}")
            ranks[pair] = rank
        self.rules = rules
        self._ranks = ranks
        self.ranks: Mapping[tuple[str, str], int] = MappingProxyType(ranks)
        if vocab is not None:
            self.validate(vocab)

    def validate(self, vocab: Vocabulary) -> None:
        for rank, (left, right) in enumerate(self.rules):
            if left + right not in vocab:
                raise ConsistencyError(
                    f"merge rule {rank} ({left!r} {right!r}) produces {left + right!r}, "
                    "which is not in the vocabulary"
                )

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __reduce__(self):
        return (MergeTable, (list(self.rules),))

    def __repr__(self) -> str:
        return f"MergeTable({len(self)} rules)"


@dataclass(frozen=True)
class Pretoken:
    surface: str
    origin: tuple[int, int] = (0, 0)  # (document ordinal, pretoken ordinal)

    def __post_init__(self):
        if not self.surface:
            raise ConfigurationError("pretoken surface must be non-empty")


@dataclass(frozen=True)
class Segmentation:
    """Token sequence for one pretoken.

    ``unknown`` holds indices of tokens emitted by the fallback policy. Such
    tokens keep their surface characters (so joining still reproduces the
    pretoken) but stand for the reserved :data:`UNK_TOKEN`.
    """

    tokens: tuple[str, ...]
    method: str = ""
    unknown: frozenset[int] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def surface(self) -> str:
        return "".join(self.tokens)

    def token_types(self) -> Iterator[str]:
        """Tokens as vocabulary types, with fallback tokens collapsed to UNK."""
        if not self.unknown:
            yield from self.tokens
            return
        for i, tok in enumerate(self.tokens):
            yield UNK_TOKEN if i in self.unknown else tok


def strip_marker(tokens: Sequence[str], marker: Marker) -> list[str]:
    mark = Marker(marker).char
    tokens = list(tokens)
    if not mark:
        return tokens
    for i, tok in enumerate(tokens):
        pos = tok.find(mark)
        while pos != -1:
            if i != 0 or pos != 0:
                raise MalformedSegmentationError(
                    f"marker {mark!r} inside token {i} ({tok!r}) of {''.join(tokens)!r}"
                )
            pos = tok.find(mark, pos + 1)
    if tokens and tokens[0].startswith(mark):
        tokens[0] = tokens[0][len(mark):]
    return tokens


def boundaries(seg: Segmentation, marker: Marker = Marker.NONE, byte_level: bool = False) -> frozenset[int]:
    """Internal cut positions of ``seg`` in characters of the bare word.

    >>> sorted(boundaries(Segmentation(("▁un", "related")), Marker.METASPACE))
    [2]
    """
    pieces = strip_marker(seg.tokens, marker)

    if byte_level:
        lengths = _char_lengths_from_bytes(pieces)
    else:
        lengths = [len(p) for p in pieces]

    word_length = sum(lengths)
    cuts = set()
    offset = 0
    for n in lengths[:-1]:
        offset += n
        if 0 < offset < word_length:
            cuts.add(offset)
    return frozenset(cuts)


def _char_lengths_from_bytes(pieces: Sequence[str]) -> list[int]:
    """Convert byte-symbol token lengths to character lengths of the decoded word."""
    try:
        raw = [bytes(CHAR_TO_BYTE[c] for c in p) for p in pieces]
    except KeyError as exc:
        raise MalformedSegmentationError(f"symbol {exc.args[0]!r} is not a byte-level symbol") from None
    lengths = []
    for chunk_index, chunk in enumerate(raw):
        try:
            lengths.append(len(chunk.decode("utf-8")))
        except UnicodeDecodeError:
            # a cut falls inside a multi-byte character
            raise MalformedSegmentationError(
                f"token {chunk_index} of {pieces!r} splits a multi-byte character"
            ) from None
    return lengths
