"""Intrinsic benchmark: morphological alignment, cognitive plausibility,
Rényi efficiency, tokens per word and decoding diff.

Corpus statistics accumulate in :class:`TokenHistogram`, which merges
exactly, so shards can be processed independently and combined.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

from .core import Marker, Segmentation, boundaries, strip_marker
from .errors import (
    AlignmentError,
    BenchmarkDataError,
    ConfigurationError,
    DataError,
    EmptyCorpusError,
    UndefinedCorrelationError,
)
from .pretok import byte_decode

DEFAULT_ALPHA = 2.5


# --------------------------------------------------------------------------
# morphological alignment


@dataclass(frozen=True)
class GoldEntry:
    word: str
    gold: tuple[str, ...]
    resource: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gold", tuple(self.gold))
        if "".join(self.gold) != self.word:
            raise DataError(
                f"gold morphs {' '.join(self.gold)!r} do not concatenate to {self.word!r}"
                + (f" in resource {self.resource}" if self.resource else "")
            )

    @property
    def boundaries(self) -> frozenset[int]:
        cuts, offset = set(), 0
        for morph in self.gold[:-1]:
            offset += len(morph)
            if 0 < offset < len(self.word):
                cuts.add(offset)
        return frozenset(cuts)


@dataclass(frozen=True)
class BoundaryCounts:
    """Micro-aggregated boundary counts. Adding two counts merges them."""

    hits: int = 0
    predicted: int = 0
    gold: int = 0

    def __add__(self, other: "BoundaryCounts") -> "BoundaryCounts":
        return BoundaryCounts(self.hits + other.hits, self.predicted + other.predicted, self.gold + other.gold)

    @property
    def precision(self) -> float:
        # no predicted cuts: precision holds vacuously
        return self.hits / self.predicted if self.predicted else 1.0

    @property
    def recall(self) -> float:
        return self.hits / self.gold if self.gold else 1.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0


def compare_boundaries(pred: frozenset[int], gold: frozenset[int]) -> BoundaryCounts:
    return BoundaryCounts(len(pred & gold), len(pred), len(gold))


def bare_word(seg: Segmentation, marker: Marker = Marker.NONE, byte_level: bool = False) -> str:
    word = "".join(strip_marker(seg.tokens, marker))
    return byte_decode(word) if byte_level else word


GoldSpec = Union[GoldEntry, Sequence[GoldEntry]]


def boundary_counts(
    preds: Sequence[Segmentation],
    golds: Sequence[GoldSpec],
    marker: Marker = Marker.NONE,
    byte_level: bool = False,
) -> BoundaryCounts:
    """Sum boundary counts over aligned (prediction, gold) pairs.

    A gold item may be a list of alternative analyses of the same word; the
    analysis giving the best word-level F1 is used (first one on ties).
    """
    if len(preds) != len(golds):
        raise AlignmentError(f"{len(preds)} predictions but {len(golds)} gold items")
    total = BoundaryCounts()
    for seg, gold in zip(preds, golds):
        alternatives = [gold] if isinstance(gold, GoldEntry) else list(gold)
        if not alternatives:
            raise AlignmentError("gold item without any analysis")
        word = bare_word(seg, marker, byte_level)
        for alt in alternatives:
            if alt.word != word:
                raise AlignmentError(f"prediction for {word!r} aligned with gold word {alt.word!r}")
        cuts = boundaries(seg, marker, byte_level)
        best = None
        for alt in alternatives:
            c = compare_boundaries(cuts, alt.boundaries)
            if best is None or c.f1 > best.f1:
                best = c
        total = total + best
    return total


def boundary_f1(
    preds: Sequence[Segmentation],
    golds: Sequence[GoldSpec],
    marker: Marker = Marker.NONE,
    byte_level: bool = False,
) -> tuple[float, float, float]:
    """Micro precision, recall and F1 of predicted cut positions within one resource."""
    c = boundary_counts(preds, golds, marker, byte_level)
    return c.precision, c.recall, c.f1


def macro_f1(per_resource: Mapping[str, float]) -> float:
    if not per_resource:
        raise ConfigurationError("macro F1 needs at least one resource")
    return math.fsum(per_resource.values()) / len(per_resource)


# --------------------------------------------------------------------------
# correlation


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    if len(xs) != len(ys):
        raise AlignmentError(f"pearson inputs differ in length ({len(xs)} vs {len(ys)})")
    if len(xs) < 2:
        raise UndefinedCorrelationError("correlation needs at least two observations")
    for name, seq in (("x", xs), ("y", ys)):
        if all(v == seq[0] for v in seq):
            raise UndefinedCorrelationError(f"correlation undefined: {name} is constant")
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    sxx = math.fsum(a * a for a in dx)
    syy = math.fsum(b * b for b in dy)
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


# --------------------------------------------------------------------------
# cognitive plausibility


class Lexicality(str, enum.Enum):
    WORD = "word"
    NONWORD = "nonword"


class Statistic(str, enum.Enum):
    TOKEN_COUNT = "token-count"
    TOKENS_PER_CHAR = "tokens-per-character"


@dataclass(frozen=True)
class CognitiveStimulus:
    surface: str
    lexicality: Lexicality
    rt: float
    accuracy: float

    def __post_init__(self):
        try:
            object.__setattr__(self, "lexicality", Lexicality(self.lexicality))
        except ValueError:
            raise DataError(f"unknown lexicality {self.lexicality!r} for {self.surface!r}") from None
        if not self.surface:
            raise DataError("empty stimulus")
        if not (math.isfinite(self.rt) and self.rt > 0):
            raise DataError(f"response time must be positive, got {self.rt} for {self.surface!r}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise DataError(f"accuracy must lie in [0, 1], got {self.accuracy} for {self.surface!r}")


SETUPS = ("words-rt", "words-acc", "nonwords-rt", "nonwords-acc")


class CognitiveResult(NamedTuple):
    per_setup_r: dict[str, float]
    score: float


def stimulus_statistic(stim: CognitiveStimulus, seg: Segmentation, statistic: Statistic) -> float:
    if statistic is Statistic.TOKEN_COUNT:
        return float(len(seg))
    return len(seg) / len(stim.surface)


def cognitive_score(
    stimuli: Sequence[CognitiveStimulus],
    segs: Sequence[Segmentation],
    statistic: Union[Statistic, str] = Statistic.TOKEN_COUNT,
) -> CognitiveResult:
    """Correlate a per-stimulus tokenizer statistic with human lexical-decision data.

    Pearson r is taken against response time and accuracy separately for
    words and nonwords; the score is the mean absolute r over those four.
    """
    statistic = Statistic(statistic)
    if len(stimuli) != len(segs):
        raise AlignmentError(f"{len(stimuli)} stimuli but {len(segs)} segmentations")
    per_setup = {}
    for lex, prefix in ((Lexicality.WORD, "words"), (Lexicality.NONWORD, "nonwords")):
        rows = [(st, sg) for st, sg in zip(stimuli, segs) if st.lexicality is lex]
        if not rows:
            raise BenchmarkDataError(f"no {prefix} among the cognitive stimuli")
        stat = [stimulus_statistic(st, sg, statistic) for st, sg in rows]
        for suffix, values in (("rt", [st.rt for st, _ in rows]), ("acc", [st.accuracy for st, _ in rows])):
            try:
                per_setup[f"{prefix}-{suffix}"] = pearson(stat, values)
            except UndefinedCorrelationError as exc:
                raise UndefinedCorrelationError(f"{prefix}-{suffix}: {exc}") from None
    score = math.fsum(abs(r) for r in per_setup.values()) / len(per_setup)
    return CognitiveResult({k: per_setup[k] for k in SETUPS}, score)


# --------------------------------------------------------------------------
# corpus statistics


@dataclass
class TokenHistogram:
    counts: Counter = field(default_factory=Counter)
    total: int = 0
    pretoken_count: int = 0
    diff_count: int = 0

    def add(self, seg: Segmentation, differs: bool = False) -> None:
        self.counts.update(seg.token_types())
        self.total += len(seg)
        self.pretoken_count += 1
        if differs:
            self.diff_count += 1

    def merge(self, other: "TokenHistogram") -> "TokenHistogram":
        counts = Counter(self.counts)
        counts.update(other.counts)
        return TokenHistogram(
            counts,
            self.total + other.total,
            self.pretoken_count + other.pretoken_count,
            self.diff_count + other.diff_count,
        )

    __add__ = merge

    @classmethod
    def from_segmentations(cls, segs: Iterable[Segmentation]) -> "TokenHistogram":
        h = cls()
        for s in segs:
            h.add(s)
        return h

    @property
    def types(self) -> int:
        return len(self.counts)


class RenyiNorm(str, enum.Enum):
    OBSERVED = "observed"
    VOCAB = "vocab"


def renyi_entropy(counts: Iterable[int], alpha: float) -> float:
    """Order-``alpha`` Rényi entropy in nats."""
    counts = [c for c in counts if c > 0]
    total = sum(counts)
    if total <= 0:
        raise EmptyCorpusError("Rényi entropy of an empty histogram")
    alpha = _check_alpha(alpha)
    # log sum p^alpha, shifted by the largest term for stability
    logs = [alpha * (math.log(c) - math.log(total)) for c in counts]
    top = max(logs)
    log_sum = top + math.log(math.fsum(math.exp(v - top) for v in logs))
    return log_sum / (1.0 - alpha)


def shannon_entropy(counts: Iterable[int]) -> float:
    counts = [c for c in counts if c > 0]
    total = sum(counts)
    return -math.fsum(c / total * math.log(c / total) for c in counts)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 0:
        raise ConfigurationError(f"alpha must be positive, got {alpha}")
    if alpha == 1.0:
        raise ConfigurationError("alpha = 1 is the Shannon limit; use a value near 1 instead")
    return alpha


def renyi_efficiency(
    h: Union[TokenHistogram, Mapping[str, int]],
    alpha: float = DEFAULT_ALPHA,
    norm: Union[RenyiNorm, str] = RenyiNorm.OBSERVED,
    vocab_size: Optional[int] = None,
) -> float:
    """Rényi entropy of the token distribution over log of the support size.

    The support is the number of observed types by default, or
    ``vocab_size`` with ``norm="vocab"``.
    """
    counts = h.counts if isinstance(h, TokenHistogram) else h
    alpha = _check_alpha(alpha)
    norm = RenyiNorm(norm)
    if norm is RenyiNorm.VOCAB:
        if vocab_size is None:
            raise ConfigurationError("vocabulary normalisation needs vocab_size")
        support = vocab_size
    else:
        support = sum(1 for c in counts.values() if c > 0)
    entropy = renyi_entropy(counts.values(), alpha)
    if support <= 1:
        return 0.0
    return entropy / math.log(support)


def tokens_per_word(h: TokenHistogram) -> float:
    if h.pretoken_count <= 0:
        raise EmptyCorpusError("tokens per word over an empty corpus")
    return h.total / h.pretoken_count


def decoding_diff(method_segs: Iterable[Segmentation], default_segs: Iterable[Segmentation]) -> float:
    """Share of pretoken occurrences whose token sequences differ."""
    n = differ = 0
    sentinel = object()
    a, b = iter(method_segs), iter(default_segs)
    while True:
        x, y = next(a, sentinel), next(b, sentinel)
        if x is sentinel and y is sentinel:
            break
        if x is sentinel or y is sentinel:
            raise AlignmentError("segmentation streams differ in length")
        n += 1
        if x.tokens != y.tokens:
            differ += 1
    if n == 0:
        raise EmptyCorpusError("decoding diff over an empty stream")
    return differ / n


# --------------------------------------------------------------------------
# reports


METRIC_COLUMNS = ("morphological_alignment", "cognitive_plausibility", "renyi_efficiency", "tokens_per_word")
REPORT_COLUMNS = METRIC_COLUMNS + ("decoding_diff",)


@dataclass
class EvalReport:
    """One benchmark row: five metrics plus breakdowns and run provenance.

    Metrics whose inputs were not supplied stay ``None``.
    """

    method: str
    is_default: bool = False
    morphological_alignment: Optional[float] = None
    per_resource_f1: dict[str, float] = field(default_factory=dict)
    cognitive_plausibility: Optional[float] = None
    per_setup_r: Optional[dict[str, float]] = None
    renyi_efficiency: Optional[float] = None
    tokens_per_word: Optional[float] = None
    decoding_diff: Optional[float] = None
    corpus: Optional[dict[str, int]] = None
    config: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("morphological_alignment", "cognitive_plausibility", "renyi_efficiency", "decoding_diff"):
            value = getattr(self, name)
            if value is not None and not -1e-12 <= value <= 1 + 1e-12:
                raise ConfigurationError(f"{name} = {value} is outside [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        """Plain-data form; metrics that were not computed are left out."""
        d = {
            "method": self.method,
            "is_default": self.is_default,
            "morphological_alignment": self.morphological_alignment,
            "per_resource_f1": dict(sorted(self.per_resource_f1.items())),
            "cognitive_plausibility": self.cognitive_plausibility,
            "per_setup_r": self.per_setup_r,
            "renyi_efficiency": self.renyi_efficiency,
            "tokens_per_word": self.tokens_per_word,
            "decoding_diff": self.decoding_diff,
            "corpus": self.corpus,
            "config": self.config,
        }
        return {k: v for k, v in d.items() if v is not None}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "EvalReport":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise DataError(f"unknown report fields: {sorted(unknown)}")
        return cls(**d)


def metric_correlations(reports: Sequence[EvalReport]) -> np.ndarray:
    """Pearson correlations between the four metric columns across reports.

    Rows and columns follow :data:`METRIC_COLUMNS`.
    """
    if len(reports) < 2:
        raise UndefinedCorrelationError("metric correlations need at least two reports")
    columns = []
    for name in METRIC_COLUMNS:
        values = [getattr(r, name) for r in reports]
        if any(v is None for v in values):
            raise ConfigurationError(f"column {name} is missing from at least one report")
        if all(v == values[0] for v in values):
            raise UndefinedCorrelationError(f"column {name} is constant")
        columns.append(values)
    k = len(columns)
    out = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            out[i, j] = out[j, i] = pearson(columns[i], columns[j])
    return out
