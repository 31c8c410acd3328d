"""Inference methods: map a pretoken to tokens of a fixed vocabulary.

Every method works on the raw pretoken surface (marker already attached) and
returns a :class:`~tokinfer.core.Segmentation` whose tokens join back to that
surface. Characters no vocabulary token can cover are handled by the
fallback policy: either raise :class:`NoSegmentationError` or emit a
single-character token flagged as unknown.
"""

from __future__ import annotations

import enum
import hashlib
import math
import random
import struct
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .core import MergeTable, Pretoken, Segmentation, Vocabulary
from .errors import ConfigurationError, NoSegmentationError


class Method(str, enum.Enum):
    LONGEST_PREFIX = "longest-prefix"
    LONGEST_SUFFIX = "longest-suffix"
    LONGEST_TOKEN = "longest-token"
    LEAST_TOKENS = "least-tokens"
    LIKELIHOOD = "likelihood"
    MERGES = "merges"
    DROPOUT_MERGES = "dropout-merges"


ALL_METHODS = tuple(Method)


class Fallback(str, enum.Enum):
    UNK = "unk"
    ERROR = "error"


# score of a fallback token relative to the lowest vocabulary score
UNK_PENALTY = 10.0
DEFAULT_DROPOUT_P = 0.1

Word = Union[Pretoken, str]


def _coerce(enum_cls, value, what):
    try:
        return enum_cls(value)
    except ValueError:
        choices = ", ".join(m.value for m in enum_cls)
        raise ConfigurationError(f"unknown {what} {value!r} (expected one of: {choices})") from None


@dataclass(frozen=True)
class EngineConfig:
    method: Method = Method.LONGEST_PREFIX
    dropout_p: float = DEFAULT_DROPOUT_P
    seed: int = 0
    fallback: Fallback = Fallback.UNK

    def __post_init__(self):
        object.__setattr__(self, "method", _coerce(Method, self.method, "method"))
        object.__setattr__(self, "fallback", _coerce(Fallback, self.fallback, "fallback policy"))
        p = float(self.dropout_p)
        if not 0.0 <= p <= 1.0:
            raise ConfigurationError(f"dropout probability must lie in [0, 1], got {p}")
        object.__setattr__(self, "dropout_p", p)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def effective_p(self) -> float:
        return self.dropout_p if self.method is Method.DROPOUT_MERGES else 0.0


def pretoken_rng(seed: int, origin: tuple[int, int]) -> random.Random:
    """Independent Mersenne Twister stream keyed by (seed, document, pretoken)."""
    key = struct.pack("<Qqq", seed & 0xFFFFFFFFFFFFFFFF, origin[0], origin[1])
    digest = hashlib.blake2b(key, digest_size=16, person=b"tokinfer-dropout").digest()
    return random.Random(int.from_bytes(digest, "little"))


def _surface(w: Word) -> str:
    s = w.surface if isinstance(w, Pretoken) else w
    if not s:
        raise ConfigurationError("cannot segment an empty pretoken")
    return s


def _unmatched(surface: str, offset: int, fallback: Fallback, method: Method) -> None:
    if fallback is Fallback.ERROR:
        raise NoSegmentationError(surface, offset, method.value)


def segment_longest_prefix(v: Vocabulary, w: Word, fallback: Fallback = Fallback.UNK) -> Segmentation:
    """Repeatedly take the longest vocabulary token that starts the remaining text."""
    s = _surface(w)
    tokens, max_len = v.token_set, v.max_token_length
    n = len(s)
    out: list[str] = []
    unknown = []
    i = 0
    while i < n:
        for j in range(min(n, i + max_len), i, -1):
            if s[i:j] in tokens:
                break
        else:
            _unmatched(s, i, fallback, Method.LONGEST_PREFIX)
            unknown.append(len(out))
            j = i + 1
        out.append(s[i:j])
        i = j
    return Segmentation(tuple(out), Method.LONGEST_PREFIX.value, frozenset(unknown))


def segment_longest_suffix(v: Vocabulary, w: Word, fallback: Fallback = Fallback.UNK) -> Segmentation:
    """Mirror of longest prefix: consume from the right, report left to right."""
    s = _surface(w)
    tokens, max_len = v.token_set, v.max_token_length
    out: list[str] = []
    unknown_rev = []
    j = len(s)
    while j > 0:
        for i in range(max(0, j - max_len), j):
            if s[i:j] in tokens:
                break
        else:
            _unmatched(s, j - 1, fallback, Method.LONGEST_SUFFIX)
            unknown_rev.append(len(out))
            i = j - 1
        out.append(s[i:j])
        j = i
    k = len(out)
    out.reverse()
    return Segmentation(tuple(out), Method.LONGEST_SUFFIX.value, frozenset(k - 1 - u for u in unknown_rev))


def segment_longest_token(v: Vocabulary, w: Word, fallback: Fallback = Fallback.UNK) -> Segmentation:
    """Take the longest token found anywhere (leftmost on ties), then recurse on both sides."""
    s = _surface(w)
    tokens, max_len = v.token_set, v.max_token_length
    spans: list[tuple[int, int, bool]] = []
    pending = [(0, len(s))]
    while pending:
        lo, hi = pending.pop()
        if lo >= hi:
            continue
        found = None
        for length in range(min(max_len, hi - lo), 0, -1):
            for start in range(lo, hi - length + 1):
                if s[start:start + length] in tokens:
                    found = (start, start + length)
                    break
            if found:
                break
        if found is None:
            # nothing in the vocabulary occurs here, so every character is unknown
            _unmatched(s, lo, fallback, Method.LONGEST_TOKEN)
            spans.extend((k, k + 1, True) for k in range(lo, hi))
            continue
        spans.append((found[0], found[1], False))
        pending.append((found[1], hi))
        pending.append((lo, found[0]))
    spans.sort()
    out = tuple(s[a:b] for a, b, _ in spans)
    unknown = frozenset(i for i, (_, _, unk) in enumerate(spans) if unk)
    return Segmentation(out, Method.LONGEST_TOKEN.value, unknown)


def _first_dead_end(s: str, tokens: frozenset, max_len: int) -> int:
    """Furthest position reachable from 0 using vocabulary tokens only."""
    n = len(s)
    reach = [False] * (n + 1)
    reach[0] = True
    furthest = 0
    for i in range(n):
        if not reach[i]:
            continue
        furthest = max(furthest, i)
        for j in range(i + 1, min(n, i + max_len) + 1):
            if s[i:j] in tokens:
                reach[j] = True
    return furthest


def _lattice_search(
    s: str,
    v: Vocabulary,
    fallback: Fallback,
    method: Method,
    score_of: Callable[[str], Optional[float]],
    unk_score: float,
) -> Segmentation:
    """Best path through the token lattice of ``s``.

    Paths are ranked by total score, then by fewer tokens; among equal paths
    the longest token is taken first, scanning left to right.
    """
    tokens, max_len = v.token_set, v.max_token_length
    n = len(s)
    neg_inf = -math.inf
    best_score = [neg_inf] * (n + 1)
    best_count = [0] * (n + 1)
    best_score[n] = 0.0
    allow_unk = fallback is Fallback.UNK

    def better(total, count, ref_total, ref_count):
        if ref_total == neg_inf:
            return True
        if _close(total, ref_total):
            return count < ref_count
        return total > ref_total

    for i in range(n - 1, -1, -1):
        bs, bc = neg_inf, 0
        for j in range(i + 1, min(n, i + max_len) + 1):
            if best_score[j] == neg_inf:
                continue
            piece = s[i:j]
            if piece not in tokens:
                continue
            total = score_of(piece) + best_score[j]
            if better(total, best_count[j] + 1, bs, bc):
                bs, bc = total, best_count[j] + 1
        if allow_unk and s[i] not in tokens and best_score[i + 1] != neg_inf:
            total = unk_score + best_score[i + 1]
            if better(total, best_count[i + 1] + 1, bs, bc):
                bs, bc = total, best_count[i + 1] + 1
        best_score[i], best_count[i] = bs, bc

    if best_score[0] == neg_inf:
        raise NoSegmentationError(s, _first_dead_end(s, tokens, max_len), method.value)

    out: list[str] = []
    unknown = []
    i = 0
    while i < n:
        target, count = best_score[i], best_count[i]
        for j in range(min(n, i + max_len), i, -1):
            piece = s[i:j]
            if (
                piece in tokens
                and best_count[j] == count - 1
                and best_score[j] != neg_inf
                and _close(score_of(piece) + best_score[j], target)
            ):
                break
        else:
            unknown.append(len(out))
            j = i + 1
        out.append(s[i:j])
        i = j
    return Segmentation(tuple(out), method.value, frozenset(unknown))


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


def segment_least_tokens(v: Vocabulary, w: Word, fallback: Fallback = Fallback.UNK) -> Segmentation:
    """Minimum-cardinality segmentation (unit cost per token)."""
    return _lattice_search(_surface(w), v, fallback, Method.LEAST_TOKENS, lambda _t: 0.0, 0.0)


def segment_likelihood(v: Vocabulary, w: Word, fallback: Fallback = Fallback.UNK) -> Segmentation:
    """Viterbi segmentation maximising the summed token log-scores."""
    if not v.has_scores:
        raise ConfigurationError("likelihood inference needs a score for every vocabulary token")
    scores = v.scores
    unk_score = min(scores.values()) - UNK_PENALTY
    return _lattice_search(_surface(w), v, fallback, Method.LIKELIHOOD, scores.__getitem__, unk_score)


def segment_merges(
    v: Vocabulary,
    m: MergeTable,
    w: Word,
    p: float = 0.0,
    rng: Optional[random.Random] = None,
    seed: int = 0,
    fallback: Fallback = Fallback.UNK,
) -> Segmentation:
    """Apply ranked merge rules to the character sequence of ``w``.

    Each round collects every adjacent pair that matches a rule. With
    ``p > 0`` each such occurrence is dropped independently with probability
    ``p`` (fresh draws every round); the surviving occurrence of lowest rank,
    leftmost on ties, is merged. The loop ends when nothing survives.

    Without an explicit ``rng`` the stream is derived from ``seed`` and the
    pretoken's origin, so results do not depend on processing order.
    """
    s = _surface(w)
    method = Method.DROPOUT_MERGES if p > 0 else Method.MERGES
    tokens = v.token_set
    if fallback is Fallback.ERROR:
        for i, ch in enumerate(s):
            if ch not in tokens:
                raise NoSegmentationError(s, i, method.value)

    ranks = m._ranks
    symbols = list(s)
    dropout = p > 0.0
    if dropout and rng is None:
        origin = w.origin if isinstance(w, Pretoken) else (0, 0)
        rng = pretoken_rng(seed, origin)

    while len(symbols) > 1:
        best_rank = -1
        best_at = -1
        for i in range(len(symbols) - 1):
            rank = ranks.get((symbols[i], symbols[i + 1]))
            if rank is None:
                continue
            if dropout and rng.random() < p:
                continue
            if best_at < 0 or rank < best_rank:
                best_rank, best_at = rank, i
        if best_at < 0:
            break
        symbols[best_at:best_at + 2] = [symbols[best_at] + symbols[best_at + 1]]

    unknown = frozenset(i for i, t in enumerate(symbols) if t not in tokens)
    return Segmentation(tuple(symbols), method.value, unknown)


class Segmenter:
    """A configured inference method bound to its resources.

    >>> from tokinfer.core import Vocabulary
    >>> seg = Segmenter(EngineConfig("longest-prefix"), Vocabulary(["a", "b", "ab"]))
    >>> seg("abab").tokens
    ('ab', 'ab')
    """

    def __init__(self, cfg: EngineConfig, vocab: Vocabulary, merges: Optional[MergeTable] = None):
        self.cfg = cfg
        self.vocab = vocab
        self.merges = merges
        check_applicable(cfg.method, vocab, merges)
        method, fallback = cfg.method, cfg.fallback
        if method is Method.LONGEST_PREFIX:
            fn = lambda w: segment_longest_prefix(vocab, w, fallback)
        elif method is Method.LONGEST_SUFFIX:
            fn = lambda w: segment_longest_suffix(vocab, w, fallback)
        elif method is Method.LONGEST_TOKEN:
            fn = lambda w: segment_longest_token(vocab, w, fallback)
        elif method is Method.LEAST_TOKENS:
            fn = lambda w: segment_least_tokens(vocab, w, fallback)
        elif method is Method.LIKELIHOOD:
            fn = lambda w: segment_likelihood(vocab, w, fallback)
        else:
            p, seed = cfg.effective_p, cfg.seed

            def fn(w):
                seg = segment_merges(vocab, merges, w, p=p, seed=seed, fallback=fallback)
                if seg.method != method.value:
                    seg = Segmentation(seg.tokens, method.value, seg.unknown)
                return seg

        self._fn = fn

    @property
    def method(self) -> Method:
        return self.cfg.method

    def __call__(self, w: Word) -> Segmentation:
        return self._fn(w)


def inapplicable_reason(method: Method, vocab: Vocabulary, merges: Optional[MergeTable]) -> Optional[str]:
    """Why ``method`` cannot run on these resources, or None if it can."""
    method = _coerce(Method, method, "method")
    if method in (Method.MERGES, Method.DROPOUT_MERGES) and merges is None:
        return "requires a merge table"
    if method is Method.LIKELIHOOD and not vocab.has_scores:
        return "requires a score for every vocabulary token"
    return None


def check_applicable(method: Method, vocab: Vocabulary, merges: Optional[MergeTable]) -> None:
    reason = inapplicable_reason(method, vocab, merges)
    if reason:
        raise ConfigurationError(f"method {Method(method).value} {reason}")


def segment(cfg: EngineConfig, v: Vocabulary, w: Word, m: Optional[MergeTable] = None) -> Segmentation:
    """One-shot dispatch. Build a :class:`Segmenter` when segmenting many pretokens."""
    if not isinstance(cfg, EngineConfig):
        raise ConfigurationError(f"expected EngineConfig, got {type(cfg).__name__}")
    return Segmenter(cfg, v, m)(w)
