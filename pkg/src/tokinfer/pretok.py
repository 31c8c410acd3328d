"""Whitespace pretokenization with metaspace or byte-level word markers."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterator

from .bytemap import BYTE_SPACE, BYTE_TO_CHAR, CHAR_TO_BYTE
from .core import METASPACE, Marker, Pretoken
from .errors import ConfigurationError, InvalidSymbolError

# \s in str patterns follows the Unicode whitespace property
_WHITESPACE = re.compile(r"\s+")


class PretokMode(str, enum.Enum):
    METASPACE = "whitespace-metaspace"
    BYTE_LEVEL = "byte-level"
    PLAIN = "plain"


@dataclass(frozen=True)
class PretokenizerConfig:
    mode: PretokMode = PretokMode.PLAIN
    marker_char: str = METASPACE
    mark_first: bool = True  # document-initial pretoken gets the marker too

    def __post_init__(self):
        object.__setattr__(self, "mode", PretokMode(self.mode))
        if len(self.marker_char) != 1 or self.marker_char.isspace():
            raise ConfigurationError(f"marker_char must be one non-space character, got {self.marker_char!r}")

    @property
    def marker(self) -> Marker:
        return {
            PretokMode.METASPACE: Marker.METASPACE,
            PretokMode.BYTE_LEVEL: Marker.BYTE_LEVEL,
            PretokMode.PLAIN: Marker.NONE,
        }[self.mode]

    @property
    def byte_level(self) -> bool:
        return self.mode is PretokMode.BYTE_LEVEL


def byte_encode(word: str) -> str:
    """Map ``word`` to one printable symbol per UTF-8 byte."""
    return "".join([BYTE_TO_CHAR[b] for b in word.encode("utf-8")])


def byte_decode(symbols: str) -> str:
    try:
        data = bytes([CHAR_TO_BYTE[c] for c in symbols])
    except KeyError as exc:
        raise InvalidSymbolError(f"{exc.args[0]!r} is not in the byte-level alphabet") from None
    return data.decode("utf-8", errors="strict")


def word_surface(word: str, cfg: PretokenizerConfig, marked: bool) -> str:
    """Surface form of a single bare word under ``cfg``."""
    if cfg.mode is PretokMode.BYTE_LEVEL:
        encoded = byte_encode(word)
        return BYTE_SPACE + encoded if marked else encoded
    if cfg.mode is PretokMode.METASPACE and marked:
        return cfg.marker_char + word
    return word


def iter_pretokens(text: str, cfg: PretokenizerConfig, doc: int = 0) -> Iterator[Pretoken]:
    index = 0
    for m in re.finditer(r"\S+", text):
        marked = m.start() > 0 or cfg.mark_first
        yield Pretoken(word_surface(m.group(), cfg, marked), (doc, index))
        index += 1


def pretokenize(text: str, cfg: PretokenizerConfig = PretokenizerConfig(), doc: int = 0) -> list[Pretoken]:
    """Split ``text`` on whitespace runs and attach the configured marker.

    >>> [p.surface for p in pretokenize("Ultra modern", PretokenizerConfig("whitespace-metaspace"))]
    ['▁Ultra', '▁modern']
    """
    return list(iter_pretokens(text, cfg, doc))


def detokenize(pretokens, cfg: PretokenizerConfig) -> str:
    """Rebuild whitespace-normalised text from pretoken surfaces."""
    words = []
    for p in pretokens:
        s = p.surface
        if cfg.mode is PretokMode.BYTE_LEVEL:
            s = byte_decode(s)
            if s.startswith(" "):
                s = s[1:]
        elif cfg.mode is PretokMode.METASPACE and s.startswith(cfg.marker_char):
            s = s[1:]
        words.append(s)
    return " ".join(words)


def normalize_whitespace(text: str) -> str:
    return _WHITESPACE.sub(" ", text).strip()
