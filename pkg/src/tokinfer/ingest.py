"""File formats: vocabularies, merge lists, gold segmentations, lexical
decision data, corpora, and report output."""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Optional, Sequence, Union

from .core import Marker, MergeTable, Pretoken, Vocabulary
from .errors import (
    ConfigurationError,
    ConsistencyError,
    CorpusDecodeError,
    DataError,
    ParseError,
    TokinferError,
)
from .metrics import REPORT_COLUMNS, CognitiveStimulus, EvalReport, GoldEntry
from .pretok import PretokenizerConfig, iter_pretokens

PathLike = Union[str, os.PathLike]


def _read_lines(path: PathLike) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(path, _line_of_byte(path, exc.start), f"invalid UTF-8 at byte {exc.start}") from None
    return text.splitlines()


def _line_of_byte(path: PathLike, offset: int) -> int:
    return Path(path).read_bytes()[:offset].count(b"\n")


# --------------------------------------------------------------------------
# vocabulary and merges


def load_vocab(path: PathLike, marker: Marker = Marker.NONE, byte_level: bool = False) -> Vocabulary:
    """Read ``token<TAB>score`` lines; the 0-based line number is the token id."""
    lines = _read_lines(path)
    if not lines:
        raise ParseError(path, 0, "empty vocabulary file")
    tokens, scores, seen = [], [], {}
    for lineno, line in enumerate(lines):
        fields = line.split("\t")
        if len(fields) > 2 or not fields[0]:
            raise ParseError(path, lineno, f"expected 'token<TAB>score?', got {line!r}")
        token = fields[0]
        if token in seen:
            raise ParseError(path, lineno, f"duplicate token {token!r} (first on line {seen[token]})")
        seen[token] = lineno
        score = None
        if len(fields) == 2 and fields[1].strip():
            try:
                score = float(fields[1])
            except ValueError:
                raise ParseError(path, lineno, f"score {fields[1]!r} is not a number") from None
        tokens.append(token)
        scores.append(score)
    try:
        return Vocabulary(tokens, scores, marker=marker, byte_level=byte_level)
    except ConfigurationError as exc:
        raise ParseError(path, 0, str(exc)) from None


def load_merges(path: PathLike, vocab: Vocabulary) -> MergeTable:
    """Read ``left right`` pairs in rank order, skipping a leading ``#version`` line."""
    lines = _read_lines(path)
    rules = []
    for lineno, line in enumerate(lines):
        if lineno == 0 and line.startswith("#version"):
            continue
        parts = line.split(" ")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ParseError(path, lineno, f"expected 'left right', got {line!r}")
        rules.append((parts[0], parts[1]))
    table = MergeTable(rules)
    try:
        table.validate(vocab)
    except ConsistencyError as exc:
        raise ConsistencyError(f"{path}: {exc}") from None
    return table


# --------------------------------------------------------------------------
# benchmark resources


def load_gold(path: PathLike, resource_name: Optional[str] = None) -> list[GoldEntry]:
    """Read ``word<TAB>morph morph ...`` lines. Repeated words are alternative analyses."""
    name = resource_name or Path(path).stem
    entries = []
    for lineno, line in enumerate(_read_lines(path)):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0]:
            raise ParseError(path, lineno, f"expected 'word<TAB>morphs', got {line!r}")
        word, morphs = fields[0], fields[1].split()
        try:
            entries.append(GoldEntry(word, tuple(morphs), name))
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
    return entries


def group_gold(entries: Sequence[GoldEntry]) -> dict[str, list[GoldEntry]]:
    """Collect alternative analyses per word, in first-seen order."""
    grouped: dict[str, list[GoldEntry]] = {}
    for e in entries:
        grouped.setdefault(e.word, []).append(e)
    return grouped


COGNITIVE_HEADER = ("stimulus", "lexicality", "rt_ms", "accuracy")


def load_cognitive(path: PathLike) -> list[CognitiveStimulus]:
    """Read lexical decision data: CSV with header ``stimulus,lexicality,rt_ms,accuracy``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(path, _line_of_byte(path, exc.start), "invalid UTF-8") from None
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != COGNITIVE_HEADER:
        raise ParseError(path, 0, f"header must be {','.join(COGNITIVE_HEADER)}, got {header}")
    stimuli = []
    for row in reader:
        row_no = reader.line_num - 1
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise DataError(f"{path}: row {row_no}: expected 4 fields, got {len(row)}")
        surface, lex, rt, acc = (c.strip() for c in row)
        try:
            rt_v, acc_v = float(rt), float(acc)
        except ValueError:
            raise DataError(f"{path}: row {row_no}: non-numeric rt_ms or accuracy ({rt!r}, {acc!r})") from None
        try:
            stimuli.append(CognitiveStimulus(surface, lex, rt_v, acc_v))
        except DataError as exc:
            raise DataError(f"{path}: row {row_no}: {exc}") from None
    return stimuli


@dataclass
class ResourceManifest:
    vocab_path: Path
    merges_path: Optional[Path] = None
    morph_resources: list[tuple[str, Path]] = field(default_factory=list)
    cognitive_path: Optional[Path] = None
    corpus_path: Optional[Path] = None

    @classmethod
    def from_paths(cls, vocab, merges=None, morph_dir=None, cognitive=None, corpus=None) -> "ResourceManifest":
        morph = []
        if morph_dir is not None:
            d = Path(morph_dir)
            if not d.is_dir():
                raise ConfigurationError(f"morphology directory {d} does not exist")
            morph = [(p.stem, p) for p in sorted(d.glob("*.tsv"))]
            if not morph:
                raise ConfigurationError(f"no *.tsv gold files in {d}")
        m = cls(
            Path(vocab),
            Path(merges) if merges else None,
            morph,
            Path(cognitive) if cognitive else None,
            Path(corpus) if corpus else None,
        )
        m.validate()
        return m

    def validate(self) -> None:
        paths = [self.vocab_path, self.merges_path, self.cognitive_path, self.corpus_path]
        paths += [p for _, p in self.morph_resources]
        for p in paths:
            if p is not None and not (p.is_file() and os.access(p, os.R_OK)):
                raise ConfigurationError(f"cannot read {p}")
        names = [n for n, _ in self.morph_resources]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate morphological resource names: {names}")


# --------------------------------------------------------------------------
# corpora


def stream_corpus(
    path: PathLike,
    cfg: PretokenizerConfig,
    start: int = 0,
    end: Optional[int] = None,
    first_doc: int = 0,
) -> Iterator[Pretoken]:
    """Lazily yield pretokens, one document per line.

    ``start``/``end`` restrict reading to a byte range that must begin at a
    line start; lines starting before ``end`` belong to the range.
    """
    doc = first_doc
    with open(path, "rb") as f:
        f.seek(start)
        pos = start
        for raw in f:
            if end is not None and pos >= end:
                break
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CorpusDecodeError(path, pos + exc.start) from None
            yield from iter_pretokens(line.rstrip("\r\n"), cfg, doc)
            doc += 1
            pos += len(raw)


def shard_ranges(path: PathLike, n: int) -> list[tuple[int, int, int]]:
    """Split a corpus into at most ``n`` line-aligned ``(start, end, first_doc)`` byte ranges."""
    size = os.path.getsize(path)
    if n <= 1 or size == 0:
        return [(0, size, 0)]
    cuts = [0]
    with open(path, "rb") as f:
        for k in range(1, n):
            target = max(cuts[-1], size * k // n)
            if target <= 0:
                continue
            f.seek(target - 1)
            f.readline()
            pos = f.tell()
            if cuts[-1] < pos < size:
                cuts.append(pos)
    cuts.append(size)

    ranges = []
    doc = 0
    with open(path, "rb") as f:
        for a, b in zip(cuts, cuts[1:]):
            ranges.append((a, b, doc))
            f.seek(a)
            remaining = b - a
            while remaining:
                chunk = f.read(min(remaining, 1 << 20))
                doc += chunk.count(b"\n")
                remaining -= len(chunk)
    return ranges


# --------------------------------------------------------------------------
# reports


@contextmanager
def _open_output(path: Optional[PathLike]):
    if path is None or str(path) == "-":
        yield sys.stdout
        return
    try:
        f = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise TokinferError(f"cannot write {path}: {exc.strerror}") from None
    with f:
        yield f


def _fmt(value: Optional[float], missing: str) -> str:
    return missing if value is None else f"{value:.4f}"


COLUMN_TITLES = {
    "morphological_alignment": "Morphological alignment",
    "cognitive_plausibility": "Cognitive plausibility",
    "renyi_efficiency": "Rényi efficiency",
    "tokens_per_word": "Tokens per word",
    "decoding_diff": "Decoding diff",
}


def render_tsv(reports: Sequence[EvalReport], inapplicable: Mapping[str, str]) -> str:
    lines = ["\t".join(("method", "default") + REPORT_COLUMNS)]
    for r in reports:
        cells = [r.method, "yes" if r.is_default else "no"]
        cells += [_fmt(getattr(r, c), "NA") for c in REPORT_COLUMNS]
        lines.append("\t".join(cells))
    for method, reason in inapplicable.items():
        lines.append(f"# not applicable\t{method}\t{reason}")
    return "\n".join(lines) + "\n"


def render_markdown(reports: Sequence[EvalReport], inapplicable: Mapping[str, str]) -> str:
    header = ["Inference method"] + [COLUMN_TITLES[c] for c in REPORT_COLUMNS]
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join([":---"] + ["---:"] * len(REPORT_COLUMNS)) + "|"]
    for r in reports:
        name = f"*{r.method}*" if r.is_default else r.method
        cells = [name]
        for c in REPORT_COLUMNS:
            if c == "decoding_diff" and r.is_default:
                cells.append("---")
            else:
                cells.append(_fmt(getattr(r, c), "n/a"))
        lines.append("| " + " | ".join(cells) + " |")
    if any(r.is_default for r in reports):
        lines += ["", "Default method in *italics*; decoding diff is measured against it."]
    if inapplicable:
        lines += ["", "Not applicable:"]
        lines += [f"- {m}: {reason}" for m, reason in inapplicable.items()]
    return "\n".join(lines) + "\n"


def render_json(reports: Union[EvalReport, Sequence[EvalReport]], inapplicable: Mapping[str, str]) -> str:
    if isinstance(reports, EvalReport):
        payload = reports.to_dict()
    else:
        payload = {"reports": [r.to_dict() for r in reports], "inapplicable": dict(inapplicable)}
    return json.dumps(payload, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


FORMATS = ("json", "tsv", "markdown")


def write_report(
    report: Union[EvalReport, Sequence[EvalReport]],
    path: Optional[PathLike] = None,
    fmt: str = "json",
    inapplicable: Optional[Mapping[str, str]] = None,
) -> None:
    """Write one report or a method comparison. ``path`` of None or "-" means stdout."""
    inapplicable = dict(inapplicable or {})
    if fmt == "json":
        text = render_json(report, inapplicable)
    elif fmt in ("tsv", "markdown"):
        rows = [report] if isinstance(report, EvalReport) else list(report)
        text = render_tsv(rows, inapplicable) if fmt == "tsv" else render_markdown(rows, inapplicable)
    else:
        raise ConfigurationError(f"unknown report format {fmt!r} (expected one of {', '.join(FORMATS)})")
    with _open_output(path) as out:
        out.write(text)


def read_report(path: PathLike):
    """Inverse of JSON :func:`write_report`.

    Returns an :class:`EvalReport`, or ``(reports, inapplicable)`` for a comparison.
    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno - 1, exc.msg) from None
    if "reports" in payload:
        return [EvalReport.from_dict(d) for d in payload["reports"]], dict(payload.get("inapplicable", {}))
    return EvalReport.from_dict(payload)
