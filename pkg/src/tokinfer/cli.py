"""Command line front end: ``segment``, ``evaluate`` and ``compare``.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .core import MergeTable, Pretoken, Vocabulary
from .engines import (
    ALL_METHODS,
    DEFAULT_DROPOUT_P,
    EngineConfig,
    Fallback,
    Method,
    Segmenter,
    inapplicable_reason,
)
from .errors import ConfigurationError, TokinferError
from .ingest import (
    FORMATS,
    ResourceManifest,
    group_gold,
    load_cognitive,
    load_gold,
    load_merges,
    load_vocab,
    shard_ranges,
    stream_corpus,
    write_report,
)
from .metrics import (
    DEFAULT_ALPHA,
    BoundaryCounts,
    EvalReport,
    RenyiNorm,
    Statistic,
    TokenHistogram,
    boundary_counts,
    cognitive_score,
    macro_f1,
    renyi_efficiency,
    tokens_per_word,
)
from .pretok import PretokenizerConfig, PretokMode, word_surface

log = logging.getLogger("tokinfer")

# document ordinals for word-list items, kept apart from corpus documents (>= 0)
MORPH_DOC_BASE = -1_000_000
COGNITIVE_DOC = -1


@dataclass
class RunConfig:
    command: str
    engine: EngineConfig
    pretok: PretokenizerConfig
    manifest: ResourceManifest
    alpha: float = DEFAULT_ALPHA
    default_method: Optional[Method] = None
    threads: int = 1
    output: Optional[Path] = None
    fmt: str = "json"
    statistic: Statistic = Statistic.TOKEN_COUNT
    renyi_norm: RenyiNorm = RenyiNorm.OBSERVED
    methods: Optional[Sequence[Method]] = None  # compare only; None means all

    def __post_init__(self):
        if not self.alpha > 0 or self.alpha == 1.0:
            raise ConfigurationError(f"alpha must be positive and different from 1, got {self.alpha}")
        if self.threads < 1:
            raise ConfigurationError("threads must be a positive integer")
        if self.command == "compare" and self.default_method is None:
            raise ConfigurationError("compare requires a default method")


@dataclass
class Resources:
    vocab: Vocabulary
    merges: Optional[MergeTable]
    gold: dict[str, dict[str, list]] = field(default_factory=dict)
    stimuli: Optional[list] = None
    corpus: Optional[Path] = None


def load_resources(cfg: RunConfig, with_benchmark: bool = True) -> Resources:
    m = cfg.manifest
    vocab = load_vocab(m.vocab_path, marker=cfg.pretok.marker, byte_level=cfg.pretok.byte_level)
    merges = load_merges(m.merges_path, vocab) if m.merges_path else None
    res = Resources(vocab, merges, corpus=m.corpus_path)
    if with_benchmark:
        res.gold = {name: group_gold(load_gold(path, name)) for name, path in m.morph_resources}
        res.stimuli = load_cognitive(m.cognitive_path) if m.cognitive_path else None
    return res


# --------------------------------------------------------------------------
# corpus passes; top-level functions so worker processes can import them


def _segment_shard(args) -> list[str]:
    path, pretok, vocab, merges, engine, start, end, first_doc = args
    seg = Segmenter(engine, vocab, merges)
    return [f"{p.surface}\t{' '.join(seg(p).tokens)}\n" for p in stream_corpus(path, pretok, start, end, first_doc)]


def _stats_shard(args) -> TokenHistogram:
    path, pretok, vocab, merges, engine, default, start, end, first_doc = args
    seg = Segmenter(engine, vocab, merges)
    base = Segmenter(default, vocab, merges) if default is not None else None
    h = TokenHistogram()
    for p in stream_corpus(path, pretok, start, end, first_doc):
        s = seg(p)
        h.add(s, differs=base is not None and base(p).tokens != s.tokens)
    return h


def _run_sharded(fn, path: Path, threads: int, make_args):
    # more shards than workers keeps per-task memory small
    shards = shard_ranges(path, threads * 4 if threads > 1 else 1)
    tasks = [make_args(*r) for r in shards]
    if threads == 1:
        yield from map(fn, tasks)
        return
    with ProcessPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(fn, tasks)


def corpus_histogram(cfg: RunConfig, res: Resources, engine: EngineConfig) -> TokenHistogram:
    default = replace(engine, method=cfg.default_method) if cfg.default_method else None
    total = TokenHistogram()
    parts = _run_sharded(
        _stats_shard,
        res.corpus,
        cfg.threads,
        lambda a, b, d: (res.corpus, cfg.pretok, res.vocab, res.merges, engine, default, a, b, d),
    )
    for part in parts:
        total = total.merge(part)
    return total


# --------------------------------------------------------------------------
# commands


def cmd_segment(cfg: RunConfig, out=None) -> None:
    """Write ``pretoken<TAB>token token ...`` per corpus pretoken."""
    res = load_resources(cfg, with_benchmark=False)
    Segmenter(cfg.engine, res.vocab, res.merges)  # fail fast on configuration errors
    if res.corpus is None:
        raise ConfigurationError("segment needs --input")
    chunks = _run_sharded(
        _segment_shard,
        res.corpus,
        cfg.threads,
        lambda a, b, d: (res.corpus, cfg.pretok, res.vocab, res.merges, cfg.engine, a, b, d),
    )
    close = False
    if out is None:
        if cfg.output is None or str(cfg.output) == "-":
            out = sys.stdout
        else:
            out = open(cfg.output, "w", encoding="utf-8", newline="\n")
            close = True
    try:
        for lines in chunks:
            out.writelines(lines)
    finally:
        if close:
            out.close()


def _wordlist_surface(word: str, pretok: PretokenizerConfig) -> str:
    # benchmark words are bare types: byte mapping applies, the word marker does not
    return word_surface(word, pretok, marked=False)


def evaluate_method(cfg: RunConfig, res: Resources, engine: EngineConfig) -> EvalReport:
    seg = Segmenter(engine, res.vocab, res.merges)
    report = EvalReport(method=engine.method.value, is_default=engine.method is cfg.default_method)

    if res.gold:
        per_resource = {}
        for r_index, (name, grouped) in enumerate(res.gold.items()):
            preds = [
                seg(Pretoken(_wordlist_surface(word, cfg.pretok), (MORPH_DOC_BASE + r_index, i)))
                for i, word in enumerate(grouped)
            ]
            counts: BoundaryCounts = boundary_counts(preds, list(grouped.values()), byte_level=res.vocab.byte_level)
            per_resource[name] = counts.f1
        report.per_resource_f1 = per_resource
        report.morphological_alignment = macro_f1(per_resource)

    if res.stimuli is not None:
        segs = [
            seg(Pretoken(_wordlist_surface(st.surface, cfg.pretok), (COGNITIVE_DOC, i)))
            for i, st in enumerate(res.stimuli)
        ]
        cog = cognitive_score(res.stimuli, segs, cfg.statistic)
        report.per_setup_r = cog.per_setup_r
        report.cognitive_plausibility = cog.score

    if res.corpus is not None:
        h = corpus_histogram(cfg, res, engine)
        report.corpus = {"pretokens": h.pretoken_count, "tokens": h.total, "types": h.types}
        if h.pretoken_count:
            report.tokens_per_word = tokens_per_word(h)
            report.renyi_efficiency = renyi_efficiency(h, cfg.alpha, cfg.renyi_norm, vocab_size=len(res.vocab))
            if cfg.default_method is not None:
                report.decoding_diff = h.diff_count / h.pretoken_count
        else:
            log.warning("corpus %s contains no pretokens; corpus metrics left absent", res.corpus)

    report.config = _provenance(cfg, res, engine)
    return report


def _provenance(cfg: RunConfig, res: Resources, engine: EngineConfig) -> dict:
    m = cfg.manifest
    return {
        "method": engine.method.value,
        "default_method": cfg.default_method.value if cfg.default_method else None,
        "dropout_p": engine.effective_p,
        "seed": engine.seed,
        "fallback": engine.fallback.value,
        "alpha": cfg.alpha,
        "statistic": cfg.statistic.value,
        "renyi_norm": cfg.renyi_norm.value,
        "pretokenizer": cfg.pretok.mode.value,
        "vocab": m.vocab_path.name,
        "vocab_size": len(res.vocab),
        "merges": m.merges_path.name if m.merges_path else None,
        "morph_resources": [name for name, _ in m.morph_resources],
        "cognitive": m.cognitive_path.name if m.cognitive_path else None,
        "corpus": m.corpus_path.name if m.corpus_path else None,
    }


def _check_default(cfg: RunConfig, res: Resources) -> None:
    if cfg.default_method is None:
        return
    reason = inapplicable_reason(cfg.default_method, res.vocab, res.merges)
    if reason:
        raise ConfigurationError(f"default method {cfg.default_method.value} {reason}")


def cmd_evaluate(cfg: RunConfig) -> EvalReport:
    res = load_resources(cfg)
    _check_default(cfg, res)
    report = evaluate_method(cfg, res, cfg.engine)
    write_report(report, cfg.output, cfg.fmt)
    return report


def plan_methods(cfg: RunConfig, res: Resources) -> tuple[list[Method], dict[str, str]]:
    requested = list(cfg.methods) if cfg.methods else list(ALL_METHODS)
    runnable, skipped = [], {}
    for method in requested:
        reason = inapplicable_reason(method, res.vocab, res.merges)
        if reason:
            skipped[method.value] = reason
        else:
            runnable.append(method)
    if not runnable:
        raise ConfigurationError("no requested method is applicable to the supplied resources")
    return runnable, skipped


def cmd_compare(cfg: RunConfig) -> list[EvalReport]:
    res = load_resources(cfg)
    _check_default(cfg, res)
    methods, skipped = plan_methods(cfg, res)
    reports = [evaluate_method(cfg, res, replace(cfg.engine, method=m)) for m in methods]
    for method, reason in skipped.items():
        log.info("skipping %s: %s", method, reason)
    write_report(reports, cfg.output, cfg.fmt, inapplicable=skipped)
    return reports


# --------------------------------------------------------------------------
# argument parsing


def _method_list(value: str) -> Optional[list[Method]]:
    if value == "all":
        return None
    out = []
    for name in value.split(","):
        try:
            out.append(Method(name.strip()))
        except ValueError:
            raise argparse.ArgumentTypeError(f"unknown method {name!r}") from None
    return out


def _probability(value: str) -> float:
    p = float(value)
    if not 0.0 <= p <= 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return p


def _alpha(value: str) -> float:
    a = float(value)
    if not a > 0 or a == 1.0:
        raise argparse.ArgumentTypeError("must be positive and different from 1")
    return a


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tokinfer",
        description="Apply and benchmark subword inference methods over a fixed vocabulary.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, method_help, method_default):
        p.add_argument("--vocab", required=True, type=Path, help="token<TAB>score? file, one token per line")
        p.add_argument("--merges", type=Path, help="ranked merge list, one 'left right' pair per line")
        p.add_argument("--method", default=method_default, help=method_help)
        p.add_argument("--dropout-p", type=_probability, default=DEFAULT_DROPOUT_P,
                       help="merge dropout probability (dropout-merges only, default %(default)s)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--pretokenizer", choices=[m.value for m in PretokMode], default=PretokMode.METASPACE.value)
        p.add_argument("--fallback", choices=[f.value for f in Fallback], default=Fallback.UNK.value)
        p.add_argument("--threads", type=_positive_int, default=1, help="worker processes for corpus passes")
        p.add_argument("--input", type=Path, help="corpus, UTF-8, one document per line")
        p.add_argument("--output", type=Path, help="output file (default: standard output)")

    methods = ", ".join(m.value for m in Method)
    seg = sub.add_parser("segment", help="segment a corpus")
    common(seg, f"one of: {methods}", None)

    for name, help_text in (("evaluate", "benchmark one method"), ("compare", "benchmark every applicable method")):
        p = sub.add_parser(name, help=help_text)
        if name == "evaluate":
            common(p, f"one of: {methods}", None)
        else:
            common(p, "comma-separated methods or 'all' (default)", "all")
        p.add_argument("--alpha", type=_alpha, default=DEFAULT_ALPHA, help="Rényi order (default %(default)s)")
        p.add_argument("--statistic", choices=[s.value for s in Statistic], default=Statistic.TOKEN_COUNT.value)
        p.add_argument("--renyi-norm", choices=[n.value for n in RenyiNorm], default=RenyiNorm.OBSERVED.value)
        p.add_argument("--default-method", help="baseline for decoding diff", required=name == "compare")
        p.add_argument("--morph-dir", type=Path, help="directory of word<TAB>morphs *.tsv gold files")
        p.add_argument("--cognitive", type=Path, help="CSV: stimulus,lexicality,rt_ms,accuracy")
        p.add_argument("--format", choices=FORMATS, default="json")
    return parser


def config_from_args(parser: argparse.ArgumentParser, args: argparse.Namespace) -> RunConfig:
    """Validate flag combinations; usage problems exit with status 2."""
    command = args.command
    if command == "compare":
        try:
            methods = _method_list(args.method)
        except argparse.ArgumentTypeError as exc:
            parser.error(f"argument --method: {exc}")
        engine_method = Method.LONGEST_PREFIX
    else:
        if args.method is None:
            parser.error("the following arguments are required: --method")
        try:
            engine_method = Method(args.method)
        except ValueError:
            parser.error(f"argument --method: unknown method {args.method!r}")
        methods = None
        if engine_method in (Method.MERGES, Method.DROPOUT_MERGES) and args.merges is None:
            parser.error(f"--method {engine_method.value} requires --merges")
    if command == "segment" and args.input is None:
        parser.error("segment requires --input")

    default_method = None
    if getattr(args, "default_method", None):
        try:
            default_method = Method(args.default_method)
        except ValueError:
            parser.error(f"argument --default-method: unknown method {args.default_method!r}")
        if default_method in (Method.MERGES, Method.DROPOUT_MERGES) and args.merges is None:
            parser.error(f"--default-method {default_method.value} requires --merges")

    pretok = PretokenizerConfig(args.pretokenizer)
    engine = EngineConfig(engine_method, dropout_p=args.dropout_p, seed=args.seed, fallback=args.fallback)
    manifest = ResourceManifest.from_paths(
        args.vocab,
        args.merges,
        getattr(args, "morph_dir", None),
        getattr(args, "cognitive", None),
        args.input,
    )
    kwargs = {}
    if command != "segment":
        kwargs = dict(
            alpha=args.alpha,
            fmt=args.format,
            statistic=Statistic(args.statistic),
            renyi_norm=RenyiNorm(args.renyi_norm),
            methods=methods,
        )
    return RunConfig(
        command=command,
        engine=engine,
        pretok=pretok,
        manifest=manifest,
        default_method=default_method,
        threads=args.threads,
        output=args.output,
        **kwargs,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="tokinfer: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = config_from_args(parser, args)
        if cfg.command == "segment":
            cmd_segment(cfg)
        elif cfg.command == "evaluate":
            cmd_evaluate(cfg)
        else:
            cmd_compare(cfg)
        sys.stdout.flush()
    except TokinferError as exc:
        print(f"tokinfer: error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 1
    except OSError as exc:
        print(f"tokinfer: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
