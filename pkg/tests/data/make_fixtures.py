"""Regenerate the toy vocabulary fixtures in this directory.

A minimal BPE learner runs over corpus.txt (metaspace-marked pretokens
plus their bare lowercase forms), then scores every token by its add-one
smoothed log frequency under merge-based segmentation of the same data.
Outputs:

    bpe_vocab.tsv       tokens only (BPE-style: merges, no scores)
    bpe_merges.txt      ranked merge list
    unigram_vocab.tsv   same tokens with log scores; pair with bpe_merges.txt
                        to make all seven methods applicable

Run from the repository root:  python tests/data/make_fixtures.py
"""

import math
from collections import Counter
from pathlib import Path

from tokinfer.core import MergeTable, Vocabulary
from tokinfer.engines import segment_merges
from tokinfer.pretok import PretokenizerConfig, pretokenize

HERE = Path(__file__).parent
NUM_MERGES = 200


def training_words() -> Counter:
    # marked pretokens for corpus statistics, bare forms for word-list evaluation;
    # benchmark words themselves are left out so the vocabulary cannot memorise them
    cfg = PretokenizerConfig("whitespace-metaspace")
    words = Counter()
    for line in (HERE / "corpus.txt").read_text(encoding="utf-8").splitlines():
        for p in pretokenize(line, cfg):
            words[p.surface] += 1
            bare = p.surface[1:].strip(".,").lower()
            if bare:
                words[bare] += 1
    return words


def learn_bpe(words: Counter, num_merges: int):
    splits = {w: tuple(w) for w in words}
    alphabet = sorted({c for w in words for c in w})
    merges = []
    for _ in range(num_merges):
        pairs = Counter()
        for w, freq in words.items():
            sym = splits[w]
            for a, b in zip(sym, sym[1:]):
                pairs[a, b] += freq
        if not pairs:
            break
        # most frequent, ties broken lexicographically for reproducibility
        (a, b), count = min(pairs.items(), key=lambda kv: (-kv[1], kv[0]))
        if count < 2:
            break
        merges.append((a, b))
        for w, sym in splits.items():
            out, i = [], 0
            while i < len(sym):
                if i + 1 < len(sym) and sym[i] == a and sym[i + 1] == b:
                    out.append(a + b)
                    i += 2
                else:
                    out.append(sym[i])
                    i += 1
            splits[w] = tuple(out)
    tokens = list(alphabet)
    for a, b in merges:
        if a + b not in tokens:
            tokens.append(a + b)
    return tokens, merges


def main():
    words = training_words()
    tokens, merges = learn_bpe(words, NUM_MERGES)
    vocab = Vocabulary(tokens)
    table = MergeTable(merges, vocab)

    freq = Counter()
    for w, n in words.items():
        for t in segment_merges(vocab, table, w).tokens:
            freq[t] += n
    total = sum(freq.values()) + len(tokens)
    scores = [math.log((freq[t] + 1) / total) for t in tokens]

    def dump(name, with_scores):
        lines = [f"{t}\t{s!r}" if with_scores else t for t, s in zip(tokens, scores)]
        (HERE / name).write_text("\n".join(lines) + "\n", encoding="utf-8")

    dump("bpe_vocab.tsv", False)
    dump("unigram_vocab.tsv", True)
    (HERE / "bpe_merges.txt").write_text(
        "#version: 0.2\n" + "".join(f"{a} {b}\n" for a, b in merges), encoding="utf-8"
    )
    print(f"{len(tokens)} tokens, {len(merges)} merges")


if __name__ == "__main__":
    main()
