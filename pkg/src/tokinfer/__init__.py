"""Subword inference methods over fixed vocabularies, plus an intrinsic benchmark."""

from .core import (
    METASPACE,
    UNK_TOKEN,
    Marker,
    MergeTable,
    Pretoken,
    Segmentation,
    Vocabulary,
    boundaries,
)
from .engines import (
    EngineConfig,
    Fallback,
    Method,
    Segmenter,
    segment,
    segment_least_tokens,
    segment_likelihood,
    segment_longest_prefix,
    segment_longest_suffix,
    segment_longest_token,
    segment_merges,
)
from .errors import TokinferError
from .metrics import (
    CognitiveStimulus,
    EvalReport,
    GoldEntry,
    TokenHistogram,
    boundary_f1,
    cognitive_score,
    decoding_diff,
    macro_f1,
    metric_correlations,
    pearson,
    renyi_efficiency,
    tokens_per_word,
)
from .pretok import PretokenizerConfig, byte_decode, byte_encode, pretokenize

__version__ = "0.1.0"
