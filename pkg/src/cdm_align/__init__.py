"""Cross-tokenizer alignment engine.

Aligns the outputs of two language models with different tokenizers — at
the sequence level via entropy-weighted dynamic time warping, at the
vocabulary level via contextually grown exact/fuzzy mapping tables — and
computes the masked distillation losses over the aligned logits.
"""

from .errors import CdmError
from .estimator import CdmDistiller
from .loss import (
    LossConfig,
    LossReport,
    combined_loss,
    kl_loss,
    lm_loss,
    masked_softmax,
)
from .pipeline import CdmConfig, PipelineState, run_corpus, run_sentence
from .seqalign import (
    SpanAlignment,
    alignment_weights,
    merge_spans,
    position_entropy,
    weighted_dtw,
)
from .stats import (
    CompatReport,
    mapping_coverage,
    sequence_matching_rate,
    span_alignment_accuracy,
    vocabulary_matching_rate,
)
from .tensorio import LogitsMatrix, SentenceRecord, pair_records, read_dump, write_dump
from .vocab import (
    CanonicalToken,
    MappingTable,
    Vocabulary,
    build_exact_match_table,
    edit_distance,
    normalize_token,
    normalized_edit_distance,
)
from .vocabmap import (
    MASK_SENTINEL,
    AlignedBlock,
    TopKSelection,
    assemble_dual,
    project_aligned,
    topk_select,
    update_dynamic_map,
)

__version__ = "0.1.0"

__all__ = [
    "AlignedBlock",
    "CanonicalToken",
    "CdmConfig",
    "CdmDistiller",
    "CdmError",
    "CompatReport",
    "LogitsMatrix",
    "LossConfig",
    "LossReport",
    "MappingTable",
    "MASK_SENTINEL",
    "PipelineState",
    "SentenceRecord",
    "SpanAlignment",
    "TopKSelection",
    "Vocabulary",
    "alignment_weights",
    "assemble_dual",
    "build_exact_match_table",
    "combined_loss",
    "edit_distance",
    "kl_loss",
    "lm_loss",
    "mapping_coverage",
    "masked_softmax",
    "merge_spans",
    "normalize_token",
    "normalized_edit_distance",
    "pair_records",
    "position_entropy",
    "project_aligned",
    "read_dump",
    "run_corpus",
    "run_sentence",
    "sequence_matching_rate",
    "span_alignment_accuracy",
    "topk_select",
    "update_dynamic_map",
    "vocabulary_matching_rate",
    "weighted_dtw",
    "write_dump",
]
