"""End-to-end orchestration of one alignment-and-loss pass per sentence.

Per record the stages run in a fixed order: position entropies, integer
alignment weights, weighted DTW, span merging on both sides, top-k
selection, dynamic-table growth (forward before reverse), dual block
assembly, then the loss kernels.  Mapping tables live at corpus scope and
only grow, so replaying the same records in the same order is bit-for-bit
reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

from .errors import CdmError, RecordCountMismatchError
from .loss import LossConfig, LossReport, combined_loss, kl_loss, lm_loss
from .seqalign import (
    STUDENT,
    TEACHER,
    SpanAlignment,
    alignment_weights,
    merge_spans,
    position_entropy,
    weighted_dtw,
)
from .stats import (
    CompatReport,
    sequence_matching_rate,
    span_alignment_accuracy,
    vocabulary_matching_rate,
)
from .tensorio import LogitsMatrix, SentenceRecord
from .vocab import (
    STUDENT_TO_TEACHER,
    TEACHER_TO_STUDENT,
    MappingTable,
    Vocabulary,
    build_exact_match_table,
)
from .vocabmap import AlignedBlock, assemble_dual, topk_select, update_dynamic_map


@dataclass(frozen=True)
class CdmConfig:
    """Engine hyperparameters; defaults follow the shipped configuration."""

    theta: float = 0.3
    k: int = 100
    alpha: float = 0.5
    temperature: float = 2.0
    C: int = 3
    epsilon: float = 1e-12

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.temperature <= 0.0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.C < 2:
            raise ValueError(f"C must be >= 2, got {self.C}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def loss(self) -> LossConfig:
        return LossConfig(alpha=self.alpha, temperature=self.temperature, epsilon=self.epsilon)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "CdmConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise CdmError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**mapping)
        except (TypeError, ValueError) as exc:
            raise CdmError(f"invalid config: {exc}") from exc

    @classmethod
    def from_json_file(cls, path) -> "CdmConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                mapping = json.load(fh)
            except json.JSONDecodeError as exc:
                raise CdmError(f"{path} is not valid JSON: {exc}") from exc
        if not isinstance(mapping, dict):
            raise CdmError(f"{path} must contain a JSON object")
        return cls.from_mapping(mapping)


@dataclass
class PipelineState:
    """Corpus-scoped growing state: the two mapping tables plus support logs."""

    v_stu: Vocabulary
    v_tea: Vocabulary
    forward: MappingTable
    reverse: MappingTable
    fwd_support_log: list[int] = field(default_factory=list)
    rev_support_log: list[int] = field(default_factory=list)

    @classmethod
    def initial(cls, v_stu: Vocabulary, v_tea: Vocabulary) -> "PipelineState":
        return cls(
            v_stu=v_stu,
            v_tea=v_tea,
            forward=build_exact_match_table(v_stu, v_tea, TEACHER_TO_STUDENT),
            reverse=build_exact_match_table(v_tea, v_stu, STUDENT_TO_TEACHER),
        )


def run_sentence(
    rec: SentenceRecord, state: PipelineState, cfg: CdmConfig
) -> tuple[LossReport, PipelineState, list[AlignedBlock], SpanAlignment]:
    """One full pass over a sentence record; grows the tables in ``state``."""
    h_stu = position_entropy(rec.student)
    h_tea = position_entropy(rec.teacher)
    w_stu = alignment_weights(h_stu, cfg.C)
    w_tea = alignment_weights(h_tea, cfg.C)

    stu_tokens = [state.v_stu.canonical[int(i)] for i in rec.student.token_ids]
    tea_tokens = [state.v_tea.canonical[int(i)] for i in rec.teacher.token_ids]
    spans = weighted_dtw(stu_tokens, tea_tokens, w_stu, w_tea)

    stu_seq = merge_spans(rec.student, spans, STUDENT)
    tea_seq = merge_spans(rec.teacher, spans, TEACHER)

    stu_top = topk_select(stu_seq, cfg.k)
    tea_top = topk_select(tea_seq, cfg.k)
    update_dynamic_map(state.forward, tea_top, stu_top, state.v_tea, state.v_stu, cfg.theta)
    update_dynamic_map(state.reverse, stu_top, tea_top, state.v_stu, state.v_tea, cfg.theta)
    state.fwd_support_log.extend(int(i) for i in tea_top.ids.ravel())
    state.rev_support_log.extend(int(i) for i in stu_top.ids.ravel())

    blocks = assemble_dual(stu_seq, tea_seq, state.forward, state.reverse, cfg.k)
    kl, used = kl_loss(blocks, cfg.loss)
    lm = lm_loss(rec.student, rec.student.token_ids)
    report = LossReport(
        kl=kl, lm=lm, combined=combined_loss(kl, lm, cfg.loss), n_positions_used=used
    )
    return report, state, blocks, spans


def run_corpus(
    student_dump: list[LogitsMatrix],
    teacher_dump: list[LogitsMatrix],
    v_stu: Vocabulary,
    v_tea: Vocabulary,
    cfg: CdmConfig,
) -> tuple[LossReport, PipelineState, CompatReport, list[SpanAlignment]]:
    """Fold the per-sentence pass over paired dumps in file order.

    Loss means are aggregated weighted by each record's contributing
    positions (KL-contributing aligned positions for the KL term, next-token
    positions for the LM term).  Returns the aggregate report, the final
    state, corpus compatibility statistics, and all span alignments.
    """
    if len(student_dump) != len(teacher_dump):
        raise RecordCountMismatchError(
            f"student dump has {len(student_dump)} records, "
            f"teacher dump has {len(teacher_dump)}"
        )
    state = PipelineState.initial(v_stu, v_tea)
    cfg_loss = cfg.loss

    kl_sum = 0.0
    kl_positions = 0
    lm_sum = 0.0
    lm_positions = 0
    alignments: list[SpanAlignment] = []
    stu_token_lists = []
    tea_token_lists = []

    for idx, (stu, tea) in enumerate(zip(student_dump, teacher_dump)):
        rec = SentenceRecord(student=stu, teacher=tea)
        try:
            report, state, _, spans = run_sentence(rec, state, cfg)
        except CdmError as exc:
            raise type(exc)(f"record {idx}: {exc}") from exc
        alignments.append(spans)
        stu_token_lists.append([v_stu.canonical[int(i)] for i in stu.token_ids])
        tea_token_lists.append([v_tea.canonical[int(i)] for i in tea.token_ids])
        kl_sum += report.kl * report.n_positions_used
        kl_positions += report.n_positions_used
        n_lm = max(stu.n_positions - 1, 0)
        lm_sum += report.lm * n_lm
        lm_positions += n_lm

    kl = kl_sum / kl_positions if kl_positions else 0.0
    lm = lm_sum / lm_positions if lm_positions else 0.0
    aggregate = LossReport(
        kl=kl,
        lm=lm,
        combined=combined_loss(kl, lm, cfg_loss),
        n_positions_used=kl_positions,
    )

    support_log = state.fwd_support_log + state.rev_support_log
    fwd_mapped = sum(1 for s in state.fwd_support_log if s in state.forward)
    rev_mapped = sum(1 for s in state.rev_support_log if s in state.reverse)
    coverage = (fwd_mapped + rev_mapped) / len(support_log) if support_log else None
    compat = CompatReport(
        smr=sequence_matching_rate(stu_token_lists, tea_token_lists) if alignments else None,
        vmr=vocabulary_matching_rate(v_stu, v_tea),
        n_sentences=len(alignments),
        span_accuracy=(
            span_alignment_accuracy(alignments, stu_token_lists, tea_token_lists)
            if alignments
            else None
        ),
        mapping_coverage=coverage,
    )
    return aggregate, state, compat, alignments
