"""Alignment handles: the engine's decisions exported as plain index arrays.

The engine never computes gradients.  ``align_batch`` runs the full
alignment pipeline (entropy weights, DTW spans, dynamic tables, masking)
and returns spans, slot index pairs, and masks as contiguous arrays, so a
host framework can re-gather its own logit tensors and rebuild the masked
softmax and distillation loss inside its autodiff graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cdm_align import (
    CdmConfig,
    LogitsMatrix,
    PipelineState,
    SentenceRecord,
    Vocabulary,
    merge_spans,
    run_sentence,
    topk_select,
)
from cdm_align.errors import CdmError


@dataclass(frozen=True)
class RecordHandles:
    """Gather plan for one sentence record.

    Spans are half-open ``[start, end)`` ranges over the raw token
    positions; slot arrays have shape ``(n_spans, k)``.  Unmapped slots hold
    ``-1`` in the mapped-id array and ``False`` in the mask.
    """

    spans_student: np.ndarray  # (n_spans, 2) int64
    spans_teacher: np.ndarray  # (n_spans, 2) int64
    fwd_support_ids: np.ndarray  # (n_spans, k) teacher vocab ids
    fwd_mapped_ids: np.ndarray  # (n_spans, k) student vocab ids or -1
    fwd_mask: np.ndarray  # (n_spans, k) bool
    rev_support_ids: np.ndarray  # (n_spans, k) student vocab ids
    rev_mapped_ids: np.ndarray  # (n_spans, k) teacher vocab ids or -1
    rev_mask: np.ndarray  # (n_spans, k) bool

    @property
    def n_spans(self) -> int:
        return self.spans_student.shape[0]

    @property
    def k(self) -> int:
        return self.fwd_support_ids.shape[1]


@dataclass(frozen=True)
class AlignmentHandles:
    """Per-record gather plans plus the configuration echo."""

    records: tuple[RecordHandles, ...]
    student_vocab_size: int
    teacher_vocab_size: int
    config: dict = field(default_factory=dict)


_CFG_KEYS = ("theta", "k", "alpha", "temperature", "C", "epsilon")


def _split_config(cfg: dict) -> tuple[CdmConfig, Vocabulary, Vocabulary, dict]:
    if "student_vocab" not in cfg or "teacher_vocab" not in cfg:
        raise CdmError("cfg must carry 'student_vocab' and 'teacher_vocab' token->id tables")
    v_stu = Vocabulary.from_mapping(dict(cfg["student_vocab"]))
    v_tea = Vocabulary.from_mapping(dict(cfg["teacher_vocab"]))
    hyper = {key: cfg[key] for key in _CFG_KEYS if key in cfg}
    engine_cfg = CdmConfig(**hyper)
    echo = {key: getattr(engine_cfg, key) for key in _CFG_KEYS}
    return engine_cfg, v_stu, v_tea, echo


def _as_matrix(logits, token_ids, side: str, idx: int, vocab_size: int) -> LogitsMatrix:
    values = np.ascontiguousarray(np.asarray(logits, dtype=np.float32))
    if values.ndim != 2:
        raise CdmError(
            f"record {idx}: {side} logits must be 2-D (positions, vocab), got shape {values.shape}"
        )
    if values.shape[1] != vocab_size:
        raise CdmError(
            f"record {idx}: {side} logits have vocab dimension {values.shape[1]}, "
            f"expected {vocab_size}"
        )
    if values.shape[0] != len(token_ids):
        raise CdmError(
            f"record {idx}: {side} logits cover {values.shape[0]} positions "
            f"but {len(token_ids)} token ids were given"
        )
    return LogitsMatrix(values=values, token_ids=list(token_ids))


def _lookup_column(support_ids: np.ndarray, table) -> tuple[np.ndarray, np.ndarray]:
    mapped = np.full(support_ids.shape, -1, dtype=np.int64)
    mask = np.zeros(support_ids.shape, dtype=bool)
    for pos in range(support_ids.shape[0]):
        for j in range(support_ids.shape[1]):
            src = int(support_ids[pos, j])
            if src in table:
                mapped[pos, j] = table.target(src)
                mask[pos, j] = True
    return mapped, mask


def align_batch(stu_logits, tea_logits, stu_tokens, tea_tokens, cfg) -> AlignmentHandles:
    """Align a batch of sentences and export the gather plans.

    ``stu_logits``/``tea_logits`` are sequences of row-major
    (positions, vocab) float arrays, ``stu_tokens``/``tea_tokens`` the
    matching token-id sequences.  ``cfg`` is a mapping with the engine
    hyperparameters plus ``student_vocab``/``teacher_vocab`` token->id
    tables.  The dynamic mapping tables grow across the records of the
    batch, exactly as the engine's corpus fold does; the returned handles
    reflect the table state each record was assembled against.
    """
    if not (len(stu_logits) == len(tea_logits) == len(stu_tokens) == len(tea_tokens)):
        raise CdmError(
            f"batch sides disagree: {len(stu_logits)} student logits, "
            f"{len(tea_logits)} teacher logits, {len(stu_tokens)}/{len(tea_tokens)} token lists"
        )
    engine_cfg, v_stu, v_tea, echo = _split_config(cfg)
    state = PipelineState.initial(v_stu, v_tea)
    records = []
    for idx in range(len(stu_logits)):
        rec = SentenceRecord(
            student=_as_matrix(stu_logits[idx], stu_tokens[idx], "student", idx, v_stu.size),
            teacher=_as_matrix(tea_logits[idx], tea_tokens[idx], "teacher", idx, v_tea.size),
        )
        _, state, _, spans = run_sentence(rec, state, engine_cfg)
        stu_seq = merge_spans(rec.student, spans, "student")
        tea_seq = merge_spans(rec.teacher, spans, "teacher")
        tea_top = topk_select(tea_seq, engine_cfg.k)
        stu_top = topk_select(stu_seq, engine_cfg.k)
        fwd_mapped, fwd_mask = _lookup_column(tea_top.ids, state.forward)
        rev_mapped, rev_mask = _lookup_column(stu_top.ids, state.reverse)
        records.append(
            RecordHandles(
                spans_student=np.array(spans.side("student"), dtype=np.int64),
                spans_teacher=np.array(spans.side("teacher"), dtype=np.int64),
                fwd_support_ids=tea_top.ids.copy(),
                fwd_mapped_ids=fwd_mapped,
                fwd_mask=fwd_mask,
                rev_support_ids=stu_top.ids.copy(),
                rev_mapped_ids=rev_mapped,
                rev_mask=rev_mask,
            )
        )
    return AlignmentHandles(
        records=tuple(records),
        student_vocab_size=v_stu.size,
        teacher_vocab_size=v_tea.size,
        config=echo,
    )
