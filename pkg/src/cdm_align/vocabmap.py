"""Dynamic vocabulary mapping over contextual top-k candidates.

Mapping tables start from the exact-match table and grow as sentences are
processed: each unmapped source-side top-k token is matched against the
target-side top-k tokens at the same aligned position, and the closest
candidate under the normalized-edit-distance threshold is cached for good
(first-wins).  Unmatched slots are masked out of the later loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DirectionMismatchError, KTooLargeError, SequenceLengthMismatchError
from .tensorio import LogitsMatrix
from .vocab import (
    FUZZY,
    STUDENT_TO_TEACHER,
    TEACHER_TO_STUDENT,
    MappingTable,
    Vocabulary,
    normalized_edit_distance,
)

MASK_SENTINEL = -np.inf


@dataclass(frozen=True)
class TopKSelection:
    """Per position: the k largest-logit token ids (descending) and their logits.

    Ties are broken by ascending token id.
    """

    ids: np.ndarray  # (positions, k) int64
    values: np.ndarray  # (positions, k) float32

    @property
    def k(self) -> int:
        return self.ids.shape[1]

    @property
    def n_positions(self) -> int:
        return self.ids.shape[0]


@dataclass(frozen=True)
class AlignedBlock:
    """Parallel 2k-slot student/teacher logit vectors with a shared validity mask.

    Slots [0, k) come from the teacher-support direction, slots [k, 2k) from
    the student-support direction.  Masked slots hold ``MASK_SENTINEL`` and
    are excluded from any later softmax support.
    """

    stu_slots: np.ndarray  # (2k,) float64
    tea_slots: np.ndarray  # (2k,) float64
    mask: np.ndarray  # (2k,) bool


def topk_select(m: LogitsMatrix, k: int) -> TopKSelection:
    """Select the k largest logits per position, deterministically."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > m.vocab_size:
        raise KTooLargeError(f"k={k} exceeds vocab_size={m.vocab_size}")
    # Stable sort on negated values: equal logits keep ascending-id order.
    order = np.argsort(-m.values, axis=1, kind="stable")[:, :k]
    values = np.take_along_axis(m.values, order, axis=1)
    return TopKSelection(ids=order.astype(np.int64), values=values)


def update_dynamic_map(
    table: MappingTable,
    support: TopKSelection,
    candidates: TopKSelection,
    v_src: Vocabulary,
    v_tgt: Vocabulary,
    theta: float,
) -> MappingTable:
    """Grow ``table`` with fuzzy entries from one aligned sentence.

    For each position and each source-side top-k token that is not yet a
    key: scan the target-side top-k tokens at the same position and keep the
    strictly closest one with normalized edit distance < theta.  Existing
    keys are never overwritten, so the table is stable across positions,
    sentences, and batches.  Tokens whose canonical text is empty cannot be
    fuzzy-matched and are skipped.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if support.n_positions != candidates.n_positions:
        raise SequenceLengthMismatchError(
            f"support covers {support.n_positions} positions, "
            f"candidates {candidates.n_positions}"
        )
    if theta == 0.0:
        return table  # strict d < 0 can never hold
    for pos in range(support.n_positions):
        cand_ids = candidates.ids[pos]
        for src_id in support.ids[pos]:
            src_id = int(src_id)
            if src_id in table:
                continue
            src_tok = v_src.canonical[src_id]
            if not src_tok.text:
                continue
            best = None
            best_dist = float("inf")
            for cand_id in cand_ids:
                cand_tok = v_tgt.canonical[int(cand_id)]
                if not cand_tok.text:
                    continue
                d = normalized_edit_distance(src_tok, cand_tok)
                if d < theta and d < best_dist:
                    best = int(cand_id)
                    best_dist = d
            if best is not None:
                table.insert(src_id, best, FUZZY)
    return table


def project_aligned(
    support: TopKSelection,
    other_full: LogitsMatrix,
    table: MappingTable,
    direction: str,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pair each support slot with the mapped token's logit on the other side.

    For slot j at position i holding support token t: when the table maps
    t -> s, ``a_slots[i, j]`` is the support logit for t and ``b_slots[i, j]``
    is the other side's full-matrix logit for s at position i; otherwise both
    slots hold the mask sentinel and the mask is False.  Mapped targets are
    gathered from the full matrix, not a top-k slice, so cached mappings stay
    usable when the target token has left the top-k.
    """
    if table.direction != direction:
        raise DirectionMismatchError(
            f"table direction {table.direction!r} used where {direction!r} is required"
        )
    if support.n_positions != other_full.n_positions:
        raise SequenceLengthMismatchError(
            f"support covers {support.n_positions} positions, "
            f"other side {other_full.n_positions}"
        )
    n, k = support.ids.shape
    a_slots = np.full((n, k), MASK_SENTINEL, dtype=np.float64)
    b_slots = np.full((n, k), MASK_SENTINEL, dtype=np.float64)
    mask = np.zeros((n, k), dtype=bool)
    other64 = other_full.values
    for i in range(n):
        for j in range(k):
            src = int(support.ids[i, j])
            if src in table:
                a_slots[i, j] = float(support.values[i, j])
                b_slots[i, j] = float(other64[i, table.target(src)])
                mask[i, j] = True
    return a_slots, b_slots, mask


def assemble_dual(
    stu_seq: LogitsMatrix,
    tea_seq: LogitsMatrix,
    fwd_table: MappingTable,
    rev_table: MappingTable,
    k: int,
) -> list[AlignedBlock]:
    """Build the per-position 2k-slot aligned blocks for both models.

    The forward half projects teacher top-k support through the
    teacher→student table (slots [0, k)); the reverse half projects student
    top-k support through the student→teacher table (slots [k, 2k)).  The
    mask is shared between the student and teacher blocks at every slot.
    """
    if stu_seq.n_positions != tea_seq.n_positions:
        raise SequenceLengthMismatchError(
            f"student side has {stu_seq.n_positions} aligned positions, "
            f"teacher side {tea_seq.n_positions}"
        )
    tea_top = topk_select(tea_seq, k)
    stu_top = topk_select(stu_seq, k)
    tea_f, stu_f, mask_f = project_aligned(tea_top, stu_seq, fwd_table, TEACHER_TO_STUDENT)
    stu_r, tea_r, mask_r = project_aligned(stu_top, tea_seq, rev_table, STUDENT_TO_TEACHER)
    blocks = []
    for i in range(stu_seq.n_positions):
        blocks.append(
            AlignedBlock(
                stu_slots=np.concatenate([stu_f[i], stu_r[i]]),
                tea_slots=np.concatenate([tea_f[i], tea_r[i]]),
                mask=np.concatenate([mask_f[i], mask_r[i]]),
            )
        )
    return blocks
