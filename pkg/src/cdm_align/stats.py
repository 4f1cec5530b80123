"""Tokenizer-compatibility statistics and alignment-quality metrics."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import RecordCountMismatchError
from .seqalign import SpanAlignment
from .vocab import CanonicalToken, MappingTable, Vocabulary


@dataclass(frozen=True)
class CompatReport:
    smr: float | None
    vmr: float
    n_sentences: int
    span_accuracy: float | None = None
    mapping_coverage: float | None = None

    def to_json_obj(self) -> dict:
        return {
            "vmr": self.vmr,
            "smr": self.smr,
            "n_sentences": self.n_sentences,
            "span_accuracy": self.span_accuracy,
            "mapping_coverage": self.mapping_coverage,
        }


def sequence_matching_rate(
    tok_a: list[list[CanonicalToken]], tok_b: list[list[CanonicalToken]]
) -> float:
    """Mean per-sentence Jaccard overlap of the two canonical token sets."""
    if len(tok_a) != len(tok_b):
        raise RecordCountMismatchError(
            f"{len(tok_a)} sentences on one side, {len(tok_b)} on the other"
        )
    if not tok_a:
        return 0.0
    total = 0.0
    for a, b in zip(tok_a, tok_b):
        sa, sb = set(a), set(b)
        union = sa | sb
        total += len(sa & sb) / len(union) if union else 1.0
    return total / len(tok_a)


def vocabulary_matching_rate(v_a: Vocabulary, v_b: Vocabulary) -> float:
    """Share of canonical forms common to both vocabularies, over the smaller one."""
    shared = len(set(v_a.canonical) & set(v_b.canonical))
    return shared / min(v_a.size, v_b.size)


def _span_text(tokens: list[CanonicalToken], start: int, end: int) -> str:
    parts = []
    for tok in tokens[start:end]:
        parts.append(" " + tok.text if tok.leading_space else tok.text)
    return "".join(parts)


def span_alignment_accuracy(
    alignments: list[SpanAlignment],
    tok_a: list[list[CanonicalToken]],
    tok_b: list[list[CanonicalToken]],
) -> float:
    """Fraction of span pairs whose concatenated canonical texts are equal.

    Concatenation honours ``leading_space`` (a flagged token contributes a
    space before its text), and the rate is micro-averaged over every span
    pair in the corpus.
    """
    matched = 0
    total = 0
    for spans, a, b in zip(alignments, tok_a, tok_b):
        for (s0, s1), (t0, t1) in spans.pairs:
            total += 1
            if _span_text(a, s0, s1) == _span_text(b, t0, t1):
                matched += 1
    return matched / total if total else 0.0


def mapping_coverage(table: MappingTable, support_log: list[int]) -> float:
    """Share of observed source-support slot occurrences that the table maps."""
    if not support_log:
        return 0.0
    mapped = sum(1 for src in support_log if src in table)
    return mapped / len(support_log)
