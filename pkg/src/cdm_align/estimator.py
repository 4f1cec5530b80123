"""Scikit-learn style front door for the alignment engine.

``fit`` consumes a corpus of paired student/teacher logit matrices and
learns the dynamic mapping tables (the corpus pass also yields the loss and
compatibility reports); ``transform`` aligns further records against the
frozen tables without growing them.  The estimator plugs into sklearn
tooling (``get_params`` / ``set_params`` / ``clone``) like any transformer.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import CdmError
from .loss import LossReport, combined_loss, kl_loss, lm_loss
from .pipeline import CdmConfig, run_corpus
from .seqalign import STUDENT, TEACHER, alignment_weights, merge_spans, position_entropy, weighted_dtw
from .tensorio import LogitsMatrix, SentenceRecord
from .vocab import Vocabulary
from .vocabmap import assemble_dual


def check_records(X, student_vocab: Vocabulary, teacher_vocab: Vocabulary) -> list[SentenceRecord]:
    """Normalize fit/transform input into validated sentence records.

    Accepts an iterable of ``SentenceRecord`` or ``(student, teacher)``
    pairs of ``LogitsMatrix``; vocabulary sizes must match the declared
    vocabularies.
    """
    records = []
    for idx, item in enumerate(X):
        if isinstance(item, SentenceRecord):
            rec = item
        else:
            try:
                stu, tea = item
            except (TypeError, ValueError):
                raise CdmError(
                    f"record {idx}: expected SentenceRecord or (student, teacher) pair"
                ) from None
            if not isinstance(stu, LogitsMatrix) or not isinstance(tea, LogitsMatrix):
                raise CdmError(f"record {idx}: pair members must be LogitsMatrix")
            rec = SentenceRecord(student=stu, teacher=tea)
        if rec.student.vocab_size != student_vocab.size:
            raise CdmError(
                f"record {idx}: student vocab_size {rec.student.vocab_size} "
                f"!= vocabulary size {student_vocab.size}"
            )
        if rec.teacher.vocab_size != teacher_vocab.size:
            raise CdmError(
                f"record {idx}: teacher vocab_size {rec.teacher.vocab_size} "
                f"!= vocabulary size {teacher_vocab.size}"
            )
        records.append(rec)
    return records


class CdmDistiller(TransformerMixin, BaseEstimator):
    """Cross-tokenizer aligner with learned dynamic vocabulary mapping.

    Parameters mirror the engine configuration; ``student_vocab`` and
    ``teacher_vocab`` are :class:`~cdm_align.vocab.Vocabulary` objects and
    are required before calling ``fit``.
    """

    def __init__(
        self,
        student_vocab=None,
        teacher_vocab=None,
        theta=0.3,
        k=100,
        alpha=0.5,
        temperature=2.0,
        C=3,
        epsilon=1e-12,
    ):
        self.student_vocab = student_vocab
        self.teacher_vocab = teacher_vocab
        self.theta = theta
        self.k = k
        self.alpha = alpha
        self.temperature = temperature
        self.C = C
        self.epsilon = epsilon

    def _config(self) -> CdmConfig:
        return CdmConfig(
            theta=self.theta,
            k=self.k,
            alpha=self.alpha,
            temperature=self.temperature,
            C=self.C,
            epsilon=self.epsilon,
        )

    def _vocabs(self) -> tuple[Vocabulary, Vocabulary]:
        if self.student_vocab is None or self.teacher_vocab is None:
            raise CdmError("student_vocab and teacher_vocab must be provided")
        return self.student_vocab, self.teacher_vocab

    def fit(self, X, y=None):
        """Run the corpus pass: grow the mapping tables and record the reports."""
        v_stu, v_tea = self._vocabs()
        cfg = self._config()
        records = check_records(X, v_stu, v_tea)
        report, state, compat, alignments = run_corpus(
            [r.student for r in records],
            [r.teacher for r in records],
            v_stu,
            v_tea,
            cfg,
        )
        self.forward_table_ = state.forward
        self.reverse_table_ = state.reverse
        self.report_ = report
        self.compat_ = compat
        self.alignments_ = alignments
        self.n_records_ = len(records)
        return self

    def _align_one(self, rec: SentenceRecord, cfg: CdmConfig):
        v_stu, v_tea = self._vocabs()
        w_stu = alignment_weights(position_entropy(rec.student), cfg.C)
        w_tea = alignment_weights(position_entropy(rec.teacher), cfg.C)
        stu_tokens = [v_stu.canonical[int(i)] for i in rec.student.token_ids]
        tea_tokens = [v_tea.canonical[int(i)] for i in rec.teacher.token_ids]
        spans = weighted_dtw(stu_tokens, tea_tokens, w_stu, w_tea)
        stu_seq = merge_spans(rec.student, spans, STUDENT)
        tea_seq = merge_spans(rec.teacher, spans, TEACHER)
        blocks = assemble_dual(stu_seq, tea_seq, self.forward_table_, self.reverse_table_, cfg.k)
        return blocks, spans

    def transform(self, X):
        """Align records against the frozen fitted tables; returns blocks per record."""
        check_is_fitted(self)
        v_stu, v_tea = self._vocabs()
        cfg = self._config()
        return [self._align_one(rec, cfg)[0] for rec in check_records(X, v_stu, v_tea)]

    def evaluate(self, X) -> LossReport:
        """Aggregate loss report over records, using the frozen fitted tables."""
        check_is_fitted(self)
        v_stu, v_tea = self._vocabs()
        cfg = self._config()
        kl_sum = kl_positions = 0.0
        lm_sum = lm_positions = 0.0
        for rec in check_records(X, v_stu, v_tea):
            blocks, _ = self._align_one(rec, cfg)
            kl, used = kl_loss(blocks, cfg.loss)
            lm = lm_loss(rec.student, rec.student.token_ids)
            kl_sum += kl * used
            kl_positions += used
            n_lm = max(rec.student.n_positions - 1, 0)
            lm_sum += lm * n_lm
            lm_positions += n_lm
        kl = kl_sum / kl_positions if kl_positions else 0.0
        lm = lm_sum / lm_positions if lm_positions else 0.0
        return LossReport(
            kl=kl,
            lm=lm,
            combined=combined_loss(kl, lm, cfg.loss),
            n_positions_used=int(kl_positions),
        )
