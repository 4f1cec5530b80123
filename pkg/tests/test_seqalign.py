from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from cdm_align import (
    LogitsMatrix,
    alignment_weights,
    merge_spans,
    normalize_token,
    position_entropy,
    weighted_dtw,
)
from cdm_align.errors import CoverageMismatchError, EmptySequenceError
from cdm_align.seqalign import SpanAlignment
from conftest import random_matrix


def toks(*texts):
    return [normalize_token(t) for t in texts]


class TestPositionEntropy:
    def test_uniform_is_log_vocab(self):
        m = LogitsMatrix(values=np.zeros((3, 7), dtype=np.float32), token_ids=[0, 1, 2])
        h = position_entropy(m)
        assert h == pytest.approx(math.log(7), abs=1e-9)

    def test_near_one_hot_is_near_zero(self):
        row = np.array([[1000.0, 0.0, 0.0]], dtype=np.float32)
        m = LogitsMatrix(values=row, token_ids=[0])
        assert position_entropy(m)[0] == pytest.approx(0.0, abs=1e-6)

    def test_two_way_hand_value(self):
        # softmax(ln 2, 0) = (2/3, 1/3)
        row = np.array([[math.log(2.0), 0.0]], dtype=np.float32)
        m = LogitsMatrix(values=row, token_ids=[0])
        expect = -(2 / 3) * math.log(2 / 3) - (1 / 3) * math.log(1 / 3)
        assert position_entropy(m)[0] == pytest.approx(expect, abs=1e-6)

    def test_matches_oracle_on_random_rows(self):
        rng = np.random.default_rng(11)
        m = random_matrix(rng, 6, 9)
        h = position_entropy(m)
        for i, row in enumerate(m.values.tolist()):
            assert h[i] == pytest.approx(oracle.o_entropy_row(row), abs=1e-12)

    def test_bounds(self):
        rng = np.random.default_rng(12)
        m = random_matrix(rng, 20, 13)
        h = position_entropy(m)
        assert (h >= 0).all() and (h <= math.log(13) + 1e-12).all()


class TestAlignmentWeights:
    def test_min_entropy_weight(self):
        w = alignment_weights(np.array([0.0, 5.0]), 3)
        assert w[0] == 5  # sigmoid(0)*3+3 = 4.5

    def test_max_entropy_weight(self):
        w = alignment_weights(np.array([0.0, 5.0]), 3)
        assert w[1] == 6  # sigmoid(1)*3+3 ~ 5.19

    def test_constant_vector_degenerate_rule(self):
        w = alignment_weights(np.array([2.5, 2.5, 2.5]), 3)
        assert list(w) == [5, 5, 5]

    @given(
        hs=st.lists(st.floats(0.0, 20.0), min_size=1, max_size=12),
        c=st.integers(2, 8),
    )
    def test_range_and_monotonicity(self, hs, c):
        h = np.array(hs)
        w = alignment_weights(h, c)
        assert (w >= math.ceil(1.5 * c)).all() and (w <= 2 * c).all()
        order = np.argsort(h)
        assert (np.diff(w[order]) >= 0).all()

    def test_matches_oracle(self):
        rng = np.random.default_rng(13)
        h = rng.uniform(0, 3, size=10)
        assert list(alignment_weights(h, 3)) == oracle.o_weights(list(h), 3)


class TestWeightedDtw:
    def test_identical_sequences_identity_alignment(self):
        t = toks("▁a", "▁bb", "▁a")
        spans = weighted_dtw(t, t, [5, 6, 5], [5, 6, 5])
        assert spans.cost == 0.0
        assert [p for p in spans.pairs] == [
            ((0, 1), (0, 1)),
            ((1, 2), (1, 2)),
            ((2, 3), (2, 3)),
        ]

    def test_single_teacher_token_single_span(self):
        spans = weighted_dtw(toks("appl", "e"), toks("apple"), [5, 5], [6])
        assert spans.pairs == (((0, 2), (0, 1)),)

    def test_empty_sequence_error(self):
        with pytest.raises(EmptySequenceError):
            weighted_dtw([], toks("a"), [], [5])

    def test_weight_length_mismatch(self):
        with pytest.raises(ValueError):
            weighted_dtw(toks("a"), toks("a"), [5, 5], [5])

    @settings(max_examples=60, deadline=None)
    @given(
        data=st.data(),
        n=st.integers(1, 5),
        m=st.integers(1, 5),
    )
    def test_cost_equals_exhaustive_enumeration(self, data, n, m):
        alphabet = "abcde"
        words = st.text(alphabet=alphabet, min_size=1, max_size=4)
        stu = [data.draw(words) for _ in range(n)]
        tea = [data.draw(words) for _ in range(m)]
        w_stu = [data.draw(st.integers(5, 6)) for _ in range(n)]
        w_tea = [data.draw(st.integers(5, 6)) for _ in range(m)]
        spans = weighted_dtw(toks(*stu), toks(*tea), w_stu, w_tea)
        expect, _, _ = oracle.o_dtw(
            [(t, False) for t in stu], [(t, False) for t in tea],
            w_stu, w_tea, require_unique=False,
        )
        assert spans.cost == expect

    def test_uniform_scaling_preserves_unique_optimum_spans(self):
        stu = toks("▁the", "▁cat", "s", "▁sat")
        tea = toks("▁the", "▁cats", "▁sit")
        base = weighted_dtw(stu, tea, [5, 6, 5, 6], [5, 6, 5])
        scaled = weighted_dtw(stu, tea, [10, 12, 10, 12], [10, 12, 10])
        assert scaled.pairs == base.pairs
        assert scaled.cost == 4 * base.cost

    def test_spans_cover_both_sides(self):
        rng = np.random.default_rng(21)
        alphabet = "abc"
        for _ in range(50):
            stu = ["".join(rng.choice(list(alphabet), size=rng.integers(1, 4))) for _ in range(rng.integers(1, 6))]
            tea = ["".join(rng.choice(list(alphabet), size=rng.integers(1, 4))) for _ in range(rng.integers(1, 6))]
            spans = weighted_dtw(toks(*stu), toks(*tea), [5] * len(stu), [5] * len(tea))
            spans.validate(len(stu), len(tea))


class TestMergeSpans:
    def test_width_one_spans_identity(self):
        rng = np.random.default_rng(31)
        m = random_matrix(rng, 4, 5)
        spans = SpanAlignment(
            pairs=tuple(((i, i + 1), (i, i + 1)) for i in range(4)), cost=0.0
        )
        out = merge_spans(m, spans, "student")
        assert np.array_equal(out.values, m.values)
        assert np.array_equal(out.token_ids, m.token_ids)

    def test_two_row_mean(self):
        m = LogitsMatrix(
            values=np.array([[0, 2, 4], [2, 4, 6]], dtype=np.float32), token_ids=[0, 1]
        )
        spans = SpanAlignment(pairs=(((0, 2), (0, 1)),), cost=0.0)
        out = merge_spans(m, spans, "student")
        assert np.array_equal(out.values, np.array([[1, 3, 5]], dtype=np.float32))
        assert out.token_ids[0] == 0

    def test_coverage_mismatch_error(self):
        m = LogitsMatrix(values=np.zeros((3, 2), dtype=np.float32), token_ids=[0, 0, 0])
        spans = SpanAlignment(pairs=(((0, 2), (0, 1)),), cost=0.0)
        with pytest.raises(CoverageMismatchError):
            merge_spans(m, spans, "student")

    def test_random_spans_match_recomputation_oracle(self):
        rng = np.random.default_rng(32)
        for _ in range(30):
            n = int(rng.integers(1, 8))
            m = random_matrix(rng, n, int(rng.integers(1, 7)))
            # random partition of [0, n)
            cuts = sorted(set([0, n] + list(rng.integers(1, n, size=3)))) if n > 1 else [0, 1]
            ranges = list(zip(cuts[:-1], cuts[1:]))
            spans = SpanAlignment(
                pairs=tuple((r, r) for r in ranges), cost=0.0
            )
            out = merge_spans(m, spans, "teacher")
            expect = oracle.o_merge([list(map(float, r)) for r in m.values.tolist()], ranges)
            for got_row, want_row in zip(out.values.tolist(), expect):
                assert got_row == pytest.approx(want_row, abs=1e-6)
