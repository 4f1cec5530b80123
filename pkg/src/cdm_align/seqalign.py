"""Entropy-weighted sequence alignment between two tokenizations.

Positions whose predictive distribution is ambiguous (high entropy) receive
a larger integer weight, which raises the price of warping them onto
dissimilar text and keeps short noisy tokens (commas, sentence-initial
fragments) from being fused into neighbouring spans.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoverageMismatchError, EmptySequenceError
from .tensorio import LogitsMatrix
from .vocab import CanonicalToken, edit_distance

STUDENT = "student"
TEACHER = "teacher"

_DIAG = 0  # both sides advance: opens a new span pair
_TEA = 1  # teacher advances: extends the teacher span
_STU = 2  # student advances: extends the student span


@dataclass(frozen=True)
class SpanAlignment:
    """Ordered, non-overlapping half-open span pairs covering both sequences."""

    pairs: tuple[tuple[tuple[int, int], tuple[int, int]], ...]
    cost: float

    def __len__(self) -> int:
        return len(self.pairs)

    def side(self, side: str) -> list[tuple[int, int]]:
        idx = 0 if side == STUDENT else 1
        return [pair[idx] for pair in self.pairs]

    def validate(self, n_stu: int, n_tea: int) -> None:
        for idx, n in ((0, n_stu), (1, n_tea)):
            cursor = 0
            for pair in self.pairs:
                start, end = pair[idx]
                if start != cursor or end <= start:
                    raise CoverageMismatchError(
                        f"span {pair} breaks coverage at position {cursor}"
                    )
                cursor = end
            if cursor != n:
                raise CoverageMismatchError(
                    f"spans cover [0, {cursor}) but the sequence has {n} positions"
                )

    def to_json_obj(self) -> list[dict]:
        return [
            {"student": [s0, s1], "teacher": [t0, t1]}
            for (s0, s1), (t0, t1) in self.pairs
        ]


def position_entropy(m: LogitsMatrix) -> np.ndarray:
    """Shannon entropy (nats) of softmax(logits) at each position, float64."""
    x = m.values.astype(np.float64)
    x = x - x.max(axis=1, keepdims=True)
    e = np.exp(x)
    z = e.sum(axis=1)
    p = e / z[:, None]
    return np.log(z) - (p * x).sum(axis=1)


def alignment_weights(h: np.ndarray, C: int) -> np.ndarray:
    """Integer DTW weights: ceil(sigmoid(minmax(h)) * C + C), elementwise.

    MinMax over a constant vector is defined as all-zero (constant entropy
    carries no ranking information), which gives the minimum weight
    ceil(1.5 * C) everywhere.  Reachable range is [ceil(1.5*C), 2*C].
    """
    h = np.asarray(h, dtype=np.float64)
    if h.size < 1:
        raise EmptySequenceError("entropy vector is empty")
    if C < 2:
        raise ValueError(f"C must be >= 2, got {C}")
    lo, hi = h.min(), h.max()
    phi = np.zeros_like(h) if hi == lo else (h - lo) / (hi - lo)
    sig = 1.0 / (1.0 + np.exp(-phi))
    return np.ceil(sig * C + C).astype(np.int64)


def weighted_dtw(
    stu_tokens: list[CanonicalToken],
    tea_tokens: list[CanonicalToken],
    w_stu,
    w_tea,
) -> SpanAlignment:
    """Minimum-cost monotone alignment of two token sequences, collapsed to spans.

    Cell cost is ``w_stu[i] * w_tea[j] * EditDistance(stu[i].text, tea[j].text)``
    with the unnormalized character edit distance; the path runs from (0, 0)
    to (n-1, m-1) with steps {diagonal, teacher-advance, student-advance}.
    DP ties are broken by preferring diagonal, then teacher-advance, then
    student-advance.  Each diagonal step opens a new span pair; single-side
    steps extend the current span on the advancing side.

    Integer weights keep the whole DP in exact integer arithmetic.
    """
    n, m = len(stu_tokens), len(tea_tokens)
    if n == 0 or m == 0:
        raise EmptySequenceError("both token sequences must be non-empty")
    if len(w_stu) != n or len(w_tea) != m:
        raise ValueError("weight vectors must match sequence lengths")
    w_stu = [int(w) for w in w_stu]
    w_tea = [int(w) for w in w_tea]
    if min(w_stu) < 1 or min(w_tea) < 1:
        raise ValueError("weights must be positive integers")

    stu_texts = [t.text for t in stu_tokens]
    tea_texts = [t.text for t in tea_tokens]
    cost = [
        [w_stu[i] * w_tea[j] * edit_distance(stu_texts[i], tea_texts[j]) for j in range(m)]
        for i in range(n)
    ]

    dist = [[0] * m for _ in range(n)]
    step = [[_DIAG] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            c = cost[i][j]
            if i == 0 and j == 0:
                dist[i][j] = c
            elif i == 0:
                dist[i][j] = dist[0][j - 1] + c
                step[i][j] = _TEA
            elif j == 0:
                dist[i][j] = dist[i - 1][0] + c
                step[i][j] = _STU
            else:
                best = dist[i - 1][j - 1]
                which = _DIAG
                if dist[i][j - 1] < best:
                    best = dist[i][j - 1]
                    which = _TEA
                if dist[i - 1][j] < best:
                    best = dist[i - 1][j]
                    which = _STU
                dist[i][j] = best + c
                step[i][j] = which

    steps = []
    i, j = n - 1, m - 1
    while i > 0 or j > 0:
        which = step[i][j]
        steps.append(which)
        if which == _DIAG:
            i, j = i - 1, j - 1
        elif which == _TEA:
            j -= 1
        else:
            i -= 1
    steps.reverse()

    pairs = []
    s_start, t_start = 0, 0
    s_end, t_end = 1, 1
    for which in steps:
        if which == _DIAG:
            pairs.append(((s_start, s_end), (t_start, t_end)))
            s_start, t_start = s_end, t_end
            s_end, t_end = s_end + 1, t_end + 1
        elif which == _TEA:
            t_end += 1
        else:
            s_end += 1
    pairs.append(((s_start, s_end), (t_start, t_end)))

    alignment = SpanAlignment(pairs=tuple(pairs), cost=float(dist[n - 1][m - 1]))
    alignment.validate(n, m)
    return alignment


def merge_spans(m: LogitsMatrix, spans: SpanAlignment, side: str) -> LogitsMatrix:
    """Mean-pool the rows of each span on the chosen side.

    The result has one row per span pair; the vocabulary dimension is
    untouched.  Pooling runs in float64 and is stored back as float32.
    Merged rows keep the first member's token id.
    """
    if side not in (STUDENT, TEACHER):
        raise ValueError(f"side must be {STUDENT!r} or {TEACHER!r}")
    ranges = spans.side(side)
    cursor = 0
    for start, end in ranges:
        if start != cursor or end <= start:
            raise CoverageMismatchError(f"span [{start}, {end}) breaks coverage at {cursor}")
        cursor = end
    if cursor != m.n_positions:
        raise CoverageMismatchError(
            f"spans cover {cursor} positions but the matrix has {m.n_positions}"
        )
    values64 = m.values.astype(np.float64)
    rows = np.empty((len(ranges), m.vocab_size), dtype=np.float64)
    token_ids = np.empty(len(ranges), dtype=np.int64)
    for r, (start, end) in enumerate(ranges):
        rows[r] = values64[start:end].mean(axis=0)
        token_ids[r] = m.token_ids[start]
    return LogitsMatrix(values=rows.astype(np.float32), token_ids=token_ids)
