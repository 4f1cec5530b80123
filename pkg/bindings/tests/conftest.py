from __future__ import annotations

import numpy as np
import pytest

SP = "▁"

STUDENT_TOKENS = [SP + "the", SP + "cat", SP + "sat", SP + "on", SP + "mat", SP + "dog", SP + "ran", "s"]
TEACHER_TOKENS = [SP + "the", SP + "cats", SP + "sit", SP + "on", SP + "mat", SP + "dogs", SP + "run", SP + "happy"]

SENTENCES = [
    ([0, 1, 7, 2], [0, 1, 2]),
    ([0, 5, 6, 3, 4], [0, 5, 6, 3]),
    ([1, 2, 4], [1, 2, 7, 4]),
]


def shaped_logits(rng, token_ids, vocab_size):
    values = rng.normal(0.0, 1.5, size=(len(token_ids), vocab_size))
    for i in range(len(token_ids)):
        values[i, token_ids[(i + 1) % len(token_ids)]] += 6.0
    return values.astype(np.float32)


@pytest.fixture(scope="session")
def toy_batch():
    """Cross-tokenizer batch: logit arrays, token ids, and the config mapping."""
    stu_logits, tea_logits, stu_ids, tea_ids = [], [], [], []
    for idx, (s_ids, t_ids) in enumerate(SENTENCES):
        rng = np.random.default_rng(20240 + idx)
        stu_logits.append(shaped_logits(rng, s_ids, len(STUDENT_TOKENS)))
        tea_logits.append(shaped_logits(rng, t_ids, len(TEACHER_TOKENS)))
        stu_ids.append(list(s_ids))
        tea_ids.append(list(t_ids))
    cfg = {
        "k": 4,
        "student_vocab": {tok: i for i, tok in enumerate(STUDENT_TOKENS)},
        "teacher_vocab": {tok: i for i, tok in enumerate(TEACHER_TOKENS)},
    }
    return stu_logits, tea_logits, stu_ids, tea_ids, cfg


@pytest.fixture(scope="session")
def identical_batch():
    vocab = {f"tok{i}": i for i in range(6)}
    rng = np.random.default_rng(77)
    logits, ids = [], []
    for _ in range(3):
        n = int(rng.integers(2, 6))
        logits.append(rng.normal(size=(n, 6)).astype(np.float32))
        ids.append([int(i) for i in rng.integers(0, 6, size=n)])
    cfg = {"k": 6, "student_vocab": vocab, "teacher_vocab": vocab}
    return logits, ids, cfg
