"""Toy two-tokenizer distillation: a word-piece student learns from a
frozen character-level teacher on a synthetic corpus.

The teacher is a smoothed character-bigram model (frozen by construction);
the student is a tiny GRU language model over word pieces.  Every training
step aligns the two tokenizations with the engine, then rebuilds the
masked distillation objective from the exported handles inside torch.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .handles import align_batch
from .host import batch_losses

_SUBJECTS = ["anna", "bona", "cara", "dana", "elia"]
_VERBS = ["pets", "sees", "feeds", "likes", "helps"]
_OBJECTS = ["the cat", "the dog", "a bird", "the fish", "a mouse"]

DEMO_CONFIG = {
    "theta": 0.6,  # two-char pieces sit at distance 0.5 from their leading char
    "k": 8,
    "alpha": 0.5,
    "temperature": 2.0,
    "C": 3,
    "epsilon": 1e-12,
}


def make_corpus(rng: np.random.Generator, n_sentences: int = 1000) -> list[str]:
    return [
        f"{rng.choice(_SUBJECTS)} {rng.choice(_VERBS)} {rng.choice(_OBJECTS)}"
        for _ in range(n_sentences)
    ]


def char_tokenize(text: str) -> list[str]:
    """Character-level tokens; word-initial characters carry the space marker."""
    tokens = []
    for word in text.split(" "):
        tokens.append("▁" + word[0])
        tokens.extend(word[1:])
    return tokens


def piece_tokenize(text: str) -> list[str]:
    """Word-piece-style tokens: two-character chunks, word starts marked."""
    tokens = []
    for word in text.split(" "):
        tokens.append("▁" + word[:2])
        for i in range(2, len(word), 2):
            tokens.append(word[i:i + 2])
    return tokens


def build_vocab(corpus: list[str], tokenize) -> dict[str, int]:
    tokens = sorted({tok for text in corpus for tok in tokenize(text)})
    return {tok: i for i, tok in enumerate(tokens)}


class BigramTeacher:
    """Frozen add-half smoothed bigram model over character tokens."""

    def __init__(self, corpus: list[str], vocab: dict[str, int]):
        size = len(vocab)
        counts = np.zeros((size, size), dtype=np.float64)
        for text in corpus:
            ids = [vocab[t] for t in char_tokenize(text)]
            for a, b in zip(ids, ids[1:]):
                counts[a, b] += 1.0
        smoothed = counts + 0.5
        self.logits = np.log(smoothed / smoothed.sum(axis=1, keepdims=True)).astype(
            np.float32
        )

    def sentence_logits(self, token_ids: list[int]) -> np.ndarray:
        return self.logits[token_ids]


class PieceStudent(nn.Module):
    """Tiny GRU language model over word pieces."""

    def __init__(self, vocab_size: int, embed_dim: int = 24, hidden_dim: int = 48):
        super().__init__()
        self.embed = nn.Embedding(vocab_size, embed_dim)
        self.rnn = nn.GRU(embed_dim, hidden_dim, batch_first=True)
        self.head = nn.Linear(hidden_dim, vocab_size)

    def forward(self, token_ids: torch.Tensor) -> torch.Tensor:
        hidden, _ = self.rnn(self.embed(token_ids.unsqueeze(0)))
        return self.head(hidden.squeeze(0))


def toy_distill_demo(
    seed: int,
    steps: int,
    alpha: float = 0.5,
    batch_size: int = 8,
    n_sentences: int = 1000,
) -> list[dict]:
    """Train the toy student against the frozen teacher; returns the loss curve.

    Each entry carries the step index and the float ``kl``, ``ce``, and
    ``combined`` values of that step's batch objective (the quantity that
    was backpropagated).
    """
    rng = np.random.default_rng(seed)
    torch.manual_seed(seed)

    corpus = make_corpus(rng, n_sentences)
    stu_vocab = build_vocab(corpus, piece_tokenize)
    tea_vocab = build_vocab(corpus, char_tokenize)
    teacher = BigramTeacher(corpus, tea_vocab)
    student = PieceStudent(len(stu_vocab))
    optimizer = torch.optim.Adam(student.parameters(), lr=5e-3)

    cfg = dict(DEMO_CONFIG)
    cfg["alpha"] = alpha
    cfg["student_vocab"] = stu_vocab
    cfg["teacher_vocab"] = tea_vocab

    curve = []
    for step in range(steps):
        batch = [corpus[int(i)] for i in rng.integers(0, len(corpus), size=batch_size)]
        stu_ids = [[stu_vocab[t] for t in piece_tokenize(text)] for text in batch]
        tea_ids = [[tea_vocab[t] for t in char_tokenize(text)] for text in batch]

        stu_logits = [student(torch.tensor(ids, dtype=torch.long)) for ids in stu_ids]
        tea_logits = [
            torch.from_numpy(teacher.sentence_logits(ids)) for ids in tea_ids
        ]

        handles = align_batch(
            [t.detach().numpy() for t in stu_logits],
            [t.numpy() for t in tea_logits],
            stu_ids,
            tea_ids,
            cfg,
        )
        losses = batch_losses(handles, stu_logits, tea_logits, stu_ids)

        optimizer.zero_grad()
        losses["combined"].backward()
        optimizer.step()
        curve.append(
            {
                "step": step,
                "kl": float(losses["kl"].detach()),
                "ce": float(losses["ce"].detach()),
                "combined": float(losses["combined"].detach()),
            }
        )
    return curve
