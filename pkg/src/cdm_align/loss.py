"""Masked temperature softmax and the distillation loss kernels.

All arithmetic is float64.  The KL term runs over the shared valid slots of
an aligned block; the language-modeling term is plain next-token
cross-entropy over the full vocabulary with no temperature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TargetOutOfRangeError
from .tensorio import LogitsMatrix
from .vocabmap import AlignedBlock


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 0.5
    temperature: float = 2.0
    epsilon: float = 1e-12

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.temperature <= 0.0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class LossReport:
    kl: float
    lm: float
    combined: float
    n_positions_used: int

    def to_json_obj(self) -> dict:
        return {
            "kl": self.kl,
            "lm": self.lm,
            "combined": self.combined,
            "positions": self.n_positions_used,
        }


def masked_softmax(
    slots: np.ndarray, mask: np.ndarray, temperature: float
) -> tuple[np.ndarray, bool]:
    """Temperature softmax over the valid slots only.

    Invalid slots get exactly 0.  An all-invalid input returns the all-zero
    vector together with ``degenerate=True``.
    """
    if temperature <= 0.0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    slots = np.asarray(slots, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    out = np.zeros_like(slots)
    if not mask.any():
        return out, True
    x = slots[mask] / temperature
    x = x - x.max()
    e = np.exp(x)
    out[mask] = e / e.sum()
    return out, False


def kl_term(p: np.ndarray, q: np.ndarray, epsilon: float) -> float:
    """Sum of p * ln((p + eps) / (q + eps)) over one position's distributions."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return float(np.sum(p * (np.log(p + epsilon) - np.log(q + epsilon))))


def kl_loss(blocks: list[AlignedBlock], cfg: LossConfig) -> tuple[float, int]:
    """Temperature-scaled student→teacher KL over aligned blocks.

    Per position, both distributions are normalized jointly over the shared
    valid slots of the concatenated 2k block; the position contributes
    ``T^2 * sum(p * ln((p+eps)/(q+eps)))``.  Positions with fewer than two
    valid slots contribute nothing and are excluded from the mean.  Returns
    the mean over contributing positions and their count.
    """
    t2 = cfg.temperature * cfg.temperature
    total = 0.0
    used = 0
    for block in blocks:
        if int(block.mask.sum()) < 2:
            continue
        p, _ = masked_softmax(block.stu_slots, block.mask, cfg.temperature)
        q, _ = masked_softmax(block.tea_slots, block.mask, cfg.temperature)
        total += t2 * kl_term(p[block.mask], q[block.mask], cfg.epsilon)
        used += 1
    if used == 0:
        return 0.0, 0
    return total / used, used


def lm_loss(m: LogitsMatrix, targets) -> float:
    """Mean next-token cross-entropy: position i predicts targets[i+1].

    Full-vocabulary softmax, no temperature; the final position has no
    successor and is excluded.  A single-position matrix scores 0.
    """
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != (m.n_positions,):
        raise ValueError(
            f"expected {m.n_positions} targets, got shape {targets.shape}"
        )
    if targets.size and (targets.min() < 0 or targets.max() >= m.vocab_size):
        raise TargetOutOfRangeError(
            f"target ids must lie in [0, {m.vocab_size})"
        )
    if m.n_positions < 2:
        return 0.0
    x = m.values.astype(np.float64)[:-1]
    shifted = targets[1:]
    xmax = x.max(axis=1)
    logz = xmax + np.log(np.exp(x - xmax[:, None]).sum(axis=1))
    picked = x[np.arange(x.shape[0]), shifted]
    return float(np.mean(logz - picked))


def combined_loss(kl: float, lm: float, cfg: LossConfig) -> float:
    """alpha * kl + (1 - alpha) * lm."""
    return cfg.alpha * kl + (1.0 - cfg.alpha) * lm
