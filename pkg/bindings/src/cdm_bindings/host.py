"""Host-side differentiable loss reconstruction from alignment handles.

Everything here stays inside torch's autodiff graph: span pooling, slot
gathers, masked temperature softmax, and the distillation objective.  The
engine contributed only indices and masks, so gradients flow end to end
through the host's own logit tensors.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from .handles import AlignmentHandles, RecordHandles


def pool_spans(logits: torch.Tensor, spans: np.ndarray) -> torch.Tensor:
    """Mean-pool logit rows over half-open span ranges (differentiable)."""
    rows = [logits[int(start):int(end)].mean(dim=0) for start, end in spans]
    return torch.stack(rows, dim=0)


def _gather_slots(
    pooled_support: torch.Tensor,
    pooled_other: torch.Tensor,
    support_ids: np.ndarray,
    mapped_ids: np.ndarray,
    mask: np.ndarray,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Support-side and other-side slot values for one direction."""
    device = pooled_support.device
    sup_idx = torch.as_tensor(support_ids, dtype=torch.long, device=device)
    map_idx = torch.as_tensor(mapped_ids, dtype=torch.long, device=device).clamp(min=0)
    keep = torch.as_tensor(mask, dtype=torch.bool, device=device)
    support_vals = torch.gather(pooled_support, 1, sup_idx)
    other_vals = torch.gather(pooled_other, 1, map_idx)
    neg = torch.tensor(float("-inf"), dtype=pooled_support.dtype, device=device)
    return (
        torch.where(keep, support_vals, neg),
        torch.where(keep, other_vals, neg),
    )


def record_kl(
    stu_logits: torch.Tensor,
    tea_logits: torch.Tensor,
    rh: RecordHandles,
    temperature: float,
    epsilon: float,
) -> tuple[torch.Tensor, int]:
    """Masked student→teacher KL for one record.

    Returns the mean over contributing positions (those with at least two
    valid slots) and the number of contributing positions.
    """
    stu_pool = pool_spans(stu_logits, rh.spans_student)
    tea_pool = pool_spans(tea_logits, rh.spans_teacher)

    tea_f, stu_f = _gather_slots(
        tea_pool, stu_pool, rh.fwd_support_ids, rh.fwd_mapped_ids, rh.fwd_mask
    )
    stu_r, tea_r = _gather_slots(
        stu_pool, tea_pool, rh.rev_support_ids, rh.rev_mapped_ids, rh.rev_mask
    )
    stu_slots = torch.cat([stu_f, stu_r], dim=1)
    tea_slots = torch.cat([tea_f, tea_r], dim=1)
    mask = torch.as_tensor(
        np.concatenate([rh.fwd_mask, rh.rev_mask], axis=1), dtype=torch.bool,
        device=stu_logits.device,
    )

    keep_rows = mask.sum(dim=1) >= 2
    used = int(keep_rows.sum().item())
    if used == 0:
        return stu_logits.new_zeros(()), 0

    p = torch.softmax(stu_slots[keep_rows] / temperature, dim=1)
    q = torch.softmax(tea_slots[keep_rows] / temperature, dim=1)
    # -inf slots softmax to exactly 0; the epsilon floor keeps the logs finite
    per_slot = p * (torch.log(p + epsilon) - torch.log(q + epsilon))
    per_position = temperature * temperature * per_slot.sum(dim=1)
    return per_position.mean(), used


def record_ce(stu_logits: torch.Tensor, token_ids) -> tuple[torch.Tensor, int]:
    """Next-token cross-entropy over the full vocabulary, no temperature."""
    n = stu_logits.shape[0]
    if n < 2:
        return stu_logits.new_zeros(()), 0
    targets = torch.as_tensor(list(token_ids), dtype=torch.long, device=stu_logits.device)
    return F.cross_entropy(stu_logits[:-1], targets[1:], reduction="mean"), n - 1


def batch_losses(
    handles: AlignmentHandles,
    stu_logits: list[torch.Tensor],
    tea_logits: list[torch.Tensor],
    stu_token_ids: list,
) -> dict:
    """Batch objective matching the engine's position-weighted aggregation.

    Returns tensors ``kl``, ``ce``, ``combined`` plus the contributing
    position count; temperature, epsilon, and alpha come from the handles'
    config echo.
    """
    cfg = handles.config
    temperature = float(cfg["temperature"])
    epsilon = float(cfg["epsilon"])
    alpha = float(cfg["alpha"])

    kl_sum = stu_logits[0].new_zeros(())
    ce_sum = stu_logits[0].new_zeros(())
    kl_positions = 0
    ce_positions = 0
    for rh, stu, tea, ids in zip(handles.records, stu_logits, tea_logits, stu_token_ids):
        kl, used = record_kl(stu, tea, rh, temperature, epsilon)
        ce, n_ce = record_ce(stu, ids)
        kl_sum = kl_sum + kl * used
        ce_sum = ce_sum + ce * n_ce
        kl_positions += used
        ce_positions += n_ce
    kl = kl_sum / kl_positions if kl_positions else kl_sum
    ce = ce_sum / ce_positions if ce_positions else ce_sum
    combined = alpha * kl + (1.0 - alpha) * ce
    return {"kl": kl, "ce": ce, "combined": combined, "kl_positions": kl_positions}
