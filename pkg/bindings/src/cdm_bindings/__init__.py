"""Host-framework bindings for the cross-tokenizer alignment engine."""

from .demo import toy_distill_demo
from .handles import AlignmentHandles, RecordHandles, align_batch
from .host import batch_losses, pool_spans, record_ce, record_kl

__version__ = "0.1.0"

__all__ = [
    "AlignmentHandles",
    "RecordHandles",
    "align_batch",
    "batch_losses",
    "pool_spans",
    "record_ce",
    "record_kl",
    "toy_distill_demo",
]
