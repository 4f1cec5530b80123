"""Binary logits-dump reader/writer.

The dump format carries tokenized sentences and per-position logits from a
model-owning process into this engine.  Layout, little-endian throughout::

    magic "CDMP" (4 bytes) | version u32 = 1 | record_count u32

then per record::

    n_positions u32 | vocab_size u32 | dtype u8 = 0 (float32)
    | token_ids: n_positions x u32
    | values:    n_positions x vocab_size x f32 (row-major)

Files are byte-identical across platforms for identical inputs.  Payloads
are float32 on disk; downstream arithmetic upcasts to float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagicError,
    NonFiniteValueError,
    TruncatedPayloadError,
    VersionMismatchError,
)

MAGIC = b"CDMP"
VERSION = 1
_DTYPE_F32 = 0


@dataclass
class LogitsMatrix:
    """Positions × vocabulary matrix of raw logits for one tokenized sentence."""

    values: np.ndarray
    token_ids: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        self.token_ids = np.asarray(self.token_ids, dtype=np.int64)
        if self.values.ndim != 2 or self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise ValueError(f"values must be a non-empty 2-D matrix, got shape {self.values.shape}")
        if self.token_ids.shape != (self.values.shape[0],):
            raise ValueError(
                f"token_ids length {self.token_ids.shape} does not match "
                f"{self.values.shape[0]} positions"
            )
        if not np.isfinite(self.values).all():
            raise NonFiniteValueError("logits contain non-finite values")
        if self.token_ids.min() < 0 or self.token_ids.max() >= self.values.shape[1]:
            raise ValueError("token ids must lie in [0, vocab_size)")

    @property
    def n_positions(self) -> int:
        return self.values.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.values.shape[1]


@dataclass
class SentenceRecord:
    """Paired student/teacher logits for one sentence."""

    student: LogitsMatrix
    teacher: LogitsMatrix
    text: str = ""


def write_dump(records: list[LogitsMatrix], path) -> None:
    """Write records in the dump format; nothing is written if any record is invalid."""
    chunks = [MAGIC, struct.pack("<II", VERSION, len(records))]
    for idx, rec in enumerate(records):
        if not np.isfinite(rec.values).all():
            raise NonFiniteValueError(f"record {idx}: non-finite logits")
        chunks.append(struct.pack("<IIB", rec.n_positions, rec.vocab_size, _DTYPE_F32))
        chunks.append(rec.token_ids.astype("<u4").tobytes())
        chunks.append(rec.values.astype("<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def read_dump(path) -> list[LogitsMatrix]:
    """Read a dump written by :func:`write_dump`; errors name the failing record."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise BadMagicError(f"{path}: expected magic {MAGIC!r}, found {data[:4]!r}")
    if len(data) < 12:
        raise TruncatedPayloadError(f"{path}: header truncated")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {VERSION}")
    offset = 12
    records = []
    for idx in range(count):
        if offset + 9 > len(data):
            raise TruncatedPayloadError(f"record {idx}: header truncated")
        n_pos, vocab, dtype = struct.unpack_from("<IIB", data, offset)
        offset += 9
        if dtype != _DTYPE_F32:
            raise VersionMismatchError(f"record {idx}: unknown dtype {dtype}")
        ids_bytes = n_pos * 4
        val_bytes = n_pos * vocab * 4
        if offset + ids_bytes + val_bytes > len(data):
            raise TruncatedPayloadError(f"record {idx}: payload truncated")
        token_ids = np.frombuffer(data, dtype="<u4", count=n_pos, offset=offset).astype(np.int64)
        offset += ids_bytes
        values = (
            np.frombuffer(data, dtype="<f4", count=n_pos * vocab, offset=offset)
            .reshape(n_pos, vocab)
            .copy()
        )
        offset += val_bytes
        if not np.isfinite(values).all():
            raise NonFiniteValueError(f"record {idx}: non-finite logits")
        try:
            records.append(LogitsMatrix(values=values, token_ids=token_ids))
        except ValueError as exc:
            raise TruncatedPayloadError(f"record {idx}: {exc}") from exc
    if offset != len(data):
        raise TruncatedPayloadError(f"{path}: {len(data) - offset} trailing bytes")
    return records


def pair_records(
    student: list[LogitsMatrix], teacher: list[LogitsMatrix]
) -> list[SentenceRecord]:
    """Pair two dumps by index; validated by equal record counts."""
    from .errors import RecordCountMismatchError

    if len(student) != len(teacher):
        raise RecordCountMismatchError(
            f"student dump has {len(student)} records, teacher dump has {len(teacher)}"
        )
    return [SentenceRecord(student=s, teacher=t) for s, t in zip(student, teacher)]
