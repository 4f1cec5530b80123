"""Vocabulary loading, token canonicalization, and the edit-distance kernel.

Different tokenizer families mark a leading space with different glyphs
(byte-level BPE uses 'Ġ' U+0120, sentencepiece uses '▁' U+2581) and encode
raw bytes as ``<0xHH>`` escape tokens.  Exact and fuzzy matching across two
vocabularies is only meaningful once both sides are reduced to a shared
canonical surface form, which is what this module provides.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import DegenerateTokenError, VocabularyError

BYTE_LEVEL_SPACE = "Ġ"  # 'Ġ'
SENTENCEPIECE_SPACE = "▁"  # '▁'
_SPACE_MARKERS = (BYTE_LEVEL_SPACE, SENTENCEPIECE_SPACE)

_BYTE_ESCAPES = re.compile(r"(?:<0x[0-9A-Fa-f]{2}>)+")
_BYTE_ESCAPE_ONE = re.compile(r"<0x([0-9A-Fa-f]{2})>")

EXACT = "exact"
FUZZY = "fuzzy"

TEACHER_TO_STUDENT = "t2s"
STUDENT_TO_TEACHER = "s2t"
_DIRECTIONS = (TEACHER_TO_STUDENT, STUDENT_TO_TEACHER)


@dataclass(frozen=True)
class CanonicalToken:
    """Normalized surface form of a vocabulary token.

    ``text`` carries no tokenizer-specific marker glyphs; whether the token
    started a new word is recorded separately in ``leading_space``.
    """

    text: str
    leading_space: bool = False


def normalize_token(raw: str) -> CanonicalToken:
    """Canonicalize a raw vocabulary token string.

    A full-token run of ``<0xHH>`` byte escapes is decoded when the bytes
    form valid UTF-8 (kept verbatim otherwise).  One leading space-marker
    glyph is stripped into ``leading_space``; any remaining marker glyphs
    become plain spaces, so renormalizing a canonical text is a no-op.
    Comparison stays case-sensitive throughout.
    """
    text = raw
    if _BYTE_ESCAPES.fullmatch(text):
        data = bytes(int(h, 16) for h in _BYTE_ESCAPE_ONE.findall(text))
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError:
            pass
    leading = False
    if text[:1] in _SPACE_MARKERS:
        leading = True
        text = text[1:]
    for marker in _SPACE_MARKERS:
        if marker in text:
            text = text.replace(marker, " ")
    return CanonicalToken(text, leading)


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance over Unicode scalar values (unit costs)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalized_edit_distance(a: CanonicalToken, b: CanonicalToken) -> float:
    """Length-normalized edit distance between two canonical tokens, in [0, 1].

    Texts are compared character-wise; a mismatch in ``leading_space`` adds
    one edit before normalization.  The result is divided by the longer text
    length and clamped to 1.0 so a flag mismatch on maximally distant texts
    cannot push the metric above its documented range.

    Raises ``DegenerateTokenError`` if either text is empty.
    """
    if not a.text or not b.text:
        raise DegenerateTokenError(
            f"cannot compare degenerate tokens: {a!r} vs {b!r}"
        )
    edits = edit_distance(a.text, b.text)
    if a.leading_space != b.leading_space:
        edits += 1
    return min(1.0, edits / max(len(a.text), len(b.text)))


class Vocabulary:
    """Immutable token-string ↔ id table with cached canonical forms."""

    __slots__ = ("tokens", "ids", "canonical")

    def __init__(self, tokens: list[str]):
        if not tokens:
            raise VocabularyError("vocabulary must contain at least one token")
        ids: dict[str, int] = {}
        for i, tok in enumerate(tokens):
            if tok in ids:
                raise VocabularyError(f"duplicate token string {tok!r}")
            ids[tok] = i
        self.tokens = tuple(tokens)
        self.ids = ids
        self.canonical = tuple(normalize_token(t) for t in tokens)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def __hash__(self) -> int:
        return hash(self.tokens)

    @classmethod
    def from_mapping(cls, mapping: dict[str, int]) -> "Vocabulary":
        """Build from a ``{token: id}`` table whose ids must form [0, size)."""
        values = sorted(mapping.values())
        if values != list(range(len(mapping))):
            raise VocabularyError(
                "token ids must form a contiguous range [0, size) with no duplicates"
            )
        tokens = [""] * len(mapping)
        for tok, i in mapping.items():
            if not isinstance(i, int) or isinstance(i, bool):
                raise VocabularyError(f"id for token {tok!r} is not an integer")
            tokens[i] = tok
        return cls(tokens)

    @classmethod
    def from_json_file(cls, path) -> "Vocabulary":
        """Load the on-disk format: a UTF-8 JSON object ``{"<raw token>": <id>}``."""

        def reject_dupes(pairs):
            seen = set()
            for key, _ in pairs:
                if key in seen:
                    raise VocabularyError(f"duplicate token string {key!r} in {path}")
                seen.add(key)
            return dict(pairs)

        with open(path, encoding="utf-8") as fh:
            try:
                mapping = json.load(fh, object_pairs_hook=reject_dupes)
            except json.JSONDecodeError as exc:
                raise VocabularyError(f"{path} is not valid JSON: {exc}") from exc
        if not isinstance(mapping, dict):
            raise VocabularyError(f"{path} must contain a JSON object")
        return cls.from_mapping(mapping)


@dataclass
class MappingTable:
    """Source-token-id → target-token-id lookup with provenance.

    Keys are first-wins: an insert for an existing key is a caller bug and
    raises.  The table is the one mutable object in the engine; it only ever
    grows, which the pipeline relies on for order-deterministic results.
    """

    direction: str
    entries: dict[int, tuple[int, str]] = field(default_factory=dict)

    def __post_init__(self):
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")

    def __contains__(self, src: int) -> bool:
        return src in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def target(self, src: int) -> int:
        return self.entries[src][0]

    def provenance(self, src: int) -> str:
        return self.entries[src][1]

    def insert(self, src: int, tgt: int, provenance: str) -> None:
        if src in self.entries:
            raise ValueError(f"key {src} already mapped (first-wins table)")
        if provenance not in (EXACT, FUZZY):
            raise ValueError(f"unknown provenance {provenance!r}")
        self.entries[int(src)] = (int(tgt), provenance)

    def copy(self) -> "MappingTable":
        return MappingTable(self.direction, dict(self.entries))

    def to_json_obj(self) -> list[dict]:
        return [
            {"src": src, "tgt": tgt, "provenance": prov, "direction": self.direction}
            for src, (tgt, prov) in self.entries.items()
        ]

    @classmethod
    def from_json_obj(cls, items: list[dict], direction: str) -> "MappingTable":
        table = cls(direction)
        for item in items:
            if item["direction"] != direction:
                continue
            table.insert(item["src"], item["tgt"], item["provenance"])
        return table


def build_exact_match_table(
    v_stu: Vocabulary, v_tea: Vocabulary, direction: str = TEACHER_TO_STUDENT
) -> MappingTable:
    """Map every teacher token id to the student token id with an equal canonical form.

    Equality is over (text, leading_space).  When several student tokens
    share one canonical form the smallest id wins, keeping the table
    deterministic.  Swapping the two vocabularies yields the inverse table.
    """
    by_form: dict[CanonicalToken, int] = {}
    for i, form in enumerate(v_stu.canonical):
        if form not in by_form:
            by_form[form] = i
    table = MappingTable(direction)
    for j, form in enumerate(v_tea.canonical):
        hit = by_form.get(form)
        if hit is not None:
            table.insert(j, hit, EXACT)
    return table
