from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import toyfix
from cdm_align import LogitsMatrix, Vocabulary, write_dump


def to_matrices(records: list[dict]) -> list[LogitsMatrix]:
    return [LogitsMatrix(values=r["values"], token_ids=r["token_ids"]) for r in records]


@pytest.fixture(scope="session")
def toy_vocabs() -> tuple[Vocabulary, Vocabulary]:
    return (
        Vocabulary.from_json_file(toyfix.FIXTURES / toyfix.TOY_STUDENT_VOCAB),
        Vocabulary.from_json_file(toyfix.FIXTURES / toyfix.TOY_TEACHER_VOCAB),
    )


@pytest.fixture(scope="session")
def toy_matrices() -> tuple[list[LogitsMatrix], list[LogitsMatrix]]:
    students, teachers = toyfix.toy_corpus()
    return to_matrices(students), to_matrices(teachers)


@pytest.fixture()
def toy_dumps(tmp_path, toy_matrices) -> dict:
    """Toy corpus materialized on disk: dumps plus the shipped vocab paths."""
    students, teachers = toy_matrices
    stu_path = tmp_path / "student.cdmp"
    tea_path = tmp_path / "teacher.cdmp"
    write_dump(students, stu_path)
    write_dump(teachers, tea_path)
    return {
        "student": stu_path,
        "teacher": tea_path,
        "student_vocab": toyfix.FIXTURES / toyfix.TOY_STUDENT_VOCAB,
        "teacher_vocab": toyfix.FIXTURES / toyfix.TOY_TEACHER_VOCAB,
    }


@pytest.fixture()
def fusion_dumps(tmp_path) -> dict:
    students, teachers = toyfix.fusion_corpus()
    stu_path = tmp_path / "fusion_student.cdmp"
    tea_path = tmp_path / "fusion_teacher.cdmp"
    write_dump(to_matrices(students), stu_path)
    write_dump(to_matrices(teachers), tea_path)
    return {
        "student": stu_path,
        "teacher": tea_path,
        "student_vocab": toyfix.FIXTURES / toyfix.FUSION_STUDENT_VOCAB,
        "teacher_vocab": toyfix.FIXTURES / toyfix.FUSION_TEACHER_VOCAB,
    }


def random_matrix(rng, n_positions: int, vocab_size: int) -> LogitsMatrix:
    values = rng.normal(0.0, 2.0, size=(n_positions, vocab_size)).astype(np.float32)
    token_ids = rng.integers(0, vocab_size, size=n_positions)
    return LogitsMatrix(values=values, token_ids=token_ids)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, regardless of capture mode."""
    lines = []
    for status in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid and getattr(rep, "when", "call") == "call":
                name = nodeid.split("::")[-1]
                lines.append((name, status.upper()))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, status in sorted(set(lines)):
            terminalreporter.write_line(f"{status:7s} {name}")
