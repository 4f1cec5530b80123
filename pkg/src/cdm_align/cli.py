"""Command-line front end: ``cdm stats``, ``cdm run``, ``cdm align``.

Exit codes: 0 success, 1 input error, 2 internal invariant violation.
Machine-readable JSON goes to stdout on success only; diagnostics go to
stderr.  JSON keys are emitted in a fixed order so outputs diff cleanly.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import CdmError
from .pipeline import CdmConfig, run_corpus
from .seqalign import alignment_weights, position_entropy, weighted_dtw
from .stats import CompatReport, sequence_matching_rate, vocabulary_matching_rate
from .tensorio import read_dump
from .vocab import Vocabulary, normalize_token


class _UsageError(CdmError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="cdm",
        description="Cross-tokenizer alignment: compatibility stats, "
        "corpus alignment runs, and span alignments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_stats = sub.add_parser("stats", help="vocabulary/sequence matching rates")
    p_stats.add_argument("--vocab-a", required=True, help="vocabulary JSON file, side A")
    p_stats.add_argument("--vocab-b", required=True, help="vocabulary JSON file, side B")
    p_stats.add_argument("--tokenized-a", help="JSONL of {\"tokens\": [...]} for side A")
    p_stats.add_argument("--tokenized-b", help="JSONL of {\"tokens\": [...]} for side B")
    p_stats.add_argument("--csv", help="optional per-sentence overlap rows (CSV) output path")

    p_run = sub.add_parser("run", help="full corpus pass: losses and mapping tables")
    p_run.add_argument("--student", required=True, help="student logits dump")
    p_run.add_argument("--teacher", required=True, help="teacher logits dump")
    p_run.add_argument("--student-vocab", required=True, help="student vocabulary JSON")
    p_run.add_argument("--teacher-vocab", required=True, help="teacher vocabulary JSON")
    p_run.add_argument("--config", help="JSON config; omitted fields use defaults")
    p_run.add_argument("--out-tables", required=True, help="mapping-table JSON output path")
    p_run.add_argument("--out-report", required=True, help="loss-report JSON output path")
    p_run.add_argument("--out-alignments", help="optional span-alignment JSON output path")

    p_align = sub.add_parser("align", help="per-record span alignments")
    p_align.add_argument("--student", required=True, help="student logits dump")
    p_align.add_argument("--teacher", required=True, help="teacher logits dump")
    p_align.add_argument("--student-vocab", required=True, help="student vocabulary JSON")
    p_align.add_argument("--teacher-vocab", required=True, help="teacher vocabulary JSON")
    p_align.add_argument(
        "--weights",
        choices=("entropy", "uniform"),
        default="entropy",
        help="entropy-derived DTW weights or the uniform-weight baseline",
    )
    p_align.add_argument("--config", help="JSON config; omitted fields use defaults")
    p_align.add_argument("--out", help="optional output path (default: stdout only)")
    return parser


def _dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2) + "\n"


def _read_tokenized(path) -> list[list]:
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CdmError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or "tokens" not in obj:
                raise CdmError(f"{path}:{line_no}: expected an object with a \"tokens\" key")
            sentences.append([normalize_token(t) for t in obj["tokens"]])
    return sentences


def _load_config(path) -> CdmConfig:
    return CdmConfig.from_json_file(path) if path else CdmConfig()


def _cmd_stats(args) -> dict:
    v_a = Vocabulary.from_json_file(args.vocab_a)
    v_b = Vocabulary.from_json_file(args.vocab_b)
    if bool(args.tokenized_a) != bool(args.tokenized_b):
        raise CdmError("--tokenized-a and --tokenized-b must be given together")
    smr = None
    n_sentences = 0
    if args.tokenized_a:
        tok_a = _read_tokenized(args.tokenized_a)
        tok_b = _read_tokenized(args.tokenized_b)
        smr = sequence_matching_rate(tok_a, tok_b)
        n_sentences = len(tok_a)
        if args.csv:
            lines = ["sentence,smr"]
            for idx, (a, b) in enumerate(zip(tok_a, tok_b)):
                lines.append(f"{idx},{sequence_matching_rate([a], [b])!r}")
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + "\n")
    elif args.csv:
        raise CdmError("--csv requires --tokenized-a/--tokenized-b")
    report = CompatReport(smr=smr, vmr=vocabulary_matching_rate(v_a, v_b), n_sentences=n_sentences)
    return report.to_json_obj()


def _cmd_run(args) -> dict:
    v_stu = Vocabulary.from_json_file(args.student_vocab)
    v_tea = Vocabulary.from_json_file(args.teacher_vocab)
    cfg = _load_config(args.config)
    student = read_dump(args.student)
    teacher = read_dump(args.teacher)
    report, state, compat, alignments = run_corpus(student, teacher, v_stu, v_tea, cfg)

    tables = state.forward.to_json_obj() + state.reverse.to_json_obj()
    with open(args.out_tables, "w", encoding="utf-8") as fh:
        fh.write(_dump_json(tables))
    with open(args.out_report, "w", encoding="utf-8") as fh:
        fh.write(_dump_json(report.to_json_obj()))
    if args.out_alignments:
        records = [
            {"index": i, "cost": spans.cost, "pairs": spans.to_json_obj()}
            for i, spans in enumerate(alignments)
        ]
        with open(args.out_alignments, "w", encoding="utf-8") as fh:
            fh.write(_dump_json({"records": records}))

    out = report.to_json_obj()
    out["compat"] = compat.to_json_obj()
    return out


def _cmd_align(args) -> dict:
    v_stu = Vocabulary.from_json_file(args.student_vocab)
    v_tea = Vocabulary.from_json_file(args.teacher_vocab)
    cfg = _load_config(args.config)
    student = read_dump(args.student)
    teacher = read_dump(args.teacher)
    if len(student) != len(teacher):
        raise CdmError(
            f"student dump has {len(student)} records, teacher dump has {len(teacher)}"
        )
    records = []
    for idx, (stu, tea) in enumerate(zip(student, teacher)):
        if args.weights == "entropy":
            w_stu = alignment_weights(position_entropy(stu), cfg.C)
            w_tea = alignment_weights(position_entropy(tea), cfg.C)
        else:
            w_stu = [1] * stu.n_positions
            w_tea = [1] * tea.n_positions
        stu_tokens = [v_stu.canonical[int(i)] for i in stu.token_ids]
        tea_tokens = [v_tea.canonical[int(i)] for i in tea.token_ids]
        spans = weighted_dtw(stu_tokens, tea_tokens, w_stu, w_tea)
        records.append({"index": idx, "cost": spans.cost, "pairs": spans.to_json_obj()})
    out = {"records": records}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(_dump_json(out))
    return out


_COMMANDS = {"stats": _cmd_stats, "run": _cmd_run, "align": _cmd_align}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        out = _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("run 'cdm --help' for usage", file=sys.stderr)
        return 1
    except (CdmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # invariant violation
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(_dump_json(out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
