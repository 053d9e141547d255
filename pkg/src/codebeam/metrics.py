"""Held-out evaluation and aggregate reporting.

Search-time scoring gives partial credit per line; the final metric here is
stricter: test pass rate (TPR) counts a test pair only when its output
matches completely with no stderr.  Excess programs generated (EPG) is the
number of candidates drawn before the first one that passed validation.

Reports condense many runs into three CSV tables: solved counts per
configuration, an EPG histogram at two granularities, and a problem-by-
template matrix of TPR (with "+" marking fully passed) and EPG.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .executor import ResourceLimits, execute_candidate
from .problems import IOPair, LanguageProfile, Problem
from .search import Candidate, HaltReason, RunRecord, SearchConfig
from .templates import InstructionTemplateId

TEMPLATE_COLUMN_ORDER = [t.value for t in InstructionTemplateId]


def canonical_json(payload: object) -> str:
    """Stable serialization used for digests and on-disk summaries."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def digest12(payload: object) -> str:
    """Short stable fingerprint of a JSON-serializable payload."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()[:12]


def search_config_payload(config: SearchConfig) -> dict:
    return {
        "tree_arity": "unbounded" if config.tree_arity is None else config.tree_arity,
        "beam_width": "unbounded" if config.beam_width is None else config.beam_width,
        "max_programs": config.max_programs,
        "instruction_template": config.instruction_template.value,
        "t_max": config.t_max,
    }


@dataclass(frozen=True)
class EvaluationSummary:
    """Final verdict for one run against the held-out test set."""

    problem_id: str
    config_fingerprint: str
    tpr: float
    epg: int | None
    solved: bool
    halted_reason: HaltReason
    tpr_best_candidate: float | None = None

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "config_fingerprint": self.config_fingerprint,
            "tpr": self.tpr,
            "epg": self.epg,
            "solved": self.solved,
            "halted_reason": self.halted_reason.value,
            "tpr_best_candidate": self.tpr_best_candidate,
        }


def test_pass_rate(
    code: str,
    profile: LanguageProfile,
    test_set: Sequence[IOPair],
    limits: ResourceLimits | None = None,
) -> float:
    """Fraction of test pairs passed completely; partial matches count zero."""
    if not test_set:
        raise ValueError("test set is empty")
    report = execute_candidate(code, profile, test_set, limits)
    if report.compile_stderr:
        return 0.0
    passed = sum(1 for _, score in report.per_pair if score == 1.0)
    return passed / len(test_set)


def representative_candidate(record: RunRecord) -> Candidate | None:
    """The candidate whose TPR the run reports: the solution, else the last one."""
    if record.solution is not None:
        return record.solution
    if record.candidates:
        return record.candidates[-1]
    return None


def best_evaluated_candidate(record: RunRecord) -> Candidate | None:
    evaluated = [c for c in record.candidates if c.report is not None]
    if not evaluated:
        return None
    return min(evaluated, key=lambda c: (-c.report.aggregate_score, c.id))  # type: ignore[union-attr]


def summarize_run(
    record: RunRecord,
    problem: Problem,
    profile: LanguageProfile,
    limits: ResourceLimits | None = None,
    config_fingerprint: str | None = None,
) -> EvaluationSummary:
    """Evaluate a finished run on the problem's test set.

    On runs that did not solve validation, TPR is reported for the last
    generated candidate, with the best-scoring candidate's TPR alongside
    as a diagnostic.
    """
    if not problem.test_set:
        raise ValueError(f"problem {problem.id} has no test set")
    if config_fingerprint is None:
        config_fingerprint = digest12(search_config_payload(record.config))

    candidate = representative_candidate(record)
    tpr = (
        test_pass_rate(candidate.code, profile, problem.test_set, limits)
        if candidate is not None
        else 0.0
    )
    solved = tpr == 1.0

    tpr_best = None
    if record.halted_reason is not HaltReason.SOLVED:
        best = best_evaluated_candidate(record)
        if best is not None:
            tpr_best = (
                tpr
                if candidate is not None and best.id == candidate.id
                else test_pass_rate(best.code, profile, problem.test_set, limits)
            )

    # EPG only exists once some candidate passed; a test-solved run whose
    # search halted early uses the representative's position.
    if record.halted_reason is HaltReason.SOLVED:
        epg = record.epg
    elif solved and candidate is not None:
        epg = candidate.id
    else:
        epg = None

    return EvaluationSummary(
        problem_id=record.problem_id,
        config_fingerprint=config_fingerprint,
        tpr=tpr,
        epg=epg,
        solved=solved,
        halted_reason=record.halted_reason,
        tpr_best_candidate=tpr_best,
    )


ReportRow = tuple[RunRecord, EvaluationSummary]


def build_solved_table(rows: Sequence[ReportRow]) -> list[dict]:
    """Solved-run counts grouped by search configuration."""
    groups: dict[str, dict] = {}
    for record, summary in rows:
        key = summary.config_fingerprint
        if key not in groups:
            entry = {"config_fingerprint": key}
            entry.update(search_config_payload(record.config))
            entry["solved_runs"] = 0
            entry["total_runs"] = 0
            groups[key] = entry
        groups[key]["total_runs"] += 1
        if record.halted_reason is HaltReason.SOLVED:
            groups[key]["solved_runs"] += 1
    return [groups[key] for key in sorted(groups)]


def build_epg_histogram(rows: Sequence[ReportRow]) -> list[dict]:
    """EPG counts for solved runs, at unit bins 0..10 and hundreds 0..900."""
    epgs = [
        record.epg
        for record, _ in rows
        if record.halted_reason is HaltReason.SOLVED
    ]
    out = []
    for bin_value in range(0, 11):
        count = sum(1 for e in epgs if e == bin_value)
        out.append(
            {"scale": "unit", "bin_start": bin_value, "bin_end": bin_value, "count": count}
        )
    for start in range(0, 1000, 100):
        end = start + 100
        if end == 1000:
            count = sum(1 for e in epgs if start <= e)
        else:
            count = sum(1 for e in epgs if start <= e < end)
        out.append(
            {"scale": "hundreds", "bin_start": start, "bin_end": end, "count": count}
        )
    return out


def build_matrix(rows: Sequence[ReportRow]) -> list[dict]:
    """Problem-by-template table: "+" for full test pass, else the TPR, plus EPG."""
    cells: dict[tuple[str, str], tuple[RunRecord, EvaluationSummary]] = {}
    templates_seen = set()
    for record, summary in rows:
        template = record.config.instruction_template.value
        templates_seen.add(template)
        cells[(record.problem_id, template)] = (record, summary)

    columns = [t for t in TEMPLATE_COLUMN_ORDER if t in templates_seen]
    problems = sorted({record.problem_id for record, _ in rows})
    table = []
    for problem_id in problems:
        row: dict = {"problem": problem_id}
        for template in columns:
            entry = cells.get((problem_id, template))
            if entry is None:
                row[template] = ""
                row[f"{template}_epg"] = ""
                continue
            _, summary = entry
            row[template] = "+" if summary.solved else f"{summary.tpr:.3f}"
            row[f"{template}_epg"] = "" if summary.epg is None else summary.epg
        table.append(row)
    return table


def _write_csv(path: Path, rows: list[dict], fieldnames: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def aggregate_report(rows: Sequence[ReportRow], out_dir: str | Path) -> list[Path]:
    """Write the three report CSVs; empty input yields header-only files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    solved = build_solved_table(rows)
    solved_fields = [
        "config_fingerprint",
        "tree_arity",
        "beam_width",
        "max_programs",
        "instruction_template",
        "t_max",
        "solved_runs",
        "total_runs",
    ]
    solved_path = out / "solved_by_config.csv"
    _write_csv(solved_path, solved, solved_fields)

    histogram = build_epg_histogram(rows)
    histogram_path = out / "epg_histogram.csv"
    _write_csv(histogram_path, histogram, ["scale", "bin_start", "bin_end", "count"])

    matrix = build_matrix(rows)
    if matrix:
        fields = list(matrix[0].keys())
    else:
        fields = ["problem"]
    matrix_path = out / "problem_template_matrix.csv"
    _write_csv(matrix_path, matrix, fields)

    return [solved_path, histogram_path, matrix_path]
