"""Command-line experiment runner.

Subcommands:

  solve    run the search loop on one problem and persist its trace
  batch    run a grid of configurations over many problems, resumably
  eval     score a persisted run against the problem's held-out test set
  report   aggregate persisted runs into CSV tables

Configuration comes from an optional JSON file plus flags; flags win.  Each
run lands in <out_dir>/<problem>/<config-hash>/ holding the full candidate
trace (events.jsonl) and a summary (summary.json); for a fixed config,
seed, and mock script the bytes of both are reproducible.

Exit codes: 0 solved, 1 finished without solving, 2 usage or configuration
error, 3 infrastructure failure (backend, toolchain, workspace).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    BackendError,
    CorpusError,
    EngineError,
    ProfileError,
    ToolchainError,
    WorkspaceError,
)
from .executor import ExecutionReport, ResourceLimits, RunOutcome
from .llm import DEFAULT_API_KEY_ENV, Backend, HTTPBackend, HTTPBackendConfig, MockBackend
from .metrics import (
    EvaluationSummary,
    aggregate_report,
    canonical_json,
    digest12,
    search_config_payload,
    summarize_run,
)
from .problems import (
    LanguageProfile,
    Problem,
    load_corpus,
    load_problem_file,
    load_profiles,
)
from .search import Candidate, HaltReason, RunRecord, SearchConfig, solve
from .templates import InstructionTemplateId


class UsageError(Exception):
    """Bad flags, config, or inputs; maps to exit code 2."""


@dataclass
class EngineConfig:
    """Everything a command needs, resolved from file plus flags."""

    corpus: str | None = None
    profile: str = "python"
    backend: str = "mock"
    mock_script: str | None = None
    base_url: str | None = None
    synth_model: str | None = None
    debug_model: str | None = None
    text_model: str | None = None
    api_key_env: str = DEFAULT_API_KEY_ENV
    tree_arity: int | None = 10
    beam_width: int | None = 10
    max_programs: int = 1000
    instruction_template: str = "S0"
    t_max: float = 1.0
    seed: int = 0
    workers: int = 4
    backend_concurrency: int = 1
    run_timeout_s: float = 5.0
    compile_timeout_s: float = 60.0
    request_timeout_s: float = 120.0
    out_dir: str = "runs"


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(EngineConfig)}
_UNBOUNDED_WORDS = {"unbounded", "inf", "none"}
# Search-shape keys a batch grid may override per cell.
_GRID_KEYS = {
    "tree_arity",
    "beam_width",
    "max_programs",
    "instruction_template",
    "t_max",
    "seed",
}


def _parse_bound(value: object, name: str) -> int | None:
    if value is None:
        return None
    if isinstance(value, str):
        if value.lower() in _UNBOUNDED_WORDS:
            return None
        try:
            return int(value)
        except ValueError as exc:
            raise UsageError(f"{name} must be an integer or 'unbounded'") from exc
    if isinstance(value, bool) or not isinstance(value, int):
        raise UsageError(f"{name} must be an integer or 'unbounded'")
    return value


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def resolve_config(args: argparse.Namespace) -> EngineConfig:
    """Defaults, then the config file, then explicit flags."""
    cfg = EngineConfig()
    overrides: dict = {}
    config_path = getattr(args, "config", None)
    if config_path:
        overrides.update(load_config_file(config_path))
    for name in _CONFIG_FIELDS:
        if hasattr(args, name):
            overrides[name] = getattr(args, name)
    for name, value in overrides.items():
        if name in ("tree_arity", "beam_width"):
            value = _parse_bound(value, name)
        setattr(cfg, name, value)
    validate_config(cfg)
    return cfg


def validate_config(cfg: EngineConfig) -> None:
    if cfg.backend not in ("mock", "http"):
        raise UsageError(f"backend must be 'mock' or 'http', not {cfg.backend!r}")
    try:
        InstructionTemplateId(cfg.instruction_template)
    except ValueError as exc:
        valid = ", ".join(t.value for t in InstructionTemplateId)
        raise UsageError(
            f"unknown instruction template {cfg.instruction_template!r}; one of: {valid}"
        ) from exc
    if cfg.max_programs < 1:
        raise UsageError("max_programs must be at least 1")
    for name in ("tree_arity", "beam_width"):
        value = getattr(cfg, name)
        if value is not None and value < 1:
            raise UsageError(f"{name} must be at least 1 or 'unbounded'")
    if cfg.t_max < 0:
        raise UsageError("t_max must be non-negative")
    if cfg.workers < 1 or cfg.backend_concurrency < 1:
        raise UsageError("workers and backend_concurrency must be at least 1")
    for name in ("run_timeout_s", "compile_timeout_s", "request_timeout_s"):
        if getattr(cfg, name) <= 0:
            raise UsageError(f"{name} must be positive")


def validate_backend(cfg: EngineConfig) -> None:
    """Fail fast, before any model call, when the backend cannot work."""
    if cfg.backend == "mock":
        if not cfg.mock_script:
            raise UsageError("mock backend needs --mock-script")
        if not Path(cfg.mock_script).is_file():
            raise UsageError(f"mock script not found: {cfg.mock_script}")
    else:
        for field_name in ("base_url", "synth_model", "debug_model", "text_model"):
            if not getattr(cfg, field_name):
                raise UsageError(f"http backend needs --{field_name.replace('_', '-')}")
        if not os.environ.get(cfg.api_key_env):
            raise UsageError(
                f"http backend needs the API key in ${cfg.api_key_env} (unset)"
            )


def search_config_from(cfg: EngineConfig) -> SearchConfig:
    return SearchConfig(
        tree_arity=cfg.tree_arity,
        beam_width=cfg.beam_width,
        max_programs=cfg.max_programs,
        instruction_template=InstructionTemplateId(cfg.instruction_template),
        t_max=cfg.t_max,
    )


def limits_from(cfg: EngineConfig) -> ResourceLimits:
    return ResourceLimits(
        timeout_s=cfg.run_timeout_s,
        compile_timeout_s=cfg.compile_timeout_s,
        workers=cfg.workers,
    )


def make_backend(cfg: EngineConfig) -> Backend:
    if cfg.backend == "mock":
        assert cfg.mock_script is not None
        return MockBackend.from_file(cfg.mock_script)
    return HTTPBackend(
        HTTPBackendConfig(
            base_url=cfg.base_url or "",
            synth_model=cfg.synth_model or "",
            debug_model=cfg.debug_model or "",
            text_model=cfg.text_model or "",
            api_key_env=cfg.api_key_env,
            timeout_s=cfg.request_timeout_s,
        )
    )


def config_fingerprint(cfg: EngineConfig) -> str:
    payload = {
        "backend": cfg.backend,
        "mock_script": cfg.mock_script,
        "base_url": cfg.base_url,
        "models": [cfg.synth_model, cfg.debug_model, cfg.text_model],
        "profile": cfg.profile,
        "search": search_config_payload(search_config_from(cfg)),
        "seed": cfg.seed,
        "run_timeout_s": cfg.run_timeout_s,
    }
    return digest12(payload)


def load_problems(cfg: EngineConfig) -> dict[str, Problem]:
    if not cfg.corpus:
        raise UsageError("no corpus configured (--corpus)")
    path = Path(cfg.corpus)
    if path.is_file():
        problems = [load_problem_file(path)]
    elif path.is_dir():
        problems = load_corpus(path)
    else:
        raise UsageError(f"corpus path not found: {cfg.corpus}")
    return {p.id: p for p in problems}


def pick_problem(problems: dict[str, Problem], problem_id: str) -> Problem:
    if problem_id not in problems:
        known = ", ".join(sorted(problems)[:20]) or "(none)"
        raise UsageError(f"unknown problem {problem_id!r}; corpus holds: {known}")
    return problems[problem_id]


def pick_profile(cfg: EngineConfig) -> LanguageProfile:
    profiles = load_profiles()
    if cfg.profile not in profiles:
        known = ", ".join(sorted(profiles))
        raise UsageError(f"unknown language profile {cfg.profile!r}; one of: {known}")
    return profiles[cfg.profile]


def _report_payload(report: ExecutionReport | None) -> dict | None:
    # duration_ms deliberately left out so traces are byte-reproducible
    if report is None:
        return None
    return {
        "compile_stderr": report.compile_stderr,
        "aggregate_score": report.aggregate_score,
        "all_passed": report.all_passed,
        "per_pair": [
            {
                "score": score,
                "stdout_lines": list(outcome.stdout_lines),
                "stderr_text": outcome.stderr_text,
                "exit_status": outcome.exit_status,
                "timed_out": outcome.timed_out,
            }
            for outcome, score in report.per_pair
        ],
    }


def _report_from_payload(data: dict | None) -> ExecutionReport | None:
    if data is None:
        return None
    per_pair = tuple(
        (
            RunOutcome(
                stdout_lines=tuple(item["stdout_lines"]),
                stderr_text=item["stderr_text"],
                exit_status=item["exit_status"],
                timed_out=item["timed_out"],
                duration_ms=0.0,
            ),
            item["score"],
        )
        for item in data["per_pair"]
    )
    return ExecutionReport(
        compile_stderr=data["compile_stderr"],
        per_pair=per_pair,
        aggregate_score=data["aggregate_score"],
        all_passed=data["all_passed"],
    )


def write_run_artifacts(
    record: RunRecord,
    seed: int,
    run_dir: Path,
    fingerprint: str,
    evaluation: EvaluationSummary | None = None,
) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    events: list[dict] = [
        {
            "event": "run_start",
            "problem_id": record.problem_id,
            "config": search_config_payload(record.config),
            "seed": seed,
        }
    ]
    for c in record.candidates:
        events.append(
            {
                "event": "candidate",
                "id": c.id,
                "parent": c.parent,
                "generation": c.generation,
                "temperature": c.temperature,
                "instruction_template": c.instruction_template,
                "instruction_text": c.instruction_text,
                "code": c.code,
                "report": _report_payload(c.report),
            }
        )
    for generation, kept in enumerate(record.selections):
        events.append({"event": "selection", "generation": generation, "kept": kept})
    events.append(
        {
            "event": "halt",
            "reason": record.halted_reason.value,
            "epg": record.epg,
            "solution_id": None if record.solution is None else record.solution.id,
        }
    )
    with open(run_dir / "events.jsonl", "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(canonical_json(event) + "\n")

    solved = record.halted_reason is HaltReason.SOLVED
    summary = {
        "problem_id": record.problem_id,
        "config_fingerprint": fingerprint,
        "halted_reason": record.halted_reason.value,
        "solved": solved,
        "epg": record.epg if solved else None,
        "candidates_generated": len(record.candidates),
        "solution_id": None if record.solution is None else record.solution.id,
        "selections": record.selections,
        "evaluation": None if evaluation is None else evaluation.to_dict(),
    }
    (run_dir / "summary.json").write_text(
        canonical_json(summary) + "\n", encoding="utf-8"
    )


def read_run_record(run_dir: Path) -> tuple[RunRecord, int]:
    """Rebuild a RunRecord (and its seed) from a persisted events.jsonl."""
    events_path = run_dir / "events.jsonl"
    if not events_path.is_file():
        raise UsageError(f"no events.jsonl under {run_dir}")
    try:
        events = [
            json.loads(line)
            for line in events_path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        start = next(e for e in events if e["event"] == "run_start")
        payload = start["config"]
        config = SearchConfig(
            tree_arity=_parse_bound(payload["tree_arity"], "tree_arity"),
            beam_width=_parse_bound(payload["beam_width"], "beam_width"),
            max_programs=payload["max_programs"],
            instruction_template=InstructionTemplateId(payload["instruction_template"]),
            t_max=payload["t_max"],
        )
        candidates = [
            Candidate(
                id=e["id"],
                code=e["code"],
                parent=e["parent"],
                generation=e["generation"],
                temperature=e["temperature"],
                report=_report_from_payload(e["report"]),
                instruction_template=e["instruction_template"],
                instruction_text=e["instruction_text"],
            )
            for e in events
            if e["event"] == "candidate"
        ]
        selections = [e["kept"] for e in events if e["event"] == "selection"]
        halt = next(e for e in events if e["event"] == "halt")
        by_id = {c.id: c for c in candidates}
        solution = None if halt["solution_id"] is None else by_id[halt["solution_id"]]
        record = RunRecord(
            problem_id=start["problem_id"],
            config=config,
            candidates=candidates,
            solution=solution,
            epg=halt["epg"],
            halted_reason=HaltReason(halt["reason"]),
            selections=selections,
        )
        return record, start["seed"]
    except (KeyError, ValueError, StopIteration, TypeError) as exc:
        raise UsageError(f"corrupted run record under {run_dir}: {exc!r}") from exc


_EXIT_BY_HALT = {
    HaltReason.SOLVED: 0,
    HaltReason.BUDGET: 1,
    HaltReason.INPUT_TOO_LONG: 1,
    HaltReason.BACKEND_ERROR: 3,
}


def cmd_solve(cfg: EngineConfig, problem_id: str) -> int:
    validate_backend(cfg)
    problem = pick_problem(load_problems(cfg), problem_id)
    profile = pick_profile(cfg)
    backend = make_backend(cfg)
    record = solve(
        problem,
        profile,
        search_config_from(cfg),
        backend,
        limits=limits_from(cfg),
        seed=cfg.seed,
    )
    fingerprint = config_fingerprint(cfg)
    run_dir = Path(cfg.out_dir) / problem_id / fingerprint
    write_run_artifacts(record, cfg.seed, run_dir, fingerprint)
    print(
        f"{problem_id}: {record.halted_reason.value} "
        f"after {len(record.candidates)} candidates -> {run_dir}"
    )
    return _EXIT_BY_HALT[record.halted_reason]


def cmd_eval(cfg: EngineConfig, record_path: str) -> int:
    run_dir = Path(record_path)
    if run_dir.is_file():
        run_dir = run_dir.parent
    record, _ = read_run_record(run_dir)
    problem = pick_problem(load_problems(cfg), record.problem_id)
    if not problem.test_set:
        raise UsageError(f"problem {problem.id} has no test pairs to evaluate against")
    profile = pick_profile(cfg)
    summary = summarize_run(
        record,
        problem,
        profile,
        limits=limits_from(cfg),
        config_fingerprint=run_dir.name,
    )
    summary_path = run_dir / "summary.json"
    if summary_path.is_file():
        data = json.loads(summary_path.read_text(encoding="utf-8"))
    else:
        data = {"problem_id": record.problem_id, "config_fingerprint": run_dir.name}
    data["evaluation"] = summary.to_dict()
    summary_path.write_text(canonical_json(data) + "\n", encoding="utf-8")
    print(
        f"{record.problem_id}: tpr={summary.tpr:.4f} solved={summary.solved} "
        f"epg={summary.epg}"
    )
    return 0 if summary.solved else 1


def _load_grid(path: str | None) -> list[dict]:
    if path is None:
        return [{}]
    try:
        with open(path, encoding="utf-8") as fh:
            grid = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read grid file {path}: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"grid file {path} is not valid JSON: {exc}") from exc
    if not isinstance(grid, list) or not all(isinstance(g, dict) for g in grid):
        raise UsageError("grid file must hold a JSON list of override objects")
    for i, override in enumerate(grid):
        unknown = set(override) - _GRID_KEYS
        if unknown:
            raise UsageError(
                f"grid entry {i} has unknown keys: {', '.join(sorted(unknown))}"
            )
    return grid if grid else [{}]


def cmd_batch(cfg: EngineConfig, problems_arg: str | None, grid_path: str | None) -> int:
    validate_backend(cfg)
    problems = load_problems(cfg)
    if problems_arg:
        selected = [pick_problem(problems, pid.strip()) for pid in problems_arg.split(",")]
    else:
        selected = [problems[pid] for pid in sorted(problems)]
    if not selected:
        raise UsageError("corpus holds no problems")
    for problem in selected:
        if not problem.test_set:
            raise UsageError(
                f"problem {problem.id} has no test pairs; batch runs final evaluation"
            )
    grid = _load_grid(grid_path)
    profile = pick_profile(cfg)

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "batch_manifest.json"
    manifest: dict[str, str] = {}
    if manifest_path.is_file():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))

    rows = []
    failures = 0
    executed = 0
    for problem in selected:
        for override in grid:
            cell_cfg = dataclasses.replace(cfg, **override)
            for name in ("tree_arity", "beam_width"):
                setattr(cell_cfg, name, _parse_bound(getattr(cell_cfg, name), name))
            validate_config(cell_cfg)
            fingerprint = config_fingerprint(cell_cfg)
            run_dir = out / problem.id / fingerprint
            cell_key = f"{problem.id}/{fingerprint}"
            if manifest.get(cell_key) == "done" and (run_dir / "summary.json").is_file():
                record, _ = read_run_record(run_dir)
                data = json.loads((run_dir / "summary.json").read_text(encoding="utf-8"))
                evaluation = data.get("evaluation")
                if evaluation is not None:
                    rows.append((record, _summary_from_dict(evaluation)))
                continue
            try:
                backend = make_backend(cell_cfg)
                record = solve(
                    problem,
                    profile,
                    search_config_from(cell_cfg),
                    backend,
                    limits=limits_from(cell_cfg),
                    seed=cell_cfg.seed,
                )
                if record.halted_reason is HaltReason.BACKEND_ERROR:
                    # keep the partial trace but leave the cell retryable
                    write_run_artifacts(record, cell_cfg.seed, run_dir, fingerprint)
                    manifest[cell_key] = "failed: backend error during search"
                    failures += 1
                else:
                    evaluation = summarize_run(
                        record,
                        problem,
                        profile,
                        limits=limits_from(cell_cfg),
                        config_fingerprint=fingerprint,
                    )
                    write_run_artifacts(
                        record, cell_cfg.seed, run_dir, fingerprint, evaluation
                    )
                    manifest[cell_key] = "done"
                    rows.append((record, evaluation))
                    executed += 1
            except (ToolchainError, WorkspaceError, BackendError) as exc:
                manifest[cell_key] = f"failed: {exc}"
                failures += 1
            manifest_path.write_text(
                canonical_json(manifest) + "\n", encoding="utf-8"
            )

    report_paths = aggregate_report(rows, out / "reports")
    print(
        f"batch: {executed} cells run, {len(rows)} usable, {failures} failed; "
        f"reports in {report_paths[0].parent}"
    )
    return 0 if failures == 0 else 3


def _summary_from_dict(data: dict) -> EvaluationSummary:
    return EvaluationSummary(
        problem_id=data["problem_id"],
        config_fingerprint=data["config_fingerprint"],
        tpr=data["tpr"],
        epg=data["epg"],
        solved=data["solved"],
        halted_reason=HaltReason(data["halted_reason"]),
        tpr_best_candidate=data.get("tpr_best_candidate"),
    )


def cmd_report(cfg: EngineConfig) -> int:
    out = Path(cfg.out_dir)
    if not out.is_dir():
        raise UsageError(f"no runs directory at {out}")
    rows = []
    skipped = 0
    for summary_path in sorted(out.glob("*/*/summary.json")):
        data = json.loads(summary_path.read_text(encoding="utf-8"))
        evaluation = data.get("evaluation")
        if evaluation is None:
            skipped += 1
            continue
        record, _ = read_run_record(summary_path.parent)
        rows.append((record, _summary_from_dict(evaluation)))
    report_paths = aggregate_report(rows, out / "reports")
    note = f" ({skipped} unevaluated runs skipped)" if skipped else ""
    print(f"report: {len(rows)} runs aggregated{note}; reports in {report_paths[0].parent}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON config file; flags override it")
    flag = shared.add_argument
    sup = argparse.SUPPRESS
    flag("--corpus", default=sup, help="problem JSON file or directory of them")
    flag("--profile", default=sup, help="language profile name (default python)")
    flag("--backend", default=sup, choices=["mock", "http"], help="model backend")
    flag("--mock-script", dest="mock_script", default=sup,
         help="scripted-response file for the mock backend")
    flag("--base-url", dest="base_url", default=sup, help="http backend endpoint root")
    flag("--synth-model", dest="synth_model", default=sup, help="model for drafts")
    flag("--debug-model", dest="debug_model", default=sup, help="model for repairs")
    flag("--text-model", dest="text_model", default=sup, help="model for bug summaries")
    flag("--api-key-env", dest="api_key_env", default=sup,
         help="environment variable holding the API key")
    flag("--tree-arity", dest="tree_arity", default=sup,
         help="drafts and children per survivor (integer or 'unbounded')")
    flag("--beam-width", dest="beam_width", default=sup,
         help="survivors kept per generation (integer or 'unbounded')")
    flag("--max-programs", dest="max_programs", type=int, default=sup,
         help="global candidate budget")
    flag("--instruction-template", dest="instruction_template", default=sup,
         help="repair instruction template id (S0..S5, M6..M10, STDERR)")
    flag("--t-max", dest="t_max", type=float, default=sup,
         help="top of the sampling temperature ramp")
    flag("--seed", type=int, default=sup, help="base seed for scripted sampling")
    flag("--workers", type=int, default=sup, help="parallel executions per candidate")
    flag("--backend-concurrency", dest="backend_concurrency", type=int, default=sup,
         help="cap on outstanding backend requests")
    flag("--run-timeout", dest="run_timeout_s", type=float, default=sup,
         help="seconds each candidate run may take per pair")
    flag("--compile-timeout", dest="compile_timeout_s", type=float, default=sup,
         help="seconds the compile step may take")
    flag("--request-timeout", dest="request_timeout_s", type=float, default=sup,
         help="seconds per backend request")
    flag("--out-dir", dest="out_dir", default=sup, help="where run artifacts go")

    parser = argparse.ArgumentParser(
        prog="codebeam",
        description="Draft, execute, and repair candidate programs until they pass.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_solve = sub.add_parser("solve", parents=[shared], help="solve one problem")
    p_solve.add_argument("problem_id", help="problem id within the corpus")
    p_batch = sub.add_parser("batch", parents=[shared], help="run a config grid")
    p_batch.add_argument("--problems", help="comma-separated problem ids (default all)")
    p_batch.add_argument("--grid", help="JSON list of search-config overrides")
    p_eval = sub.add_parser("eval", parents=[shared], help="evaluate a stored run")
    p_eval.add_argument("record", help="run directory or its events.jsonl")
    sub.add_parser("report", parents=[shared], help="aggregate stored runs to CSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "solve":
            return cmd_solve(cfg, args.problem_id)
        if args.command == "batch":
            return cmd_batch(cfg, args.problems, args.grid)
        if args.command == "eval":
            return cmd_eval(cfg, args.record)
        return cmd_report(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, ProfileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ToolchainError, WorkspaceError, BackendError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
