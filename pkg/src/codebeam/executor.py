"""Run candidate programs against I/O pairs and score their output.

Each candidate gets a throwaway workspace.  Compiled languages build once;
every pair then runs in its own child process with the pair's input lines on
stdin.  Scoring is line accuracy: the fraction of positions where stdout
matches the expected output, with any stderr zeroing the pair.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import ToolchainError, WorkspaceError
from .problems import IOPair, LanguageProfile

DEFAULT_TIMEOUT_S = 5.0
DEFAULT_COMPILE_TIMEOUT_S = 60.0
STREAM_CAP_BYTES = 1 << 20

# Child processes must not inherit credentials; candidate code is untrusted.
_SENSITIVE_MARKERS = ("API", "KEY", "TOKEN", "SECRET", "PASSWORD", "CREDENTIAL")


@dataclass(frozen=True)
class ResourceLimits:
    timeout_s: float = DEFAULT_TIMEOUT_S
    compile_timeout_s: float = DEFAULT_COMPILE_TIMEOUT_S
    stream_cap_bytes: int = STREAM_CAP_BYTES
    workers: int = 4


@dataclass(frozen=True)
class RunOutcome:
    """Captured streams and status of one child process run."""

    stdout_lines: tuple[str, ...]
    stderr_text: str
    exit_status: int
    timed_out: bool
    duration_ms: float
    stdout_overflowed: bool = False


@dataclass(frozen=True)
class ExecutionReport:
    """Scored result of one candidate over a whole I/O set."""

    compile_stderr: str
    per_pair: tuple[tuple[RunOutcome, float], ...]
    aggregate_score: float
    all_passed: bool


def pair_score(
    expected: Sequence[str], actual: Sequence[str], stderr_text: str
) -> float:
    """Fraction of line positions that match; any stderr zeroes the pair."""
    if stderr_text:
        return 0.0
    n = max(len(expected), len(actual))
    if n == 0:
        return 1.0
    matches = sum(1 for e, a in zip(expected, actual) if e == a)
    return matches / n


def split_stdout_lines(text: str) -> tuple[str, ...]:
    """CRLF-normalized lines, tolerating exactly one trailing newline."""
    lines = text.replace("\r\n", "\n").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return tuple(lines)


def scrub_environment(env: dict[str, str] | None = None) -> dict[str, str]:
    """Copy of the environment with credential-looking variables removed."""
    source = os.environ if env is None else env
    return {
        k: v
        for k, v in source.items()
        if not any(marker in k.upper() for marker in _SENSITIVE_MARKERS)
    }


def _render_argv(command: str, paths: dict[str, str]) -> list[str]:
    # Split first so substituted paths never get re-tokenized.
    argv = []
    for token in shlex.split(command):
        for placeholder, value in paths.items():
            token = token.replace(placeholder, value)
        argv.append(token)
    return argv


def _read_capped(path: Path, cap: int) -> tuple[str, bool]:
    """File contents as text plus whether the file exceeded the cap."""
    raw = path.read_bytes()
    overflowed = len(raw) > cap
    return raw[:cap].decode("utf-8", errors="replace"), overflowed


def _run_child(
    argv: Sequence[str],
    stdin_text: str,
    workdir: Path,
    timeout_s: float,
    cap: int,
    tag: str,
) -> RunOutcome:
    out_path = workdir / f"{tag}.out"
    err_path = workdir / f"{tag}.err"
    started = time.monotonic()
    timed_out = False
    try:
        with open(out_path, "wb") as out, open(err_path, "wb") as err:
            try:
                proc = subprocess.run(
                    argv,
                    input=stdin_text.encode("utf-8"),
                    stdout=out,
                    stderr=err,
                    cwd=workdir,
                    env=scrub_environment(),
                    timeout=timeout_s,
                )
                exit_status = proc.returncode
            except subprocess.TimeoutExpired:
                timed_out = True
                exit_status = -1
    except FileNotFoundError as exc:
        raise ToolchainError(f"command not found: {argv[0]}") from exc
    except OSError as exc:
        raise WorkspaceError(f"failed to run {argv[0]}: {exc}") from exc
    duration_ms = (time.monotonic() - started) * 1000.0
    stdout_text, stdout_over = _read_capped(out_path, cap)
    stderr_text, _ = _read_capped(err_path, cap)
    return RunOutcome(
        stdout_lines=split_stdout_lines(stdout_text),
        stderr_text=stderr_text,
        exit_status=exit_status,
        timed_out=timed_out,
        duration_ms=duration_ms,
        stdout_overflowed=stdout_over,
    )


def _score_pair(outcome: RunOutcome, pair: IOPair) -> float:
    if outcome.timed_out or outcome.stdout_overflowed:
        return 0.0
    return pair_score(pair.output, outcome.stdout_lines, outcome.stderr_text)


def execute_candidate(
    program: str,
    profile: LanguageProfile,
    pairs: Sequence[IOPair],
    limits: ResourceLimits | None = None,
) -> ExecutionReport:
    """Compile if needed, then run and score the program on every pair."""
    limits = limits or ResourceLimits()
    try:
        with tempfile.TemporaryDirectory(prefix="codebeam-run-") as tmp:
            workdir = Path(tmp)
            src = workdir / f"main{profile.file_extension}"
            bin_path = workdir / "main.bin"
            src.write_text(program, encoding="utf-8")
            paths = {
                "{src}": str(src),
                "{bin}": str(bin_path),
                "{workdir}": str(workdir),
            }

            if profile.compiled:
                assert profile.compile_command is not None
                compile_argv = _render_argv(profile.compile_command, paths)
                outcome = _run_child(
                    compile_argv,
                    "",
                    workdir,
                    limits.compile_timeout_s,
                    limits.stream_cap_bytes,
                    "compile",
                )
                compile_stderr = outcome.stderr_text
                if outcome.timed_out:
                    compile_stderr = compile_stderr or "compilation timed out"
                elif outcome.exit_status != 0 and not compile_stderr:
                    compile_stderr = (
                        f"compiler exited with status {outcome.exit_status}"
                        " and no diagnostics"
                    )
                if compile_stderr:
                    return ExecutionReport(
                        compile_stderr=compile_stderr,
                        per_pair=(),
                        aggregate_score=0.0,
                        all_passed=False,
                    )

            run_argv = _render_argv(profile.run_command, paths)

            def run_pair(item: tuple[int, IOPair]) -> tuple[RunOutcome, float]:
                i, pair = item
                outcome = _run_child(
                    run_argv,
                    "\n".join(pair.input),
                    workdir,
                    limits.timeout_s,
                    limits.stream_cap_bytes,
                    f"pair{i}",
                )
                return outcome, _score_pair(outcome, pair)

            workers = max(1, min(limits.workers, len(pairs) or 1))
            with ThreadPoolExecutor(max_workers=workers) as pool:
                per_pair = tuple(pool.map(run_pair, enumerate(pairs)))
    except OSError as exc:
        raise WorkspaceError(f"workspace failure: {exc}") from exc

    scores = [score for _, score in per_pair]
    aggregate = sum(scores) / len(scores) if scores else 0.0
    return ExecutionReport(
        compile_stderr="",
        per_pair=per_pair,
        aggregate_score=aggregate,
        all_passed=bool(per_pair) and all(s == 1.0 for s in scores),
    )
