"""Instruction and draft-prompt rendering.

Repair instructions come in three flavors:

* static templates S0..S5 that restate the violated requirement from the
  first failing validation pair,
* model-assisted templates M6..M10 that first ask a text-completion model to
  summarize the bug, then wrap that summary into a "Fix ..." directive,
* a stderr template used whenever execution produced error output.

Rendering is pure and byte-stable: placeholders are substituted verbatim,
with no trimming or re-wrapping of the substituted values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

from .errors import RenderError
from .executor import ExecutionReport
from .problems import IOPair, LanguageProfile, Problem

DEFAULT_STDERR_BUDGET_BYTES = 2048

_PLACEHOLDER_RE = re.compile(
    r"\{(description|io_examples|task|failing_input|expected_output|actual_output|bug|stderr)\}"
)


def substitute(template: str, values: dict[str, str]) -> str:
    """Expand known placeholders in a single pass (values are never rescanned)."""

    def repl(match: re.Match[str]) -> str:
        name = match.group(1)
        if name not in values:
            raise RenderError(f"no value for placeholder {{{name}}}")
        return values[name]

    return _PLACEHOLDER_RE.sub(repl, template)


class InstructionTemplateId(str, Enum):
    """The twelve repair-instruction templates."""

    S0 = "S0"
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"
    S5 = "S5"
    M6 = "M6"
    M7 = "M7"
    M8 = "M8"
    M9 = "M9"
    M10 = "M10"
    STDERR = "STDERR"

    @property
    def static(self) -> bool:
        return self.name.startswith("S") and self is not InstructionTemplateId.STDERR

    @property
    def model_assisted(self) -> bool:
        return self.name.startswith("M")


STATIC_TEMPLATES = {
    InstructionTemplateId.S0: "Make sure that {failing_input} -> {expected_output}",
    InstructionTemplateId.S1: "Make sure the code returns {expected_output} for input {failing_input}",
    InstructionTemplateId.S2: "Ensure that input {failing_input} yields output {expected_output}",
    InstructionTemplateId.S3: "Modify code to get {expected_output} from {failing_input}",
    InstructionTemplateId.S4: "Code must correspond instructions in comments and {failing_input} must yield {expected_output}",
    InstructionTemplateId.S5: "See comments in code and return {expected_output} for input {failing_input}",
}

# Prompts handed to the text-completion model; the model continues the
# trailing ellipsis with a bug summary.
COMPLETION_PROMPTS = {
    InstructionTemplateId.M6: (
        "The code should solve the following problem: {task}. The code must return "
        "{expected_output} for input {failing_input} but it returns {actual_output}. "
        "Obviously, the error is that..."
    ),
    InstructionTemplateId.M7: (
        "The code should solve the following problem: {task}. The code must return "
        "{expected_output} for input {failing_input} but it returns {actual_output}. "
        "The error is that..."
    ),
    InstructionTemplateId.M8: (
        "Problem description: {task}. The code must return {expected_output} for input "
        "{failing_input}, but it returns {actual_output}. It is clear the error is that..."
    ),
    InstructionTemplateId.M9: (
        "There is clearly a bug in code, because the code returns {actual_output} for input "
        "{failing_input} but output {expected_output} is expected. The bug is that..."
    ),
    InstructionTemplateId.M10: (
        "There is clearly a bug in code, because the code returns {actual_output} for input "
        "{failing_input} but output {expected_output} is expected. The bug is that..."
    ),
}

FIX_TEMPLATE = "Fix {bug}"
FIX_TEMPLATE_EXTENDED = (
    "Fix {bug} and modify the code to return {expected_output} for input {failing_input}"
)
STDERR_TEMPLATE = "Fix {stderr}"


@dataclass(frozen=True)
class InstructContext:
    """Everything a template may reference, lifted from one execution report.

    Fields are None when the underlying report did not produce them (for
    example a compile failure has no failing pair); asking a template to
    render without a field it needs raises RenderError.
    """

    task: str | None = None
    failing_input: str | None = None
    expected_output: str | None = None
    actual_output: str | None = None
    stderr_text: str = ""
    bug_summary: str | None = None


@dataclass(frozen=True)
class Instruction:
    """A fully rendered repair directive for the edit model."""

    text: str
    template: InstructionTemplateId
    context: InstructContext


def truncate_stderr(text: str, budget_bytes: int = DEFAULT_STDERR_BUDGET_BYTES) -> str:
    """Drop the tail of oversized stderr, cutting at a UTF-8 boundary."""
    raw = text.encode("utf-8")
    if len(raw) <= budget_bytes:
        return text
    return raw[:budget_bytes].decode("utf-8", errors="ignore")


def _require(ctx: InstructContext, template: InstructionTemplateId, *fields: str) -> dict[str, str]:
    values = {}
    for name in fields:
        value = getattr(ctx, name)
        if value is None:
            raise RenderError(f"template {template.value} needs context field '{name}'")
        values[name] = value
    return values


def render_instruction(
    template: InstructionTemplateId,
    ctx: InstructContext,
    stderr_budget_bytes: int = DEFAULT_STDERR_BUDGET_BYTES,
) -> Instruction | str:
    """Render one template against a context.

    Static templates and the stderr template return an Instruction.  The
    model-assisted templates M6..M10 are rendered in two calls: with
    bug_summary unset this returns the prompt string for the completion
    model; with bug_summary set it returns the final Instruction.
    """
    if template is InstructionTemplateId.STDERR:
        if not ctx.stderr_text:
            raise RenderError("template STDERR needs context field 'stderr_text'")
        text = substitute(
            STDERR_TEMPLATE, {"stderr": truncate_stderr(ctx.stderr_text, stderr_budget_bytes)}
        )
        return Instruction(text=text, template=template, context=ctx)

    if template.static:
        values = _require(ctx, template, "failing_input", "expected_output")
        return Instruction(
            text=substitute(STATIC_TEMPLATES[template], values),
            template=template,
            context=ctx,
        )

    # Model-assisted path.
    if ctx.bug_summary is None:
        values = _require(
            ctx, template, "task", "failing_input", "expected_output", "actual_output"
        )
        return substitute(COMPLETION_PROMPTS[template], values)
    if template is InstructionTemplateId.M10:
        values = _require(ctx, template, "failing_input", "expected_output")
        values["bug"] = ctx.bug_summary
        text = substitute(FIX_TEMPLATE_EXTENDED, values)
    else:
        text = substitute(FIX_TEMPLATE, {"bug": ctx.bug_summary})
    return Instruction(text=text, template=template, context=ctx)


def select_failing_pair(report: ExecutionReport) -> int | None:
    """Index of the first validation pair that did not fully pass.

    Returns None when compilation failed (the stderr route applies and no
    pair is selected).  A fully passing report is a caller bug.
    """
    if report.compile_stderr:
        return None
    for i, (_, score) in enumerate(report.per_pair):
        if score < 1.0:
            return i
    raise ValueError("report passed every pair; there is nothing to instruct about")


def context_from_report(
    description: str,
    validation_set: Sequence[IOPair],
    report: ExecutionReport,
) -> InstructContext:
    """Lift the first failure out of an execution report into template context."""
    index = select_failing_pair(report)
    if index is None:
        return InstructContext(task=description, stderr_text=report.compile_stderr)
    pair = validation_set[index]
    outcome = report.per_pair[index][0]
    return InstructContext(
        task=description,
        failing_input="\n".join(pair.input),
        expected_output="\n".join(pair.output),
        actual_output="\n".join(outcome.stdout_lines),
        stderr_text=outcome.stderr_text,
    )


def dispatch_instruction(
    template: InstructionTemplateId,
    ctx: InstructContext,
    complete: Callable[[str], str] | None = None,
    stderr_budget_bytes: int = DEFAULT_STDERR_BUDGET_BYTES,
) -> Instruction:
    """Produce the instruction the engine actually sends for one candidate.

    Non-empty stderr always wins, whatever template is configured.  A
    model-assisted template calls `complete` for the bug summary and falls
    back to S0 when the summary comes back empty, so an unfilled "Fix ..."
    is never emitted.
    """
    if ctx.stderr_text:
        result = render_instruction(InstructionTemplateId.STDERR, ctx, stderr_budget_bytes)
        assert isinstance(result, Instruction)
        return result
    if template.model_assisted:
        if complete is None:
            raise RenderError(f"template {template.value} needs a completion backend")
        prompt = render_instruction(template, ctx, stderr_budget_bytes)
        assert isinstance(prompt, str)
        summary = complete(prompt)
        if not summary:
            return dispatch_instruction(
                InstructionTemplateId.S0, ctx, complete, stderr_budget_bytes
            )
        result = render_instruction(
            template, replace(ctx, bug_summary=summary), stderr_budget_bytes
        )
        assert isinstance(result, Instruction)
        return result
    result = render_instruction(template, ctx, stderr_budget_bytes)
    assert isinstance(result, Instruction)
    return result


def render_io_examples(pairs: Sequence[IOPair]) -> str:
    """One block per pair, lines of each side joined with literal newlines."""
    blocks = [
        "input: " + "\n".join(pair.input) + "\noutput: " + "\n".join(pair.output)
        for pair in pairs
    ]
    return "\n\n".join(blocks)


def render_draft_prompt(problem: Problem, profile: LanguageProfile) -> str:
    """Fill the language's draft template with the task and its prompt examples."""
    return substitute(
        profile.draft_template,
        {
            "description": problem.description,
            "io_examples": render_io_examples(problem.prompt_set),
        },
    )
