"""Tour of the repair-instruction templates.

A repair instruction is rendered from the first failing validation pair
of a real execution, so this demo actually runs a buggy program, lifts
the failure into template context, and prints what every template would
say about it.  It then shows the two model-assisted phases and the rule
that any stderr overrides whichever template was configured.

Run with:  python3 demos/instruction_templates_tour.py
"""

from codebeam import (
    IOPair,
    InstructionTemplateId,
    dispatch_instruction,
    execute_candidate,
    load_profiles,
    render_instruction,
)
from codebeam.templates import context_from_report

profile = load_profiles()["python"]

VALIDATION = (
    IOPair(("3",), ("1", "2", "3")),
    IOPair(("5",), ("1", "2", "3", "4", "5")),
)

# Off-by-one: stops one short of the requested count.
BUGGY = """\
n = int(input())
for i in range(1, n):
    print(i)
"""

report = execute_candidate(BUGGY, profile, VALIDATION)
ctx = context_from_report(
    "Count from 1 up to the given number, one value per line.",
    VALIDATION,
    report,
)

print(f"buggy program scored {report.aggregate_score:.3f}")
print(f"first failing input:  {ctx.failing_input!r}")
print(f"expected output:      {ctx.expected_output!r}")
print(f"actual output:        {ctx.actual_output!r}")
print()

# ------------------------------------------------------ static templates

print("static templates")
for tid in InstructionTemplateId:
    if tid.model_assisted or tid is InstructionTemplateId.STDERR:
        continue
    instruction = render_instruction(tid, ctx)
    flat = instruction.text.replace("\n", "\\n")
    print(f"  {tid.value:<3} {flat}")
print()

# ---------------------------------------------- model-assisted templates

# Phase 1 returns the prompt for the completion model; phase 2 takes the
# completion back as bug_summary and yields the final instruction.
M8 = InstructionTemplateId.M8
prompt = render_instruction(M8, ctx)
print("M8 phase 1, prompt sent to the completion model:")
for line in prompt.splitlines():
    print("   |", line)
print()

summary = "the loop stops one short of the requested count"
final = dispatch_instruction(M8, ctx, complete=lambda _prompt: summary)
print(f"M8 phase 2, final instruction:  {final.text}")
print()

# An empty completion falls back to the plainest static template instead
# of sending a half-filled instruction.
fallback = dispatch_instruction(M8, ctx, complete=lambda _prompt: "")
print(f"empty completion falls back to {fallback.template.value}: {fallback.text!r}")
print()

# -------------------------------------------------------- stderr priority

CRASHY = "raise RuntimeError('cannot parse input')\n"
crash_report = execute_candidate(CRASHY, profile, VALIDATION)
crash_ctx = context_from_report("Count up.", VALIDATION, crash_report)

# S3 is configured, but the non-empty stderr wins.
instruction = dispatch_instruction(InstructionTemplateId.S3, crash_ctx)
print(f"configured S3, dispatched {instruction.template.value}:")
print("   ", instruction.text.splitlines()[0], "...")
