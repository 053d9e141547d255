"""End-to-end walk through one solve run on a scripted backend.

The scripted mock stands in for a live model, so the whole loop runs
offline and prints the same trace every time.  The story: two drafts come
back, one useless and one almost right; the engine executes both, keeps
the better one, turns its first failing validation pair into a repair
instruction, and the edited child passes everything.  The held-out test
set then confirms the solution generalizes.

Run with:  python3 demos/solve_with_mock_backend.py
"""

from codebeam import (
    IOPair,
    MockBackend,
    Problem,
    SearchConfig,
    load_profiles,
    solve,
    summarize_run,
)

# ---------------------------------------------------------------- problem

COUNTING = Problem(
    id="count-up",
    description=(
        "Count from 1 up to the given number, printing each value on its"
        " own line."
    ),
    prompt_set=(
        IOPair(("2",), ("1", "2")),
        IOPair(("4",), ("1", "2", "3", "4")),
    ),
    validation_set=(
        IOPair(("3",), ("1", "2", "3")),
        IOPair(("5",), ("1", "2", "3", "4", "5")),
    ),
    test_set=(
        IOPair(("6",), ("1", "2", "3", "4", "5", "6")),
        IOPair(("1",), ("1",)),
    ),
)

# ------------------------------------------------------- scripted backend

DRAFT_BAD = "print('hello')\n"

# Correct loop, but an extra trailing line costs it full marks.
DRAFT_CLOSE = """\
n = int(input())
for i in range(1, n + 1):
    print(i)
print('done')
"""

FIXED = """\
n = int(input())
for i in range(1, n + 1):
    print(i)
"""

# First matching rule wins.  Draft requests carry the task description as
# their instruction; repair requests carry the rendered instruction, which
# for the default template starts with "Make sure that".  A draft batch of
# arity N walks the responses list with seeds 0..N-1.
SCRIPT = {
    "rules": [
        {"instruction_contains": "Make sure", "responses": [FIXED]},
        {"instruction_contains": "Count", "responses": [DRAFT_BAD, DRAFT_CLOSE]},
    ]
}

# ------------------------------------------------------------------- run

profile = load_profiles()["python"]
config = SearchConfig(
    tree_arity=2,
    beam_width=1,
    max_programs=6,
    instruction_template="S0",
    t_max=0.8,
)

record = solve(COUNTING, profile, config, MockBackend(SCRIPT))

print(f"problem:  {record.problem_id}")
print(f"halted:   {record.halted_reason.name}")
print(f"epg:      {record.epg}  (programs generated before the solution)")
print()

print("candidate trace")
print("  id  gen  parent  score   via")
for cand in record.candidates:
    if cand.report is None:
        score = "unrun"
    else:
        score = f"{cand.report.aggregate_score:.3f}"
    via = cand.instruction_template or "draft"
    parent = "-" if cand.parent is None else str(cand.parent)
    print(f"  {cand.id:>2}  {cand.generation:>3}  {parent:>6}  {score:>6}  {via}")
print()

print("survivors per round:", record.selections)
repaired = record.candidates[record.solution.id]
print("repair instruction: ", repaired.instruction_text)
print()

print("solution")
for line in record.solution.code.splitlines():
    print("   ", line)
print()

summary = summarize_run(record, COUNTING, profile)
print(f"test pass rate: {summary.tpr:.4f}")
print(f"solved:         {summary.solved}")
