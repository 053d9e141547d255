"""How candidate programs are executed and scored.

Scoring is per output line and positional: a pair's score is the number
of matching line positions over the longer of the two line counts, any
stderr zeroes the pair, and a whole-set score is the mean over pairs.
This demo exercises the pure scoring function first, then full sandboxed
runs: partial credit, runtime errors, compile errors, timeouts, and the
scrubbed child environment.

Run with:  python3 demos/executor_scoring.py
"""

import os
import shutil

from codebeam import (
    IOPair,
    ResourceLimits,
    execute_candidate,
    load_profiles,
    pair_score,
)

# ------------------------------------------------- scoring, no processes

print("pair_score on line sequences")
cases = [
    (("a", "b", "c"), ("a", "b", "c"), ""),
    (("a", "b", "c"), ("a", "b"), ""),
    (("a", "b", "c"), ("x", "b", "c"), ""),
    (("a", "b", "c"), ("a", "b", "c"), "warning: deprecated"),
    ((), (), ""),
]
for expected, actual, stderr in cases:
    score = pair_score(expected, actual, stderr)
    note = " stderr zeroes it" if stderr else ""
    print(f"  {list(expected)!r:>17} vs {list(actual)!r:<17} -> {score:.3f}{note}")
print()

# ------------------------------------------------------------ python runs

profiles = load_profiles()
py = profiles["python"]

PAIRS = (
    IOPair(("alpha", "beta"), ("beta", "alpha")),
    IOPair(("one", "two"), ("two", "one")),
)

REVERSE = """\
import sys
lines = sys.stdin.read().split(chr(10))
for line in reversed(lines):
    print(line)
"""

HALF_RIGHT = """\
import sys
lines = sys.stdin.read().split(chr(10))
print(lines[1])
print(lines[1])
"""

print("running python candidates on the reverse-two-lines task")
for label, code in [("reverse", REVERSE), ("half right", HALF_RIGHT)]:
    report = execute_candidate(code, py, PAIRS)
    per_pair = [f"{score:.2f}" for _, score in report.per_pair]
    print(
        f"  {label:<11} per-pair {per_pair}"
        f"  aggregate {report.aggregate_score:.3f}"
        f"  all_passed={report.all_passed}"
    )

crash = execute_candidate("1 / 0\n", py, PAIRS)
outcome = crash.per_pair[0][0]
print(f"  crash       aggregate {crash.aggregate_score:.3f}")
print(f"              stderr tail: ...{outcome.stderr_text.strip().splitlines()[-1]}")
print()

# A candidate only sees a scrubbed environment: names that look like
# credentials never reach the child process.
os.environ["DEMO_API_KEY"] = "not-for-candidates"
probe = execute_candidate(
    "import os\nprint(os.environ.get('DEMO_API_KEY', 'scrubbed'))\n",
    py,
    (IOPair((), ("scrubbed",)),),
)
print(f"credential probe printed 'scrubbed': {probe.all_passed}")
print()

# ---------------------------------------------------------------- timeouts

SPIN = "while True:\n    pass\n"
limits = ResourceLimits(timeout_s=0.5)
timed = execute_candidate(SPIN, py, (PAIRS[0],), limits)
outcome = timed.per_pair[0][0]
print(f"infinite loop with a 0.5s limit: timed_out={outcome.timed_out}")
print(f"  score {timed.aggregate_score:.3f}")
print()

# ------------------------------------------------------------- c++ runs

if shutil.which("g++") is None:
    print("g++ not found, skipping the compiled-language half")
    raise SystemExit(0)

cpp = profiles["cpp"]

CPP_REVERSE = """\
#include <iostream>
#include <string>
#include <vector>
int main() {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(std::cin, line)) lines.push_back(line);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it)
        std::cout << *it << std::endl;
    return 0;
}
"""

report = execute_candidate(CPP_REVERSE, cpp, PAIRS)
print(f"c++ reverse: aggregate {report.aggregate_score:.3f}")

# A compile failure never runs the pairs: the compiler diagnostics land
# in compile_stderr and the whole set scores zero.
broken = execute_candidate("int main( {\n", cpp, PAIRS)
first_diag = broken.compile_stderr.splitlines()[0]
print(f"c++ compile failure: aggregate {broken.aggregate_score:.3f}")
print(f"  pairs run: {len(broken.per_pair)}")
print(f"  diagnostics: {first_diag}")
