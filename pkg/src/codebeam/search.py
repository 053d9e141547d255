"""Beam-search driver over draft and repair candidates.

The loop: draft up to N programs, execute them against the validation pairs,
keep the best W, ask for N repaired children of each survivor under a
rendered repair instruction, and repeat with the children replacing their
parents.  Every candidate drawn from a backend counts against one global
budget; the search stops at the first candidate that passes the whole
validation set, or when the budget runs out.

Degenerate corners fall out of the same code path: N=W=1 is a single repair
chain (depth-first), and unbounded N realizes the whole budget as drafts so
no repair generation ever exists (breadth-only).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

from .errors import BackendError, InputTooLongError
from .executor import ExecutionReport, ResourceLimits, execute_candidate
from .llm import (
    Backend,
    CompletionRequest,
    EditRequest,
    RetryPolicy,
    TemperatureSchedule,
    complete_text,
    sample_edits,
    temperature,
)
from .problems import LanguageProfile, Problem
from .templates import (
    InstructionTemplateId,
    context_from_report,
    dispatch_instruction,
    render_draft_prompt,
)

# Sentinel for "as many as the budget allows" in tree_arity / beam_width.
UNBOUNDED = None

DEFAULT_MAX_PROGRAMS = 1000


class HaltReason(str, Enum):
    SOLVED = "SOLVED"
    BUDGET = "BUDGET"
    BACKEND_ERROR = "BACKEND_ERROR"
    INPUT_TOO_LONG = "INPUT_TOO_LONG"


@dataclass(frozen=True)
class SearchConfig:
    """Shape and budget of the search tree.

    tree_arity is the number of drafts and of children per survivor;
    beam_width is how many survivors each generation keeps.  None means
    unbounded: the value is realized as max_programs, which turns the
    search into a single generation of drafts.
    """

    tree_arity: int | None = 10
    beam_width: int | None = 10
    max_programs: int = DEFAULT_MAX_PROGRAMS
    instruction_template: InstructionTemplateId = InstructionTemplateId.S0
    t_max: float = 1.0

    def __post_init__(self) -> None:
        # Accept the plain template id string; unknown ids raise ValueError.
        object.__setattr__(
            self,
            "instruction_template",
            InstructionTemplateId(self.instruction_template),
        )
        if self.max_programs < 1:
            raise ValueError("max_programs must be at least 1")
        if self.tree_arity is not None and self.tree_arity < 1:
            raise ValueError("tree_arity must be at least 1 or unbounded")
        if self.beam_width is not None and self.beam_width < 1:
            raise ValueError("beam_width must be at least 1 or unbounded")
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")

    @property
    def effective_arity(self) -> int:
        return self.max_programs if self.tree_arity is None else self.tree_arity

    @property
    def effective_width(self) -> int:
        return self.max_programs if self.beam_width is None else self.beam_width


@dataclass
class Candidate:
    """One program in the search tree; ids count every candidate ever drawn."""

    id: int
    code: str
    parent: int | None
    generation: int
    temperature: float
    report: ExecutionReport | None = None
    instruction_template: str | None = None
    instruction_text: str | None = None


@dataclass
class RunRecord:
    """Full trace of one solve run."""

    problem_id: str
    config: SearchConfig
    candidates: list[Candidate]
    solution: Candidate | None
    epg: int
    halted_reason: HaltReason
    selections: list[list[int]] = field(default_factory=list)


Evaluator = Callable[[str], ExecutionReport]


@dataclass
class SearchState:
    """Mutable bookkeeping shared by the phases of one run."""

    problem: Problem
    profile: LanguageProfile
    config: SearchConfig
    backend: Backend
    policy: RetryPolicy | None = None
    evaluator: Evaluator | None = None
    limits: ResourceLimits | None = None
    seed: int | None = None
    candidates: list[Candidate] = field(default_factory=list)
    population: list[Candidate] = field(default_factory=list)
    selections: list[list[int]] = field(default_factory=list)
    solution: Candidate | None = None

    def evaluate(self, candidate: Candidate) -> ExecutionReport:
        if self.evaluator is not None:
            return self.evaluator(candidate.code)
        return execute_candidate(
            candidate.code, self.profile, self.problem.validation_set, self.limits
        )

    @property
    def budget_left(self) -> int:
        return self.config.max_programs - len(self.candidates)


def synthesize(state: SearchState) -> list[Candidate]:
    """Draft generation 0: up to N programs from the draft prompt."""
    prompt = render_draft_prompt(state.problem, state.profile)
    n = min(state.config.effective_arity, state.budget_left)
    schedule = TemperatureSchedule(n=n, t_max=state.config.t_max)
    texts = sample_edits(
        state.backend,
        EditRequest(
            input=prompt,
            instruction=state.problem.description,
            seed=state.seed,
            role="synth",
        ),
        schedule,
        state.policy,
    )
    drafts = []
    for i, text in enumerate(texts):
        drafts.append(
            Candidate(
                id=len(state.candidates),
                code=text,
                parent=None,
                generation=0,
                temperature=temperature(schedule, i),
            )
        )
        state.candidates.append(drafts[-1])
    state.population = drafts
    return drafts


def evaluate_population(state: SearchState) -> Candidate | None:
    """Execute unevaluated members in id order, stopping at the first passer.

    Members after the passer keep report=None: they were generated (and
    count against the budget) but the search never needed to run them.
    """
    for candidate in state.population:
        if state.solution is not None:
            break
        if candidate.report is None:
            candidate.report = state.evaluate(candidate)
        if candidate.report.all_passed:
            state.solution = candidate
            return candidate
    return None


def rank(population: Sequence[Candidate], beam_width: int) -> list[Candidate]:
    """Top beam_width members by score, older candidate winning ties."""
    for candidate in population:
        if candidate.report is None:
            raise ValueError(f"candidate {candidate.id} was never executed")
    ordered = sorted(
        population, key=lambda c: (-c.report.aggregate_score, c.id)  # type: ignore[union-attr]
    )
    return ordered[:beam_width]


def _make_completer(state: SearchState) -> Callable[[str], str]:
    def complete(prompt: str) -> str:
        return complete_text(state.backend, CompletionRequest(prompt=prompt), state.policy)

    return complete


def step(state: SearchState) -> list[Candidate]:
    """One Rank -> Instruct -> Debug round; children replace the population."""
    survivors = rank(state.population, state.config.effective_width)
    state.selections.append([c.id for c in survivors])
    completer = _make_completer(state)
    children: list[Candidate] = []
    for survivor in survivors:
        n = min(state.config.effective_arity, state.budget_left)
        if n == 0:
            break
        assert survivor.report is not None
        ctx = context_from_report(
            state.problem.description, state.problem.validation_set, survivor.report
        )
        instruction = dispatch_instruction(
            state.config.instruction_template, ctx, completer
        )
        schedule = TemperatureSchedule(n=n, t_max=state.config.t_max)
        texts = sample_edits(
            state.backend,
            EditRequest(
                input=survivor.code,
                instruction=instruction.text,
                seed=state.seed,
                role="debug",
            ),
            schedule,
            state.policy,
        )
        for i, text in enumerate(texts):
            child = Candidate(
                id=len(state.candidates),
                code=text,
                parent=survivor.id,
                generation=survivor.generation + 1,
                temperature=temperature(schedule, i),
                instruction_template=instruction.template.value,
                instruction_text=instruction.text,
            )
            state.candidates.append(child)
            children.append(child)
    state.population = children
    return children


def solve(
    problem: Problem,
    profile: LanguageProfile,
    config: SearchConfig,
    backend: Backend,
    policy: RetryPolicy | None = None,
    limits: ResourceLimits | None = None,
    evaluator: Evaluator | None = None,
    seed: int | None = None,
) -> RunRecord:
    """Run the full loop for one problem until solved or out of budget.

    The returned record always carries the complete candidate trace, even
    when a backend failure cuts the run short.
    """
    state = SearchState(
        problem=problem,
        profile=profile,
        config=config,
        backend=backend,
        policy=policy,
        evaluator=evaluator,
        limits=limits,
        seed=seed,
    )

    def record(reason: HaltReason) -> RunRecord:
        epg = state.solution.id if state.solution is not None else len(state.candidates)
        return RunRecord(
            problem_id=problem.id,
            config=config,
            candidates=state.candidates,
            solution=state.solution,
            epg=epg,
            halted_reason=reason,
            selections=state.selections,
        )

    try:
        synthesize(state)
        evaluate_population(state)
        while state.solution is None and state.budget_left > 0 and state.population:
            children = step(state)
            if not children:
                break
            evaluate_population(state)
    except InputTooLongError:
        return record(HaltReason.INPUT_TOO_LONG)
    except BackendError:
        return record(HaltReason.BACKEND_ERROR)

    if state.solution is not None:
        return record(HaltReason.SOLVED)
    return record(HaltReason.BUDGET)
