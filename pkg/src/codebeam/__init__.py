"""Program synthesis and repair by draft, execute, instruct, and rank.

Given a task description and example I/O pairs, the engine samples draft
programs from a model backend, runs them against the examples, turns the
first failure into a repair instruction, asks the model for edited
children, and keeps the best few for the next round, all under one global
candidate budget.
"""

from .errors import (
    BackendError,
    CorpusError,
    EngineError,
    InputTooLongError,
    MockScriptError,
    ProfileError,
    RateLimited,
    RenderError,
    SplitSizeError,
    ToolchainError,
    TransientBackendError,
    WorkspaceError,
)
from .executor import (
    ExecutionReport,
    ResourceLimits,
    RunOutcome,
    execute_candidate,
    pair_score,
)
from .llm import (
    Backend,
    CompletionRequest,
    EditRequest,
    HTTPBackend,
    HTTPBackendConfig,
    MockBackend,
    RetryPolicy,
    TemperatureSchedule,
    complete_text,
    sample_edits,
    temperature,
)
from .metrics import (
    EvaluationSummary,
    aggregate_report,
    summarize_run,
    test_pass_rate,
)
from .problems import (
    IOPair,
    LanguageProfile,
    Problem,
    load_bundled_problem,
    load_corpus,
    load_problem_file,
    load_profiles,
    split_examples,
)
from .search import (
    UNBOUNDED,
    Candidate,
    HaltReason,
    RunRecord,
    SearchConfig,
    solve,
)
from .templates import (
    InstructContext,
    Instruction,
    InstructionTemplateId,
    dispatch_instruction,
    render_draft_prompt,
    render_instruction,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "BackendError",
    "Candidate",
    "CompletionRequest",
    "CorpusError",
    "EditRequest",
    "EngineError",
    "EvaluationSummary",
    "ExecutionReport",
    "HTTPBackend",
    "HTTPBackendConfig",
    "HaltReason",
    "IOPair",
    "InputTooLongError",
    "InstructContext",
    "Instruction",
    "InstructionTemplateId",
    "LanguageProfile",
    "MockBackend",
    "MockScriptError",
    "Problem",
    "ProfileError",
    "RateLimited",
    "RenderError",
    "ResourceLimits",
    "RetryPolicy",
    "RunOutcome",
    "RunRecord",
    "SearchConfig",
    "SplitSizeError",
    "TemperatureSchedule",
    "ToolchainError",
    "TransientBackendError",
    "UNBOUNDED",
    "WorkspaceError",
    "aggregate_report",
    "complete_text",
    "dispatch_instruction",
    "execute_candidate",
    "load_bundled_problem",
    "load_corpus",
    "load_problem_file",
    "load_profiles",
    "pair_score",
    "render_draft_prompt",
    "render_instruction",
    "sample_edits",
    "solve",
    "split_examples",
    "summarize_run",
    "temperature",
    "test_pass_rate",
]
