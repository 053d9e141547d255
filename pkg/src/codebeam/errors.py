"""Exception hierarchy shared across the engine."""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class CorpusError(EngineError):
    """A problem file or corpus violates the JSON format or its invariants."""


class SplitSizeError(EngineError):
    """Not enough I/O pairs to satisfy the requested split sizes."""


class ProfileError(EngineError):
    """A language profile is malformed or incomplete."""


class RenderError(EngineError):
    """An instruction template was invoked without a required context field."""


class BackendError(EngineError):
    """A generative-model backend failed for good (retries exhausted)."""


class TransientBackendError(BackendError):
    """A backend failure worth retrying (network hiccup, 5xx, timeout)."""


class RateLimited(TransientBackendError):
    """Backend asked us to slow down; carries an optional wait hint."""

    def __init__(self, message: str, retry_after_s: float | None = None):
        super().__init__(message)
        self.retry_after_s = retry_after_s


class InputTooLongError(BackendError):
    """The edit model rejected the request because the input exceeds its limit."""


class MockScriptError(BackendError):
    """The mock backend received a request its script does not cover."""


class ToolchainError(EngineError):
    """A compiler or interpreter required by a language profile is missing."""


class WorkspaceError(EngineError):
    """Could not create or populate the scratch workspace for execution."""
