"""Model backends for drafting, editing, and bug-summary completion.

Two implementations of one small interface:

* MockBackend replays scripted responses keyed on request contents.  It is a
  pure function of (request, seed, script), does no I/O, and makes the whole
  engine bit-reproducible in tests.
* HTTPBackend talks to an OpenAI-compatible chat-completions endpoint.  Edit
  requests are wrapped into a fixed chat prompt because dedicated edit
  endpoints are no longer generally available.

Batch sampling walks a linear temperature schedule from 0 (deterministic
head) up to t_max, retrying transient failures with exponential backoff and
honoring rate limits by waiting rather than failing.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .errors import (
    BackendError,
    InputTooLongError,
    MockScriptError,
    RateLimited,
    TransientBackendError,
)

DEFAULT_TIMEOUT_S = 120.0
DEFAULT_ATTEMPTS = 5
DEFAULT_BACKOFF_BASE_S = 2.0
DEFAULT_RATE_LIMIT_WAITS = 20
DEFAULT_API_KEY_ENV = "CODEBEAM_API_KEY"


@dataclass(frozen=True)
class EditRequest:
    """Source text plus the instruction describing how to change it."""

    input: str
    instruction: str
    temperature: float = 0.0
    seed: int | None = None
    role: str = "debug"  # "synth" for drafts, "debug" for repairs


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 256

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be at least 1")


@dataclass(frozen=True)
class TemperatureSchedule:
    """Linear ramp over a batch: sample i runs at t_max * i / (n - 1)."""

    n: int
    t_max: float = 1.0

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("schedule length must be non-negative")
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")


def temperature(schedule: TemperatureSchedule, i: int) -> float:
    if not 0 <= i < schedule.n:
        raise IndexError(f"sample index {i} outside schedule of length {schedule.n}")
    # dividing first keeps the endpoints exactly 0 and t_max
    return schedule.t_max * (i / max(1, schedule.n - 1))


class Backend(Protocol):
    def edit(self, request: EditRequest) -> str: ...

    def complete(self, request: CompletionRequest) -> str: ...


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = DEFAULT_ATTEMPTS
    backoff_base_s: float = DEFAULT_BACKOFF_BASE_S
    rate_limit_waits: int = DEFAULT_RATE_LIMIT_WAITS
    sleep: Callable[[float], None] = time.sleep


def call_with_retries(fn: Callable[[], str], policy: RetryPolicy | None = None) -> str:
    """Run a backend call, waiting out rate limits and retrying transients.

    Rate-limit waits do not consume retry attempts (but are capped so a
    stuck endpoint cannot wait forever); other transient failures consume
    one attempt each with exponential backoff between tries.
    """
    policy = policy or RetryPolicy()
    attempt = 0
    waits = 0
    while True:
        try:
            return fn()
        except RateLimited as exc:
            waits += 1
            if waits > policy.rate_limit_waits:
                raise BackendError(
                    f"rate limited {waits} times without recovery"
                ) from exc
            delay = exc.retry_after_s
            if delay is None:
                delay = policy.backoff_base_s * 2 ** min(waits - 1, 6)
            policy.sleep(delay)
        except TransientBackendError as exc:
            attempt += 1
            if attempt >= policy.attempts:
                raise BackendError(
                    f"backend failed after {attempt} attempts: {exc}"
                ) from exc
            policy.sleep(policy.backoff_base_s * 2 ** (attempt - 1))


def sample_edits(
    backend: Backend,
    base: EditRequest,
    schedule: TemperatureSchedule,
    policy: RetryPolicy | None = None,
) -> list[str]:
    """n edit samples in schedule order, the i-th at temperature(schedule, i).

    Each sample gets its own seed (base.seed + i, or just i) so a scripted
    backend can vary responses across one batch.
    """
    results = []
    for i in range(schedule.n):
        request = replace(
            base,
            temperature=temperature(schedule, i),
            seed=i if base.seed is None else base.seed + i,
        )
        results.append(call_with_retries(lambda r=request: backend.edit(r), policy))
    return results


def complete_text(
    backend: Backend,
    request: CompletionRequest,
    policy: RetryPolicy | None = None,
) -> str:
    return call_with_retries(lambda: backend.complete(request), policy).strip()


def edit_fingerprint(request: EditRequest) -> str:
    """Stable digest of the request fields a mock script can key on."""
    material = "\x00".join(
        [
            request.input,
            request.instruction,
            f"{request.temperature:.3f}",
            str(request.seed),
        ]
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


_MOCK_ERRORS = {
    "input_too_long": InputTooLongError,
    "backend": BackendError,
    "transient": TransientBackendError,
}


class MockBackend:
    """Deterministic scripted backend; never touches the network.

    The script is a JSON object {"rules": [...]}.  Each rule carries match
    conditions and either a "responses" list or an "error" name.  Conditions
    are ANDed; the first matching rule wins:

      edit rules:       "input", "input_contains", "instruction",
                        "instruction_contains", "fingerprint"
      completion rules: "prompt", "prompt_contains"

    A matching edit rule answers with responses[seed % len(responses)]
    (seed 0 when unset); completion rules always answer responses[0].
    Error names: "input_too_long", "backend", "transient".
    """

    def __init__(self, script: dict) -> None:
        rules = script.get("rules")
        if not isinstance(rules, list):
            raise MockScriptError("mock script must carry a 'rules' list")
        for i, rule in enumerate(rules):
            if not isinstance(rule, dict):
                raise MockScriptError(f"rule {i} is not an object")
            if "error" in rule:
                if rule["error"] not in _MOCK_ERRORS:
                    raise MockScriptError(
                        f"rule {i} names unknown error '{rule['error']}'"
                    )
            elif not rule.get("responses"):
                raise MockScriptError(f"rule {i} has neither responses nor error")
        self._rules = rules

    @classmethod
    def from_file(cls, path: str | Path) -> "MockBackend":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def edit(self, request: EditRequest) -> str:
        for rule in self._rules:
            if self._matches_edit(rule, request):
                self._maybe_raise(rule)
                responses = rule["responses"]
                return responses[(request.seed or 0) % len(responses)]
        raise MockScriptError(
            "no rule matches edit request "
            f"(instruction={request.instruction[:80]!r}, "
            f"input={request.input[:80]!r}, seed={request.seed})"
        )

    def complete(self, request: CompletionRequest) -> str:
        for rule in self._rules:
            if self._matches_completion(rule, request):
                self._maybe_raise(rule)
                return rule["responses"][0]
        raise MockScriptError(
            f"no rule matches completion request (prompt={request.prompt[:80]!r})"
        )

    @staticmethod
    def _maybe_raise(rule: dict) -> None:
        if "error" in rule:
            raise _MOCK_ERRORS[rule["error"]](
                rule.get("message", f"scripted {rule['error']} error")
            )

    @staticmethod
    def _matches_edit(rule: dict, request: EditRequest) -> bool:
        if "prompt" in rule or "prompt_contains" in rule:
            return False
        checks = [
            ("input", lambda v: request.input == v),
            ("input_contains", lambda v: v in request.input),
            ("instruction", lambda v: request.instruction == v),
            ("instruction_contains", lambda v: v in request.instruction),
            ("fingerprint", lambda v: edit_fingerprint(request) == v),
        ]
        seen = False
        for key, check in checks:
            if key in rule:
                seen = True
                if not check(rule[key]):
                    return False
        return seen

    @staticmethod
    def _matches_completion(rule: dict, request: CompletionRequest) -> bool:
        checks = [
            ("prompt", lambda v: request.prompt == v),
            ("prompt_contains", lambda v: v in request.prompt),
        ]
        seen = False
        for key, check in checks:
            if key in rule:
                seen = True
                if not check(rule[key]):
                    return False
        return seen


# Fixed wrapper mapping an edit request onto a chat endpoint.
EDIT_SYSTEM_PROMPT = (
    "You edit code. Apply the instruction to the code and reply with the "
    "complete edited code only, no explanations."
)
EDIT_USER_TEMPLATE = "Instruction: {instruction}\n\nCode:\n{input}"

_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)(?:\n```|\Z)", re.DOTALL)

_CONTEXT_LENGTH_MARKERS = (
    "context_length_exceeded",
    "maximum context length",
    "context length",
    "too many tokens",
    "input is too long",
)


def strip_code_fences(text: str) -> str:
    """First fenced code block if present, else the text unchanged."""
    match = _FENCE_RE.search(text)
    if match:
        return match.group(1)
    return text


@dataclass(frozen=True)
class HTTPBackendConfig:
    base_url: str
    synth_model: str
    debug_model: str
    text_model: str
    api_key_env: str = DEFAULT_API_KEY_ENV
    timeout_s: float = DEFAULT_TIMEOUT_S
    extra_headers: dict = field(default_factory=dict)


class HTTPBackend:
    """OpenAI-compatible chat-completions client for all three model roles.

    The API key is read from the environment variable named in the config;
    keys never live in config files.
    """

    def __init__(self, config: HTTPBackendConfig, client: httpx.Client | None = None):
        self._config = config
        self._client = client or httpx.Client(timeout=config.timeout_s)

    def close(self) -> None:
        self._client.close()

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self._config.api_key_env)
        if not key:
            raise BackendError(
                f"environment variable {self._config.api_key_env} is not set"
            )
        headers = {"Authorization": f"Bearer {key}"}
        headers.update(self._config.extra_headers)
        return headers

    def _chat(self, model: str, messages: list[dict], temperature: float,
              max_tokens: int | None = None) -> str:
        payload: dict = {
            "model": model,
            "messages": messages,
            "temperature": temperature,
        }
        if max_tokens is not None:
            payload["max_tokens"] = max_tokens
        url = self._config.base_url.rstrip("/") + "/chat/completions"
        try:
            response = self._client.post(url, json=payload, headers=self._headers())
        except httpx.HTTPError as exc:
            raise TransientBackendError(f"request failed: {exc}") from exc
        return self._parse(response)

    @staticmethod
    def _parse(response: httpx.Response) -> str:
        status = response.status_code
        if status == 429:
            retry_after = response.headers.get("Retry-After")
            delay = None
            if retry_after is not None:
                try:
                    delay = float(retry_after)
                except ValueError:
                    delay = None
            raise RateLimited("rate limited by endpoint", retry_after_s=delay)
        if status >= 500:
            raise TransientBackendError(f"server error {status}")
        if status >= 400:
            body = response.text.lower()
            if status == 400 and any(m in body for m in _CONTEXT_LENGTH_MARKERS):
                raise InputTooLongError("request exceeds the model's input limit")
            raise BackendError(f"endpoint rejected request with status {status}")
        try:
            data = response.json()
            content = data["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise BackendError(f"malformed response body: {exc}") from exc
        if not isinstance(content, str):
            raise BackendError("response content is not text")
        return content

    def edit(self, request: EditRequest) -> str:
        model = (
            self._config.synth_model
            if request.role == "synth"
            else self._config.debug_model
        )
        messages = [
            {"role": "system", "content": EDIT_SYSTEM_PROMPT},
            {
                "role": "user",
                "content": EDIT_USER_TEMPLATE.format(
                    instruction=request.instruction, input=request.input
                ),
            },
        ]
        return strip_code_fences(self._chat(model, messages, request.temperature))

    def complete(self, request: CompletionRequest) -> str:
        messages = [{"role": "user", "content": request.prompt}]
        return self._chat(
            self._config.text_model,
            messages,
            request.temperature,
            max_tokens=request.max_tokens,
        )
