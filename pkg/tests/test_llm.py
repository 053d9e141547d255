import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from codebeam import (
    BackendError,
    CompletionRequest,
    EditRequest,
    InputTooLongError,
    MockScriptError,
    RateLimited,
    TemperatureSchedule,
    TransientBackendError,
)
from codebeam.llm import (
    EDIT_SYSTEM_PROMPT,
    HTTPBackend,
    HTTPBackendConfig,
    MockBackend,
    RetryPolicy,
    call_with_retries,
    complete_text,
    edit_fingerprint,
    sample_edits,
    strip_code_fences,
    temperature,
)


class TestTemperatureSchedule:
    def test_formula_endpoints(self):
        schedule = TemperatureSchedule(n=10, t_max=1.0)
        assert temperature(schedule, 0) == 0.0
        assert temperature(schedule, 9) == 1.0

    def test_intermediate_values(self):
        schedule = TemperatureSchedule(n=5, t_max=0.8)
        assert temperature(schedule, 2) == pytest.approx(0.8 * 2 / 4)

    def test_single_sample_is_deterministic_head(self):
        assert temperature(TemperatureSchedule(n=1, t_max=2.0), 0) == 0.0

    @pytest.mark.parametrize("n", [1, 2, 3, 7, 64])
    def test_monotone_and_bounded(self, n):
        schedule = TemperatureSchedule(n=n, t_max=0.7)
        values = [temperature(schedule, i) for i in range(n)]
        assert values[0] == 0.0
        assert values[-1] == (0.7 if n > 1 else 0.0)
        assert all(a <= b for a, b in zip(values, values[1:]))

    def test_out_of_range_index(self):
        schedule = TemperatureSchedule(n=3)
        with pytest.raises(IndexError):
            temperature(schedule, 3)
        with pytest.raises(IndexError):
            temperature(schedule, -1)

    def test_invalid_schedule(self):
        with pytest.raises(ValueError):
            TemperatureSchedule(n=-1)
        with pytest.raises(ValueError):
            TemperatureSchedule(n=2, t_max=-0.5)


class RecordingBackend:
    """Captures every request; answers edits with tagged strings."""

    def __init__(self, completion="summary"):
        self.edits = []
        self.completions = []
        self._completion = completion

    def edit(self, request):
        self.edits.append(request)
        return f"edit-{len(self.edits) - 1}"

    def complete(self, request):
        self.completions.append(request)
        return self._completion


class TestSampleEdits:
    def test_order_temperatures_and_seeds(self):
        backend = RecordingBackend()
        base = EditRequest(input="code", instruction="fix it")
        out = sample_edits(backend, base, TemperatureSchedule(n=4, t_max=0.9))
        assert out == ["edit-0", "edit-1", "edit-2", "edit-3"]
        assert [r.temperature for r in backend.edits] == pytest.approx(
            [0.0, 0.3, 0.6, 0.9]
        )
        assert [r.seed for r in backend.edits] == [0, 1, 2, 3]
        assert all(r.input == "code" and r.instruction == "fix it" for r in backend.edits)

    def test_base_seed_offsets_each_sample(self):
        backend = RecordingBackend()
        base = EditRequest(input="c", instruction="i", seed=100)
        sample_edits(backend, base, TemperatureSchedule(n=3))
        assert [r.seed for r in backend.edits] == [100, 101, 102]

    def test_empty_schedule(self):
        backend = RecordingBackend()
        out = sample_edits(backend, EditRequest("c", "i"), TemperatureSchedule(n=0))
        assert out == []
        assert backend.edits == []


class TestCompleteText:
    def test_strips_surrounding_whitespace(self):
        backend = RecordingBackend(completion="  the bug is X \n")
        assert complete_text(backend, CompletionRequest(prompt="p")) == "the bug is X"

    def test_max_tokens_validated(self):
        with pytest.raises(ValueError):
            CompletionRequest(prompt="p", max_tokens=0)


class TestRetryPolicy:
    def test_transient_failures_consume_attempts_with_backoff(self):
        sleeps = []
        calls = []

        def flaky():
            calls.append(1)
            if len(calls) < 3:
                raise TransientBackendError("hiccup")
            return "ok"

        policy = RetryPolicy(attempts=5, backoff_base_s=2.0, sleep=sleeps.append)
        assert call_with_retries(flaky, policy) == "ok"
        assert sleeps == [2.0, 4.0]

    def test_exhausted_retries_raise_backend_error_with_cause(self):
        def broken():
            raise TransientBackendError("still down")

        policy = RetryPolicy(attempts=3, backoff_base_s=0.0, sleep=lambda _: None)
        with pytest.raises(BackendError, match="3 attempts") as info:
            call_with_retries(broken, policy)
        assert isinstance(info.value.__cause__, TransientBackendError)

    def test_rate_limits_wait_without_consuming_attempts(self):
        sleeps = []
        calls = []

        def limited():
            calls.append(1)
            if len(calls) <= 7:  # more 429s than the attempt limit
                raise RateLimited("slow down", retry_after_s=0.5)
            return "ok"

        policy = RetryPolicy(attempts=3, sleep=sleeps.append)
        assert call_with_retries(limited, policy) == "ok"
        assert sleeps == [0.5] * 7

    def test_rate_limit_without_hint_uses_backoff(self):
        sleeps = []
        calls = []

        def limited():
            calls.append(1)
            if len(calls) == 1:
                raise RateLimited("slow down")
            return "ok"

        policy = RetryPolicy(backoff_base_s=1.5, sleep=sleeps.append)
        assert call_with_retries(limited, policy) == "ok"
        assert sleeps == [1.5]

    def test_endless_rate_limiting_eventually_fails(self):
        def always_limited():
            raise RateLimited("slow down", retry_after_s=0.0)

        policy = RetryPolicy(rate_limit_waits=4, sleep=lambda _: None)
        with pytest.raises(BackendError, match="rate limited"):
            call_with_retries(always_limited, policy)

    def test_permanent_errors_are_not_retried(self):
        calls = []

        def rejected():
            calls.append(1)
            raise BackendError("bad request")

        with pytest.raises(BackendError, match="bad request"):
            call_with_retries(rejected, RetryPolicy(sleep=lambda _: None))
        assert len(calls) == 1

    def test_input_too_long_is_not_retried(self):
        calls = []

        def too_long():
            calls.append(1)
            raise InputTooLongError("over the limit")

        with pytest.raises(InputTooLongError):
            call_with_retries(too_long, RetryPolicy(sleep=lambda _: None))
        assert len(calls) == 1


class TestMockBackend:
    def script(self):
        return {
            "rules": [
                {"instruction": "synthesize", "responses": ["a", "b", "c"]},
                {"input_contains": "MARKER", "responses": ["marked"]},
                {"instruction_contains": "sum", "responses": ["summed"]},
                {"prompt_contains": "bug is that", "responses": [" input handling."]},
            ]
        }

    def test_exact_instruction_match_with_seed_rotation(self):
        backend = MockBackend(self.script())
        req = EditRequest(input="x", instruction="synthesize")
        assert backend.edit(req) == "a"  # seed None -> 0
        assert backend.edit(EditRequest("x", "synthesize", seed=1)) == "b"
        assert backend.edit(EditRequest("x", "synthesize", seed=5)) == "c"  # 5 % 3

    def test_first_matching_rule_wins(self):
        backend = MockBackend(self.script())
        # matches both rule 0 (instruction) and rule 1 (input_contains)
        req = EditRequest(input="has MARKER", instruction="synthesize")
        assert backend.edit(req) == "a"

    def test_contains_matchers(self):
        backend = MockBackend(self.script())
        assert backend.edit(EditRequest("xx MARKER yy", "other")) == "marked"
        assert backend.edit(EditRequest("code", "fix the sum here")) == "summed"

    def test_fingerprint_match(self):
        req = EditRequest(input="code", instruction="fix", temperature=0.5, seed=3)
        backend = MockBackend(
            {"rules": [{"fingerprint": edit_fingerprint(req), "responses": ["hit"]}]}
        )
        assert backend.edit(req) == "hit"
        with pytest.raises(MockScriptError):
            backend.edit(EditRequest("code", "fix", temperature=0.5, seed=4))

    def test_completion_rules(self):
        backend = MockBackend(self.script())
        out = backend.complete(CompletionRequest(prompt="... The bug is that..."))
        assert out == " input handling."

    def test_completion_rules_do_not_match_edits(self):
        backend = MockBackend(
            {"rules": [{"prompt_contains": "", "responses": ["text"]}]}
        )
        with pytest.raises(MockScriptError):
            backend.edit(EditRequest("anything", "anything"))

    def test_unmatched_request_reports_context(self):
        backend = MockBackend(self.script())
        with pytest.raises(MockScriptError, match="no rule matches"):
            backend.edit(EditRequest("zzz", "zzz"))

    @pytest.mark.parametrize(
        "error,exc",
        [
            ("input_too_long", InputTooLongError),
            ("backend", BackendError),
            ("transient", TransientBackendError),
        ],
    )
    def test_error_rules(self, error, exc):
        backend = MockBackend(
            {"rules": [{"instruction": "boom", "error": error}]}
        )
        with pytest.raises(exc):
            backend.edit(EditRequest("x", "boom"))

    def test_script_validation(self):
        with pytest.raises(MockScriptError, match="rules"):
            MockBackend({})
        with pytest.raises(MockScriptError, match="neither"):
            MockBackend({"rules": [{"instruction": "x"}]})
        with pytest.raises(MockScriptError, match="unknown error"):
            MockBackend({"rules": [{"instruction": "x", "error": "nope"}]})

    def test_from_file(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text(json.dumps(self.script()))
        backend = MockBackend.from_file(path)
        assert backend.edit(EditRequest("x", "synthesize")) == "a"

    def test_pure_function_of_request_and_seed(self):
        one = MockBackend(self.script())
        two = MockBackend(self.script())
        req = EditRequest("x", "synthesize", temperature=0.3, seed=2)
        assert one.edit(req) == two.edit(req)


class TestFingerprint:
    def test_stable(self):
        a = EditRequest("code", "fix", temperature=0.25, seed=1)
        assert edit_fingerprint(a) == edit_fingerprint(
            EditRequest("code", "fix", temperature=0.25, seed=1)
        )

    def test_sensitive_to_every_field(self):
        base = EditRequest("code", "fix", temperature=0.25, seed=1)
        variants = [
            EditRequest("code2", "fix", temperature=0.25, seed=1),
            EditRequest("code", "fix2", temperature=0.25, seed=1),
            EditRequest("code", "fix", temperature=0.3, seed=1),
            EditRequest("code", "fix", temperature=0.25, seed=2),
        ]
        prints = {edit_fingerprint(v) for v in variants}
        assert edit_fingerprint(base) not in prints
        assert len(prints) == 4


class TestStripCodeFences:
    def test_plain_text_unchanged(self):
        assert strip_code_fences("print(1)") == "print(1)"

    def test_fenced_block_extracted(self):
        text = "Here you go:\n```python\nprint(1)\nprint(2)\n```\nEnjoy."
        assert strip_code_fences(text) == "print(1)\nprint(2)"

    def test_unterminated_fence_takes_the_rest(self):
        assert strip_code_fences("```\nprint(1)") == "print(1)"


class _StubHandler(BaseHTTPRequestHandler):
    state = None  # injected by the fixture

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        self.state["requests"].append(
            {"path": self.path, "body": body, "auth": self.headers.get("Authorization")}
        )
        status, payload, headers = self.state["responses"].pop(0)
        raw = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
        self.send_response(status)
        for name, value in headers.items():
            self.send_header(name, value)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def log_message(self, *args):
        pass


def chat_reply(text):
    return (200, {"choices": [{"message": {"content": text}}]}, {})


@pytest.fixture
def stub_server():
    state = {"requests": [], "responses": []}
    _StubHandler.state = state
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(
        target=lambda: server.serve_forever(poll_interval=0.02), daemon=True
    )
    thread.start()
    try:
        yield state, f"http://127.0.0.1:{server.server_address[1]}/v1"
    finally:
        server.shutdown()
        server.server_close()


@pytest.fixture
def http_backend(stub_server, monkeypatch):
    state, base_url = stub_server
    monkeypatch.setenv("TEST_LLM_KEY", "sekrit")
    backend = HTTPBackend(
        HTTPBackendConfig(
            base_url=base_url,
            synth_model="draft-model",
            debug_model="repair-model",
            text_model="prose-model",
            api_key_env="TEST_LLM_KEY",
            timeout_s=5.0,
        )
    )
    yield state, backend
    backend.close()


fast_policy = RetryPolicy(attempts=5, backoff_base_s=0.001, sleep=lambda _: None)


class TestHTTPBackend:
    def test_edit_request_wrapping(self, http_backend):
        state, backend = http_backend
        state["responses"].append(chat_reply("print(42)"))
        out = backend.edit(
            EditRequest("print(1)", "make it print 42", temperature=0.5, role="debug")
        )
        assert out == "print(42)"
        sent = state["requests"][0]
        assert sent["path"].endswith("/chat/completions")
        assert sent["auth"] == "Bearer sekrit"
        assert sent["body"]["model"] == "repair-model"
        assert sent["body"]["temperature"] == 0.5
        system, user = sent["body"]["messages"]
        assert system == {"role": "system", "content": EDIT_SYSTEM_PROMPT}
        assert user["role"] == "user"
        assert "Instruction: make it print 42" in user["content"]
        assert "Code:\nprint(1)" in user["content"]

    def test_synth_role_uses_the_draft_model(self, http_backend):
        state, backend = http_backend
        state["responses"].append(chat_reply("draft"))
        backend.edit(EditRequest("prompt text", "task", role="synth"))
        assert state["requests"][0]["body"]["model"] == "draft-model"

    def test_code_fences_stripped_from_edits(self, http_backend):
        state, backend = http_backend
        state["responses"].append(chat_reply("Sure!\n```python\nprint(2)\n```"))
        assert backend.edit(EditRequest("c", "i")) == "print(2)"

    def test_completion_uses_text_model_and_max_tokens(self, http_backend):
        state, backend = http_backend
        state["responses"].append(chat_reply(" the input is mishandled."))
        out = backend.complete(CompletionRequest(prompt="The bug is that...", max_tokens=64))
        assert out == " the input is mishandled."
        body = state["requests"][0]["body"]
        assert body["model"] == "prose-model"
        assert body["max_tokens"] == 64
        assert body["messages"] == [{"role": "user", "content": "The bug is that..."}]

    def test_429_waits_then_succeeds(self, http_backend):
        state, backend = http_backend
        state["responses"].append((429, {"error": "slow down"}, {"Retry-After": "3"}))
        state["responses"].append(chat_reply("ok"))
        sleeps = []
        policy = RetryPolicy(attempts=2, sleep=sleeps.append)
        out = sample_edits(
            backend, EditRequest("c", "i"), TemperatureSchedule(n=1), policy
        )
        assert out == ["ok"]
        assert sleeps == [3.0]  # honored the Retry-After hint
        assert len(state["requests"]) == 2

    def test_server_errors_retried(self, http_backend):
        state, backend = http_backend
        state["responses"] += [(500, {"error": "boom"}, {}), (502, {"error": "boom"}, {})]
        state["responses"].append(chat_reply("recovered"))
        out = sample_edits(
            backend, EditRequest("c", "i"), TemperatureSchedule(n=1), fast_policy
        )
        assert out == ["recovered"]
        assert len(state["requests"]) == 3

    def test_exhausted_5xx_raises_backend_error(self, http_backend):
        state, backend = http_backend
        state["responses"] += [(500, {"error": "boom"}, {})] * 5
        with pytest.raises(BackendError, match="attempts"):
            sample_edits(backend, EditRequest("c", "i"), TemperatureSchedule(n=1), fast_policy)

    def test_400_context_length_maps_to_input_too_long(self, http_backend):
        state, backend = http_backend
        state["responses"].append(
            (400, {"error": {"code": "context_length_exceeded"}}, {})
        )
        with pytest.raises(InputTooLongError):
            backend.edit(EditRequest("huge", "i"))

    def test_other_400_is_permanent(self, http_backend):
        state, backend = http_backend
        state["responses"].append((400, {"error": "bad model"}, {}))
        with pytest.raises(BackendError) as info:
            backend.edit(EditRequest("c", "i"))
        assert not isinstance(info.value, (TransientBackendError, InputTooLongError))

    def test_malformed_body_is_permanent(self, http_backend):
        state, backend = http_backend
        state["responses"].append((200, {"unexpected": True}, {}))
        with pytest.raises(BackendError, match="malformed"):
            backend.edit(EditRequest("c", "i"))

    def test_missing_api_key_fails_before_any_request(self, stub_server, monkeypatch):
        state, base_url = stub_server
        monkeypatch.delenv("ABSENT_KEY", raising=False)
        backend = HTTPBackend(
            HTTPBackendConfig(
                base_url=base_url,
                synth_model="a",
                debug_model="b",
                text_model="c",
                api_key_env="ABSENT_KEY",
            )
        )
        with pytest.raises(BackendError, match="ABSENT_KEY"):
            backend.edit(EditRequest("c", "i"))
        assert state["requests"] == []
        backend.close()
