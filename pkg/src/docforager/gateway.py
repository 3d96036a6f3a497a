"""LLM gateway: template rendering, model-role routing, streaming, parsing.

The five prompt kinds are fixed text assets with ``{Placeholder}`` slots.
Rendering is single-pass, so bound values are never re-scanned for
placeholders. Sampling parameters are enforced here at the boundary:
action kinds run at temperature 0 / 256 tokens, suggestions at 0.7 / 128.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import threading
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import (
    BackendUnavailable,
    InvalidParameters,
    MissingBinding,
    UnparseableResponse,
)

PROMPT_KINDS = ("search", "ask_doc", "detect_attributes", "synthesize", "suggestions")

ACTION_TEMPERATURE = 0.0
ACTION_MAX_TOKENS = 256
SUGGESTION_TEMPERATURE = 0.7
SUGGESTION_MAX_TOKENS = 128

# Returned by the mock backend for any prompt without a scripted fixture.
# Deliberately unparseable so retry/error-cell paths engage downstream.
SENTINEL_RESPONSE = "[mock backend: no scripted response for this prompt]"

REPAIR_INSTRUCTION = "Respond with only the JSON object."

_TEMPLATE_FILES = {
    "search": "search.txt",
    "ask_doc": "ask_doc.txt",
    "detect_attributes": "detect_attributes.txt",
    "synthesize": "synthesize.txt",
    "suggestions": "suggestions.txt",
}
ASK_DOC_EXAMPLES_ASSET = "ask_doc_examples_v1.txt"

_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z]+)\}")


def _load_asset(name: str) -> str:
    return resources.files("docforager.templates").joinpath(name).read_text(encoding="utf-8")


def ask_doc_examples() -> str:
    """The shipped demonstration Q/A pairs for the per-document ask prompt."""
    return _load_asset(ASK_DOC_EXAMPLES_ASSET)


def _format_binding(name: str, value) -> str:
    if name == "SampleDocuments":
        if isinstance(value, str):
            value = [value]
        return "\n".join(f"Sample document: {text}" for text in value)
    if isinstance(value, (list, tuple)):
        return json.dumps(list(value), ensure_ascii=False)
    return str(value)


def render_prompt(kind: str, bindings: dict) -> str:
    """Render one of the five prompt kinds; every placeholder must be bound.

    List-valued bindings render as JSON arrays, except ``SampleDocuments``,
    which renders as one ``Sample document: ...`` line per entry.
    """
    if kind not in _TEMPLATE_FILES:
        raise ValueError(f"unknown prompt kind {kind!r}")
    template = _load_asset(_TEMPLATE_FILES[kind])
    required = set(_PLACEHOLDER_RE.findall(template))
    missing = required - set(bindings)
    if missing:
        raise MissingBinding(f"{kind}: unbound placeholders {sorted(missing)}")
    rendered = {name: _format_binding(name, bindings[name]) for name in required}
    return _PLACEHOLDER_RE.sub(lambda m: rendered[m.group(1)], template)


@dataclass(frozen=True)
class ChatRequest:
    role: str  # "fast" | "strong"
    prompt: str
    kind: str
    temperature: float = ACTION_TEMPERATURE
    max_tokens: int = ACTION_MAX_TOKENS
    stream: bool = True


def action_request(kind: str, role: str, prompt: str) -> ChatRequest:
    return ChatRequest(role=role, prompt=prompt, kind=kind)


def suggestion_request(prompt: str, role: str = "fast") -> ChatRequest:
    return ChatRequest(
        role=role,
        prompt=prompt,
        kind="suggestions",
        temperature=SUGGESTION_TEMPERATURE,
        max_tokens=SUGGESTION_MAX_TOKENS,
    )


@dataclass
class LlmResponse:
    chunks: list[str]
    finish_reason: str = "complete"  # complete | truncated | error

    @property
    def text(self) -> str:
        return "".join(self.chunks)


@dataclass(frozen=True)
class AuditEntry:
    kind: str
    role: str
    model: str
    temperature: float
    max_tokens: int
    prompt: str


def prompt_key(role: str, prompt: str) -> str:
    """Fixture key for the mock backend: hash of (role, prompt)."""
    return hashlib.sha256(f"{role}\n{prompt}".encode("utf-8")).hexdigest()[:16]


class MockBackend:
    """Deterministic backend replaying scripted fixtures.

    Fixtures come from an in-memory dict (keyed either by ``prompt_key`` or by
    the raw prompt string) and/or a directory of ``{prompt_hash}.txt`` files.
    Unscripted prompts get SENTINEL_RESPONSE. ``delay`` simulates per-request
    model latency.
    """

    def __init__(
        self,
        fixtures: dict[str, str] | None = None,
        fixtures_dir: str | Path | None = None,
        *,
        delay: float = 0.0,
        chunk_size: int = 48,
    ):
        self.fixtures = dict(fixtures or {})
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None
        self.delay = delay
        self.chunk_size = chunk_size
        self.call_count = 0
        self._count_lock = threading.Lock()

    def script(self, role: str, prompt: str, response: str) -> None:
        self.fixtures[prompt_key(role, prompt)] = response

    def _lookup(self, role: str, prompt: str) -> str:
        key = prompt_key(role, prompt)
        if key in self.fixtures:
            return self.fixtures[key]
        if prompt in self.fixtures:
            return self.fixtures[prompt]
        if self.fixtures_dir is not None:
            path = self.fixtures_dir / f"{key}.txt"
            if path.exists():
                return path.read_text(encoding="utf-8")
        return SENTINEL_RESPONSE

    def complete(self, model: str, request: ChatRequest) -> LlmResponse:
        with self._count_lock:
            self.call_count += 1
        if self.delay:
            time.sleep(self.delay)
        text = self._lookup(request.role, request.prompt)
        if len(text) <= 1:
            chunks = [text]
        else:
            size = min(self.chunk_size, math.ceil(len(text) / 2))
            chunks = [text[i : i + size] for i in range(0, len(text), size)]
        return LlmResponse(chunks=chunks)


class HttpBackend:
    """OpenAI-style chat-completions backend (streaming SSE)."""

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        *,
        retries: int = 0,
        timeout: float = 120.0,
        transport=None,
    ):
        # Retrying is owned by the gateway; backend-level retries default off.
        import httpx

        self.base_url = base_url.rstrip("/")
        self.retries = retries
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(headers=headers, timeout=timeout, transport=transport)

    def _stream_once(self, model: str, request: ChatRequest) -> LlmResponse:
        body = {
            "model": model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "stream": True,
        }
        chunks: list[str] = []
        finish = "complete"
        with self._client.stream("POST", f"{self.base_url}/chat/completions", json=body) as resp:
            resp.raise_for_status()
            for line in resp.iter_lines():
                if not line.startswith("data:"):
                    continue
                data = line[len("data:"):].strip()
                if data == "[DONE]":
                    break
                event = json.loads(data)
                choice = event["choices"][0]
                piece = choice.get("delta", {}).get("content")
                if piece:
                    chunks.append(piece)
                if choice.get("finish_reason") == "length":
                    finish = "truncated"
        return LlmResponse(chunks=chunks, finish_reason=finish)

    def complete(self, model: str, request: ChatRequest) -> LlmResponse:
        import httpx

        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                return self._stream_once(model, request)
            except (httpx.HTTPError, json.JSONDecodeError, KeyError) as err:
                last_error = err
        raise BackendUnavailable(f"LLM backend {self.base_url}: {last_error}")


class LlmGateway:
    """Role-addressed completion front-end with an audit log and retry.

    ``models`` maps the two roles (fast/strong) to backend model names. Every
    completed request is appended to ``audit_log``; ``call_count`` counts
    backend invocations (including retries).
    """

    def __init__(self, backend, models: dict[str, str] | None = None, *, retries: int = 1):
        self.backend = backend
        self.models = models or {"fast": "mock-fast", "strong": "mock-strong"}
        self.retries = retries
        self.audit_log: list[AuditEntry] = []

    @property
    def call_count(self) -> int:
        return getattr(self.backend, "call_count", len(self.audit_log))

    def resolve_model(self, role: str) -> str:
        try:
            return self.models[role]
        except KeyError:
            raise InvalidParameters(f"unknown model role {role!r}") from None

    def _check_parameters(self, request: ChatRequest) -> None:
        if request.kind == "suggestions":
            expected = (SUGGESTION_TEMPERATURE, SUGGESTION_MAX_TOKENS)
        else:
            expected = (ACTION_TEMPERATURE, ACTION_MAX_TOKENS)
        if (request.temperature, request.max_tokens) != expected:
            raise InvalidParameters(
                f"{request.kind} requests must use temperature={expected[0]}, "
                f"max_tokens={expected[1]}; got ({request.temperature}, {request.max_tokens})"
            )

    def complete(self, request: ChatRequest) -> LlmResponse:
        self._check_parameters(request)
        model = self.resolve_model(request.role)
        last_error: BackendUnavailable | None = None
        for _ in range(self.retries + 1):
            try:
                response = self.backend.complete(model, request)
                break
            except BackendUnavailable as err:
                last_error = err
        else:
            raise last_error  # type: ignore[misc]
        self.audit_log.append(
            AuditEntry(
                kind=request.kind,
                role=request.role,
                model=model,
                temperature=request.temperature,
                max_tokens=request.max_tokens,
                prompt=request.prompt,
            )
        )
        return response


# --- response parsing ---

def _balanced_candidates(text: str, open_ch: str, close_ch: str):
    """Yield balanced {...} or [...] regions, honoring JSON string escapes."""
    start = text.find(open_ch)
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == open_ch:
                depth += 1
            elif ch == close_ch:
                depth -= 1
                if depth == 0:
                    yield text[start : i + 1]
                    break
        start = text.find(open_ch, start + 1)


def _first_json_object(text: str) -> dict:
    for candidate in _balanced_candidates(text, "{", "}"):
        try:
            obj = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    raise UnparseableResponse(f"no JSON object found in response: {text[:120]!r}")


def _string_list(value, where: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise UnparseableResponse(f"{where} must be a list of strings")
    return list(value)


def parse_snippets(response_text: str) -> list[str]:
    """Extract the "snippets" string list, tolerating surrounding prose."""
    obj = _first_json_object(response_text)
    if "snippets" not in obj:
        raise UnparseableResponse('response object has no "snippets" key')
    return _string_list(obj["snippets"], '"snippets"')


def parse_suggestions(response_text: str) -> tuple[list[str], list[str]]:
    """Extract (suggested_searches, suggested_questions); a missing key is empty."""
    obj = _first_json_object(response_text)
    searches = _string_list(obj.get("suggested_searches", []), '"suggested_searches"')
    questions = _string_list(obj.get("suggested_questions", []), '"suggested_questions"')
    return searches, questions


_BULLET_RE = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s+(.*)$")
_NULL_ITEMS = frozenset({"none", "n/a", "nothing", "no new attributes"})


def _clean_attribute(item: str) -> str | None:
    item = item.strip().strip('"').strip("'").strip()
    if not item or item.casefold().rstrip(".") in _NULL_ITEMS:
        return None
    return item


def parse_attributes(response_text: str) -> list[str]:
    """Parse attribute names from a JSON string list, with bullet/comma fallbacks.

    Returned names keep their original casing; callers normalize for
    comparison. Placeholder items ("none", "n/a") are dropped.
    """
    for candidate in _balanced_candidates(response_text, "[", "]"):
        try:
            value = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(value, list) and all(isinstance(v, str) for v in value):
            return [a for a in (_clean_attribute(v) for v in value) if a]

    lines = response_text.splitlines()
    bullets = [m.group(1) for m in (_BULLET_RE.match(line) for line in lines) if m]
    if bullets:
        return [a for a in (_clean_attribute(b) for b in bullets) if a]

    stripped = response_text.strip()
    if stripped and "\n" not in stripped and len(stripped) <= 200:
        items = [a for a in (_clean_attribute(p) for p in stripped.split(",")) if a]
        if "," in stripped:
            return items
        # A bare single-line reply only counts as one attribute when it looks
        # like a short noun phrase, not prose.
        if len(items) == 1 and len(items[0].split()) <= 5 and not set(items[0]) & set(".!?:[]{}"):
            return items
    raise UnparseableResponse(f"could not parse attributes from: {response_text[:120]!r}")
