"""Chat-completion backends.

``HttpChatBackend`` talks to any OpenAI-compatible ``/chat/completions``
endpoint. The other backends are deterministic and exist so whole episodes
can be replayed in tests: ``ScriptedBackend`` (queued or digest-keyed
responses), ``PolicyBackend`` (a Python function of the conversation),
``RecordingBackend`` (writes a cassette) and ``ReplayBackend`` (reads one).
"""
from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

import httpx

logger = logging.getLogger(__name__)

ENV_BASE_URL = "PLANEXEC_LLM_BASE_URL"
ENV_MODEL = "PLANEXEC_LLM_MODEL"
ENV_API_KEY = "PLANEXEC_LLM_API_KEY"


class Role(str, enum.Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class Message:
    role: Role
    content: str

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        if self.role in (Role.SYSTEM, Role.USER) and not self.content:
            raise ValueError(f"{self.role.value} message must have content")


@dataclass(frozen=True)
class CompletionParams:
    max_completion_tokens: int = 65536
    temperature: float = 0.6
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self):
        if self.max_completion_tokens < 1:
            raise ValueError("max_completion_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be non-negative")

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(self.prompt_tokens + other.prompt_tokens,
                          self.completion_tokens + other.completion_tokens)

    def to_dict(self) -> dict:
        return {"prompt_tokens": self.prompt_tokens, "completion_tokens": self.completion_tokens}


class LLMError(RuntimeError):
    """A backend could not produce a completion."""


class CompletionBackend(Protocol):
    def complete(self, messages: Sequence[Message], params: CompletionParams) -> tuple[str, TokenUsage]:
        ...


def complete(messages: Sequence[Message], params: CompletionParams,
             backend: CompletionBackend) -> tuple[str, TokenUsage]:
    if not messages:
        raise ValueError("messages must not be empty")
    if messages[0].role is not Role.SYSTEM:
        raise ValueError("first message must be the system prompt")
    return backend.complete(messages, params)


def prompt_digest(messages: Sequence[Message]) -> str:
    """Stable key for a conversation: sha256 over the role/content pairs."""
    payload = json.dumps([[m.role.value, m.content] for m in messages],
                         ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def synthetic_usage(messages: Sequence[Message], text: str) -> TokenUsage:
    """Length/4 token estimate used by every non-live backend."""
    return TokenUsage(sum(len(m.content) for m in messages) // 4, len(text) // 4)


class ScriptedBackend:
    """Returns queued responses in turn order, or fixed responses by prompt digest.

    Digest-keyed responses are not consumed, so identical prompts always
    receive identical answers. Queued responses are consumed one per call.
    """

    def __init__(self, responses: Iterable[str] = (), by_digest: dict[str, str] | None = None):
        self._queue = deque(responses)
        self._by_digest = dict(by_digest or {})
        self._lock = threading.Lock()
        self.calls = 0

    def complete(self, messages, params):
        with self._lock:
            self.calls += 1
            digest = prompt_digest(messages)
            if digest in self._by_digest:
                text = self._by_digest[digest]
            elif self._queue:
                text = self._queue.popleft()
            else:
                raise LLMError("script underrun")
        return text, synthetic_usage(messages, text)


class PolicyBackend:
    """Backend whose reply is computed by ``policy(messages)``."""

    def __init__(self, policy: Callable[[Sequence[Message]], str]):
        self.policy = policy

    def complete(self, messages, params):
        text = self.policy(messages)
        return text, synthetic_usage(messages, text)


@dataclass
class HttpChatBackend:
    base_url: str
    model: str
    api_key: str = ""
    timeout: float = 600.0
    max_retries: int = 3
    backoff: float = 1.0
    client: httpx.Client | None = None
    sleep: Callable[[float], None] = time.sleep

    @classmethod
    def from_env(cls, **kwargs) -> "HttpChatBackend":
        try:
            base_url = os.environ[ENV_BASE_URL]
            model = os.environ[ENV_MODEL]
        except KeyError as exc:
            raise LLMError(f"environment variable {exc.args[0]} is not set") from None
        return cls(base_url=base_url, model=model, api_key=os.environ.get(ENV_API_KEY, ""), **kwargs)

    def _request(self, body: dict) -> dict:
        client = self.client or httpx.Client(timeout=self.timeout)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = self.base_url.rstrip("/") + "/chat/completions"
        try:
            resp = client.post(url, json=body, headers=headers)
        finally:
            if self.client is None:
                client.close()
        if resp.status_code >= 400:
            raise httpx.HTTPStatusError(f"HTTP {resp.status_code}: {resp.text[:200]}",
                                        request=resp.request, response=resp)
        return resp.json()

    def complete(self, messages, params):
        body = {
            "model": self.model,
            "messages": [{"role": m.role.value, "content": m.content} for m in messages],
            "max_tokens": params.max_completion_tokens,
            "temperature": params.temperature,
        }
        if params.stop_sequences:
            body["stop"] = list(params.stop_sequences)
        last: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                data = self._request(body)
                text = data["choices"][0]["message"]["content"] or ""
                usage = data.get("usage") or {}
                return text, TokenUsage(int(usage.get("prompt_tokens", 0)),
                                        int(usage.get("completion_tokens", 0)))
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                logger.warning("completion attempt %d failed: %s", attempt + 1, exc)
                last = exc
        raise LLMError(f"completion failed after {self.max_retries} retries: {last}")


@dataclass(frozen=True)
class CassetteRecord:
    digest: str
    response: str
    usage: TokenUsage = field(default_factory=TokenUsage)

    def to_json(self) -> str:
        return json.dumps({"digest": self.digest, "response": self.response,
                           "usage": self.usage.to_dict()}, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "CassetteRecord":
        d = json.loads(line)
        return cls(d["digest"], d["response"], TokenUsage(**d.get("usage", {})))


class RecordingBackend:
    """Wraps another backend and appends every call to a cassette file."""

    def __init__(self, inner: CompletionBackend, path: str | Path, lock: threading.Lock | None = None):
        self.inner = inner
        self.path = Path(path)
        self._lock = lock or threading.Lock()  # share one lock between recorders of the same file

    def complete(self, messages, params):
        text, usage = self.inner.complete(messages, params)
        record = CassetteRecord(prompt_digest(messages), text, usage)
        with self._lock, self.path.open("a", encoding="utf-8") as fh:
            fh.write(record.to_json() + "\n")
        return text, usage


def load_cassette(path: str | Path) -> list[CassetteRecord]:
    with open(path, encoding="utf-8") as fh:
        return [CassetteRecord.from_json(line) for line in fh if line.strip()]


def _common_prefix(a: str, b: str) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


class ReplayBackend:
    """Answers from recorded calls; each record is served once per occurrence."""

    def __init__(self, records: Iterable[CassetteRecord]):
        self._records: dict[str, deque[CassetteRecord]] = {}
        for rec in records:
            self._records.setdefault(rec.digest, deque()).append(rec)
        self._lock = threading.Lock()

    def complete(self, messages, params):
        digest = prompt_digest(messages)
        with self._lock:
            queue = self._records.get(digest)
            if queue is not None and not queue:
                raise LLMError(f"cassette exhausted for digest {digest}")
            if queue is None:
                known = sorted(self._records, key=lambda d: (-_common_prefix(d, digest), d))
                nearest = known[0] if known else "none"
                raise LLMError(f"cassette miss for digest {digest}; nearest recorded digest: {nearest}")
            rec = queue.popleft()
        return rec.response, rec.usage


def record_replay(cassette: str | Path | Iterable[CassetteRecord]) -> ReplayBackend:
    if isinstance(cassette, (str, Path)):
        cassette = load_cassette(cassette)
    return ReplayBackend(cassette)
