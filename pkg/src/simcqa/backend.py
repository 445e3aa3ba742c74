"""Chat-completion backends: a remote HTTP client and a scripted test double.

Every backend answers a full message history with one reply string.  Sessions
are append-only message lists confined to a single worker; backends themselves
are stateless and safe to share.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

import httpx

ROLE_SYSTEM = "system"
ROLE_AGENT = "agent"  # the LLM being driven
ROLE_COUNTERPART = "counterpart"  # whoever is talking to it


class BackendError(Exception):
    pass


class BackendUnavailable(BackendError):
    pass


class RateLimited(BackendError):
    def __init__(self, message: str, retry_after: Optional[float] = None):
        super().__init__(message)
        self.retry_after = retry_after


class EmptyCompletion(BackendError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass
class ChatParams:
    temperature: float = 1.0
    max_output_tokens: int = 256


class ChatBackend(Protocol):
    id: str

    def reply(self, history: list[ChatMessage], params: ChatParams) -> str: ...


@dataclass
class ChatSession:
    """One stateful LLM conversation: instruction first, then alternating turns."""

    backend: "ChatBackend"
    params: ChatParams = field(default_factory=ChatParams)
    history: list[ChatMessage] = field(default_factory=list)

    @property
    def backend_id(self) -> str:
        return self.backend.id

    def send(self, content: str, role: str = ROLE_COUNTERPART) -> str:
        """Append a message, obtain the model reply, append it, return it."""
        self.history.append(ChatMessage(role=role, content=content))
        reply = self.backend.reply(self.history, self.params)
        self.history.append(ChatMessage(role=ROLE_AGENT, content=reply))
        return reply


def complete(session: ChatSession, new_message: ChatMessage) -> str:
    return session.send(new_message.content, role=new_message.role)


EXHAUSTED_REPEAT_LAST = "repeat_last"
EXHAUSTED_ERROR = "error"


@dataclass
class ScriptedBackend:
    """Deterministic backend replaying canned responses in order.

    The response index is the number of agent replies already present in the
    history, so replays of a recorded session reproduce it exactly.
    """

    script: list[str]
    exhausted_behavior: str = EXHAUSTED_ERROR
    id: str = "scripted"

    def reply(self, history: list[ChatMessage], params: ChatParams) -> str:
        idx = sum(1 for m in history if m.role == ROLE_AGENT)
        if idx < len(self.script):
            return self.script[idx]
        if self.exhausted_behavior == EXHAUSTED_REPEAT_LAST and self.script:
            return self.script[-1]
        raise EmptyCompletion(f"script exhausted after {len(self.script)} responses")


@dataclass
class RecordingBackend:
    """Wraps another backend and records its replies for scripted replay."""

    inner: ChatBackend
    recorded: list[str] = field(default_factory=list)

    @property
    def id(self) -> str:
        return f"recorded:{self.inner.id}"

    def reply(self, history: list[ChatMessage], params: ChatParams) -> str:
        out = self.inner.reply(history, params)
        self.recorded.append(out)
        return out

    def to_scripted(self) -> ScriptedBackend:
        return ScriptedBackend(script=list(self.recorded), id=self.id)

    def dump(self, path) -> None:
        Path(path).write_text(
            json.dumps({"script": self.recorded}, ensure_ascii=False, indent=1),
            encoding="utf-8",
        )


_ROLE_MAP = {ROLE_SYSTEM: "system", ROLE_AGENT: "assistant", ROLE_COUNTERPART: "user"}


@dataclass
class RemoteChatBackend:
    """Client for a chat-completion HTTP endpoint (messages-array convention).

    Retries transport failures and 5xx responses 3 times with exponential
    backoff starting at 1 s; 429 surfaces as RateLimited with the server's
    retry-after value.
    """

    endpoint: str
    model: str
    api_key_env: str = "SIMCQA_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    backoff_base: float = 1.0
    id: str = ""

    def __post_init__(self):
        if not self.id:
            self.id = f"remote:{self.model}"

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.getenv(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def reply(self, history: list[ChatMessage], params: ChatParams) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": _ROLE_MAP[m.role], "content": m.content} for m in history],
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        }
        last_err: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                resp = httpx.post(
                    self.endpoint, json=payload, headers=self._headers(), timeout=self.timeout
                )
            except httpx.HTTPError as exc:
                last_err = exc
                if attempt + 1 < self.max_retries:
                    time.sleep(self.backoff_base * 2**attempt)
                continue
            if resp.status_code == 429:
                retry_after = resp.headers.get("Retry-After")
                raise RateLimited(
                    "backend rate-limited",
                    retry_after=float(retry_after) if retry_after else None,
                )
            if resp.status_code >= 500:
                last_err = BackendError(f"server error {resp.status_code}")
                if attempt + 1 < self.max_retries:
                    time.sleep(self.backoff_base * 2**attempt)
                continue
            if resp.status_code >= 400:
                raise BackendError(f"request rejected: {resp.status_code} {resp.text[:200]}")
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise BackendError(f"malformed completion response: {exc}") from exc
            if not content or not content.strip():
                raise EmptyCompletion("backend returned an empty completion")
            return content
        raise BackendUnavailable(f"backend unreachable after {self.max_retries} attempts: {last_err}")


def load_scripted(path, exhausted_behavior: str = EXHAUSTED_ERROR) -> dict:
    """Load a script file.

    Accepts either {"script": [...]} (one shared script) or
    {"student": [...], "teacher": [...]} (one per role); returns the dict of
    role name -> ScriptedBackend, with "student"/"teacher" keys always present.
    """
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if "script" in payload:
        return {
            "student": ScriptedBackend(payload["script"], exhausted_behavior, id="scripted"),
            "teacher": ScriptedBackend(payload["script"], exhausted_behavior, id="scripted"),
        }
    out = {}
    for role in ("student", "teacher"):
        if role not in payload:
            raise ValueError(f"script file missing {role!r} key")
        out[role] = ScriptedBackend(list(payload[role]), exhausted_behavior, id=f"scripted:{role}")
    return out
