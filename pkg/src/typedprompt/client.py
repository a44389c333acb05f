"""Transport layer: OpenAI-compatible chat-completions wire format over HTTP,
plus scripted, recording, and replaying clients for deterministic tests.

Token usage always comes from the endpoint's usage object; nothing is ever
estimated locally.
"""

from __future__ import annotations

import base64
import hashlib
import json
import mimetypes
import os
import threading
from dataclasses import dataclass
from pathlib import Path

import requests

from .render import ChatMessage, ImagePart, Role, TextPart

DEFAULT_BASE_URL = "https://api.openai.com/v1"
API_KEY_ENV = "TYPEDPROMPT_API_KEY"
BASE_URL_ENV = "TYPEDPROMPT_BASE_URL"
DEFAULT_MAX_IN_FLIGHT = 8


class TransportError(Exception):
    def __init__(self, status: int, detail: str):
        super().__init__(f"transport error (status {status}): {detail}")
        self.status = status
        self.detail = detail


class AuthMissing(TransportError):
    def __init__(self, detail: str = "no API key configured"):
        super().__init__(401, detail)


class ReplayMismatch(Exception):
    pass


class UnreadableImage(Exception):
    pass


@dataclass(frozen=True)
class ModelRequest:
    model_name: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_output_tokens: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.messages[0].role not in (Role.SYSTEM, Role.USER):
            raise ValueError("first message must be system or user")


@dataclass(frozen=True)
class ModelResponse:
    text: str
    prompt_tokens: int
    completion_tokens: int
    finish_reason: str = "stop"

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be non-negative")


def _encode_content(message: ChatMessage):
    # text-only messages stay a plain string; anything with images becomes parts
    if all(isinstance(p, TextPart) for p in message.parts):
        return "\n".join(p.text for p in message.parts)
    parts = []
    for p in message.parts:
        if isinstance(p, TextPart):
            parts.append({"type": "text", "text": p.text})
        else:
            parts.append(
                {
                    "type": "image_url",
                    "image_url": {"url": p.data_url, "detail": p.detail},
                }
            )
    return parts


def encode_request(request: ModelRequest) -> dict:
    """JSON-able chat-completions body."""
    body = {
        "model": request.model_name,
        "messages": [
            {"role": m.role.value, "content": _encode_content(m)}
            for m in request.messages
        ],
        "temperature": request.temperature,
    }
    if request.max_output_tokens is not None:
        body["max_tokens"] = request.max_output_tokens
    return body


def canonical_request_bytes(request: ModelRequest) -> bytes:
    return json.dumps(
        encode_request(request), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def request_fingerprint(request: ModelRequest) -> str:
    return hashlib.sha256(canonical_request_bytes(request)).hexdigest()


class HttpClient:
    """POSTs to {base_url}/chat/completions; an internal semaphore caps
    concurrent in-flight requests."""

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout: float = 120.0,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
        session: requests.Session | None = None,
    ):
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV) or DEFAULT_BASE_URL).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.timeout = timeout
        self._gate = threading.Semaphore(max_in_flight)
        self._session = session or requests.Session()

    def complete(self, request: ModelRequest) -> ModelResponse:
        if not self.api_key:
            raise AuthMissing()
        body = encode_request(request)
        with self._gate:
            try:
                http_response = self._session.post(
                    f"{self.base_url}/chat/completions",
                    json=body,
                    headers={"Authorization": f"Bearer {self.api_key}"},
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                raise TransportError(0, str(exc)) from exc
        if http_response.status_code == 401:
            raise AuthMissing("endpoint rejected the API key")
        if http_response.status_code != 200:
            raise TransportError(http_response.status_code, http_response.text[:200])
        try:
            payload = http_response.json()
            choice = payload["choices"][0]
            usage = payload.get("usage") or {}
            return ModelResponse(
                text=choice["message"].get("content") or "",
                prompt_tokens=int(usage.get("prompt_tokens", 0)),
                completion_tokens=int(usage.get("completion_tokens", 0)),
                finish_reason=choice.get("finish_reason") or "stop",
            )
        except (KeyError, IndexError, ValueError) as exc:
            raise TransportError(200, f"malformed response body: {exc}") from exc


class ScriptedClient:
    """Serves a fixed queue of replies; used by tests and offline demos."""

    def __init__(self, replies: list[str | ModelResponse | Exception]):
        self._replies = list(replies)
        self.requests: list[ModelRequest] = []
        self._lock = threading.Lock()

    def complete(self, request: ModelRequest) -> ModelResponse:
        with self._lock:
            self.requests.append(request)
            if not self._replies:
                raise TransportError(0, "scripted client ran out of replies")
            reply = self._replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        if isinstance(reply, ModelResponse):
            return reply
        return ModelResponse(text=reply, prompt_tokens=10, completion_tokens=5)


@dataclass(frozen=True)
class TranscriptEntry:
    fingerprint: str
    request_json: str  # canonical request body text
    response: ModelResponse

    def to_json(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "request_json": self.request_json,
            "response": {
                "text": self.response.text,
                "prompt_tokens": self.response.prompt_tokens,
                "completion_tokens": self.response.completion_tokens,
                "finish_reason": self.response.finish_reason,
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TranscriptEntry":
        r = obj["response"]
        return cls(
            fingerprint=obj["fingerprint"],
            request_json=obj["request_json"],
            response=ModelResponse(
                text=r["text"],
                prompt_tokens=r["prompt_tokens"],
                completion_tokens=r["completion_tokens"],
                finish_reason=r.get("finish_reason", "stop"),
            ),
        )


class RecordingClient:
    """Wraps any client and appends one JSONL transcript line per exchange."""

    def __init__(self, inner, path: str | Path):
        self.inner = inner
        self.path = Path(path)
        self._lock = threading.Lock()

    def complete(self, request: ModelRequest) -> ModelResponse:
        response = self.inner.complete(request)
        entry = TranscriptEntry(
            fingerprint=request_fingerprint(request),
            request_json=canonical_request_bytes(request).decode("utf-8"),
            response=response,
        )
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry.to_json(), ensure_ascii=False) + "\n")
        return response


class ReplayClient:
    """Serves a recorded transcript in order, verifying request fingerprints."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        if not self.path.exists():
            raise FileNotFoundError(f"transcript not found: {self.path}")
        self.entries = [
            TranscriptEntry.from_json(json.loads(line))
            for line in self.path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        self._cursor = 0
        self._lock = threading.Lock()

    def complete(self, request: ModelRequest) -> ModelResponse:
        with self._lock:
            if self._cursor >= len(self.entries):
                raise ReplayMismatch(
                    f"transcript exhausted after {len(self.entries)} exchanges"
                )
            entry = self.entries[self._cursor]
            self._cursor += 1
        got = request_fingerprint(request)
        if got != entry.fingerprint:
            raise ReplayMismatch(
                f"request fingerprint {got[:12]} does not match "
                f"recorded {entry.fingerprint[:12]} at position {self._cursor - 1}"
            )
        return entry.response

    @property
    def remaining(self) -> int:
        return len(self.entries) - self._cursor


def encode_image(
    source: str | Path | bytes,
    media_type: str | None = None,
    detail: str = "auto",
) -> ImagePart:
    """Base64-encode an image file or byte buffer into a data-URL part."""
    if isinstance(source, bytes):
        payload = source
        if media_type is None:
            raise ValueError("media_type is required for byte buffers")
    else:
        path = Path(source)
        try:
            payload = path.read_bytes()
        except OSError as exc:
            raise UnreadableImage(f"cannot read image {path}: {exc}") from exc
        if media_type is None:
            media_type, _ = mimetypes.guess_type(path.name)
            if media_type is None:
                raise UnreadableImage(f"cannot infer media type for {path.name}")
    if not media_type.startswith("image/"):
        raise UnreadableImage(f"not an image media type: {media_type}")
    return ImagePart(
        media_type=media_type,
        payload_b64=base64.b64encode(payload).decode("ascii"),
        detail=detail,
    )
