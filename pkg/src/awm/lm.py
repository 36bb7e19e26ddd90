"""Text-completion clients: an OpenAI-compatible HTTP backend and a scripted
mock used by tests and offline demos."""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Protocol

import requests

from .errors import BadResponse, RateLimited, ScriptExhausted, Transport

logger = logging.getLogger(__name__)

DEFAULT_MODEL = "gpt-4"


@dataclass(frozen=True)
class LmRequest:
    prompt: str
    system: str | None = None
    temperature: float = 0.0
    max_tokens: int = 1024
    model: str | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    def messages(self) -> list[dict]:
        msgs = []
        if self.system:
            msgs.append({"role": "system", "content": self.system})
        msgs.append({"role": "user", "content": self.prompt})
        return msgs


@dataclass(frozen=True)
class LmResponse:
    text: str
    usage: Mapping[str, int] | None = None


class LmClient(Protocol):
    def complete(self, req: LmRequest) -> LmResponse: ...


def ask(lm: LmClient, prompt: str, **kwargs) -> str:
    """Shorthand for a single prompt -> text call."""
    return lm.complete(LmRequest(prompt=prompt, **kwargs)).text


@dataclass
class LmConfig:
    base_url: str = "http://localhost:8000/v1"
    api_key: str = "EMPTY"
    model: str = DEFAULT_MODEL
    timeout: float = 120.0
    max_attempts: int = 4
    backoff: float = 1.0

    @classmethod
    def load(cls, path=None, env: Mapping[str, str] | None = None) -> "LmConfig":
        """Read a JSON config file (optional), then apply AWM_LM_* env overrides."""
        cfg = cls()
        if path:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
            data = data.get("lm", data)
            for key, value in data.items():
                if hasattr(cfg, key):
                    setattr(cfg, key, value)
        env = os.environ if env is None else env
        for var, attr in (
            ("AWM_LM_BASE_URL", "base_url"),
            ("AWM_LM_API_KEY", "api_key"),
            ("AWM_LM_MODEL", "model"),
        ):
            if env.get(var):
                setattr(cfg, attr, env[var])
        return cfg


class HttpLm:
    """Chat-completions client with exponential backoff on 429/5xx and
    transport errors."""

    def __init__(self, config: LmConfig | None = None, session: requests.Session | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config or LmConfig.load()
        self.session = session or requests.Session()
        self._sleep = sleep

    def complete(self, req: LmRequest) -> LmResponse:
        cfg = self.config
        url = cfg.base_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": req.model or cfg.model,
            "messages": req.messages(),
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        headers = {"Authorization": f"Bearer {cfg.api_key}", "Content-Type": "application/json"}
        last: Exception | None = None
        for attempt in range(cfg.max_attempts):
            if attempt:
                self._sleep(cfg.backoff * 2 ** (attempt - 1))
            try:
                resp = self.session.post(url, json=payload, headers=headers, timeout=cfg.timeout)
            except requests.RequestException as exc:
                last = Transport(str(exc))
                logger.warning("LM transport error (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code == 429:
                last = RateLimited(f"rate limited: {resp.text[:200]}")
                continue
            if resp.status_code >= 500:
                last = Transport(f"server error {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise BadResponse(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return self._parse(resp)
        assert last is not None
        raise last

    @staticmethod
    def _parse(resp) -> LmResponse:
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BadResponse(f"unexpected response body: {exc}") from exc
        if text is None:
            raise BadResponse("empty message content")
        return LmResponse(text=text, usage=data.get("usage"))


Responder = Callable[[LmRequest], str]


class MockLm:
    """Deterministic scripted backend.

    Responses come from, in priority order: the routing table (first key that
    is a substring of the prompt), the ordered queue, then the fallback
    ``responder`` callable. Every request is recorded in ``requests``.
    """

    def __init__(self, script: Iterable[str] = (), routes: Mapping[str, str | Responder] | None = None,
                 responder: Responder | None = None):
        self.queue = deque(script)
        self.routes = dict(routes or {})
        self.responder = responder
        self.requests: list[LmRequest] = []
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return len(self.requests)

    def complete(self, req: LmRequest) -> LmResponse:
        with self._lock:
            self.requests.append(req)
            for key, value in self.routes.items():
                if key in req.prompt:
                    return LmResponse(value(req) if callable(value) else value)
            if self.queue:
                return LmResponse(self.queue.popleft())
        if self.responder is not None:
            return LmResponse(self.responder(req))
        raise ScriptExhausted(f"no scripted response for request #{len(self.requests)}")


@dataclass
class FailingLm:
    """Backend that always raises; for exercising error paths."""

    error: Exception = field(default_factory=lambda: Transport("unreachable"))
    calls: int = 0

    def complete(self, req: LmRequest) -> LmResponse:
        self.calls += 1
        raise self.error
