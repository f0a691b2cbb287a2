"""Chat-completions wire client with retries, usage accounting and record/replay.

The replay store keys fixtures by a stable hash of (model, tag, normalized
messages); the whole test suite runs against strict replay with zero network.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import httpx

ENV_BASE_URL = "SKYNAV_API_BASE_URL"
ENV_API_KEY = "SKYNAV_API_KEY"
ENV_MODEL = "SKYNAV_MODEL"

REQUEST_TAGS = ("Q_loc", "Q_plan", "Q_imgn", "Q_DM", "plain")


class GatewayError(Exception):
    """Gateway failure; `kind` is one of transport/auth/rate_limited/exhausted."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"[{kind}] {message}")
        self.kind = kind


class FixtureMiss(GatewayError):
    def __init__(self, tag: str, key: str):
        super().__init__("exhausted", f"no replay fixture for tag {tag!r} (key {key})")
        self.tag = tag
        self.key = key


@dataclass
class GatewayRequest:
    messages: list[dict]                 # [{"role": ..., "content": str | parts}]
    model: str = "default"
    temperature: float = 0.0
    max_tokens: int = 1024
    tag: str = "plain"

    def __post_init__(self):
        if not self.messages:
            raise ValueError("request needs at least one message")
        if self.tag not in REQUEST_TAGS:
            raise ValueError(f"unknown request tag {self.tag!r}")


class UsageLedger:
    """Thread-safe monotone counters: tokens per model, calls per tag, wall time."""

    def __init__(self):
        self._lock = threading.Lock()
        self.tokens: dict[str, dict[str, int]] = {}
        self.calls: dict[str, int] = {}
        self.wall_time: float = 0.0

    def record(self, model: str, tag: str, input_tokens: int, output_tokens: int,
               seconds: float) -> None:
        with self._lock:
            slot = self.tokens.setdefault(model, {"input": 0, "output": 0})
            slot["input"] += int(input_tokens)
            slot["output"] += int(output_tokens)
            self.calls[tag] = self.calls.get(tag, 0) + 1
            self.wall_time += seconds

    def snapshot(self) -> dict:
        with self._lock:
            return {"tokens": {m: dict(v) for m, v in self.tokens.items()},
                    "calls": dict(self.calls), "wall_time": self.wall_time}

    def total_calls(self) -> int:
        with self._lock:
            return sum(self.calls.values())

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.snapshot(), indent=2))


def _flatten_content(content) -> str:
    if isinstance(content, str):
        return content
    parts = []
    for part in content:
        if part.get("type") == "text":
            parts.append(part["text"])
        else:
            url = part.get("image_url", {}).get("url", "")
            parts.append(f"<image sha256:{hashlib.sha256(url.encode()).hexdigest()[:16]}>")
    return "\n".join(parts)


def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


def request_key(req: GatewayRequest) -> str:
    """Stable fixture key; whitespace runs collapse so formatting drift is benign."""
    parts = [req.model, req.tag]
    for m in req.messages:
        parts.append(m["role"] + ":" + _normalize(_flatten_content(m["content"])))
    blob = "\x1e".join(parts)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _estimate_tokens(text: str) -> int:
    return max(1, len(text) // 4)


class GatewayHandle:
    """Base interface: complete(request) -> response text."""

    def __init__(self, ledger: UsageLedger | None = None):
        self.ledger = ledger or UsageLedger()

    def complete(self, req: GatewayRequest) -> str:
        raise NotImplementedError


class HttpGateway(GatewayHandle):
    """POSTs OpenAI-style chat completions with exponential-backoff retries."""

    MAX_ATTEMPTS = 5
    BACKOFF_BASE = 1.0
    BACKOFF_FACTOR = 2.0

    def __init__(self, base_url: str | None = None, api_key: str | None = None,
                 model: str | None = None, ledger: UsageLedger | None = None,
                 transport: httpx.BaseTransport | None = None,
                 max_inflight: int = 4, sleep: Callable[[float], None] = time.sleep,
                 rng: random.Random | None = None):
        super().__init__(ledger)
        self.base_url = base_url or os.environ.get(ENV_BASE_URL)
        self.api_key = api_key or os.environ.get(ENV_API_KEY)
        self.model = model or os.environ.get(ENV_MODEL, "default")
        if not self.base_url:
            raise GatewayError("transport", f"no endpoint configured ({ENV_BASE_URL} unset)")
        self._client = httpx.Client(transport=transport, timeout=60.0)
        self._inflight = threading.Semaphore(max_inflight)
        self._sleep = sleep
        self._rng = rng or random.Random()

    def complete(self, req: GatewayRequest) -> str:
        body = {
            "model": req.model if req.model != "default" else self.model,
            "messages": req.messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = self.base_url.rstrip("/") + "/chat/completions"

        started = time.monotonic()
        last_err = "no attempt made"
        for attempt in range(self.MAX_ATTEMPTS):
            if attempt > 0:
                delay = self.BACKOFF_BASE * self.BACKOFF_FACTOR ** (attempt - 1)
                self._sleep(delay * (1.0 + 0.25 * self._rng.random()))
            try:
                with self._inflight:
                    resp = self._client.post(url, json=body, headers=headers)
            except httpx.HTTPError as e:
                last_err = f"transport: {e}"
                continue
            if resp.status_code in (401, 403):
                raise GatewayError("auth", f"HTTP {resp.status_code} from {url}")
            if resp.status_code == 429 or resp.status_code >= 500:
                last_err = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise GatewayError("transport", f"HTTP {resp.status_code}: {resp.text[:200]}")
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
            usage = data.get("usage", {})
            self.ledger.record(
                body["model"], req.tag,
                usage.get("prompt_tokens",
                          _estimate_tokens(json.dumps(body["messages"]))),
                usage.get("completion_tokens", _estimate_tokens(text)),
                time.monotonic() - started)
            return text
        raise GatewayError("exhausted",
                           f"{self.MAX_ATTEMPTS} attempts failed; last: {last_err}")


class ScriptedGateway(GatewayHandle):
    """Answers from a responder callable; the local stand-in for a live backend."""

    def __init__(self, responder: Callable[[GatewayRequest], str],
                 ledger: UsageLedger | None = None):
        super().__init__(ledger)
        self._responder = responder

    def complete(self, req: GatewayRequest) -> str:
        started = time.monotonic()
        text = self._responder(req)
        self.ledger.record(req.model, req.tag,
                           _estimate_tokens(json.dumps(req.messages)),
                           _estimate_tokens(text), time.monotonic() - started)
        return text


class RecordReplayGateway(GatewayHandle):
    """Fixture store wrapper.

    record: always call the inner handle and persist its answer.
    replay: use fixtures, fall back to the inner handle (persisting) on a miss.
    strict_replay: fixtures only; a miss raises FixtureMiss and never touches
    the network.
    """

    MODES = ("record", "replay", "strict_replay")

    def __init__(self, mode: str, store: str | Path,
                 inner: GatewayHandle | None = None,
                 ledger: UsageLedger | None = None):
        super().__init__(ledger)
        if mode not in self.MODES:
            raise ValueError(f"mode must be one of {self.MODES}")
        if mode == "record" and inner is None:
            raise ValueError("record mode needs an inner gateway")
        self.mode = mode
        self.store = Path(store)
        self.inner = inner
        self._lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.store / f"{key}.json"

    def complete(self, req: GatewayRequest) -> str:
        key = request_key(req)
        path = self._path(key)
        if self.mode != "record" and path.exists():
            fixture = json.loads(path.read_text())
            started = time.monotonic()
            self.ledger.record(req.model, req.tag, fixture.get("input_tokens", 0),
                               fixture.get("output_tokens", 0),
                               time.monotonic() - started)
            return fixture["response"]
        if self.mode == "strict_replay" or self.inner is None:
            raise FixtureMiss(req.tag, key)
        text = self.inner.complete(req)
        with self._lock:
            self.store.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps({
                "tag": req.tag, "model": req.model, "response": text,
                "input_tokens": _estimate_tokens(json.dumps(req.messages)),
                "output_tokens": _estimate_tokens(text),
            }, indent=2))
        self.ledger.record(req.model, req.tag,
                           _estimate_tokens(json.dumps(req.messages)),
                           _estimate_tokens(text), 0.0)
        return text
