"""Prompting a chat-completion endpoint for tables of contents or segment lists."""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from string import Template

import httpx

from .errors import (
    AllEntriesInvalidError,
    AuthError,
    BudgetExceededError,
    ChatError,
    ChatTimeoutError,
    EmptyOutputError,
    GenerationFailedError,
    NetworkError,
    RateLimitedError,
    UnparseableTocError,
)
from .model import BoundarySet, Toc, Transcript
from .tocformat import ParseDiagnostics, parse_toc

log = logging.getLogger(__name__)

STRATEGIES = ("toc", "segment-list")
_PROMPT_FILES = {"toc": "toc_{version}.txt", "segment-list": "segment_list_{version}.txt"}


@dataclass(frozen=True)
class PromptConfig:
    strategy: str = "toc"
    include_pauses: bool = False
    language_hint: str | None = None
    max_input_chars: int = 400_000
    temperature: float = 0.0
    max_retries: int = 2
    prompt_version: str = "v1"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_input_chars <= 0:
            raise ValueError("max_input_chars must be > 0")


def system_prompt(cfg: PromptConfig) -> str:
    name = _PROMPT_FILES[cfg.strategy].format(version=cfg.prompt_version)
    text = resources.files("tocseg.prompts").joinpath(name).read_text(encoding="utf-8")
    return Template(text).substitute(
        pause_note=" and, from the second sentence on, the pause before it in seconds"
        if cfg.include_pauses else "",
        language_note=f" in {cfg.language_hint}" if cfg.language_hint else "",
    ).strip()


def format_line(index: int, text: str, pause: float | None = None) -> str:
    if pause is None:
        return f"{index}: {text}"
    return f"{index} (pause={pause:.2f}s): {text}"


def build_prompt(t: Transcript, pauses: Sequence[float] | None, cfg: PromptConfig) -> list[dict]:
    """System and user messages for one transcript.

    Each sentence is one line; with pauses enabled every line after the first
    carries the silence that precedes it.
    """
    if cfg.include_pauses:
        if pauses is None or len(pauses) != t.n - 1:
            raise ValueError(f"{t.doc_id}: need {t.n - 1} pauses, got "
                             f"{None if pauses is None else len(pauses)}")
    lines = [f"Transcript ({t.n} sentences):"]
    for s in t.sentences:
        p = pauses[s.index - 2] if cfg.include_pauses and s.index > 1 else None
        lines.append(format_line(s.index, s.text, p))
    messages = [
        {"role": "system", "content": system_prompt(cfg)},
        {"role": "user", "content": "\n".join(lines)},
    ]
    size = sum(len(m["content"]) for m in messages)
    if size > cfg.max_input_chars:
        raise BudgetExceededError(
            f"{t.doc_id}: prompt has {size} characters, budget is {cfg.max_input_chars}"
        )
    return messages


class RunLog:
    """Append-only JSONL log shared between worker threads."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.records: list[dict] = []
        self._lock = threading.Lock()

    def write(self, **record):
        with self._lock:
            self.records.append(record)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


@dataclass
class ChatClient:
    """OpenAI-compatible chat-completion endpoint.

    The credential is read from the environment variable named by
    ``api_key_env`` at call time; ``None`` sends no credential.
    """

    endpoint: str
    model: str
    api_key_env: str | None = None
    timeout: float = 120.0
    http: httpx.Client | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        url = httpx.URL(self.endpoint)
        if url.scheme not in ("http", "https") or not url.host:
            raise ValueError(f"not an http(s) URL: {self.endpoint!r}")

    def send(self, messages: Sequence[dict], temperature: float = 0.0) -> tuple[str, dict]:
        headers = {}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env)
            if not key:
                raise AuthError(f"environment variable {self.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        body = {"model": self.model, "messages": list(messages), "temperature": temperature}
        http = self.http or httpx
        try:
            resp = http.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
        except httpx.TimeoutException as exc:
            raise ChatTimeoutError(f"{self.endpoint}: timed out after {self.timeout}s") from exc
        except httpx.TransportError as exc:
            raise NetworkError(f"{self.endpoint}: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"{self.endpoint}: HTTP {resp.status_code}")
        if resp.status_code == 429:
            raise RateLimitedError(f"{self.endpoint}: HTTP 429")
        if resp.status_code >= 400:
            raise NetworkError(f"{self.endpoint}: HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
            text = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ChatError(f"{self.endpoint}: unexpected response shape ({exc})") from exc
        return text or "", payload.get("usage") or {}


class StubChatClient:
    """Scripted client: replies come from a list (in order) or a function of the messages."""

    def __init__(self, replies: Sequence[str] | Callable[[list[dict]], str]):
        self._replies = replies if callable(replies) else list(replies)
        self._i = 0
        self._lock = threading.Lock()
        self.calls: list[list[dict]] = []

    def send(self, messages, temperature=0.0):
        with self._lock:
            self.calls.append([dict(m) for m in messages])
            if callable(self._replies):
                return self._replies(list(messages)), {}
            if self._i >= len(self._replies):
                raise NetworkError("stub client has no replies left")
            reply = self._replies[self._i]
            self._i += 1
        return reply, {}


def complete(client, messages: Sequence[dict], *, temperature: float = 0.0,
             run_log: RunLog | None = None, doc_id: str | None = None, attempt: int | None = None) -> str:
    """Send ``messages`` and return the assistant text, logging latency and usage."""
    t0 = time.perf_counter()
    try:
        text, usage = client.send(messages, temperature)
    except ChatError as exc:
        if run_log is not None:
            run_log.write(event="chat", doc_id=doc_id, attempt=attempt, ok=False,
                          error=type(exc).__name__, detail=str(exc),
                          latency_s=round(time.perf_counter() - t0, 4))
        raise
    if run_log is not None:
        run_log.write(event="chat", doc_id=doc_id, attempt=attempt, ok=True,
                      latency_s=round(time.perf_counter() - t0, 4),
                      prompt_tokens=usage.get("prompt_tokens"),
                      completion_tokens=usage.get("completion_tokens"))
    return text


def _correction(problem: str, strategy: str) -> str:
    if strategy == "toc":
        shape = "one section per line in the form `<number> <title> [<sentence index>]`"
    else:
        shape = "a single JSON list of lists of sentence indices"
    return (f"Your answer could not be used: {problem}. "
            f"Reply again with {shape} and nothing else.")


def _generate(t, client, cfg, messages, parse, run_log):
    """Shared retry loop; ``parse`` raises ValueError subclasses on unusable output."""
    messages = list(messages)
    problems: list[str] = []
    attempts = 0
    for _ in range(cfg.max_retries + 1):
        attempts += 1
        try:
            text = complete(client, messages, temperature=cfg.temperature,
                            run_log=run_log, doc_id=t.doc_id, attempt=attempts)
        except ChatError as exc:
            if not exc.retryable:
                raise
            problems.append(f"attempt {attempts}: {type(exc).__name__}: {exc}")
            continue
        try:
            return parse(text), attempts
        except (UnparseableTocError, AllEntriesInvalidError, _NoLists) as exc:
            first = str(exc)
            diag = getattr(exc, "diagnostics", None)
            if diag:
                first = f"{first} ({diag.messages()[0]})"
            problems.append(f"attempt {attempts}: {first}")
            messages += [{"role": "assistant", "content": text},
                         {"role": "user", "content": _correction(first, cfg.strategy)}]
    raise GenerationFailedError(
        f"{t.doc_id}: no usable output after {attempts} attempts", problems
    )


def run_toc_generation(t: Transcript, pauses, client, cfg: PromptConfig,
                       run_log: RunLog | None = None) -> tuple[Toc, ParseDiagnostics, int]:
    if cfg.strategy != "toc":
        raise ValueError("run_toc_generation needs strategy 'toc'")
    messages = build_prompt(t, pauses, cfg)
    (toc, diag), attempts = _generate(t, client, cfg, messages, lambda s: parse_toc(s, t.n), run_log)
    if run_log is not None:
        run_log.write(event="toc", doc_id=t.doc_id, attempts=attempts, entries=len(toc),
                      levels=toc.depth, diagnostics=diag.messages())
    return toc, diag, attempts


class _NoLists(ValueError):
    pass


_LIST_RE = re.compile(r"\[\s*(-?\d+(?:\s*,\s*-?\d+)*)?\s*,?\s*\]")


def parse_segment_lists(text: str) -> list[list[int]]:
    """Every innermost ``[i, j, ...]`` group in ``text``, in order."""
    # tolerate fences and prose around the JSON
    lists = [[int(x) for x in m.group(1).split(",")] if m.group(1) else []
             for m in _LIST_RE.finditer(text)]
    if not lists:
        raise _NoLists("no list of sentence indices found")
    return lists


def segments_to_boundaries(lists: Sequence[Sequence[int]], n: int) -> tuple[BoundarySet, list[str]]:
    """Boundaries before the first index of every segment list."""
    repairs = []
    cleaned = []
    for li, seg in enumerate(lists, start=1):
        bad = [i for i in seg if not 1 <= i <= n]
        if bad:
            repairs.append(f"list {li}: dropped out-of-range indices {bad}")
        seg = [i for i in seg if 1 <= i <= n]
        if seg:
            cleaned.append(seg)
    if not cleaned:
        raise EmptyOutputError("segment lists contain no usable sentence index")
    flat = [i for seg in cleaned for i in seg]
    if flat != list(range(1, n + 1)):
        seen = set()
        overlaps = sorted({i for i in flat if i in seen or seen.add(i)})
        gaps = sorted(set(range(1, n + 1)) - set(flat))
        if overlaps:
            repairs.append(f"overlapping indices {overlaps}")
        if gaps:
            repairs.append(f"uncovered indices {gaps}")
        if any(seg != list(range(seg[0], seg[0] + len(seg))) for seg in cleaned):
            repairs.append("non-contiguous segment list")
        starts = [seg[0] for seg in cleaned]
        if starts != sorted(starts):
            repairs.append("segments out of order")
        repairs.append("boundaries taken from each list's first index")
    positions = {seg[0] - 1 for seg in cleaned if seg[0] > 1}
    return BoundarySet(n, tuple(positions)), repairs


def run_segment_list(t: Transcript, client, cfg: PromptConfig, run_log: RunLog | None = None,
                     pauses=None) -> tuple[BoundarySet, list[str], int]:
    """SegmentLLM-style generation: one list of sentence indices per topic."""
    if cfg.strategy != "segment-list":
        raise ValueError("run_segment_list needs strategy 'segment-list'")
    messages = build_prompt(t, pauses, cfg)
    lists, attempts = _generate(t, client, cfg, messages, parse_segment_lists, run_log)
    bs, repairs = segments_to_boundaries(lists, t.n)
    for r in repairs:
        log.info("%s: %s", t.doc_id, r)
    if run_log is not None:
        run_log.write(event="segment-list", doc_id=t.doc_id, attempts=attempts,
                      boundaries=list(bs.positions), repairs=repairs)
    return bs, repairs, attempts


def prompt_config_json(cfg: PromptConfig) -> dict:
    return asdict(cfg)
