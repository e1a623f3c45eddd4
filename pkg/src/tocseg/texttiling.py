"""TextTiling over sentence vectors.

Vectors come from a provider: bag-of-words counts by default, or any
external sentence-embedding service speaking the JSON protocol
``{"sentences": [...]}`` -> ``{"vectors": [[...], ...]}``.
"""

from __future__ import annotations

import json
import re
import subprocess
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Protocol, Union

import numpy as np

from .errors import ProviderError
from .model import BoundarySet, Transcript

MEAN_MINUS_HALF_STD = "mean-minus-half-stddev"

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


@dataclass(frozen=True)
class TilingConfig:
    window_k: int = 5
    smoothing_width: int = 1
    threshold_policy: Union[str, float] = MEAN_MINUS_HALF_STD

    def __post_init__(self):
        if self.window_k < 1:
            raise ValueError("window_k must be >= 1")
        if self.smoothing_width < 0:
            raise ValueError("smoothing_width must be >= 0")
        if isinstance(self.threshold_policy, str) and self.threshold_policy != MEAN_MINUS_HALF_STD:
            raise ValueError(f"unknown threshold policy {self.threshold_policy!r}")


class SentenceVectorProvider(Protocol):
    def __call__(self, sentences: Sequence[str]) -> np.ndarray: ...


def tokenize(text: str) -> list[str]:
    return [w for w in _TOKEN_RE.findall(text.lower()) if len(w) >= 2]


def lexical_vectors(sentences: Sequence[str]) -> np.ndarray:
    """Token-count vectors over the vocabulary of ``sentences``."""
    toks = [tokenize(s) for s in sentences]
    vocab = {w: i for i, w in enumerate(sorted({w for ts in toks for w in ts}))}
    out = np.zeros((len(sentences), max(len(vocab), 1)))
    for row, ts in enumerate(toks):
        for w in ts:
            out[row, vocab[w]] += 1
    return out


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def gap_scores(vectors: np.ndarray, window_k: int) -> np.ndarray:
    """Cosine similarity of the mean vectors on either side of every gap."""
    v = np.asarray(vectors, dtype=float)
    n = len(v)
    out = np.empty(n - 1)
    for i in range(1, n):  # gap after 1-based sentence i
        left = v[max(0, i - window_k):i].mean(axis=0)
        right = v[i:min(n, i + window_k)].mean(axis=0)
        out[i - 1] = _cosine(left, right)
    return out


def smooth(scores: np.ndarray, passes: int) -> np.ndarray:
    """``passes`` rounds of a width-3 moving average, truncated at the edges."""
    s = np.asarray(scores, dtype=float)
    for _ in range(passes):
        if len(s) < 2:
            break
        padded = np.concatenate([[np.nan], s, [np.nan]])
        win = np.stack([padded[:-2], padded[1:-1], padded[2:]])
        s = np.nanmean(win, axis=0)
    return s


def depth_scores(scores: np.ndarray, smoothing: int = 0) -> np.ndarray:
    """Valley depth at each gap, climbing to the nearest higher peak on each side."""
    s = smooth(scores, smoothing)
    out = np.zeros(len(s))
    for i in range(len(s)):
        j = i
        while j > 0 and s[j - 1] > s[j]:
            j -= 1
        k = i
        while k < len(s) - 1 and s[k + 1] > s[k]:
            k += 1
        out[i] = (s[j] - s[i]) + (s[k] - s[i])
    return out


def valleys(smoothed: np.ndarray) -> np.ndarray:
    """Mask of interior gaps no higher than either neighbour.

    Edge gaps are excluded: their windows are truncated, which biases the
    similarity low and fakes one-sided valleys.
    """
    s = np.asarray(smoothed, dtype=float)
    mask = np.zeros(len(s), dtype=bool)
    if len(s) >= 3:
        mask[1:-1] = (s[1:-1] <= s[:-2]) & (s[1:-1] <= s[2:])
    return mask


def _runs(idx):
    run: list[int] = []
    for i in idx:
        if run and i != run[-1] + 1:
            yield run
            run = []
        run.append(i)
    if run:
        yield run


def select_boundaries(depths: np.ndarray, threshold: float, candidates: np.ndarray | None = None) -> list[int]:
    """0-based gaps whose depth exceeds ``threshold``, one per run of adjacent gaps.

    With ``candidates`` given, each run of adjacent candidate gaps is first
    reduced to its deepest member and only that member is thresholded, so a
    higher threshold can never produce more boundaries.
    """
    depths = np.asarray(depths, dtype=float)
    if candidates is None:
        picked = [i for i, d in enumerate(depths) if d > threshold]
        return [max(run, key=lambda g: depths[g]) for run in _runs(picked)]
    reps = [max(run, key=lambda g: depths[g]) for run in _runs(np.flatnonzero(candidates))]
    return [int(g) for g in reps if depths[g] > threshold]


def texttile(
    transcript: Transcript,
    provider: SentenceVectorProvider = lexical_vectors,
    config: TilingConfig = TilingConfig(),
) -> BoundarySet:
    n = transcript.n
    if n < 2:
        return BoundarySet(n)
    try:
        vectors = np.asarray(provider(transcript.texts), dtype=float)
    except ProviderError:
        raise
    except Exception as exc:
        raise ProviderError(f"{transcript.doc_id}: sentence vector provider failed: {exc}") from exc
    if vectors.ndim != 2 or len(vectors) != n or vectors.shape[1] < 1:
        raise ProviderError(
            f"{transcript.doc_id}: provider returned shape {vectors.shape} for {n} sentences"
        )
    gaps = gap_scores(vectors, config.window_k)
    depths = depth_scores(gaps, config.smoothing_width)
    if isinstance(config.threshold_policy, str):
        threshold = depths.mean() - depths.std() / 2
    else:
        threshold = float(config.threshold_policy)
    candidates = valleys(smooth(gaps, config.smoothing_width))
    return BoundarySet(n, tuple(g + 1 for g in select_boundaries(depths, threshold, candidates)))


def _decode_vectors(payload: dict, n: int) -> np.ndarray:
    try:
        vecs = np.asarray(payload["vectors"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ProviderError(f"malformed provider response: {exc}") from exc
    if vecs.ndim != 2 or len(vecs) != n:
        raise ProviderError(f"provider returned {vecs.shape} for {n} sentences")
    return vecs


@dataclass(frozen=True)
class SubprocessProvider:
    """Runs ``command`` once per call, JSON request on stdin, response on stdout."""

    command: tuple[str, ...]
    timeout: float = 300.0

    def __call__(self, sentences):
        try:
            proc = subprocess.run(
                list(self.command), input=json.dumps({"sentences": list(sentences)}),
                capture_output=True, text=True, timeout=self.timeout, check=False,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ProviderError(f"provider command {self.command[0]!r} failed: {exc}") from exc
        if proc.returncode != 0:
            raise ProviderError(
                f"provider command exited {proc.returncode}: {proc.stderr.strip()[:500]}"
            )
        try:
            payload = json.loads(proc.stdout)
        except json.JSONDecodeError as exc:
            raise ProviderError(f"provider wrote invalid JSON: {exc}") from exc
        return _decode_vectors(payload, len(sentences))


@dataclass(frozen=True)
class HttpProvider:
    url: str
    timeout: float = 300.0

    def __call__(self, sentences):
        import httpx

        try:
            resp = httpx.post(self.url, json={"sentences": list(sentences)}, timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise ProviderError(f"embedding endpoint {self.url} failed: {exc}") from exc
        return _decode_vectors(payload, len(sentences))


def provider_from_config(cfg: dict | None) -> SentenceVectorProvider:
    cfg = cfg or {}
    kind = cfg.get("kind", "lexical")
    if kind == "lexical":
        return lexical_vectors
    if kind == "subprocess":
        cmd = cfg["command"]
        return SubprocessProvider(tuple(cmd.split() if isinstance(cmd, str) else cmd),
                                  float(cfg.get("timeout", 300)))
    if kind == "http":
        return HttpProvider(cfg["url"], float(cfg.get("timeout", 300)))
    raise ValueError(f"unknown provider kind {kind!r}")
