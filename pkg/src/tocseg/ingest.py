"""Loading transcripts and reference annotations.

Transcripts arrive as JSONL, one sentence per line with its forced-alignment
timing.  References are either nested outlines or flat topic intervals
(AMI-style), which are turned into nested segmentations here.
"""

from __future__ import annotations

import bisect
import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    EmptyIntervalsError,
    InvariantViolationError,
    MissingSpeakerError,
    TooFewSpeakersError,
    TranscriptParseError,
    UnmappableIntervalError,
)
from .model import BoundarySet, HierSegmentation, Sentence, Transcript, toc_to_hierseg

log = logging.getLogger(__name__)

FILLER = "(filler)"


@dataclass(frozen=True)
class TopicInterval:
    label: str
    start_time: float
    end_time: float

    def __post_init__(self):
        if not self.end_time > self.start_time:
            raise InvariantViolationError(
                f"interval {self.label!r}: end_time {self.end_time} <= start_time {self.start_time}"
            )


def check_transcript(t: Transcript) -> None:
    if not t.sentences:
        raise InvariantViolationError(f"{t.doc_id}: transcript has no sentences")
    prev_start = None
    for pos, s in enumerate(t.sentences, start=1):
        if s.index != pos:
            raise InvariantViolationError(
                f"{t.doc_id}: expected sentence index {pos}, found {s.index}", s.index
            )
        if s.end < s.start:
            raise InvariantViolationError(
                f"{t.doc_id}: sentence {s.index} ends ({s.end}) before it starts ({s.start})", s.index
            )
        if prev_start is not None and s.start < prev_start:
            raise InvariantViolationError(
                f"{t.doc_id}: sentence {s.index} starts before sentence {s.index - 1}", s.index
            )
        prev_start = s.start


def load_transcript(path, doc_id: str | None = None) -> Transcript:
    """Read a transcript JSONL file.

    Each line is ``{"i", "text", "start", "end"}``; an optional header object
    without ``"i"`` may carry ``doc_id`` and ``speaker``.
    """
    path = Path(path)
    header: dict = {}
    sentences = []
    with path.open(encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TranscriptParseError(f"{path.name}: invalid JSON ({exc.msg})", ln) from exc
            if not isinstance(obj, dict):
                raise TranscriptParseError(f"{path.name}: expected an object", ln)
            if "i" not in obj:
                if sentences or header:
                    raise TranscriptParseError(f"{path.name}: header must be the first line", ln)
                header = obj
                continue
            try:
                sentences.append(Sentence(int(obj["i"]), str(obj["text"]),
                                          float(obj["start"]), float(obj["end"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise TranscriptParseError(f"{path.name}: bad sentence record ({exc})", ln) from exc
    t = Transcript(doc_id or header.get("doc_id") or path.name.split(".")[0],
                   tuple(sentences), header.get("speaker"))
    check_transcript(t)
    return t


def dump_transcript(t: Transcript) -> str:
    lines = [json.dumps({"doc_id": t.doc_id, "speaker": t.speaker_id}, ensure_ascii=False)]
    lines += [json.dumps({"i": s.index, "text": s.text, "start": s.start, "end": s.end},
                         ensure_ascii=False) for s in t.sentences]
    return "\n".join(lines) + "\n"


def compute_pauses(t: Transcript) -> list[float]:
    """Silence before each sentence after the first, clamped at zero."""
    ss = t.sentences
    return [max(0.0, ss[i + 1].start - ss[i].end) for i in range(len(ss) - 1)]


def snap_time_to_sentence(time: float, t: Transcript) -> int:
    """Index of the sentence whose start is nearest to ``time`` (earlier on ties)."""
    starts = [s.start for s in t.sentences]
    k = bisect.bisect_left(starts, time)
    if k == 0:
        return 1
    if k == len(starts):
        return len(starts)
    # starts[k - 1] < time <= starts[k]; duplicate starts resolve to the first
    before, after = time - starts[k - 1], starts[k] - time
    pick = k if after < before else k - 1
    return bisect.bisect_left(starts, starts[pick]) + 1


def _nest_intervals(intervals: Sequence[TopicInterval]) -> tuple[list[tuple[int, TopicInterval]], list[str]]:
    """Assign each interval a depth; partial overlaps truncate the earlier interval."""
    notes = []
    stack: list[list] = []  # [start, end, label]
    out = []
    for iv in sorted(intervals, key=lambda x: (x.start_time, -x.end_time)):
        s, e = iv.start_time, iv.end_time
        while stack:
            top = stack[-1]
            if top[1] <= s:
                stack.pop()
            elif e <= top[1]:
                break
            else:
                notes.append(f"interval {iv.label!r} overlaps {top[2]!r}; {top[2]!r} truncated at {s}")
                top[1] = s
                stack.pop()
        stack.append([s, e, iv.label])
        out.append((len(stack), iv))
    return out, notes


def intervals_to_hierseg(
    intervals: Sequence[TopicInterval], t: Transcript, diagnostics: list[str] | None = None
) -> HierSegmentation:
    """Nested segmentation from flat topic intervals.

    Intervals that start inside another interval become its subtopics.
    Unannotated stretches between, before or after top-level intervals
    become ``(filler)`` topics.  Every start is snapped to the nearest
    sentence start.
    """
    if not intervals:
        raise EmptyIntervalsError(f"{t.doc_id}: no topic intervals")
    last_end = t.sentences[-1].end
    nested, notes = _nest_intervals(intervals)
    for depth, iv in nested:
        if iv.start_time > last_end:
            raise UnmappableIntervalError(
                f"{t.doc_id}: interval {iv.label!r} starts at {iv.start_time}s, after the transcript ends"
            )
    tops = [iv for d, iv in nested if d == 1]
    starts: list[tuple[int, int]] = [(d, snap_time_to_sentence(iv.start_time, t)) for d, iv in nested]
    # a gap gets a filler topic from the first sentence starting inside it;
    # a leading gap is covered implicitly by the first topic's snapped start
    sent_starts = [s.start for s in t.sentences]
    gaps = []
    reach = tops[0].end_time
    for iv in tops[1:]:
        if iv.start_time > reach:
            gaps.append((reach, iv.start_time))
        reach = max(reach, iv.end_time)
    gaps.append((reach, float("inf")))
    for lo, hi in gaps:
        k = bisect.bisect_left(sent_starts, lo)
        if k < t.n and sent_starts[k] < hi and k > 0:
            notes.append(f"filler topic at sentence {k + 1}")
            starts.append((1, k + 1))
    if diagnostics is not None:
        diagnostics.extend(notes)
    for note in notes:
        log.debug("%s: %s", t.doc_id, note)
    depth = max(d for d, _ in starts)
    levels = [BoundarySet(t.n, tuple(k - 1 for d, k in starts if d <= lv and k > 1))
              for lv in range(1, depth + 1)]
    return HierSegmentation(t.n, tuple(levels))


def load_intervals(obj) -> list[TopicInterval]:
    return [TopicInterval(str(o["label"]), float(o["start_time"]), float(o["end_time"])) for o in obj]


def load_reference(path, t: Transcript, diagnostics: list[str] | None = None) -> HierSegmentation:
    """Reference segmentation from an outline JSON, interval JSON, or ToC text file."""
    from .tocformat import parse_toc, toc_from_json

    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    if path.suffix == ".toc" or path.suffix == ".txt":
        toc, diag = parse_toc(strip_header(raw), t.n)
        if diagnostics is not None:
            diagnostics.extend(diag.messages())
        return toc_to_hierseg(toc, t.n)
    obj = json.loads(raw)
    if isinstance(obj, dict) and "levels" in obj:
        return HierSegmentation.from_json(obj)
    if isinstance(obj, dict) and "intervals" in obj:
        return intervals_to_hierseg(load_intervals(obj["intervals"]), t, diagnostics)
    items = obj.get("entries", []) if isinstance(obj, dict) else obj
    if items and "start_time" in items[0]:
        return intervals_to_hierseg(load_intervals(items), t, diagnostics)
    return toc_to_hierseg(toc_from_json(items), t.n)


def strip_header(text: str) -> str:
    """Drop leading ``# key: value`` provenance lines."""
    lines = text.splitlines(keepends=True)
    i = 0
    while i < len(lines) and lines[i].startswith("# "):
        i += 1
    return "".join(lines[i:])


@dataclass(frozen=True)
class CorpusDocument:
    doc_id: str
    speaker_id: str | None
    transcript: Path
    reference: Path | None


@dataclass(frozen=True)
class CorpusIndex:
    documents: tuple[CorpusDocument, ...]
    name: str = "corpus"
    protocol: str | None = None

    def __post_init__(self):
        ids = [d.doc_id for d in self.documents]
        dup = {i for i in ids if ids.count(i) > 1}
        if dup:
            raise InvariantViolationError(f"duplicate doc_ids in corpus: {sorted(dup)}")

    @property
    def doc_ids(self) -> list[str]:
        return [d.doc_id for d in self.documents]

    def by_id(self, doc_id: str) -> CorpusDocument:
        for d in self.documents:
            if d.doc_id == doc_id:
                return d
        raise KeyError(doc_id)


def load_manifest(path) -> CorpusIndex:
    """Read a corpus manifest; relative paths resolve against its directory."""
    path = Path(path)
    obj = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent
    docs = []
    for d in obj["documents"]:
        ref = d.get("reference")
        docs.append(CorpusDocument(
            str(d["doc_id"]),
            d.get("speaker"),
            base / d["transcript"],
            base / ref if ref else None,
        ))
    return CorpusIndex(tuple(docs), obj.get("name", path.parent.name), obj.get("protocol"))


def manifest_json(c: CorpusIndex, base: Path) -> dict:
    def rel(p):
        return None if p is None else str(Path(p).relative_to(base)) if Path(p).is_absolute() else str(p)

    out = {"name": c.name, "documents": [
        {"doc_id": d.doc_id, "speaker": d.speaker_id, "transcript": rel(d.transcript),
         "reference": rel(d.reference)} for d in c.documents]}
    if c.protocol:
        out["protocol"] = c.protocol
    return out


def loso_splits(c: CorpusIndex) -> list[tuple[list[str], list[str]]]:
    """Leave-one-speaker-out folds, ordered by speaker id."""
    missing = [d.doc_id for d in c.documents if not d.speaker_id]
    if missing:
        raise MissingSpeakerError(f"documents without speaker_id: {missing}")
    speakers = sorted({d.speaker_id for d in c.documents})
    if len(speakers) < 2:
        raise TooFewSpeakersError("leave-one-speaker-out needs at least two speakers")
    folds = []
    for spk in speakers:
        test = [d.doc_id for d in c.documents if d.speaker_id == spk]
        train = [d.doc_id for d in c.documents if d.speaker_id != spk]
        folds.append((train, test))
    return folds
