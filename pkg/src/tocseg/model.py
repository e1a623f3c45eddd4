"""Documents, segmentations and tables of contents.

Sentence indices are 1-based throughout.  A boundary position ``p`` sits in
the gap between sentence ``p`` and sentence ``p + 1``, so valid positions for a
document of ``n`` sentences are ``1 .. n - 1``.  Document start and end are
never stored as boundaries.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .errors import (
    IndexOutOfRangeError,
    InvalidTocError,
    LevelOutOfRangeError,
)


@dataclass(frozen=True, slots=True)
class Sentence:
    index: int
    text: str
    start: float
    end: float


@dataclass(frozen=True)
class Transcript:
    doc_id: str
    sentences: tuple[Sentence, ...]
    speaker_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))

    @property
    def n(self) -> int:
        return len(self.sentences)

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.sentences]


@dataclass(frozen=True)
class BoundarySet:
    """Sorted, de-duplicated boundary positions for one level.

    Construction normalizes but does not validate; use :meth:`violations`.
    """

    n: int
    positions: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(sorted(set(self.positions))))

    def __len__(self):
        return len(self.positions)

    def __iter__(self):
        return iter(self.positions)

    def __contains__(self, p):
        return p in self.positions

    @property
    def segment_count(self) -> int:
        return len(self.positions) + 1

    def violations(self) -> list[str]:
        return [
            f"position {p} outside 1..{self.n - 1}"
            for p in self.positions
            if not 1 <= p <= self.n - 1
        ]

    def segments(self) -> list[tuple[int, int]]:
        """Inclusive (start, end) sentence ranges covering ``1..n``."""
        starts = [1] + [p + 1 for p in self.positions]
        ends = list(self.positions) + [self.n]
        return list(zip(starts, ends))


@dataclass(frozen=True)
class HierSegmentation:
    """Coarse-to-fine stack of boundary sets; ``levels[0]`` is level 1."""

    n: int
    levels: tuple[BoundarySet, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))

    @classmethod
    def from_positions(cls, n: int, levels: Iterable[Iterable[int]]) -> HierSegmentation:
        return cls(n, tuple(BoundarySet(n, tuple(lv)) for lv in levels))

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, level: int) -> BoundarySet:
        if not 1 <= level <= len(self.levels):
            raise LevelOutOfRangeError(f"level {level} not in 1..{len(self.levels)}")
        return self.levels[level - 1]

    @property
    def finest(self) -> BoundarySet:
        return self.levels[-1]

    def to_json(self) -> dict:
        return {"n": self.n, "levels": [list(lv.positions) for lv in self.levels]}

    @classmethod
    def from_json(cls, obj: dict) -> HierSegmentation:
        return cls.from_positions(int(obj["n"]), obj["levels"])


@dataclass(frozen=True)
class TocEntry:
    number: tuple[int, ...]
    title: str
    start_index: int

    def __post_init__(self):
        object.__setattr__(self, "number", tuple(self.number))

    @property
    def depth(self) -> int:
        return len(self.number)

    @property
    def dotted(self) -> str:
        return ".".join(str(x) for x in self.number)


def number_for_depths(depths: Sequence[int]) -> list[tuple[int, ...]]:
    """Dotted numbers implied by a sequence of entry depths in document order."""
    counters: list[int] = []
    out = []
    for d in depths:
        if d <= len(counters):
            del counters[d:]
            counters[d - 1] += 1
        else:
            counters.extend([1] * (d - len(counters)))
        out.append(tuple(counters))
    return out


def toc_violations(entries: Sequence[TocEntry], n: int | None = None) -> list[str]:
    out = []
    if not entries:
        return ["toc has no entries"]
    first = entries[0]
    if first.start_index != 1:
        out.append(f"first entry starts at {first.start_index}, not 1")
    if first.depth != 1:
        out.append(f"first entry has depth {first.depth}, not 1")
    prev = None
    shape_ok = True
    for i, e in enumerate(entries):
        if e.depth < 1 or any(x < 1 for x in e.number):
            out.append(f"entry {i + 1}: malformed number {e.number!r}")
            shape_ok = False
        if e.start_index < 1 or (n is not None and e.start_index > n):
            out.append(f"entry {i + 1}: start_index {e.start_index} out of range")
        if prev is not None:
            if e.depth > prev.depth + 1:
                out.append(f"entry {i + 1}: depth jumps from {prev.depth} to {e.depth}")
                shape_ok = False
            if e.start_index < prev.start_index:
                out.append(f"entry {i + 1}: start_index {e.start_index} before {prev.start_index}")
            elif e.start_index == prev.start_index and e.depth != prev.depth + 1:
                # only a first child may open where its parent opens
                out.append(f"entry {i + 1}: duplicate start_index {e.start_index}")
        prev = e
    if shape_ok and first.depth == 1:
        expected = number_for_depths([e.depth for e in entries])
        for i, (e, num) in enumerate(zip(entries, expected)):
            if e.number != num:
                out.append(f"entry {i + 1}: number {e.dotted} should be "
                           + ".".join(map(str, num)))
    return out


@dataclass(frozen=True)
class Toc:
    """Validated table of contents; construction raises on any invariant failure."""

    entries: tuple[TocEntry, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        problems = toc_violations(self.entries)
        if problems:
            raise InvalidTocError("; ".join(problems))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def depth(self) -> int:
        return max(e.depth for e in self.entries)


def toc_to_hierseg(toc: Toc | Sequence[TocEntry], n: int) -> HierSegmentation:
    """Convert an outline into a nested segmentation.

    Level ``l`` holds ``start_index - 1`` of every entry with depth ``<= l``,
    so a boundary opened at some depth persists at every finer level.
    """
    if not isinstance(toc, Toc):
        toc = Toc(tuple(toc))
    for e in toc:
        if e.start_index > n:
            raise IndexOutOfRangeError(f"entry {e.dotted} starts at {e.start_index} > n={n}")
    levels = [
        BoundarySet(n, tuple(e.start_index - 1 for e in toc if e.depth <= lv and e.start_index > 1))
        for lv in range(1, toc.depth + 1)
    ]
    return HierSegmentation(n, tuple(levels))


def hierseg_to_segments(hs: HierSegmentation, level: int) -> list[tuple[int, int]]:
    return hs.level(level).segments()


def validate_hierseg(hs: HierSegmentation) -> list[str]:
    """Describe every invariant violation; an empty list means ``hs`` is valid."""
    out = []
    if not hs.levels:
        out.append("segmentation has no levels")
    for i, lv in enumerate(hs.levels, start=1):
        if lv.n != hs.n:
            out.append(f"level {i}: n={lv.n} differs from n={hs.n}")
        for p in lv.positions:
            if not 1 <= p <= hs.n - 1:
                out.append(f"level {i}: position {p} outside 1..{hs.n - 1}")
        if i > 1:
            finer = set(lv.positions)
            for p in hs.levels[i - 2].positions:
                if p not in finer:
                    out.append(f"level {i}: position {p} from level {i - 1} does not persist")
    return out
