"""Text and JSON interchange for tables of contents.

One entry per line::

    2.2.1 Testing Strategies [42]

The dotted number is only a depth hint when parsing; numbering is always
recomputed from entry order and depth.  The bracketed integer is the 1-based
index of the sentence where the section starts.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .errors import AllEntriesInvalidError, InvalidTocError, UnparseableTocError
from .model import Toc, TocEntry, number_for_depths

UNTITLED = "(untitled)"

ENTRY_RE = re.compile(r"^\s*(\d+(?:\.\d+)*)[.)]?\s+(.+?)\s*\[(\d+)\]\s*$")
# markdown decoration tolerated around an otherwise canonical line
_LEAD_RE = re.compile(r"^\s*(?:#{1,6}\s+|[-*+•]\s+|\*\*|__)*")
_TRAIL_RE = re.compile(r"(\])(?:\s*(?:\*\*|__))?[\s.,;:!]*$")
_FENCE_RE = re.compile(r"^\s*(```|~~~)")


@dataclass
class ParseDiagnostics:
    dropped_lines: list[tuple[int, str]] = field(default_factory=list)
    repairs: list[str] = field(default_factory=list)

    def __bool__(self):
        return bool(self.dropped_lines or self.repairs)

    def messages(self) -> list[str]:
        return [f"line {ln}: {why}" for ln, why in self.dropped_lines] + list(self.repairs)


@dataclass(frozen=True)
class RawEntry:
    """An entry as read from model output, before any repair."""

    depth: int
    title: str
    start_index: int
    line: int | None = None


def serialize_toc(toc: Toc) -> str:
    return "".join(f"{e.dotted} {e.title} [{e.start_index}]\n" for e in toc)


def match_entry_line(line: str) -> tuple[tuple[int, ...], str, int, bool] | None:
    """``(number, title, start, decorated)``; ``decorated`` means markdown was stripped."""
    m = ENTRY_RE.match(line)
    decorated = False
    if m is None:
        stripped = _TRAIL_RE.sub(r"\1", _LEAD_RE.sub("", line, count=1))
        m = ENTRY_RE.match(stripped)
        if m is None:
            return None
        decorated = True
    number = tuple(int(x) for x in m.group(1).split("."))
    return number, m.group(2), int(m.group(3)), decorated


def repair_toc(raw: Sequence[RawEntry], n: int) -> tuple[Toc, list[str]]:
    """Turn raw entries into a valid :class:`Toc`, logging every change.

    Rules, applied in order: clamp starts into ``[1, n]``; stable sort by
    start; collapse entries sharing a start (the shallowest survives, along
    with a chain of first children that open at the same sentence); cap depth
    jumps at +1; prepend an untitled section when nothing starts at 1;
    renumber.
    """
    if not raw:
        raise AllEntriesInvalidError("no entries to repair")
    if n < 1:
        raise AllEntriesInvalidError(f"no sentence can host an entry (n={n})")
    repairs: list[str] = []

    def where(e):
        return f"line {e.line}" if e.line is not None else f"'{e.title}'"

    items = []
    for e in raw:
        s = min(max(e.start_index, 1), n)
        if s != e.start_index:
            repairs.append(f"{where(e)}: start_index {e.start_index} clamped to {s}")
        items.append([max(e.depth, 1), e.title, s, e])

    order = sorted(range(len(items)), key=lambda i: items[i][2])
    if order != list(range(len(items))):
        repairs.append("entries reordered by start_index")
    items = [items[i] for i in order]

    kept = []
    i = 0
    while i < len(items):
        j = i
        while j < len(items) and items[j][2] == items[i][2]:
            j += 1
        group = items[i:j]
        head = min(range(len(group)), key=lambda k: group[k][0])
        chain = [group[head]]
        for k in range(head + 1, len(group)):
            if group[k][0] == chain[-1][0] + 1:
                chain.append(group[k])
        for it in group:
            if not any(it is c for c in chain):
                repairs.append(f"{where(it[3])}: duplicate start_index {it[2]} dropped")
        kept.extend(chain)
        i = j
    items = kept

    prev_depth = 0
    for it in items:
        if it[0] > prev_depth + 1:
            repairs.append(f"{where(it[3])}: depth {it[0]} coerced to {prev_depth + 1}")
            it[0] = prev_depth + 1
        prev_depth = it[0]

    if items[0][2] > 1:
        repairs.append(f"inserted '{UNTITLED}' section at sentence 1")
        items.insert(0, [1, UNTITLED, 1, None])

    numbers = number_for_depths([it[0] for it in items])
    entries = []
    for it, num in zip(items, numbers):
        src = it[3]
        if src is not None and src.depth == it[0] and getattr(src, "number", None) not in (None, num):
            repairs.append(f"{where(src)}: renumbered {'.'.join(map(str, src.number))} "
                           f"as {'.'.join(map(str, num))}")
        entries.append(TocEntry(num, it[1], it[2]))
    try:
        toc = Toc(tuple(entries))
    except InvalidTocError as exc:  # pragma: no cover - rules above guarantee validity
        raise AllEntriesInvalidError(str(exc)) from exc
    return toc, repairs


@dataclass(frozen=True)
class _ParsedEntry(RawEntry):
    number: tuple[int, ...] = ()


def parse_toc(text: str, n: int) -> tuple[Toc, ParseDiagnostics]:
    """Extract a table of contents from free-form model output.

    Lines that do not look like entries (prose, code fences, headings) are
    dropped and reported.  Raises :class:`UnparseableTocError` when nothing
    matches.
    """
    diag = ParseDiagnostics()
    raw: list[RawEntry] = []
    for ln, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if _FENCE_RE.match(line):
            diag.dropped_lines.append((ln, "code fence"))
            continue
        hit = match_entry_line(line)
        if hit is None:
            diag.dropped_lines.append((ln, "not a toc entry"))
            continue
        number, title, start, decorated = hit
        if decorated:
            diag.repairs.append(f"line {ln}: markdown decoration stripped")
        raw.append(_ParsedEntry(len(number), title, start, ln, number))
    if not raw:
        err = UnparseableTocError("no line matches '<number> <title> [<index>]'")
        err.diagnostics = diag
        raise err
    toc, repairs = repair_toc(raw, n)
    diag.repairs.extend(repairs)
    return toc, diag


def toc_to_json(toc: Toc) -> list[dict]:
    """Nested ``{title, start_index, children}`` mirror of ``toc``."""
    roots: list[dict] = []
    stack: list[dict] = []
    for e in toc:
        node = {"title": e.title, "start_index": e.start_index, "children": []}
        del stack[e.depth - 1:]
        (stack[-1]["children"] if stack else roots).append(node)
        stack.append(node)
    return roots


def toc_from_json(nodes: Iterable[dict] | dict) -> Toc:
    if isinstance(nodes, dict):
        nodes = nodes.get("entries", nodes.get("children", []))
    flat: list[tuple[int, str, int]] = []

    def walk(items, depth):
        for node in items:
            flat.append((depth, str(node["title"]), int(node["start_index"])))
            walk(node.get("children") or [], depth + 1)

    walk(nodes, 1)
    if not flat:
        raise InvalidTocError("empty outline")
    numbers = number_for_depths([d for d, _, _ in flat])
    return Toc(tuple(TocEntry(num, t, s) for num, (_, t, s) in zip(numbers, flat)))
