import random
import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from tocseg.model import HierSegmentation, Sentence, Toc, TocEntry, Transcript, number_for_depths


def make_transcript(texts=None, n=None, gap=0.5, dur=2.0, doc_id="doc", speaker=None, starts=None):
    if texts is None:
        texts = [f"sentence {i}" for i in range(1, n + 1)]
    sents = []
    t = 0.0
    for i, text in enumerate(texts, start=1):
        s = starts[i - 1] if starts is not None else t
        sents.append(Sentence(i, text, s, s + dur))
        t = s + dur + gap
    return Transcript(doc_id, tuple(sents), speaker)


@pytest.fixture
def transcript12():
    return make_transcript(n=12)


titles = (
    st.text(alphabet=st.characters(blacklist_categories=("Cc", "Cs", "Zl", "Zp")), min_size=1, max_size=24)
    .map(str.strip)
    .filter(bool)
)


@st.composite
def tocs(draw, max_entries=12, max_depth=5):
    """Valid Tocs, including first children that share their parent's start."""
    k = draw(st.integers(1, max_entries))
    depths = [1]
    for _ in range(k - 1):
        depths.append(draw(st.integers(1, min(depths[-1] + 1, max_depth))))
    starts = [1]
    for i in range(1, k):
        share = depths[i] == depths[i - 1] + 1 and draw(st.booleans())
        starts.append(starts[-1] if share else starts[-1] + draw(st.integers(1, 6)))
    n = starts[-1] + draw(st.integers(0, 8))
    names = draw(st.lists(titles, min_size=k, max_size=k))
    nums = number_for_depths(depths)
    return Toc(tuple(TocEntry(nu, t, s) for nu, t, s in zip(nums, names, starts))), n


def random_toc(rng: random.Random, max_entries=12, max_depth=5):
    k = rng.randint(1, max_entries)
    depths = [1]
    for _ in range(k - 1):
        depths.append(rng.randint(1, min(depths[-1] + 1, max_depth)))
    starts = [1]
    for i in range(1, k):
        share = depths[i] == depths[i - 1] + 1 and rng.random() < 0.3
        starts.append(starts[-1] if share else starts[-1] + rng.randint(1, 6))
    n = starts[-1] + rng.randint(0, 8)
    nums = number_for_depths(depths)
    names = ["".join(rng.choice("abcdeFGHäöüçãß 0123456789-:()[]") for _ in range(rng.randint(1, 15))).strip() or "x"
             for _ in range(k)]
    return Toc(tuple(TocEntry(nu, t, s) for nu, t, s in zip(nums, names, starts))), n


def random_hierseg(rng: random.Random, n: int, depth: int, density=0.3) -> HierSegmentation:
    """Nested levels: each coarser level is a random subset of the next finer one."""
    finest = {p for p in range(1, n) if rng.random() < density}
    levels = [finest]
    for _ in range(depth - 1):
        levels.append({p for p in levels[-1] if rng.random() < 0.5})
    levels.reverse()
    return HierSegmentation.from_positions(n, levels)


@st.composite
def hiersegs(draw, n=None, max_depth=4):
    n = n if n is not None else draw(st.integers(2, 40))
    depth = draw(st.integers(1, max_depth))
    finest = draw(st.sets(st.integers(1, n - 1), max_size=n - 1)) if n > 1 else set()
    levels = [finest]
    for _ in range(depth - 1):
        levels.append({p for p in levels[-1] if draw(st.booleans())})
    levels.reverse()
    return HierSegmentation.from_positions(n, levels)


def block_document(rng: random.Random, blocks=3, per=10, vocab=12, words=8):
    """Sentences drawn from disjoint per-block vocabularies; returns (transcript, true boundaries)."""
    texts = []
    for b in range(blocks):
        pool = [f"w{b}x{j}" for j in range(vocab)]
        texts += [" ".join(rng.choice(pool) for _ in range(words)) for _ in range(per)]
    return make_transcript(texts), {per * (b + 1) for b in range(blocks - 1)}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
