import json
import random

import pytest

from conftest import make_transcript
from oracles import labels_to_positions, sweep_top_labels
from tocseg.errors import (
    EmptyIntervalsError,
    InvariantViolationError,
    MissingSpeakerError,
    TooFewSpeakersError,
    TranscriptParseError,
    UnmappableIntervalError,
)
from tocseg.ingest import (
    CorpusDocument,
    CorpusIndex,
    TopicInterval,
    compute_pauses,
    dump_transcript,
    intervals_to_hierseg,
    load_manifest,
    load_reference,
    load_transcript,
    loso_splits,
    snap_time_to_sentence,
)
from tocseg.model import Sentence, Transcript, validate_hierseg


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return path


def test_load_transcript(tmp_path):
    p = write_jsonl(tmp_path / "d1.jsonl", [
        {"doc_id": "lec1", "speaker": "s1"},
        {"i": 1, "text": "Hello.", "start": 0.0, "end": 1.0},
        {"i": 2, "text": "Olá.", "start": 1.2, "end": 2.0},
        {"i": 3, "text": "Bye.", "start": 2.5, "end": 3.0},
    ])
    t = load_transcript(p)
    assert t.n == 3 and t.doc_id == "lec1" and t.speaker_id == "s1"
    assert t.sentences[1].text == "Olá."
    again = tmp_path / "again.jsonl"
    again.write_text(dump_transcript(t), encoding="utf-8")
    assert load_transcript(again) == t


def test_load_transcript_gap(tmp_path):
    p = write_jsonl(tmp_path / "d.jsonl", [
        {"i": 1, "text": "a", "start": 0, "end": 1},
        {"i": 3, "text": "b", "start": 1, "end": 2},
    ])
    with pytest.raises(InvariantViolationError) as info:
        load_transcript(p)
    assert info.value.sentence_index == 3


def test_load_transcript_end_before_start(tmp_path):
    p = write_jsonl(tmp_path / "d.jsonl", [
        {"i": 1, "text": "a", "start": 0, "end": 1},
        {"i": 2, "text": "b", "start": 5, "end": 4},
    ])
    with pytest.raises(InvariantViolationError) as info:
        load_transcript(p)
    assert info.value.sentence_index == 2


def test_load_transcript_bad_json(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text('{"i": 1, "text": "a", "start": 0, "end": 1}\n{"i": 2, oops}\n')
    with pytest.raises(TranscriptParseError) as info:
        load_transcript(p)
    assert info.value.line == 2


def test_pauses():
    t = Transcript("d", (Sentence(1, "a", 0.0, 3.10), Sentence(2, "b", 3.72, 5.0), Sentence(3, "c", 4.5, 6.0)))
    p = compute_pauses(t)
    assert len(p) == 2
    assert p[0] == pytest.approx(0.62)
    assert p[1] == 0.0
    assert compute_pauses(make_transcript(n=1)) == []


def test_snap():
    t = make_transcript(n=6, starts=[0, 2, 4, 6, 8, 10])
    assert snap_time_to_sentence(6.0, t) == 4
    assert snap_time_to_sentence(3.4, t) == 3
    assert snap_time_to_sentence(3.0, t) == 2  # tie goes to the earlier sentence
    assert snap_time_to_sentence(-5, t) == 1
    assert snap_time_to_sentence(99, t) == 6


def test_snap_against_brute():
    rng = random.Random(0)
    for _ in range(300):
        starts = sorted(round(rng.uniform(0, 50), 1) for _ in range(rng.randint(1, 12)))
        t = make_transcript(n=len(starts), starts=starts, dur=0.1)
        x = round(rng.uniform(-5, 55), 1)
        best = min(range(len(starts)), key=lambda i: (abs(starts[i] - x), i))
        assert snap_time_to_sentence(x, t) == best + 1


def test_intervals_gap_makes_filler():
    t = make_transcript(n=12, starts=[float(i) for i in range(12)], dur=0.9)
    ivs = [TopicInterval("A", 0.0, 4.0), TopicInterval("B", 8.0, 11.9)]
    notes = []
    hs = intervals_to_hierseg(ivs, t, notes)
    assert hs.depth == 1
    assert hs.level(1).positions == (4, 8)  # A, filler, B
    assert any("filler" in n for n in notes)


def test_intervals_subtopic():
    t = make_transcript(n=12, starts=[float(i) for i in range(12)], dur=0.9)
    ivs = [TopicInterval("A", 0.0, 6.0), TopicInterval("A.1", 3.0, 6.0), TopicInterval("B", 6.0, 11.9)]
    hs = intervals_to_hierseg(ivs, t)
    assert hs.level(1).positions == (6,)
    assert hs.level(2).positions == (3, 6)


def test_intervals_whole_document():
    t = make_transcript(n=5)
    hs = intervals_to_hierseg([TopicInterval("all", 0.0, t.sentences[-1].end)], t)
    assert hs.depth == 1 and hs.level(1).positions == ()


def test_intervals_partial_overlap_truncates():
    t = make_transcript(n=12, starts=[float(i) for i in range(12)], dur=0.9)
    notes = []
    hs = intervals_to_hierseg([TopicInterval("A", 0.0, 7.0), TopicInterval("B", 5.0, 11.9)], t, notes)
    assert hs.depth == 1 and hs.level(1).positions == (5,)
    assert any("truncated" in n for n in notes)


def test_intervals_errors():
    t = make_transcript(n=3)
    with pytest.raises(EmptyIntervalsError):
        intervals_to_hierseg([], t)
    with pytest.raises(UnmappableIntervalError):
        intervals_to_hierseg([TopicInterval("late", 1000.0, 1001.0)], t)
    with pytest.raises(InvariantViolationError):
        TopicInterval("bad", 3.0, 3.0)


def _random_intervals(rng, starts, end):
    """Disjoint top-level intervals aligned to sentence starts, with random gaps."""
    cuts = sorted(rng.sample(range(len(starts)), rng.randint(1, min(6, len(starts)))))
    out = []
    for a, nxt in zip(cuts, cuts[1:] + [None]):
        stop = starts[nxt] if nxt is not None else end
        if nxt is not None and nxt - a > 1 and rng.random() < 0.4:
            stop = starts[rng.randint(a + 1, nxt - 1)]  # leave a gap
        out.append(TopicInterval(f"t{a}", starts[a], stop))
    return out


def test_intervals_sweep_oracle():
    rng = random.Random(7)
    for _ in range(300):
        n = rng.randint(1, 25)
        starts = [float(2 * i) for i in range(n)]
        t = make_transcript(n=n, starts=starts, dur=1.5)
        ivs = _random_intervals(rng, starts, t.sentences[-1].end)
        hs = intervals_to_hierseg(ivs, t)
        labels = sweep_top_labels([(iv.label, iv.start_time, iv.end_time) for iv in ivs], starts)
        assert set(hs.level(1).positions) == labels_to_positions(labels)
        assert validate_hierseg(hs) == []


def test_intervals_nested_random_valid():
    rng = random.Random(8)
    for _ in range(300):
        n = rng.randint(2, 30)
        starts = [float(2 * i) for i in range(n)]
        t = make_transcript(n=n, starts=starts, dur=1.5)
        ivs = _random_intervals(rng, starts, t.sentences[-1].end)
        extra = []
        for iv in ivs:
            for _ in range(rng.randint(0, 2)):
                s = rng.uniform(iv.start_time, iv.end_time)
                e = rng.uniform(s, iv.end_time + 3)  # sometimes spills over: partial overlap
                if e > s:
                    extra.append(TopicInterval(f"{iv.label}.sub", s, e))
        hs = intervals_to_hierseg(ivs + extra, t)
        assert validate_hierseg(hs) == []
        assert set(hs.level(1).positions) <= set(hs.finest.positions)


def test_load_reference_formats(tmp_path):
    t = make_transcript(n=10, starts=[float(i) for i in range(10)], dur=0.9)
    (tmp_path / "r.toc").write_text("# config-hash: x\n1 A [1]\n2 B [4]\n2.1 C [4]\n2.2 D [7]\n")
    (tmp_path / "r1.json").write_text(json.dumps({"n": 10, "levels": [[3], [3, 6]]}))
    (tmp_path / "r2.json").write_text(json.dumps({"intervals": [
        {"label": "A", "start_time": 0, "end_time": 3}, {"label": "B", "start_time": 3, "end_time": 9.9},
        {"label": "B1", "start_time": 6, "end_time": 9.9}]}))
    (tmp_path / "r3.json").write_text(json.dumps([
        {"title": "A", "start_index": 1, "children": []},
        {"title": "B", "start_index": 4, "children": [{"title": "C", "start_index": 4},
                                                      {"title": "D", "start_index": 7}]}]))
    for name in ("r.toc", "r1.json", "r2.json", "r3.json"):
        hs = load_reference(tmp_path / name, t)
        assert [lv.positions for lv in hs.levels] == [(3,), (3, 6)], name


def _corpus(speakers):
    return CorpusIndex(tuple(CorpusDocument(f"d{i}", s, None, None) for i, s in enumerate(speakers)))


def test_loso_five_speakers():
    c = _corpus(["e", "a", "b", "c", "d", "a", "e"])
    folds = loso_splits(c)
    assert len(folds) == 5
    assert folds[0][1] == ["d1", "d5"]  # speaker "a" first


def test_loso_partition_96():
    rng = random.Random(4)
    c = _corpus([rng.choice("wxyz") for _ in range(96)])
    folds = loso_splits(c)
    assert len(folds) == 4
    tests = [set(te) for _, te in folds]
    assert set().union(*tests) == set(c.doc_ids)
    assert sum(len(s) for s in tests) == 96
    for train, test in folds:
        assert set(train).isdisjoint(test) and len(train) + len(test) == 96


def test_loso_errors():
    with pytest.raises(TooFewSpeakersError):
        loso_splits(_corpus(["a", "a"]))
    with pytest.raises(MissingSpeakerError):
        loso_splits(_corpus(["a", None]))


def test_duplicate_doc_ids():
    with pytest.raises(InvariantViolationError):
        CorpusIndex((CorpusDocument("x", None, None, None), CorpusDocument("x", None, None, None)))


def test_load_manifest(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"name": "mini", "documents": [
        {"doc_id": "a", "speaker": "s1", "transcript": "a.jsonl", "reference": "a.toc"}]}))
    c = load_manifest(tmp_path / "m.json")
    assert c.name == "mini"
    assert c.by_id("a").transcript == tmp_path / "a.jsonl"
