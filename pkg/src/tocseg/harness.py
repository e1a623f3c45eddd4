"""Scoring documents and aggregating scores into report tables.

Aggregates follow two protocols: bootstrap resampling of documents (corpora
without speaker labels) and leave-one-speaker-out folds.  Values stay in
``[0, 1]`` until export, where they are scaled by 100 and rounded half-up to
two decimals exactly once.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import DimensionConflictError, EmptyInputError, TooFewFoldsError
from .ingest import CorpusIndex, loso_splits
from .metrics import (
    LevelScoreMatrix,
    align_levels,
    boundary_f1,
    boundary_similarity,
    level_score_matrix,
)
from .model import HierSegmentation

LINEAR_METRICS = ("F1", "B")
REPORT_METRICS = ("F1", "B", "B_hier")


@dataclass(frozen=True)
class ScoreRecord:
    doc_id: str
    metric: str
    value: float
    level_ref: int | None = None
    level_hyp: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"{self.doc_id}/{self.metric}: value {self.value} outside [0, 1]")

    def to_json(self) -> dict:
        return {"doc_id": self.doc_id, "metric": self.metric, "level_ref": self.level_ref,
                "level_hyp": self.level_hyp, "value": self.value}

    @classmethod
    def from_json(cls, obj: dict) -> ScoreRecord:
        return cls(obj["doc_id"], obj["metric"], float(obj["value"]),
                   obj.get("level_ref"), obj.get("level_hyp"))


def score_document(doc_id: str, ref: HierSegmentation, hyp: HierSegmentation,
                   n_t: int = 2, f1_tolerance: int = 0) -> list[ScoreRecord]:
    """F1 and B on the finest levels, B_hier, and one ``B_level`` record per level pair."""
    def sim(r, h):
        return boundary_similarity(r, h, n_t)

    m = level_score_matrix(ref, hyp, sim)
    L, K = m.shape
    _, total = align_levels(m)
    out = [
        ScoreRecord(doc_id, "F1", boundary_f1(ref.finest, hyp.finest, f1_tolerance)[2], L, K),
        ScoreRecord(doc_id, "B", float(m.values[-1, -1]), L, K),
        ScoreRecord(doc_id, "B_hier", min(1.0, total / L)),
    ]
    for l in range(L):
        for k in range(K):
            out.append(ScoreRecord(doc_id, "B_level", float(m.values[l, k]), l + 1, k + 1))
    return out


def bootstrap(values: Mapping[str, float] | Sequence[float], iterations: int = 100,
              seed: int = 0) -> tuple[float, float]:
    """Mean and population stddev of ``iterations`` resampled means.

    A mapping is ordered by key before resampling so the result does not
    depend on insertion order.  Draws come from a counter-based Philox
    generator keyed by ``seed``.
    """
    if isinstance(values, Mapping):
        values = [values[k] for k in sorted(values)]
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise EmptyInputError("bootstrap needs at least one value")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    idx = rng.integers(0, v.size, size=(iterations, v.size))
    means = v[idx].mean(axis=1)
    if np.ptp(means) == 0:
        return float(means[0]), 0.0
    return float(means.mean()), float(means.std())


def loso_aggregate(fold_scores: Mapping[str, Sequence[float]] | Sequence[Sequence[float]]) -> tuple[float, float]:
    """Average each fold, then mean and population stddev across folds."""
    folds = list(fold_scores.values()) if isinstance(fold_scores, Mapping) else list(fold_scores)
    if len(folds) < 2:
        raise TooFewFoldsError(f"need at least 2 folds, got {len(folds)}")
    if any(len(f) == 0 for f in folds):
        raise EmptyInputError("every fold needs at least one score")
    means = np.array([np.mean(f) for f in folds])
    if np.ptp(means) == 0:
        return float(means[0]), 0.0
    return float(means.mean()), float(means.std())


def fmt100(x: float) -> str:
    """Scale by 100 and round half-up to 2 decimals."""
    return str((Decimal(repr(float(x))) * 100).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def average_matrices(matrices: Sequence[LevelScoreMatrix | np.ndarray],
                     shape: tuple[int, int] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Cell-wise mean of ragged level matrices, with per-cell counts.

    Missing hypothesis levels repeat the deepest available column; missing
    reference levels simply do not contribute to those rows.
    """
    mats = [m.values if isinstance(m, LevelScoreMatrix) else np.asarray(m, dtype=float)
            for m in matrices]
    if not mats:
        raise EmptyInputError("no matrices to average")
    R = max(m.shape[0] for m in mats)
    K = max(m.shape[1] for m in mats)
    if shape is not None:
        if R > shape[0] or K > shape[1]:
            raise DimensionConflictError(f"matrix of shape ({R}, {K}) does not fit {shape}")
        R, K = shape
    sums = np.zeros((R, K))
    counts = np.zeros((R, K), dtype=int)
    for m in mats:
        padded = np.concatenate([m, np.repeat(m[:, -1:], K - m.shape[1], axis=1)], axis=1)
        sums[:m.shape[0]] += padded
        counts[:m.shape[0]] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return avg, counts


def export_heatmap(matrices: LevelScoreMatrix | np.ndarray | Sequence, header: str | None = None,
                   shape: tuple[int, int] | None = None) -> str:
    """CSV of the averaged level matrix: reference levels as rows, values x100."""
    if isinstance(matrices, (LevelScoreMatrix, np.ndarray)):
        matrices = [matrices]
    avg, _ = average_matrices(matrices, shape)
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ref_level"] + [f"hyp_{k + 1}" for k in range(avg.shape[1])])
    for l, row in enumerate(avg, start=1):
        w.writerow([l] + ["" if np.isnan(x) else fmt100(x) for x in row])
    return buf.getvalue()


def metric_values(records: Sequence[ScoreRecord], metric: str) -> dict[str, float]:
    return {r.doc_id: r.value for r in records if r.metric == metric}


def doc_matrices(records: Sequence[ScoreRecord]) -> dict[str, np.ndarray]:
    cells: dict[str, dict[tuple[int, int], float]] = {}
    for r in records:
        if r.metric == "B_level":
            cells.setdefault(r.doc_id, {})[(r.level_ref, r.level_hyp)] = r.value
    out = {}
    for doc, c in cells.items():
        L = max(l for l, _ in c)
        K = max(k for _, k in c)
        out[doc] = np.array([[c[(l, k)] for k in range(1, K + 1)] for l in range(1, L + 1)])
    return out


def choose_protocol(corpus: CorpusIndex) -> str:
    if corpus.protocol:
        return corpus.protocol
    speakers = {d.speaker_id for d in corpus.documents}
    if None not in speakers and len(speakers) >= 2:
        return "loso"
    return "bootstrap"


@dataclass
class AggregateReport:
    method: str
    dataset: str
    protocol: str
    n_docs: int
    tuning: bool = False
    metrics: dict[str, tuple[float, float]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "method": self.method, "dataset": self.dataset, "protocol": self.protocol,
            "n_docs": self.n_docs, "tuning": self.tuning,
            "metrics": {k: {"mean": fmt100(m), "stddev": fmt100(s)} for k, (m, s) in self.metrics.items()},
            "raw": {k: {"mean": m, "stddev": s} for k, (m, s) in self.metrics.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> AggregateReport:
        return cls(obj["method"], obj["dataset"], obj["protocol"], obj["n_docs"], obj.get("tuning", False),
                   {k: (v["mean"], v["stddev"]) for k, v in obj["raw"].items()})


def aggregate(records: Sequence[ScoreRecord], corpus: CorpusIndex, method: str, *,
              tuning: bool = False, protocol: str | None = None, seed: int = 0,
              iterations: int = 100) -> AggregateReport:
    protocol = protocol or choose_protocol(corpus)
    rep = AggregateReport(method, corpus.name, protocol, len(metric_values(records, "F1")), tuning)
    for name in REPORT_METRICS:
        vals = metric_values(records, name)
        if protocol == "bootstrap":
            rep.metrics[name] = bootstrap(vals, iterations, seed)
        elif protocol == "loso":
            folds = [[vals[d] for d in test if d in vals] for _, test in loso_splits(corpus)]
            rep.metrics[name] = loso_aggregate([f for f in folds if f])
        else:
            raise ValueError(f"unknown protocol {protocol!r}")
    return rep


def _cell(report: AggregateReport | None, metric: str) -> str:
    if report is None or metric not in report.metrics:
        return "-"
    m, s = report.metrics[metric]
    return f"{fmt100(m)} ± {fmt100(s)}"


def _delta(report: AggregateReport | None) -> str:
    if report is None or "B_hier" not in report.metrics:
        return "-"
    hier, lin = report.metrics["B_hier"][0], report.metrics["B"][0]
    d = (Decimal(repr(hier)) - Decimal(repr(lin))) * 100
    d = d.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return f"{fmt100(hier)} ({'+' if d >= 0 else ''}{d})"


def render_markdown(reports: Sequence[AggregateReport], header: str | None = None) -> str:
    """Linear results table (F1 and B per dataset) followed by the B_hier table."""
    datasets = list(dict.fromkeys(r.dataset for r in reports))
    methods = list(dict.fromkeys((r.method, r.tuning) for r in reports))
    by_key = {(r.method, r.tuning, r.dataset): r for r in reports}
    lines = []
    if header:
        lines.append(f"<!-- {header} -->")
    cols = ["Method", "Tuning"] + [f"{d} {m}" for d in datasets for m in LINEAR_METRICS]
    lines.append("| " + " | ".join(cols) + " |")
    lines.append("|" + "|".join([":--", ":-:"] + ["--:"] * (len(cols) - 2)) + "|")
    for method, tuning in methods:
        cells = [method, "✓" if tuning else "✗"]
        for d in datasets:
            cells += [_cell(by_key.get((method, tuning, d)), m) for m in LINEAR_METRICS]
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("| Method | Tuning | " + " | ".join(f"{d} B_hier (Δ B)" for d in datasets) + " |")
    lines.append("|" + "|".join([":--", ":-:"] + ["--:"] * len(datasets)) + "|")
    for method, tuning in methods:
        cells = [method, "✓" if tuning else "✗"] + [_delta(by_key.get((method, tuning, d))) for d in datasets]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
