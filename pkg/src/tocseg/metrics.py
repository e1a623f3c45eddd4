"""Linear and hierarchical boundary metrics.

All scores lie in ``[0, 1]``; reports scale them by 100.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidWindowError, LengthMismatchError
from .model import BoundarySet, HierSegmentation

LinearMetric = Callable[[BoundarySet, BoundarySet], float]


def _check_n(ref, hyp):
    if ref.n != hyp.n:
        raise LengthMismatchError(f"reference has n={ref.n}, hypothesis has n={hyp.n}")


def boundary_f1(ref: BoundarySet, hyp: BoundarySet, tolerance: int = 0) -> tuple[float, float, float]:
    """Precision, recall and F1 of boundary placement.

    Hypothesis boundaries are matched to unused reference boundaries nearest
    first (offset 0, then 1, ...), left to right, preferring the earlier
    reference position on equal offsets.
    """
    _check_n(ref, hyp)
    if not ref.positions and not hyp.positions:
        return 1.0, 1.0, 1.0
    if not ref.positions or not hyp.positions:
        return 0.0, 0.0, 0.0
    free = set(ref.positions)
    used_h = set()
    matches = 0
    for d in range(tolerance + 1):
        for h in hyp.positions:
            if h in used_h:
                continue
            for r in (h - d, h + d):
                if r in free:
                    free.discard(r)
                    used_h.add(h)
                    matches += 1
                    break
    p = matches / len(hyp.positions)
    r = matches / len(ref.positions)
    f = 0.0 if matches == 0 else 2 * p * r / (p + r)
    return p, r, f


@dataclass(frozen=True)
class BoundaryEditOps:
    matches: int
    additions: int
    transpositions: tuple[int, ...]
    n_t: int = 2

    @property
    def cost(self) -> Fraction:
        return self.additions + Fraction(sum(self.transpositions), self.n_t)

    @property
    def count(self) -> int:
        return self.matches + self.additions + len(self.transpositions)


def boundary_edit_distance(ref: BoundarySet, hyp: BoundarySet, n_t: int = 2) -> BoundaryEditOps:
    """Minimal-cost edit explanation of ``hyp`` given ``ref``.

    A reference and hypothesis boundary at offset ``d`` may pair when
    ``d < n_t``: as a match (``d == 0``, free) or a transposition (cost
    ``d / n_t``).  Every unpaired boundary is an addition (cost 1).  Pairs
    never cross: uncrossing two pairs never raises the cost, so nothing is
    lost, and it keeps the explanation well defined.  Among optimal
    explanations the one with the most exact matches is chosen.  With
    ``n_t = 2`` a crossing pair could never be a match anyway.

    Solved as an alignment of the two sorted position lists.
    Nearest-first greedy pairing is not optimal here: for ref ``{5, 6}`` and
    hyp ``{6, 7}`` it matches 6 and strands 5 and 7 (cost 2) where two
    transpositions cost 1.
    """
    _check_n(ref, hyp)
    if n_t < 2:
        raise InvalidWindowError(f"n_t must be >= 2, got {n_t}")
    R, H = ref.positions, hyp.positions
    nr, nh = len(R), len(H)
    if R == H:
        return BoundaryEditOps(nr, 0, (), n_t)
    if not nr or not nh:
        return BoundaryEditOps(0, nr + nh, (), n_t)
    # cost scaled by n_t so everything stays integral; key = (cost, -matches)
    INF = (float("inf"), 0)
    best = [[INF] * (nh + 1) for _ in range(nr + 1)]
    move = [[None] * (nh + 1) for _ in range(nr + 1)]
    best[0][0] = (0, 0)
    for i in range(nr + 1):
        for j in range(nh + 1):
            cur = best[i][j]
            if cur is INF:
                continue
            c, negm = cur
            if i < nr and (c + n_t, negm) < best[i + 1][j]:
                best[i + 1][j] = (c + n_t, negm)
                move[i + 1][j] = "r"
            if j < nh and (c + n_t, negm) < best[i][j + 1]:
                best[i][j + 1] = (c + n_t, negm)
                move[i][j + 1] = "h"
            if i < nr and j < nh:
                d = abs(R[i] - H[j])
                if d < n_t:
                    cand = (c + d, negm - (d == 0))
                    if cand < best[i + 1][j + 1]:
                        best[i + 1][j + 1] = cand
                        move[i + 1][j + 1] = "p"
    matches = additions = 0
    trans = []
    i, j = nr, nh
    while i or j:
        m = move[i][j]
        if m == "p":
            d = abs(R[i - 1] - H[j - 1])
            if d == 0:
                matches += 1
            else:
                trans.append(d)
            i, j = i - 1, j - 1
        elif m == "r":
            additions += 1
            i -= 1
        else:
            additions += 1
            j -= 1
    return BoundaryEditOps(matches, additions, tuple(reversed(trans)), n_t)


def boundary_similarity(ref: BoundarySet, hyp: BoundarySet, n_t: int = 2) -> float:
    """Edit-based agreement: ``1 - cost / (matches + additions + transpositions)``."""
    ops = boundary_edit_distance(ref, hyp, n_t)
    if ops.count == 0:
        return 1.0
    return float(1 - ops.cost / ops.count)


@dataclass(frozen=True)
class LevelScoreMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or min(v.shape) < 1:
            raise ValueError(f"level matrix must be 2-D and non-empty, got shape {v.shape}")
        if not ((v >= 0) & (v <= 1)).all():
            raise ValueError("level matrix entries must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class LevelAlignment:
    phi: tuple[int, ...]


def level_score_matrix(
    ref: HierSegmentation, hyp: HierSegmentation, metric: LinearMetric = boundary_similarity
) -> LevelScoreMatrix:
    _check_n(ref, hyp)
    return LevelScoreMatrix(
        np.array([[metric(r, h) for h in hyp.levels] for r in ref.levels], dtype=float)
    )


def align_levels(m: LevelScoreMatrix | np.ndarray) -> tuple[LevelAlignment, float]:
    """Best non-decreasing map from reference levels to hypothesis levels.

    ``best[l, k] = m[l, k] + max(best[l - 1, :k + 1])``; ties go to the
    smallest hypothesis level.  Returned levels are 1-based.
    """
    v = m.values if isinstance(m, LevelScoreMatrix) else np.asarray(m, dtype=float)
    L, K = v.shape
    best = np.empty((L, K))
    arg = np.zeros((L, K), dtype=int)
    best[0] = v[0]
    for l in range(1, L):
        run_k = 0
        for k in range(K):
            if best[l - 1, k] > best[l - 1, run_k]:
                run_k = k
            arg[l, k] = run_k
            best[l, k] = v[l, k] + best[l - 1, run_k]
    k = int(np.argmax(best[-1]))
    phi = [k]
    for l in range(L - 1, 0, -1):
        k = int(arg[l, k])
        phi.append(k)
    phi.reverse()
    total = float(sum(v[l, k] for l, k in enumerate(phi)))
    return LevelAlignment(tuple(k + 1 for k in phi)), total


def b_hier(ref: HierSegmentation, hyp: HierSegmentation, n_t: int = 2) -> float:
    """Mean per-level boundary similarity under the best monotone level map."""
    m = level_score_matrix(ref, hyp, lambda r, h: boundary_similarity(r, h, n_t))
    _, total = align_levels(m)
    return total / ref.depth


def _labels(bs: BoundarySet) -> np.ndarray:
    lab = np.zeros(bs.n, dtype=int)
    for p in bs.positions:
        lab[p:] += 1
    return lab


def default_window(ref: BoundarySet) -> int:
    """Half the mean reference segment length, rounded, at least 1."""
    return max(1, int(round(ref.n / (2 * ref.segment_count))))


def pk(ref: BoundarySet, hyp: BoundarySet, k: int | None = None) -> float:
    """Probability that two sentences ``k`` apart are inconsistently split."""
    _check_n(ref, hyp)
    k = default_window(ref) if k is None else k
    if ref.n <= k:
        return 0.0
    r, h = _labels(ref), _labels(hyp)
    same_r = r[:-k] == r[k:]
    same_h = h[:-k] == h[k:]
    return float(np.mean(same_r != same_h))


def windowdiff(ref: BoundarySet, hyp: BoundarySet, k: int | None = None) -> float:
    _check_n(ref, hyp)
    k = default_window(ref) if k is None else k
    if ref.n <= k:
        return 0.0
    r, h = _labels(ref), _labels(hyp)
    return float(np.mean((r[k:] - r[:-k]) != (h[k:] - h[:-k])))
