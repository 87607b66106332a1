"""Finite ranking classes, threshold restrictions, linear rankers, VC search and Rademacher estimates.

A finite domain is identified with the point indices ``0..n-1``. Hypothesis
tables are stored as integer arrays: ``FiniteRankingClass.table[h, x]`` is the
rank vector ``h(x)`` and ``BinaryClass.table[h, x]`` is a bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .core import Permutation, argsort_rows, format_permutation, parse_permutation
from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    EmptySample,
    IndexOutOfRange,
    NotABijection,
    PointOutOfRange,
)
from .losses import LossSpec, loss_pairs

#: default budget on sum_m C(n, m) * 2^m for the exhaustive shattering search
DEFAULT_VC_BUDGET = 10_000_000


def _dedup_rows(table: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct leading-axis slices in first-occurrence order, plus their source indices."""
    flat = table.reshape(table.shape[0], -1)
    _, first = np.unique(flat, axis=0, return_index=True)
    keep = np.sort(first)
    return table[keep], keep


def _check_points(points, n: int) -> np.ndarray:
    pts = np.asarray(points, dtype=np.int64).reshape(-1)
    if pts.size and (pts.min() < 0 or pts.max() >= n):
        bad = pts[(pts < 0) | (pts >= n)][0]
        raise PointOutOfRange(f"point {bad} outside domain 0..{n - 1}")
    return pts


@dataclass(frozen=True)
class FiniteRankingClass:
    """Explicit table ``[n_hypotheses, n_points, K]`` of rank vectors.

    Construction validates every cell and removes duplicate hypotheses,
    keeping the first occurrence; ``source`` maps each kept row back to its
    index in the table that was passed in.
    """

    table: np.ndarray
    source: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        tab = np.array(self.table, dtype=np.int64)
        if tab.ndim != 3 or 0 in tab.shape:
            raise DimensionMismatch(f"expected a nonempty [H, n, K] table, got shape {tab.shape}")
        K = tab.shape[2]
        if not np.array_equal(np.sort(tab, axis=2), np.broadcast_to(np.arange(1, K + 1), tab.shape)):
            raise NotABijection("hypothesis table contains a cell that is not a permutation")
        tab, keep = _dedup_rows(tab)
        src = keep if self.source is None else np.asarray(self.source, dtype=np.int64)[keep]
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)
        object.__setattr__(self, "source", src)

    @property
    def K(self) -> int:
        return self.table.shape[2]

    @property
    def n(self) -> int:
        return self.table.shape[1]

    def __len__(self) -> int:
        return self.table.shape[0]

    def predict(self, h: int, x: int) -> Permutation:
        return Permutation(tuple(self.table[h, x].tolist()))

    def subset(self, indices: Sequence[int]) -> "FiniteRankingClass":
        idx = np.asarray(indices, dtype=np.int64)
        return FiniteRankingClass(self.table[idx], source=self.source[idx])

    def to_json(self) -> str:
        doc = {
            "K": self.K,
            "n": self.n,
            "hypotheses": [[format_permutation(cell) for cell in row] for row in self.table.tolist()],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "FiniteRankingClass":
        doc = json.loads(text)
        rows = [[parse_permutation(s).ranks for s in row] for row in doc["hypotheses"]]
        tab = np.asarray(rows, dtype=np.int64)
        if tab.ndim != 3 or tab.shape[1] != doc["n"] or tab.shape[2] != doc["K"]:
            raise DimensionMismatch(f"table shape {tab.shape} disagrees with K={doc['K']}, n={doc['n']}")
        return cls(tab)


@dataclass(frozen=True)
class BinaryClass:
    """Table ``[n_hypotheses, n_points]`` of bits, deduplicated on construction."""

    table: np.ndarray

    def __post_init__(self):
        tab = np.array(self.table, dtype=np.int64)
        if tab.ndim != 2 or 0 in tab.shape:
            raise DimensionMismatch(f"expected a nonempty [H, n] table, got shape {tab.shape}")
        if np.any((tab != 0) & (tab != 1)):
            raise ValueError("binary class entries must be 0 or 1")
        tab, _ = _dedup_rows(tab.astype(np.uint8))
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)

    @property
    def n(self) -> int:
        return self.table.shape[1]

    def __len__(self) -> int:
        return self.table.shape[0]

    def bitmasks(self) -> list[int]:
        """One Python integer per hypothesis, bit ``x`` set when ``h(x) = 1``."""
        weights = [1 << x for x in range(self.n)]
        return [sum(w for w, b in zip(weights, row) if b) for row in self.table.tolist()]


@dataclass(frozen=True)
class LinearRankerClass:
    """Finitely many score-based rankers ``x -> argsort(W x)`` with ``W`` of shape ``(K, d)``."""

    weights: np.ndarray  # [m, K, d]

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 3 or 0 in w.shape:
            raise DimensionMismatch(f"expected [m, K, d] weights, got shape {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def K(self) -> int:
        return self.weights.shape[1]

    @property
    def d(self) -> int:
        return self.weights.shape[2]

    @classmethod
    def sample(cls, K: int, d: int, n_matrices: int, seed) -> "LinearRankerClass":
        rng = np.random.default_rng(seed)
        return cls(rng.standard_normal((n_matrices, K, d)))

    def on_points(self, X: np.ndarray) -> FiniteRankingClass:
        """Restrict the sampled rankers to the rows of ``X`` (shape ``[n, d]``)."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise DimensionMismatch(f"points must have shape [n, {self.d}], got {X.shape}")
        scores = np.einsum("mkd,nd->mnk", self.weights, X)
        return FiniteRankingClass(argsort_rows(scores))


def linear_predict(W, x) -> Permutation:
    """``argsort(W x)`` with ties going to the smaller label."""
    W = np.asarray(W, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if W.ndim != 2 or W.shape[1] != x.shape[0]:
        raise DimensionMismatch(f"W has shape {W.shape}, x has length {x.shape[0]}")
    return Permutation(tuple(argsort_rows(W @ x).tolist()))


def threshold_restrict(H: FiniteRankingClass, i: int, j: int) -> BinaryClass:
    """The binary class ``{x -> 1[h_i(x) <= j]}``; ``i`` and ``j`` are 1-based."""
    if not 1 <= i <= H.K:
        raise IndexOutOfRange(f"label {i} outside [1, {H.K}]")
    if not 1 <= j <= H.K:
        raise IndexOutOfRange(f"cutoff {j} outside [1, {H.K}]")
    return BinaryClass((H.table[:, :, i - 1] <= j).astype(np.uint8))


def sample_representatives(H: FiniteRankingClass, S_U) -> np.ndarray:
    """Index (into ``H``) of the first hypothesis for each distinct labelling of ``S_U``."""
    pts = _check_points(S_U, H.n)
    if pts.size == 0:
        return np.array([0], dtype=np.int64)
    _, keep = _dedup_rows(H.table[:, pts, :])
    return keep


def restrict_to_sample(H: FiniteRankingClass, S_U) -> FiniteRankingClass:
    """One representative hypothesis per distinct labelling of ``S_U``.

    The representatives stay total functions on the whole domain. An empty
    ``S_U`` yields the lowest-index hypothesis alone.
    """
    return H.subset(sample_representatives(H, S_U))


def shattering_budget(n: int, max_m: int) -> int:
    return sum(math.comb(n, m) << m for m in range(1, max_m + 1))


def vc_lower_bound(C: BinaryClass, max_m: int, budget: int = DEFAULT_VC_BUDGET) -> int:
    """Largest ``m <= max_m`` such that some ``m`` points are shattered by ``C``.

    The search is exhaustive. It stops at the first size with no shattered
    subset, which is sound because subsets of shattered sets are shattered.
    """
    if max_m < 0 or max_m > C.n:
        raise IndexOutOfRange(f"max_m={max_m} outside [0, {C.n}]")
    # no set larger than log2|C| can be shattered
    max_m = min(max_m, int(math.floor(math.log2(len(C)))))
    cost = shattering_budget(C.n, max_m)
    if cost > budget:
        raise BudgetExceeded(f"shattering search needs {cost} checks, budget is {budget}")
    return kernels.max_shattered_any(C.bitmasks(), C.n, max_m)


def _sample_losses(H: FiniteRankingClass, spec: LossSpec, sample) -> np.ndarray:
    points, ys = sample
    pts = _check_points(points, H.n)
    ys = np.asarray(ys, dtype=np.int64).reshape(pts.size, H.K)
    return loss_pairs(spec, H.table[:, pts, :], ys[None, :, :])


def rademacher_draws(H: FiniteRankingClass, spec: LossSpec, sample, n_draws: int, seed) -> np.ndarray:
    """Per-draw values ``sup_h (1/n) sum_i sigma_i loss(h(x_i), y_i)``.

    ``sample`` is a pair ``(points, ys)``; objects with ``points`` and ``ys``
    attributes (such as :class:`ranklab.batch.LabeledSample`) work too.
    """
    if hasattr(sample, "points"):
        sample = (sample.points, sample.ys)
    if len(sample[0]) == 0:
        raise EmptySample("Rademacher estimate needs at least one sample point")
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    L = _sample_losses(H, spec, sample)  # [H, n]
    n = L.shape[1]
    rng = np.random.default_rng(seed)
    sigma = rng.integers(0, 2, size=(n_draws, n)) * 2 - 1
    return (sigma @ L.T).max(axis=1) / n


def rademacher_estimate(H: FiniteRankingClass, spec: LossSpec, sample, n_draws: int, seed) -> float:
    """Monte Carlo estimate of the empirical Rademacher complexity of ``loss o H``."""
    return float(rademacher_draws(H, spec, sample, n_draws, seed).mean())
