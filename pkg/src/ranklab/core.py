"""Permutations, relevance vectors, BinRel and the permutation equivalences.

Conventions used throughout the package:

* A permutation over ``K`` labels is stored as its *rank vector*: entry ``i``
  (0-based in Python, label ``i + 1`` in the public API) holds the rank of that
  label, and rank 1 is the most relevant position.
* Labels and cutoffs passed to public functions are 1-based, matching the
  usual mathematical notation ``i, j in [K]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    CutoffOutOfRange,
    DimensionMismatch,
    NonFiniteScore,
    NotABijection,
)

BitString = tuple[int, ...]


@dataclass(frozen=True)
class Permutation:
    """Rank vector ``ranks[i]`` = rank of label ``i + 1``; validated on creation."""

    ranks: tuple[int, ...]

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.ranks)
        K = len(ranks)
        if K < 1 or sorted(ranks) != list(range(1, K + 1)):
            raise NotABijection(f"{ranks} is not a bijection onto 1..{K}")
        object.__setattr__(self, "ranks", ranks)

    @property
    def K(self) -> int:
        return len(self.ranks)

    def __len__(self) -> int:
        return len(self.ranks)

    def __iter__(self):
        return iter(self.ranks)

    def __getitem__(self, idx):
        return self.ranks[idx]

    def __str__(self) -> str:
        return format_permutation(self)

    @classmethod
    def identity(cls, K: int) -> "Permutation":
        return cls(tuple(range(1, K + 1)))

    @classmethod
    def parse(cls, text: str) -> "Permutation":
        return parse_permutation(text)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.ranks, dtype=np.int64)


PermLike = Union[Permutation, Sequence[int], np.ndarray]


@dataclass(frozen=True)
class RelevanceVector:
    """Integer relevance scores in ``{0, ..., bound}`` for each label."""

    scores: tuple[int, ...]
    bound: int = 1

    def __post_init__(self):
        scores = tuple(int(s) for s in self.scores)
        if self.bound < 1:
            raise ValueError("relevance bound must be a positive integer")
        if any(s < 0 or s > self.bound for s in scores):
            raise ValueError(f"relevance scores {scores} outside 0..{self.bound}")
        object.__setattr__(self, "scores", scores)

    @property
    def K(self) -> int:
        return len(self.scores)

    @property
    def is_binary(self) -> bool:
        return all(s in (0, 1) for s in self.scores)

    def __len__(self) -> int:
        return len(self.scores)

    def __iter__(self):
        return iter(self.scores)

    def __getitem__(self, idx):
        return self.scores[idx]


RelLike = Union[RelevanceVector, Sequence[int], np.ndarray]


@dataclass(frozen=True)
class EquivalenceMode:
    """Which notion of permutation equality to test.

    ``kind`` is ``"exact"``, ``"at_p"`` (same top-p *set*) or ``"bracket_p"``
    (same top-j set for every ``j <= p``, i.e. same top-p *order*).
    """

    kind: str
    p: int | None = None

    def __post_init__(self):
        if self.kind not in ("exact", "at_p", "bracket_p"):
            raise ValueError(f"unknown equivalence kind {self.kind!r}")
        if self.kind != "exact" and (self.p is None or self.p < 1):
            raise CutoffOutOfRange(f"equivalence {self.kind} needs p >= 1")

    @classmethod
    def exact(cls) -> "EquivalenceMode":
        return cls("exact")

    @classmethod
    def at(cls, p: int) -> "EquivalenceMode":
        return cls("at_p", p)

    @classmethod
    def bracket(cls, p: int) -> "EquivalenceMode":
        return cls("bracket_p", p)


def make_permutation(ranks: Iterable[int]) -> Permutation:
    return Permutation(tuple(ranks))


def as_ranks(pi: PermLike) -> tuple[int, ...]:
    if isinstance(pi, Permutation):
        return pi.ranks
    return Permutation(tuple(pi)).ranks


def as_relevance(y: RelLike, bound: int | None = None) -> RelevanceVector:
    if isinstance(y, RelevanceVector):
        return y
    scores = tuple(int(s) for s in y)
    if bound is None:
        bound = max(1, max(scores, default=1))
    return RelevanceVector(scores, bound)


def format_permutation(pi: PermLike) -> str:
    return ",".join(str(r) for r in as_ranks(pi))


def parse_permutation(text: str) -> Permutation:
    try:
        ranks = tuple(int(tok) for tok in text.replace(" ", "").split(","))
    except ValueError as exc:
        raise NotABijection(f"cannot parse permutation {text!r}") from exc
    return Permutation(ranks)


def _check_cutoff(p: int, K: int) -> None:
    if not 1 <= p <= K:
        raise CutoffOutOfRange(f"cutoff {p} outside [1, {K}]")


def bin_rel(pi: PermLike, p: int) -> BitString:
    """Indicator of the labels ranked in the top ``p``."""
    ranks = as_ranks(pi)
    _check_cutoff(p, len(ranks))
    return tuple(1 if r <= p else 0 for r in ranks)


def top_set(pi: PermLike, p: int) -> frozenset[int]:
    """Labels (1-based) ranked within the top ``p``."""
    return frozenset(i for i, r in enumerate(as_ranks(pi), start=1) if r <= p)


def equivalent(pi: PermLike, pi_hat: PermLike, mode: EquivalenceMode) -> bool:
    a, b = as_ranks(pi), as_ranks(pi_hat)
    if len(a) != len(b):
        raise DimensionMismatch(f"K={len(a)} vs K={len(b)}")
    if mode.kind == "exact":
        return a == b
    _check_cutoff(mode.p, len(a))
    if mode.kind == "at_p":
        return top_set(a, mode.p) == top_set(b, mode.p)
    return all(top_set(a, j) == top_set(b, j) for j in range(1, mode.p + 1))


def argsort_scores(scores: Sequence[float]) -> Permutation:
    """Rank labels by decreasing score; ties go to the smaller label index."""
    s = [float(v) for v in scores]
    if not all(math.isfinite(v) for v in s):
        raise NonFiniteScore(f"non-finite score in {s}")
    order = sorted(range(len(s)), key=lambda i: (-s[i], i))
    ranks = [0] * len(s)
    for r, i in enumerate(order, start=1):
        ranks[i] = r
    return Permutation(tuple(ranks))


def argsort_rows(scores: np.ndarray) -> np.ndarray:
    """Vectorised :func:`argsort_scores` over the last axis; returns rank arrays."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise NonFiniteScore("non-finite score in batch")
    # stable sort of the negated scores keeps lower label indices first on ties;
    # adding 0.0 folds -0.0 into +0.0 so signed zeros tie as well
    order = np.argsort(-scores + 0.0, axis=-1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(1, scores.shape[-1] + 1), axis=-1)
    return ranks


@lru_cache(maxsize=None)
def _all_perms(K: int) -> np.ndarray:
    arr = np.array(list(itertools.permutations(range(1, K + 1))), dtype=np.int64)
    arr.setflags(write=False)
    return arr


def all_permutations(K: int) -> np.ndarray:
    """All ``K!`` rank vectors as a read-only ``(K!, K)`` array in lexicographic order."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return _all_perms(K)


def perm_index(ranks: np.ndarray) -> np.ndarray:
    """Lexicographic index of rank vectors (Lehmer code), vectorised over leading axes."""
    r = np.asarray(ranks, dtype=np.int64)
    K = r.shape[-1]
    idx = np.zeros(r.shape[:-1], dtype=np.int64)
    for i in range(K):
        smaller_after = (r[..., i + 1:] < r[..., i:i + 1]).sum(axis=-1)
        idx += smaller_after * math.factorial(K - 1 - i)
    return idx


@lru_cache(maxsize=None)
def _rel_grid(K: int, bound: int) -> np.ndarray:
    arr = np.array(list(itertools.product(range(bound + 1), repeat=K)), dtype=np.int64)
    arr = arr.reshape(-1, K)
    arr.setflags(write=False)
    return arr


def relevance_grid(K: int, bound: int) -> np.ndarray:
    """All of ``{0..bound}^K`` as a read-only array in lexicographic order."""
    return _rel_grid(K, bound)


def relevance_index(ys: np.ndarray, bound: int) -> np.ndarray:
    """Position of relevance vectors inside :func:`relevance_grid`."""
    y = np.asarray(ys, dtype=np.int64)
    K = y.shape[-1]
    weights = (bound + 1) ** np.arange(K - 1, -1, -1, dtype=np.int64)
    return (y * weights).sum(axis=-1)


def bin_rel_rows(ranks: np.ndarray, p: int) -> np.ndarray:
    """Vectorised BinRel: ``(..., K)`` rank arrays to ``(..., K)`` 0/1 arrays."""
    return (np.asarray(ranks) <= p).astype(np.int64)
