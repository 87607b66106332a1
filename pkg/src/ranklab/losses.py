"""Ranking losses, their normalisers, extrema, and loss-family membership checks.

Losses are looked up by a short grammar: ``sum@p``, ``prec@p``, ``ap``,
``auc``, ``rr``, ``pl`` and ``dcg@p`` (``dcg`` alone means ``p = K``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .core import (
    PermLike,
    RelLike,
    all_permutations,
    as_ranks,
    as_relevance,
    perm_index,
    relevance_grid,
)
from .errors import (
    BinaryRelevanceRequired,
    CutoffOutOfRange,
    DimensionMismatch,
    NoPositiveLoss,
    SearchSpaceTooLarge,
)

#: tolerance for zero tests and comparisons of float-valued losses
TOL = 1e-9
#: default cap on ``K! * (B+1)^K`` for exhaustive loss tables
DEFAULT_CAP = 2_000_000

_NAMES = ("sum", "prec", "ap", "auc", "rr", "pl", "dcg")
_WITH_CUTOFF = ("sum", "prec", "dcg")
_BINARY_ONLY = ("ap", "auc", "rr")
_INTEGER = ("sum", "prec", "pl")


@dataclass(frozen=True)
class LossSpec:
    name: str
    p: int | None = None

    def __post_init__(self):
        if self.name not in _NAMES:
            raise ValueError(f"unknown loss {self.name!r}; expected one of {_NAMES}")
        if self.name in ("sum", "prec") and self.p is None:
            raise CutoffOutOfRange(f"{self.name} needs an explicit cutoff")
        if self.name not in _WITH_CUTOFF and self.p is not None:
            raise ValueError(f"{self.name} takes no cutoff")
        if self.p is not None and self.p < 1:
            raise CutoffOutOfRange(f"cutoff {self.p} < 1")

    def cutoff(self, K: int) -> int:
        """The effective cutoff for ``K`` labels, validated against ``[1, K]``."""
        if self.name == "rr":
            p = 1
        elif self.p is None:
            p = K
        else:
            p = self.p
        if not 1 <= p <= K:
            raise CutoffOutOfRange(f"cutoff {p} outside [1, {K}] for {self}")
        return p

    @property
    def requires_binary(self) -> bool:
        return self.name in _BINARY_ONLY

    @property
    def integer_valued(self) -> bool:
        return self.name in _INTEGER

    @property
    def code(self) -> int:
        return kernels.LOSS_CODES[self.name]

    def __str__(self) -> str:
        return self.name if self.p is None else f"{self.name}@{self.p}"


@dataclass(frozen=True)
class LossFamily:
    """``sum``: zero-matched with sum@p and invariant under [p]-equivalence.
    ``prec``: zero-matched with prec@p and invariant under p-equivalence."""

    kind: str
    p: int

    def __post_init__(self):
        if self.kind not in ("sum", "prec"):
            raise ValueError(f"unknown family {self.kind!r}")
        if self.p < 1:
            raise CutoffOutOfRange(f"family cutoff {self.p} < 1")

    @property
    def reference(self) -> LossSpec:
        return LossSpec(self.kind, self.p)

    def __str__(self) -> str:
        return f"{self.kind}@{self.p}"


@dataclass(frozen=True)
class LossExtrema:
    a: float  # smallest strictly positive loss
    M: float  # largest loss

    @property
    def c(self) -> float:
        return self.M / self.a


@dataclass(frozen=True)
class Counterexample:
    check: str  # "zero_matched" or "invariance"
    pi: tuple[int, ...]
    pi_hat: tuple[int, ...] | None
    y: tuple[int, ...]


@dataclass(frozen=True)
class MembershipReport:
    zero_matched: bool
    invariance_holds: bool
    counterexample: Counterexample | None
    search_space_size: int

    @property
    def member(self) -> bool:
        return self.zero_matched and self.invariance_holds


def parse_loss(text: str) -> LossSpec:
    text = text.strip().lower()
    if "@" in text:
        name, _, p = text.partition("@")
        try:
            return LossSpec(name, int(p))
        except ValueError as exc:
            if isinstance(exc, CutoffOutOfRange) or "unknown" in str(exc):
                raise
            raise ValueError(f"bad cutoff in loss {text!r}") from exc
    return LossSpec(text)


def parse_family(text: str) -> LossFamily:
    name, sep, p = text.strip().lower().partition("@")
    if not sep:
        raise ValueError(f"family needs a cutoff, e.g. 'sum@2' (got {text!r})")
    return LossFamily(name, int(p))


# --- normalisers -----------------------------------------------------------


def normalizer_sum(y: RelLike, p: int) -> int:
    """min over permutations of sum_i min(rank_i, p+1) * y_i, in closed form."""
    scores = sorted(as_relevance(y).scores, reverse=True)
    if not 1 <= p <= len(scores):
        raise CutoffOutOfRange(f"cutoff {p} outside [1, {len(scores)}]")
    return sum(min(r, p + 1) * s for r, s in enumerate(scores, start=1))


def normalizer_prec(y: RelLike, p: int) -> int:
    """Sum of the ``p`` largest relevance scores."""
    scores = sorted(as_relevance(y).scores, reverse=True)
    if not 1 <= p <= len(scores):
        raise CutoffOutOfRange(f"cutoff {p} outside [1, {len(scores)}]")
    return sum(scores[:p])


def normalizer_dcg(y: RelLike, p: int) -> float:
    gains = sorted((2.0 ** s - 1.0 for s in as_relevance(y).scores), reverse=True)
    if not 1 <= p <= len(gains):
        raise CutoffOutOfRange(f"cutoff {p} outside [1, {len(gains)}]")
    return sum(g / math.log2(1 + r) for r, g in enumerate(gains[:p], start=1))


# --- scalar evaluation -----------------------------------------------------


def eval_loss(spec: LossSpec, pi: PermLike, y: RelLike):
    """Loss of ranking ``pi`` against relevance ``y``.

    Integer-valued losses return ``int``; AP, AUC, RR and DCG return ``float``.
    AP, AUC and RR are 0 when no (or, for AUC, every) label is relevant.
    """
    ranks = as_ranks(pi)
    rel = as_relevance(y)
    s = rel.scores
    K = len(ranks)
    if len(s) != K:
        raise DimensionMismatch(f"permutation has K={K}, relevance has K={len(s)}")
    if spec.requires_binary and not rel.is_binary:
        raise BinaryRelevanceRequired(f"{spec} needs binary relevance, got {s}")
    p = spec.cutoff(K)
    name = spec.name
    if name == "sum":
        return sum(min(r, p + 1) * v for r, v in zip(ranks, s)) - normalizer_sum(rel, p)
    if name == "prec":
        return normalizer_prec(rel, p) - sum(v for r, v in zip(ranks, s) if r <= p)
    if name == "dcg":
        gain = sum((2.0 ** v - 1.0) / math.log2(1 + r) for r, v in zip(ranks, s) if r <= p)
        return normalizer_dcg(rel, p) - gain
    if name == "pl":
        return sum(
            1 for i in range(K) for j in range(K) if ranks[i] < ranks[j] and s[i] < s[j]
        )
    n_rel = sum(s)
    if name == "auc":
        if n_rel == 0 or n_rel == K:
            return 0.0
        bad = sum(1 for i in range(K) for j in range(K) if ranks[i] < ranks[j] and s[i] < s[j])
        return bad / (n_rel * (K - n_rel))
    if n_rel == 0:
        return 0.0
    if name == "rr":
        return 1.0 - 1.0 / min(r for r, v in zip(ranks, s) if v == 1)
    # average precision: precision at the rank of each relevant label
    total = 0.0
    for i in range(K):
        if s[i] == 1:
            hits = sum(1 for j in range(K) if s[j] == 1 and ranks[j] <= ranks[i])
            total += hits / ranks[i]
    return 1.0 - total / n_rel


def is_zero(value: float) -> bool:
    return abs(value) <= TOL


# --- exhaustive tables -----------------------------------------------------


def _check_space(spec: LossSpec, K: int, bound: int, cap: int) -> None:
    if spec.requires_binary and bound != 1:
        raise BinaryRelevanceRequired(f"{spec} is defined on binary relevance only")
    size = math.factorial(K) * (bound + 1) ** K
    if size > cap:
        raise SearchSpaceTooLarge(f"K!*(B+1)^K = {size} exceeds cap {cap}")


@lru_cache(maxsize=64)
def _cached_grid(spec: LossSpec, K: int, bound: int) -> np.ndarray:
    grid = kernels.loss_grid(
        spec.code, all_permutations(K), relevance_grid(K, bound), spec.cutoff(K)
    )
    grid.setflags(write=False)
    return grid


def loss_table(spec: LossSpec, K: int, bound: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """``(K!, (B+1)^K)`` table of ``spec`` over all permutations and relevance vectors.

    Rows follow :func:`~ranklab.core.all_permutations`, columns follow
    :func:`~ranklab.core.relevance_grid`. The result is cached and read-only.
    """
    _check_space(spec, K, bound, cap)
    return _cached_grid(spec, K, bound)


def loss_extrema(spec: LossSpec, K: int, bound: int, cap: int = DEFAULT_CAP) -> LossExtrema:
    L = loss_table(spec, K, bound, cap)
    positive = L[L > TOL]
    if positive.size == 0:
        raise NoPositiveLoss(f"{spec} is identically zero for K={K}, B={bound}")
    return LossExtrema(a=float(positive.min()), M=float(L.max()))


def _class_keys(perms: np.ndarray, family: LossFamily) -> list:
    p = family.p
    if family.kind == "prec":
        return [frozenset(np.flatnonzero(row <= p).tolist()) for row in perms]
    # [p]-equivalence: the ordered tuple of labels at ranks 1..p
    return [tuple(int(np.flatnonzero(row == r)[0]) for r in range(1, p + 1)) for row in perms]


def check_family(
    spec: LossSpec, family: LossFamily, K: int, bound: int, cap: int = DEFAULT_CAP
) -> MembershipReport:
    """Exhaustively decide whether ``spec`` lies in ``family`` for ``K`` labels.

    Counterexamples are the first in lexicographic order of ``(pi, pi_hat, y)``
    with permutations and relevance vectors enumerated as in :func:`loss_table`.
    """
    if not 1 <= family.p <= K:
        raise CutoffOutOfRange(f"family cutoff {family.p} outside [1, {K}]")
    L = loss_table(spec, K, bound, cap)
    R = loss_table(family.reference, K, bound, cap)
    perms = all_permutations(K)
    ys = relevance_grid(K, bound)
    counterexample = None

    mismatch = (np.abs(L) <= TOL) != (np.abs(R) <= TOL)
    zero_matched = not mismatch.any()
    if not zero_matched:
        a, y = np.argwhere(mismatch)[0]
        counterexample = Counterexample(
            "zero_matched", tuple(perms[a].tolist()), None, tuple(ys[y].tolist())
        )

    keys = _class_keys(perms, family)
    members: dict = {}
    for idx, key in enumerate(keys):
        members.setdefault(key, []).append(idx)
    invariance_holds = True
    for a, key in enumerate(keys):
        group = members[key]
        if len(group) == 1:
            continue
        diff = np.abs(L[group] - L[a][None, :]) > TOL
        if diff.any():
            invariance_holds = False
            if counterexample is None:
                gi, y = np.argwhere(diff)[0]
                counterexample = Counterexample(
                    "invariance",
                    tuple(perms[a].tolist()),
                    tuple(perms[group[gi]].tolist()),
                    tuple(ys[y].tolist()),
                )
            break
    size = perms.shape[0] ** 2 * ys.shape[0]
    return MembershipReport(zero_matched, invariance_holds, counterexample, size)


def zero_loss_targets(spec: LossSpec, pi: PermLike, bound: int) -> np.ndarray:
    """Every relevance vector in ``{0..bound}^K`` on which ``pi`` has zero loss."""
    ranks = np.asarray(as_ranks(pi), dtype=np.int64)
    L = loss_table(spec, ranks.size, bound)
    row = L[int(perm_index(ranks))]
    return relevance_grid(ranks.size, bound)[np.abs(row) <= TOL]


def loss_pairs(spec: LossSpec, ranks, ys) -> np.ndarray:
    """Row-wise loss of ``ranks[..., K]`` against ``ys[..., K]`` (broadcast together).

    Unique rank and relevance rows are deduplicated first, so the kernel only
    sees the distinct pairs' Cartesian grid.
    """
    r = np.asarray(ranks, dtype=np.int64)
    y = np.asarray(ys, dtype=np.int64)
    r, y = np.broadcast_arrays(r, y)
    shape = r.shape[:-1]
    K = r.shape[-1]
    if y.shape[-1] != K:
        raise DimensionMismatch(f"ranks have K={K}, relevance has K={y.shape[-1]}")
    if r.size == 0:
        return np.zeros(shape, dtype=np.float64)
    if spec.requires_binary and np.any((y != 0) & (y != 1)):
        raise BinaryRelevanceRequired(f"{spec} needs binary relevance")
    if np.any(y < 0):
        raise ValueError("relevance scores must be nonnegative")
    r2, y2 = r.reshape(-1, K), y.reshape(-1, K)
    ur, ri = np.unique(r2, axis=0, return_inverse=True)
    uy, yi = np.unique(y2, axis=0, return_inverse=True)
    grid = kernels.loss_grid(spec.code, ur, uy, spec.cutoff(K))
    return grid[ri.reshape(-1), yi.reshape(-1)].reshape(shape)
