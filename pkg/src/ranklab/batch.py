"""ERM, a consistent realizable learner, and the two batch reductions.

``algorithm1`` turns a realizable learner for ``H`` into an agnostic one by
pseudo-labelling unlabelled points with BinRel targets. ``algorithm4`` turns
an agnostic ranking learner into a realizable learner for a threshold class
``H_i^j``. Both accept ``family`` to switch between the sum@p mode (random
cutoff per point) and the prec@p mode (cutoff fixed to ``p``).

Learners are plain callables ``learner(H, sample, spec) -> hypothesis index``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import bin_rel_rows
from .errors import (
    DimensionMismatch,
    EmptySample,
    FamilyCutoffMismatch,
    IndexOutOfRange,
    NotRealizable,
    PointOutOfRange,
)
from .hypothesis import FiniteRankingClass, sample_representatives
from .losses import TOL, LossFamily, LossSpec, loss_pairs

Learner = Callable[[FiniteRankingClass, "LabeledSample", LossSpec], int]


@dataclass(frozen=True)
class LabeledSample:
    points: np.ndarray  # [n] point indices
    ys: np.ndarray  # [n, K] relevance vectors

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1)
        ys = np.asarray(self.ys, dtype=np.int64)
        if pts.size == 0 and ys.size == 0:
            ys = ys.reshape(0, ys.shape[-1] if ys.ndim == 2 else 0)
        if ys.ndim != 2 or ys.shape[0] != pts.size:
            raise DimensionMismatch(f"{pts.size} points but relevance array of shape {ys.shape}")
        if np.any(ys < 0):
            raise ValueError("relevance scores must be nonnegative")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def from_pairs(cls, pairs, K: int | None = None) -> "LabeledSample":
        pairs = list(pairs)
        if not pairs:
            return cls(np.zeros(0, dtype=np.int64), np.zeros((0, K or 0), dtype=np.int64))
        return cls([x for x, _ in pairs], [list(y) for _, y in pairs])

    def __len__(self) -> int:
        return self.points.size

    @property
    def K(self) -> int:
        return self.ys.shape[1]


@dataclass(frozen=True)
class BinarySample:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1)
        lab = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if pts.size != lab.size:
            raise DimensionMismatch(f"{pts.size} points but {lab.size} labels")
        if np.any((lab != 0) & (lab != 1)):
            raise ValueError("binary labels must be 0 or 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return self.points.size


@dataclass(frozen=True)
class Selection:
    """Outcome of a batch reduction.

    ``predictor`` is a total table over the domain: ``[n_points, K]`` ranks for
    :func:`algorithm1`, ``[n_points]`` bits for :func:`algorithm4`.
    ``candidates`` holds the learner output (an index into ``H``) for every
    representative, in provenance order; ``chosen`` indexes into it.
    """

    predictor: np.ndarray
    hypothesis: int
    chosen: int
    candidates: np.ndarray
    representatives: np.ndarray
    empirical_losses: np.ndarray


def _check_sample(H: FiniteRankingClass, S) -> None:
    if len(S) and (S.points.min() < 0 or S.points.max() >= H.n):
        raise PointOutOfRange(f"sample point outside domain 0..{H.n - 1}")
    if len(S) and hasattr(S, "ys") and S.K != H.K:
        raise DimensionMismatch(f"sample has K={S.K}, class has K={H.K}")


def loss_matrix(H: FiniteRankingClass, S: LabeledSample, spec: LossSpec) -> np.ndarray:
    """``L[h, m] = loss(h(x_m), y_m)`` for every hypothesis and sample item."""
    _check_sample(H, S)
    if len(S) == 0:
        return np.zeros((len(H), 0))
    return loss_pairs(spec, H.table[:, S.points, :], S.ys[None, :, :])


def empirical_risks(H: FiniteRankingClass, S: LabeledSample, spec: LossSpec) -> np.ndarray:
    if len(S) == 0:
        raise EmptySample("empirical risk of an empty sample")
    return loss_matrix(H, S, spec).mean(axis=1)


def erm(H: FiniteRankingClass, S: LabeledSample, spec: LossSpec) -> int:
    """Lowest-index minimiser of the empirical risk."""
    risks = empirical_risks(H, S, spec)
    best = risks.min()
    return int(np.flatnonzero(risks <= best + TOL)[0])


def consistent_learner(H: FiniteRankingClass, S: LabeledSample, spec: LossSpec) -> int:
    """Lowest-index hypothesis with zero loss on every sample item."""
    if len(S) == 0:
        return 0
    ok = np.flatnonzero((loss_matrix(H, S, spec) <= TOL).all(axis=1))
    if ok.size == 0:
        raise NotRealizable(f"no hypothesis is consistent with the sample under {spec}")
    return int(ok[0])


def _pseudo_labels(H, h: int, points: np.ndarray, family: LossFamily, rng) -> np.ndarray:
    ranks = H.table[h, points, :]
    if family.kind == "sum":
        cut = rng.integers(1, family.p + 1, size=points.size)
    else:
        cut = np.full(points.size, family.p)
    return (ranks <= cut[:, None]).astype(np.int64)


def _check_family_cutoff(H: FiniteRankingClass, family: LossFamily) -> None:
    if not 1 <= family.p <= H.K:
        raise IndexOutOfRange(f"family cutoff {family.p} outside [1, {H.K}]")


def algorithm1(
    A: Learner,
    H: FiniteRankingClass,
    S_U,
    S_L: LabeledSample,
    family: LossFamily,
    spec: LossSpec,
    rng_seed,
) -> Selection:
    """Agnostic learner for ``H`` under ``spec`` built from the realizable learner ``A``.

    Each representative ``h`` of ``H`` restricted to ``S_U`` pseudo-labels
    ``S_U`` with ``BinRel(h(x), j)``; in sum mode ``j`` is uniform on
    ``1..p`` per point, drawn from the stream ``default_rng([rng_seed, r])``
    for provenance index ``r``, and in prec mode ``j = p``. ``A`` is run on
    every pseudo-dataset and the candidate with the lowest empirical loss on
    ``S_L`` wins (ties to the lowest provenance index).
    """
    _check_family_cutoff(H, family)
    _check_sample(H, S_L)
    pts = np.asarray(S_U, dtype=np.int64).reshape(-1)
    reps = sample_representatives(H, pts)
    reference = family.reference
    candidates = np.empty(reps.size, dtype=np.int64)
    for r, h in enumerate(reps.tolist()):
        rng = np.random.default_rng([rng_seed, r])
        ys = _pseudo_labels(H, h, pts, family, rng)
        pseudo = LabeledSample(pts, ys.reshape(pts.size, H.K))
        # the generating hypothesis realises its own pseudo-labels
        assert len(pseudo) == 0 or np.all(
            loss_pairs(reference, H.table[h, pts, :], pseudo.ys) <= TOL
        ), "pseudo-dataset is not realizable by its generator"
        candidates[r] = A(H, pseudo, spec)
    if len(S_L):
        emp = loss_matrix(H, S_L, spec)[candidates].mean(axis=1)
        chosen = int(np.flatnonzero(emp <= emp.min() + TOL)[0])
    else:
        emp = np.zeros(candidates.size)
        chosen = 0
    g = int(candidates[chosen])
    return Selection(H.table[g].copy(), g, chosen, candidates, reps, emp)


def algorithm4(
    A_ag: Learner,
    H: FiniteRankingClass,
    S_U,
    S_L: BinarySample,
    i: int,
    j: int,
    family: LossFamily,
    spec: LossSpec,
) -> Selection:
    """Realizable learner for the threshold class ``H_i^j`` (``i``, ``j`` 1-based).

    Pseudo-labels are the deterministic ``BinRel(h(x), j)``; ``A_ag`` is run on
    each pseudo-dataset, every output ``g`` is cut down to ``g_i^j`` and the one
    with the fewest 0-1 mistakes on ``S_L`` is returned.
    """
    _check_family_cutoff(H, family)
    if not 1 <= i <= H.K:
        raise IndexOutOfRange(f"label {i} outside [1, {H.K}]")
    if not 1 <= j <= H.K:
        raise IndexOutOfRange(f"cutoff {j} outside [1, {H.K}]")
    if family.kind == "prec" and j != family.p:
        raise FamilyCutoffMismatch(f"prec family needs j = p = {family.p}, got j = {j}")
    _check_sample(H, S_L)
    pts = np.asarray(S_U, dtype=np.int64).reshape(-1)
    reps = sample_representatives(H, pts)
    candidates = np.empty(reps.size, dtype=np.int64)
    for r, h in enumerate(reps.tolist()):
        ys = bin_rel_rows(H.table[h, pts, :], j).reshape(pts.size, H.K)
        candidates[r] = A_ag(H, LabeledSample(pts, ys), spec)
    restricted = (H.table[candidates, :, i - 1] <= j).astype(np.int64)  # [C, n]
    if len(S_L):
        errs = (restricted[:, S_L.points] != S_L.labels[None, :]).mean(axis=1)
        chosen = int(np.argmin(errs))  # argmin returns the first minimiser
    else:
        errs = np.zeros(candidates.size)
        chosen = 0
    return Selection(restricted[chosen].copy(), int(candidates[chosen]), chosen, candidates, reps, errs)


# --- population quantities over a finite-support distribution --------------


def population_risks(H: FiniteRankingClass, dist, spec: LossSpec) -> np.ndarray:
    """Exact risk of every hypothesis under ``dist`` (``points``, ``ys``, ``probs`` arrays)."""
    L = loss_pairs(spec, H.table[:, dist.points, :], dist.ys[None, :, :])
    return L @ dist.probs


def population_risk(predictor: np.ndarray, dist, spec: LossSpec) -> float:
    """Exact risk of a ``[n_points, K]`` rank table."""
    L = loss_pairs(spec, np.asarray(predictor)[dist.points], dist.ys)
    return float(L @ dist.probs)


def binary_population_error(predictor: np.ndarray, dist) -> float:
    """Exact 0-1 error of a ``[n_points]`` bit table against ``dist.labels``."""
    wrong = np.asarray(predictor)[dist.points] != dist.labels
    return float(wrong @ dist.probs)
