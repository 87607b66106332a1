"""Online learners: Halving, the Expert(b, phi) constructions, REWA and the agnostic learner Q.

Rounds are numbered ``1..T`` in the public API. An expert ``E_{b, phi}``
updates its base learners only on the rounds flagged by the schedule ``b``,
feeding them labels derived from the permutation ``phi(t)``.

Two implementations of the expert pool exist:

* expert objects (:class:`SumExpert`, :class:`PrecExpert`,
  :class:`NecessityExpert`, :class:`FixedExpert`) stepped one by one by
  :func:`run_rewa`; clear, and the reference for tests;
* :class:`ExpertPool`, used by :func:`algorithm3` and
  :func:`necessity_learner`, which exploits that an expert's state at round
  ``t`` depends only on ``phi`` restricted to the update rounds before ``t``.
  Experts sharing that prefix share one state, so the pool simulates one
  state per prefix and expands them ``K!``-fold at each update round.

Expert indices are fixed: index 0 is ``E_0`` and index ``1 + r`` is the
expert whose ``phi`` has lexicographic rank ``r`` when ``phi`` is read as a
tuple of permutation indices ordered by round (earliest round most
significant), with permutations ordered as in
:func:`~ranklab.core.all_permutations`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    Permutation,
    all_permutations,
    argsort_rows,
    argsort_scores,
    as_ranks,
    bin_rel,
    format_permutation,
)
from .errors import (
    DimensionMismatch,
    ExpertBudgetExceeded,
    FamilyCutoffMismatch,
    IndexOutOfRange,
    NoExperts,
    VersionSpaceEmpty,
)
from .hypothesis import BinaryClass, FiniteRankingClass, threshold_restrict
from .losses import TOL, LossFamily, LossSpec, loss_extrema, loss_pairs

MAX_RESAMPLES = 20
DEFAULT_EXPERT_CAP = 50_000
DEFAULT_BETA = 0.35


# --- streams and schedules -------------------------------------------------


@dataclass(frozen=True)
class Stream:
    """An oblivious stream of ``(x_t, y_t)``; ``bound`` is the relevance bound B."""

    points: np.ndarray
    ys: np.ndarray
    bound: int = 1

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1)
        ys = np.asarray(self.ys, dtype=np.int64)
        if ys.ndim != 2 or ys.shape[0] != pts.size:
            raise DimensionMismatch(f"{pts.size} rounds but relevance array of shape {ys.shape}")
        if ys.size and (ys.min() < 0 or ys.max() > self.bound):
            raise ValueError(f"relevance outside 0..{self.bound}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "ys", ys)

    @property
    def T(self) -> int:
        return self.points.size

    @property
    def K(self) -> int:
        return self.ys.shape[1]

    def prefix(self, T: int) -> "Stream":
        return Stream(self.points[:T], self.ys[:T], self.bound)


@dataclass(frozen=True)
class BinaryStream:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1)
        lab = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if pts.size != lab.size:
            raise DimensionMismatch(f"{pts.size} rounds but {lab.size} labels")
        if np.any((lab != 0) & (lab != 1)):
            raise ValueError("binary stream labels must be 0 or 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)

    @property
    def T(self) -> int:
        return self.points.size

    def prefix(self, T: int) -> "BinaryStream":
        return BinaryStream(self.points[:T], self.labels[:T])


@dataclass(frozen=True)
class UpdateSchedule:
    bits: tuple[int, ...]

    @property
    def T(self) -> int:
        return len(self.bits)

    @property
    def update_rounds(self) -> tuple[int, ...]:
        """1-based rounds with ``b_t = 1``."""
        return tuple(t for t, b in enumerate(self.bits, start=1) if b)

    def __len__(self) -> int:
        return len(self.update_rounds)

    @classmethod
    def from_rounds(cls, T: int, rounds: Sequence[int]) -> "UpdateSchedule":
        bits = [0] * T
        for t in rounds:
            if not 1 <= t <= T:
                raise IndexOutOfRange(f"round {t} outside [1, {T}]")
            bits[t - 1] = 1
        return cls(tuple(bits))


def pool_size(K: int, n_updates: int) -> int:
    return math.factorial(K) ** n_updates + 1


def sample_schedule(
    T: int, beta: float, rng: np.random.Generator, K: int, expert_cap: int = DEFAULT_EXPERT_CAP
) -> UpdateSchedule:
    """Draw ``B_t ~ Bernoulli(T^beta / T)``, redrawing while the pool would exceed the cap.

    At most ``MAX_RESAMPLES`` redraws are made, each consuming ``T`` uniforms
    from ``rng``; after that :class:`ExpertBudgetExceeded` reports the size
    of the last draw.
    """
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    q = T ** beta / T if T > 0 else 0.0
    required = None
    for _ in range(MAX_RESAMPLES + 1):
        bits = (rng.random(T) < q).astype(int)
        required = pool_size(K, int(bits.sum()))
        if required <= expert_cap:
            return UpdateSchedule(tuple(bits.tolist()))
    raise ExpertBudgetExceeded(required, expert_cap)


def enumerate_phis(K: int, n_updates: int):
    """Yield every ``phi`` as a tuple of permutation indices, in expert-index order."""
    n = math.factorial(K)
    for code in range(n ** n_updates):
        digits = []
        for _ in range(n_updates):
            code, d = divmod(code, n)
            digits.append(d)
        yield tuple(reversed(digits))


# --- base learners ---------------------------------------------------------


class HalvingLearner:
    """Majority vote over the version space of a finite binary class.

    Ties in the vote predict 1. With ``strict=True`` an update that would
    empty the version space raises :class:`VersionSpaceEmpty`; otherwise it is
    ignored and the version space is left unchanged.
    """

    def __init__(self, C: BinaryClass, strict: bool = True):
        self.table = C.table if isinstance(C, BinaryClass) else BinaryClass(C).table
        self.alive = np.ones(self.table.shape[0], dtype=bool)
        self.strict = strict
        self.ignored_updates = 0

    @property
    def size(self) -> int:
        return int(self.alive.sum())

    def predict(self, x: int) -> int:
        col = self.table[self.alive, x]
        return int(2 * int(col.sum()) >= col.size)

    def update(self, x: int, label: int) -> None:
        keep = self.alive & (self.table[:, x] == label)
        if not keep.any():
            if self.strict:
                raise VersionSpaceEmpty(f"label {label} at point {x} contradicts every hypothesis")
            self.ignored_updates += 1
            return
        self.alive = keep

    def copy(self) -> "HalvingLearner":
        out = HalvingLearner.__new__(HalvingLearner)
        out.table, out.alive, out.strict = self.table, self.alive.copy(), self.strict
        out.ignored_updates = self.ignored_updates
        return out


class ConsistentRankingLearner:
    """Online ranking learner for a finite ``H``: predict with the lowest-index
    hypothesis still consistent (zero loss under ``spec``) with every update."""

    def __init__(self, H: FiniteRankingClass, spec: LossSpec, strict: bool = False):
        self.H = H
        self.spec = spec
        self.alive = np.ones(len(H), dtype=bool)
        self.strict = strict

    def predict(self, x: int) -> Permutation:
        h = int(np.flatnonzero(self.alive)[0])
        return self.H.predict(h, x)

    def update(self, x: int, y) -> None:
        L = loss_pairs(self.spec, self.H.table[:, x, :], np.asarray(y)[None, :])
        keep = self.alive & (L <= TOL)
        if not keep.any():
            if self.strict:
                raise VersionSpaceEmpty(f"target {tuple(y)} at point {x} contradicts every hypothesis")
            return
        self.alive = keep


# --- votes -----------------------------------------------------------------


@dataclass(frozen=True)
class VoteMatrix:
    entries: np.ndarray  # [K, p] bits

    @property
    def row_sums(self) -> np.ndarray:
        return np.asarray(self.entries).sum(axis=1)


def aggregate_votes(v) -> Permutation:
    """A minimiser of ``<pi, v>``: labels by decreasing votes, ties to the smaller label."""
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0):
        raise ValueError("vote counts must be nonnegative")
    return argsort_scores(v.tolist())


# --- expert objects --------------------------------------------------------


def _phi_map(schedule: UpdateSchedule, phi) -> dict:
    rounds = schedule.update_rounds
    if isinstance(phi, dict):
        phi = [phi[t] for t in rounds] if set(phi) == set(rounds) else None
    if phi is None or len(phi) != len(rounds):
        raise ValueError("phi must assign a permutation to exactly the update rounds")
    return {t: as_ranks(p) for t, p in zip(rounds, phi)}


class SumExpert:
    """Expert of the sum@p construction: ``K * p`` Halving learners ``A_i^j``."""

    def __init__(self, H: FiniteRankingClass, p: int, schedule: UpdateSchedule, phi=()):
        self.p = p
        self.K = H.K
        self.learners = [
            [HalvingLearner(threshold_restrict(H, i, j), strict=False) for j in range(1, p + 1)]
            for i in range(1, H.K + 1)
        ]
        self.phi = _phi_map(schedule, phi)

    def votes(self, x: int) -> VoteMatrix:
        return VoteMatrix(np.array([[a.predict(x) for a in row] for row in self.learners]))

    def step(self, t: int, x: int) -> Permutation:
        pred = aggregate_votes(self.votes(x).row_sums)
        if t in self.phi:
            target = self.phi[t]
            for j in range(1, self.p + 1):
                bits = bin_rel(target, j)
                for i in range(self.K):
                    self.learners[i][j - 1].update(x, bits[i])
        return pred


class PrecExpert:
    """Expert of the prec@p construction: ``K`` Halving learners ``A_i^p``."""

    def __init__(self, H: FiniteRankingClass, p: int, schedule: UpdateSchedule, phi=()):
        self.p = p
        self.learners = [HalvingLearner(threshold_restrict(H, i, p), strict=False) for i in range(1, H.K + 1)]
        self.phi = _phi_map(schedule, phi)

    def votes(self, x: int) -> np.ndarray:
        return np.array([a.predict(x) for a in self.learners])

    def step(self, t: int, x: int) -> Permutation:
        pred = aggregate_votes(self.votes(x))
        if t in self.phi:
            bits = bin_rel(self.phi[t], self.p)
            for a, b in zip(self.learners, bits):
                a.update(x, b)
        return pred


class NecessityExpert:
    """Expert of the necessity construction: emits ``1[A(x)_i <= j]`` for one ranking learner."""

    def __init__(self, learner: ConsistentRankingLearner, i: int, j: int, schedule: UpdateSchedule, phi=()):
        self.learner = learner
        self.i, self.j = i, j
        self.phi = _phi_map(schedule, phi)

    def step(self, t: int, x: int) -> int:
        bit = int(self.learner.predict(x)[self.i - 1] <= self.j)
        if t in self.phi:
            self.learner.update(x, bin_rel(self.phi[t], self.j))
        return bit


class FixedExpert:
    """Plays a fixed table ``[n_points, K]`` (or ``[n_points]`` bits) and never learns."""

    def __init__(self, table):
        self.table = np.asarray(table)

    def step(self, t: int, x: int):
        row = self.table[x]
        return int(row) if row.ndim == 0 else Permutation(tuple(row.tolist()))


# --- REWA ------------------------------------------------------------------


class Rewa:
    """Randomised exponential weights on losses scaled by ``1/M``.

    Weights are kept in log space; :meth:`distribution` normalises them.
    """

    def __init__(self, n_experts: int, M: float, eta: float, rng: np.random.Generator):
        if n_experts < 1:
            raise NoExperts("REWA needs at least one expert")
        if M <= 0:
            raise ValueError("loss bound M must be positive")
        self.log_w = np.zeros(n_experts)
        self.M, self.eta, self.rng = float(M), float(eta), rng

    def distribution(self) -> np.ndarray:
        w = np.exp(self.log_w - self.log_w.max())
        return w / w.sum()

    def choose(self) -> int:
        cdf = np.cumsum(self.distribution())
        idx = int(np.searchsorted(cdf, self.rng.random() * cdf[-1], side="right"))
        return min(idx, cdf.size - 1)

    def update(self, losses: np.ndarray) -> float:
        """Return the expected loss under the current weights, then reweight."""
        losses = np.asarray(losses, dtype=np.float64)
        if losses.max(initial=0.0) > self.M + TOL:
            raise AssertionError(f"observed loss {losses.max()} exceeds the bound M={self.M}")
        dist = self.distribution()
        if abs(dist.sum() - 1.0) > 1e-12:
            raise AssertionError("REWA weights are not a distribution")
        expected = float(dist @ losses)
        self.log_w -= self.eta * losses / self.M
        return expected


def default_eta(n_experts: int, T: int) -> float:
    return math.sqrt(2.0 * math.log(n_experts) / T) if T > 0 else 0.0


# --- run records -----------------------------------------------------------

CSV_COLUMNS = ["t", "prediction", "loss", "cum_loss", "best_hindsight_cum", "regret", "n_experts", "mode"]


@dataclass
class OnlineRun:
    """Per-round record of one stream.

    ``losses`` are the losses of the sampled predictions; ``expected_losses``
    are their exact expectations over REWA's draw. ``best_hindsight_cum[t]``
    is the comparator's cumulative loss after round ``t + 1``.
    """

    predictions: list
    losses: np.ndarray
    expected_losses: np.ndarray
    best_hindsight_cum: np.ndarray
    n_experts: int
    comparator: str = "H"
    n_updates: int = 0
    non_realizable: bool = False
    chosen: np.ndarray = field(default=None, repr=False)
    expected_predictions: list = field(default=None, repr=False)

    @property
    def T(self) -> int:
        return len(self.losses)

    @property
    def cumulative_loss(self) -> float:
        return float(np.sum(self.losses))

    @property
    def expected_cumulative_loss(self) -> float:
        return float(np.sum(self.expected_losses))

    @property
    def best_hindsight_loss(self) -> float:
        return float(self.best_hindsight_cum[-1]) if self.T else 0.0

    @property
    def regret(self) -> float:
        return self.cumulative_loss - self.best_hindsight_loss

    @property
    def expected_regret(self) -> float:
        return self.expected_cumulative_loss - self.best_hindsight_loss

    def rows(self):
        cum = np.cumsum(self.losses)
        ecum = np.cumsum(self.expected_losses)
        exp_preds = self.expected_predictions or self.predictions
        for mode, losses, c, preds in (
            ("sampled", self.losses, cum, self.predictions),
            ("expected", self.expected_losses, ecum, exp_preds),
        ):
            for t in range(self.T):
                yield {
                    "t": t + 1,
                    "prediction": _fmt_pred(preds[t]),
                    "loss": _fmt(losses[t]),
                    "cum_loss": _fmt(c[t]),
                    "best_hindsight_cum": _fmt(self.best_hindsight_cum[t]),
                    "regret": _fmt(c[t] - self.best_hindsight_cum[t]),
                    "n_experts": self.n_experts,
                    "mode": mode,
                }

    def write_csv(self, fh) -> None:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows())

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _fmt(value) -> str:
    return repr(round(float(value), 12))


def _fmt_pred(pred) -> str:
    if isinstance(pred, (int, np.integer)):
        return str(int(pred))
    return format_permutation(pred)


# --- generic REWA runner over expert objects -------------------------------


def _round_loss(spec, pred, target) -> float:
    if spec is None:  # 0-1 loss on bits
        return float(int(pred) != int(target))
    return float(loss_pairs(spec, np.asarray(as_ranks(pred))[None, :], np.asarray(target)[None, :])[0])


def run_rewa(experts: list, stream, spec: LossSpec | None, M: float, eta: float | None, seed) -> OnlineRun:
    """Run REWA over expert objects; regret is measured against the best expert.

    ``stream`` is a :class:`Stream` (ranking loss ``spec``) or a
    :class:`BinaryStream` with ``spec=None`` (0-1 loss). Every expert is
    stepped on every round, so experts that learn keep their own state.
    """
    if not experts:
        raise NoExperts("run_rewa needs at least one expert")
    T = stream.T
    N = len(experts)
    eta = default_eta(N, T) if eta is None else eta
    rewa = Rewa(N, M, eta, np.random.default_rng(seed))
    targets = stream.ys if spec is not None else stream.labels
    expert_cum = np.zeros(N)
    preds, losses, exp_losses, best, chosen = [], np.zeros(T), np.zeros(T), np.zeros(T), np.zeros(T, dtype=np.int64)
    for t in range(T):
        x = int(stream.points[t])
        step_preds = [e.step(t + 1, x) for e in experts]
        round_losses = np.array([_round_loss(spec, p, targets[t]) for p in step_preds])
        k = rewa.choose()
        chosen[t] = k
        preds.append(step_preds[k])
        losses[t] = round_losses[k]
        exp_losses[t] = rewa.update(round_losses)
        expert_cum += round_losses
        best[t] = expert_cum.min()
    return OnlineRun(preds, losses, exp_losses, best, N, comparator="experts", chosen=chosen)


# --- vectorised expert pool -------------------------------------------------


class ExpertPool:
    """All experts ``E_0`` and ``E_{B, phi}`` for one schedule, simulated by prefix.

    ``variant`` is ``"sum"`` (learners ``A_i^j`` for ``j <= p``), ``"prec"``
    (learners ``A_i^p``) or ``"necessity"`` (one :class:`ConsistentRankingLearner`
    per expert, emitting the bit for label ``i`` at cutoff ``j``). Base
    learners are lenient: an update that would empty a version space is
    ignored, matching the expert objects above.
    """

    def __init__(
        self,
        H: FiniteRankingClass,
        variant: str,
        p: int,
        schedule: UpdateSchedule,
        spec: LossSpec | None = None,
        target: tuple[int, int] | None = None,
    ):
        if variant not in ("sum", "prec", "necessity"):
            raise ValueError(f"unknown expert variant {variant!r}")
        self.H, self.variant, self.p, self.schedule = H, variant, p, schedule
        self.K = H.K
        self.perms = all_permutations(self.K)
        self.n_perms = self.perms.shape[0]
        self.n_updates = len(schedule)
        self.size = pool_size(self.K, self.n_updates)
        if variant == "necessity":
            if spec is None or target is None:
                raise ValueError("necessity pools need the ranking loss and the target (i, j)")
            self.spec = spec
            self.i, self.j = target
            self.table = None
        else:
            cuts = range(1, p + 1) if variant == "sum" else [p]
            # learner order: label-major, then cutoff; matches VoteMatrix rows
            self.learner_ij = [(i, j) for i in range(1, self.K + 1) for j in cuts]
            classes = [threshold_restrict(H, i, j).table for i, j in self.learner_ij]
            cmax = max(c.shape[0] for c in classes)
            tab = np.zeros((len(classes), cmax, H.n), dtype=np.uint8)
            valid = np.zeros((len(classes), cmax), dtype=bool)
            for l, c in enumerate(classes):
                tab[l, : c.shape[0]] = c
                valid[l, : c.shape[0]] = True
            self.table, self.valid = tab, valid
            # label each learner receives from each phi: [n_perms, L]
            self.labels = np.array(
                [[int(perm[i - 1] <= j) for i, j in self.learner_ij] for perm in self.perms], dtype=np.uint8
            )

    def initial_state(self) -> np.ndarray:
        if self.variant == "necessity":
            return np.ones((1, 1, len(self.H)), dtype=bool)
        return self.valid[None].copy()

    def predict(self, alive: np.ndarray, x: int) -> np.ndarray:
        """Predictions of every state at point ``x``: ranks ``[S, K]`` or bits ``[S]``."""
        if self.variant == "necessity":
            first = alive[:, 0, :].argmax(axis=1)
            ranks = self.H.table[first, x, :]
            return (ranks[:, self.i - 1] <= self.j).astype(np.int64)
        col = self.table[None, :, :, x].astype(bool)
        ones = (alive & col).sum(axis=2)
        votes = (2 * ones >= alive.sum(axis=2)).astype(np.int64)  # [S, L]
        v = votes.reshape(votes.shape[0], self.K, -1).sum(axis=2)
        return argsort_rows(v.astype(np.float64))

    def _keep_masks(self, x: int) -> np.ndarray:
        """Per-phi consistency masks, shaped like one state: ``[n_perms, L, C]``."""
        if self.variant == "necessity":
            targets = (self.perms <= self.j).astype(np.int64)  # BinRel(phi, j)
            L = loss_pairs(self.spec, self.H.table[None, :, x, :], targets[:, None, :])
            return (L <= TOL)[:, None, :]
        col = self.table[:, :, x]  # [L, C]
        return col[None, :, :] == self.labels[:, :, None]

    def expand(self, alive: np.ndarray, x: int) -> np.ndarray:
        """Children of every state for every ``phi(t)``; child ``s * K! + perm_index``."""
        keep = self._keep_masks(x)
        new = alive[:, None] & keep[None]
        empty = ~new.any(axis=3, keepdims=True)
        new = np.where(empty, alive[:, None], new)  # lenient: ignore emptying updates
        S = alive.shape[0]
        return new.reshape(S * self.n_perms, *alive.shape[1:])

    def loss_rows(self, stream, spec: LossSpec | None):
        """Yield, for each round, ``(loss vector over all experts, predictions of E_0
        and of each state, states-per-expert repeat factor)``."""
        state = self.initial_state()
        e0 = state.copy()
        done = 0
        update_set = set(self.schedule.update_rounds)
        for t in range(stream.T):
            x = int(stream.points[t])
            preds = self.predict(state, x)
            pred0 = self.predict(e0, x)[0]
            if spec is None:
                lab = int(stream.labels[t])
                state_loss = (preds != lab).astype(np.float64)
                loss0 = float(pred0 != lab)
            else:
                state_loss = loss_pairs(spec, preds, stream.ys[t][None, :])
                loss0 = float(loss_pairs(spec, pred0[None, :], stream.ys[t][None, :])[0])
            repeat = self.n_perms ** (self.n_updates - done)
            yield loss0, pred0, state_loss, preds, repeat
            if t + 1 in update_set:
                state = self.expand(state, x)
                done += 1

    def expert_losses(self, stream, spec: LossSpec | None) -> np.ndarray:
        """Dense ``[T, N]`` loss table; for tests and small pools."""
        rows = []
        for loss0, _, state_loss, _, repeat in self.loss_rows(stream, spec):
            rows.append(np.concatenate([[loss0], np.repeat(state_loss, repeat)]))
        return np.array(rows).reshape(stream.T, self.size)


def _run_pool(pool: ExpertPool, stream, spec, M: float, eta: float | None, rng) -> tuple:
    N = pool.size
    T = stream.T
    eta = default_eta(N, T) if eta is None else eta
    rewa = Rewa(N, M, eta, rng)
    preds, exp_preds = [], []
    losses, exp_losses = np.zeros(T), np.zeros(T)
    chosen = np.zeros(T, dtype=np.int64)
    expert_cum = np.zeros(N)
    for t, (loss0, pred0, state_loss, state_preds, repeat) in enumerate(pool.loss_rows(stream, spec)):
        full = np.concatenate([[loss0], np.repeat(state_loss, repeat)])
        if full.size != N:
            raise AssertionError(f"pool has {full.size} experts, expected {N}")
        k = rewa.choose()
        top = int(np.argmax(rewa.log_w))
        chosen[t] = k
        preds.append(pred0 if k == 0 else state_preds[(k - 1) // repeat])
        exp_preds.append(pred0 if top == 0 else state_preds[(top - 1) // repeat])
        losses[t] = full[k]
        exp_losses[t] = rewa.update(full)
        expert_cum += full
    return preds, exp_preds, losses, exp_losses, chosen, expert_cum


def _check_experts_count(pool: ExpertPool, cap: int) -> None:
    if pool.size != pool_size(pool.K, len(pool.schedule)):
        raise AssertionError("expert-count law violated")
    if pool.size > cap:
        raise ExpertBudgetExceeded(pool.size, cap)


def hindsight_curve(H: FiniteRankingClass, stream: Stream, spec: LossSpec) -> np.ndarray:
    """Cumulative loss of the best fixed hypothesis after each round."""
    L = loss_pairs(spec, H.table[:, stream.points, :], stream.ys[None, :, :])  # [H, T]
    return np.cumsum(L, axis=1).min(axis=0)


def algorithm3(
    H: FiniteRankingClass,
    stream: Stream,
    family: LossFamily,
    spec: LossSpec,
    beta: float = DEFAULT_BETA,
    expert_cap: int = DEFAULT_EXPERT_CAP,
    seed=0,
    M: float | None = None,
    eta: float | None = None,
    schedule: UpdateSchedule | None = None,
) -> OnlineRun:
    """The agnostic online learner Q: sample ``B``, build ``E_B``, run REWA on ``spec / M``.

    One generator ``default_rng(seed)`` drives the schedule draw first and
    then REWA's choices. Regret is against the best ``h`` in ``H``.
    """
    if stream.K != H.K:
        raise DimensionMismatch(f"stream has K={stream.K}, class has K={H.K}")
    if not 1 <= family.p <= H.K:
        raise IndexOutOfRange(f"family cutoff {family.p} outside [1, {H.K}]")
    rng = np.random.default_rng(seed)
    if schedule is None:
        schedule = sample_schedule(stream.T, beta, rng, H.K, expert_cap)
    if M is None:
        M = loss_extrema(spec, H.K, stream.bound).M
    pool = ExpertPool(H, family.kind, family.p, schedule)
    _check_experts_count(pool, expert_cap)
    preds, exp_preds, losses, exp_losses, chosen, _ = _run_pool(pool, stream, spec, M, eta, rng)
    best = hindsight_curve(H, stream, spec)
    return OnlineRun(
        [Permutation(tuple(p.tolist())) for p in preds], losses, exp_losses, best, pool.size,
        comparator="H", n_updates=len(schedule), chosen=chosen,
        expected_predictions=[Permutation(tuple(p.tolist())) for p in exp_preds],
    )


def necessity_learner(
    H: FiniteRankingClass,
    stream: BinaryStream,
    i: int,
    j: int,
    family: LossFamily,
    spec: LossSpec,
    beta: float = DEFAULT_BETA,
    expert_cap: int = DEFAULT_EXPERT_CAP,
    seed=0,
    eta: float | None = None,
    schedule: UpdateSchedule | None = None,
) -> OnlineRun:
    """Online learner for ``H_i^j`` built from a ranking learner for ``H`` under ``spec``.

    The ranking learner inside every expert is :class:`ConsistentRankingLearner`.
    Losses are 0-1. The comparator is the best ``h_i^j`` in hindsight; when
    none is mistake-free the stream is flagged ``non_realizable`` and the
    comparator becomes the best expert.
    """
    if not (1 <= i <= H.K and 1 <= j <= H.K):
        raise IndexOutOfRange(f"(i, j) = ({i}, {j}) outside [1, {H.K}]^2")
    if family.kind == "prec" and j != family.p:
        raise FamilyCutoffMismatch(f"prec family needs j = p = {family.p}, got j = {j}")
    if family.kind == "sum" and j > family.p:
        raise IndexOutOfRange(f"cutoff {j} exceeds family cutoff {family.p}")
    rng = np.random.default_rng(seed)
    if schedule is None:
        schedule = sample_schedule(stream.T, beta, rng, H.K, expert_cap)
    pool = ExpertPool(H, "necessity", family.p, schedule, spec=spec, target=(i, j))
    _check_experts_count(pool, expert_cap)
    preds, exp_preds, losses, exp_losses, chosen, expert_cum = _run_pool(pool, stream, None, 1.0, eta, rng)
    cls = threshold_restrict(H, i, j).table[:, stream.points]  # [C, T]
    class_cum = np.cumsum(cls != stream.labels[None, :], axis=1)
    non_realizable = bool(stream.T and class_cum[:, -1].min() > 0)
    if non_realizable:
        best = _best_expert_curve(pool, stream)
        comparator = "experts"
    else:
        best = class_cum.min(axis=0).astype(np.float64) if stream.T else np.zeros(0)
        comparator = "H_i^j"
    return OnlineRun(
        [int(p) for p in preds], losses, exp_losses, best, pool.size, comparator=comparator,
        n_updates=len(schedule), non_realizable=non_realizable, chosen=chosen,
        expected_predictions=[int(p) for p in exp_preds],
    )


def _best_expert_curve(pool: ExpertPool, stream) -> np.ndarray:
    cum0 = 0.0
    cum_states = np.zeros(1)
    out = np.zeros(stream.T)
    for t, (loss0, _, state_loss, _, _) in enumerate(pool.loss_rows(stream, None)):
        if state_loss.size != cum_states.size:
            # children inherit their parent's history
            cum_states = np.repeat(cum_states, state_loss.size // cum_states.size)
        cum0 += loss0
        cum_states = cum_states + state_loss
        out[t] = min(cum0, float(cum_states.min()))
    return out
