"""Synthetic data, experiment orchestration and file output.

Random streams. Every generator is numpy's ``default_rng`` (PCG64) seeded
with an integer list, so streams split by appending indices:

* ``[seed, 0]`` draws the hypothesis class,
* ``[seed, 1]`` draws the synthetic distribution,
* ``[seed, 2, trial]`` drives everything inside one trial.

Inside :func:`ranklab.batch.algorithm1` each candidate uses
``[trial_seed, provenance_index]``, where ``trial_seed`` is a fresh integer
drawn from the trial generator.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable

import numpy as np

from .batch import (
    BinarySample,
    LabeledSample,
    algorithm1,
    algorithm4,
    binary_population_error,
    consistent_learner,
    erm,
    loss_matrix,
    population_risk,
    population_risks,
)
from .core import all_permutations, relevance_grid
from .errors import ConfigError, NoPositiveLoss, TooManyHypotheses
from .hypothesis import FiniteRankingClass, LinearRankerClass, threshold_restrict, vc_lower_bound
from .losses import (
    LossFamily,
    LossSpec,
    check_family,
    loss_extrema,
    parse_family,
    parse_loss,
    zero_loss_targets,
)
from .online import (
    DEFAULT_BETA,
    DEFAULT_EXPERT_CAP,
    CSV_COLUMNS,
    BinaryStream,
    Stream,
    algorithm3,
    necessity_learner,
)
from .oracle import DEFAULT_ORACLE_CAP, verify_lemma, verify_vote_soundness

KINDS = ("verify", "losses", "batch", "online", "vc")


# --- synthetic data ---------------------------------------------------------


def gen_class(n_points: int, n_hypotheses: int, K: int, seed) -> FiniteRankingClass:
    """``n_hypotheses`` distinct hypothesis tables drawn uniformly without replacement."""
    n_perm = math.factorial(K)
    total = n_perm ** n_points
    if n_hypotheses > total:
        raise TooManyHypotheses(f"only (K!)^n = {total} distinct hypotheses exist, asked for {n_hypotheses}")
    if n_hypotheses < 1:
        raise ValueError("n_hypotheses must be >= 1")
    rng = np.random.default_rng(seed)
    perms = all_permutations(K)
    if total < 2 ** 62:
        codes = rng.choice(total, size=n_hypotheses, replace=False)
        digits = np.empty((n_hypotheses, n_points), dtype=np.int64)
        for x in range(n_points - 1, -1, -1):
            codes, digits[:, x] = np.divmod(codes, n_perm)
    else:
        seen, rows = set(), []
        while len(rows) < n_hypotheses:
            row = tuple(rng.integers(0, n_perm, size=n_points).tolist())
            if row not in seen:
                seen.add(row)
                rows.append(row)
        digits = np.array(rows, dtype=np.int64)
    return FiniteRankingClass(perms[digits])


@dataclass(frozen=True)
class SyntheticDistribution:
    """Finite-support distribution over ``(x, y)``; entries are sorted by ``(x, y)``."""

    points: np.ndarray
    ys: np.ndarray
    probs: np.ndarray
    bound: int
    mode: str
    h_star: int | None = None

    def __post_init__(self):
        if abs(float(np.sum(self.probs)) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    def sample(self, n: int, rng: np.random.Generator) -> LabeledSample:
        idx = rng.choice(self.probs.size, size=n, p=self.probs)
        return LabeledSample(self.points[idx], self.ys[idx])

    def sample_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.sample(n, rng).points

    def stream(self, T: int, rng: np.random.Generator) -> Stream:
        s = self.sample(T, rng)
        return Stream(s.points, s.ys.reshape(T, -1), self.bound)


@dataclass(frozen=True)
class BinaryDistribution:
    points: np.ndarray
    labels: np.ndarray
    probs: np.ndarray

    def sample(self, n: int, rng: np.random.Generator) -> BinarySample:
        idx = rng.choice(self.probs.size, size=n, p=self.probs)
        return BinarySample(self.points[idx], self.labels[idx])

    def stream(self, T: int, rng: np.random.Generator) -> BinaryStream:
        s = self.sample(T, rng)
        return BinaryStream(s.points, s.labels)


def _merge_support(points, ys, probs):
    key = {}
    for x, y, q in zip(points, ys, probs):
        k = (int(x), tuple(int(v) for v in y))
        key[k] = key.get(k, 0.0) + float(q)
    items = sorted((k, q) for k, q in key.items() if q > 0)
    pts = np.array([k[0] for k, _ in items], dtype=np.int64)
    ys_out = np.array([k[1] for k, _ in items], dtype=np.int64)
    pr = np.array([q for _, q in items])
    return pts, ys_out, pr / pr.sum()


def gen_distribution(
    H: FiniteRankingClass,
    spec: LossSpec,
    mode: str = "realizable",
    noise: float = 0.0,
    seed=0,
    h_star: int | None = None,
    bound: int = 1,
) -> SyntheticDistribution:
    """Uniform marginal over the domain with relevance drawn around ``h_star``.

    The realizable core puts mass uniformly on the nonzero relevance vectors
    that give ``h_star(x)`` zero loss (the zero vector is only used when
    nothing else qualifies). Agnostic mode mixes that core with weight
    ``noise`` on the uniform distribution over ``{0..bound}^K``.
    """
    if mode not in ("realizable", "agnostic"):
        raise ValueError(f"unknown distribution mode {mode!r}")
    if not 0.0 <= noise < 1.0 and not (mode == "agnostic" and noise == 1.0):
        raise ValueError("noise must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    if h_star is None:
        h_star = int(rng.integers(len(H)))
    if mode == "realizable":
        noise = 0.0
    grid = relevance_grid(H.K, bound)
    px = 1.0 / H.n
    pts, ys, probs = [], [], []
    for x in range(H.n):
        Z = zero_loss_targets(spec, H.table[h_star, x], bound)
        nonzero = Z[Z.any(axis=1)]
        core = nonzero if len(nonzero) else Z
        for y in core:
            pts.append(x)
            ys.append(y)
            probs.append(px * (1.0 - noise) / len(core))
        if noise > 0:
            for y in grid:
                pts.append(x)
                ys.append(y)
                probs.append(px * noise / len(grid))
    p, y, q = _merge_support(pts, ys, probs)
    return SyntheticDistribution(p, y, q, bound, mode, h_star)


def gen_binary_distribution(H: FiniteRankingClass, i: int, j: int, h_star: int) -> BinaryDistribution:
    """Uniform marginal, labels ``h*_i^j(x)``: realizable for ``H_i^j``."""
    pts = np.arange(H.n, dtype=np.int64)
    labels = (H.table[h_star, :, i - 1] <= j).astype(np.int64)
    return BinaryDistribution(pts, labels, np.full(H.n, 1.0 / H.n))


def generalization_gap(H: FiniteRankingClass, dist: SyntheticDistribution, spec: LossSpec, n: int, rng) -> float:
    """``max_h |R(h) - R_S(h)|`` for one sample of size ``n``."""
    S = dist.sample(n, rng)
    emp = loss_matrix(H, S, spec).mean(axis=1)
    return float(np.max(np.abs(population_risks(H, dist, spec) - emp)))


# --- configuration ----------------------------------------------------------


@dataclass
class ExperimentConfig:
    kind: str
    K: int = 3
    B: int = 1
    p: int = 1
    n_points: int = 6
    n_hypotheses: int = 6
    T: int = 60
    beta: float = DEFAULT_BETA
    trials: int = 30
    seed: int = 0
    loss: str | None = None
    family: str | None = None
    cap: int | None = None
    out: str | None = None
    # verify
    lemma: str = "all"
    c: float | None = None
    # losses
    check: str | None = None
    # batch
    algorithm: int = 1
    n_u: int = 200
    n_l: int = 200
    noise: float = 0.1
    mode: str = "agnostic"
    i: int = 1
    j: int = 1
    # online
    variant: str = "learner"
    # vc
    d: int = 1
    n_matrices: int = 200
    max_m: int | None = None
    timing: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        for name in ("K", "B", "p", "n_points", "n_hypotheses", "T", "trials", "n_matrices", "d"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if not 0 < self.beta < 1:
            raise ConfigError(f"beta must lie in (0, 1), got {self.beta}")
        if not 1 <= self.p <= self.K:
            raise ConfigError(f"p={self.p} outside [1, K={self.K}]")
        try:
            if self.loss is not None:
                parse_loss(self.loss).cutoff(self.K)
            if self.check is not None:
                parse_loss(self.check).cutoff(self.K)
            if self.family is not None:
                fam = parse_family(self.family)
                if fam.p > self.K:
                    raise ConfigError(f"family cutoff {fam.p} exceeds K={self.K}")
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.variant not in ("learner", "necessity"):
            raise ConfigError(f"unknown online variant {self.variant!r}")
        if self.mode not in ("realizable", "agnostic"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.algorithm not in (1, 4):
            raise ConfigError("batch algorithm must be 1 or 4")
        if not 0 <= self.noise < 1:
            raise ConfigError("noise must lie in [0, 1)")
        return self

    @property
    def family_obj(self) -> LossFamily:
        return parse_family(self.family) if self.family else LossFamily("sum", self.p)

    @property
    def spec(self) -> LossSpec:
        return parse_loss(self.loss) if self.loss else self.family_obj.reference

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def merged(self, overrides: dict) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    return doc


def thread_count() -> int:
    raw = os.environ.get("RANKLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"RANKLAB_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


def map_trials(fn: Callable[[int], dict], n_trials: int) -> list[dict]:
    """Run trials in a pool of ``RANKLAB_THREADS`` workers; results stay in trial order."""
    workers = min(thread_count(), n_trials)
    if workers <= 1:
        return [fn(t) for t in range(n_trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_trials)))


# --- results ----------------------------------------------------------------


@dataclass
class ExperimentResult:
    kind: str
    passed: bool
    columns: list[str]
    rows: list[dict]
    summary: dict
    extra_csv: dict = field(default_factory=dict)  # suffix -> (columns, rows)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(round(float(v), 12))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else _fmt(r.get(k))) for k in columns})
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return round(float(obj), 12)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_text(doc) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def write_outputs(result: ExperimentResult, cfg: ExperimentConfig) -> list[str]:
    prefix = cfg.out or f"ranklab-{cfg.kind}"
    d = os.path.dirname(prefix)
    if d:
        os.makedirs(d, exist_ok=True)
    written = []
    path = prefix + ".csv"
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(result.columns, result.rows))
    written.append(path)
    for suffix, (cols, rows) in result.extra_csv.items():
        path = f"{prefix}_{suffix}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(csv_text(cols, rows))
        written.append(path)
    path = prefix + ".json"
    doc = {"kind": result.kind, "passed": result.passed, "config": asdict(cfg), "summary": result.summary}
    with open(path, "w") as fh:
        fh.write(json_text(doc))
    written.append(path)
    return written


def mean_se(values) -> dict:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return {"mean": None, "se": None, "n": 0}
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return {"mean": float(v.mean()), "se": se, "n": int(v.size)}


# --- experiment kinds -------------------------------------------------------


def run_verify(cfg: ExperimentConfig) -> ExperimentResult:
    cap = cfg.cap or DEFAULT_ORACLE_CAP
    lemmas = ["E1", "E2", "E3", "E4", "votes"] if cfg.lemma == "all" else [cfg.lemma.upper()]
    reports = []
    for lemma in lemmas:
        if lemma == "VOTES":
            lemma = "votes"
        if lemma == "votes":
            reports += [verify_vote_soundness(cfg.K, cfg.p, v) for v in ("sum", "prec")]
        elif lemma in ("E1", "E2"):
            default = LossSpec("sum" if lemma == "E1" else "prec", cfg.p)
            spec = parse_loss(cfg.loss) if cfg.loss else default
            reports.append(verify_lemma(lemma, cfg.K, cfg.p, cfg.B, spec, c=cfg.c, cap=cap))
        elif lemma in ("E3", "E4"):
            reports.append(verify_lemma(lemma, cfg.K, cfg.p, cap=cap))
        else:
            raise ConfigError(f"unknown lemma {lemma!r}")
    cols = ["lemma", "K", "p", "B", "spec", "space", "violations", "c", "counterexample"]
    rows = [
        {
            "lemma": r.lemma_id, "K": cfg.K, "p": cfg.p, "B": cfg.B, "spec": r.spec,
            "space": r.search_space_size, "violations": r.violations, "c": r.c_used,
            "counterexample": json.dumps(r.first_counterexample, sort_keys=True) if r.first_counterexample else None,
        }
        for r in reports
    ]
    passed = all(r.passed for r in reports)
    summary = {"reports": [r.to_record() for r in reports], "text": [r.summary() for r in reports]}
    return ExperimentResult("verify", passed, cols, rows, summary)


def run_losses(cfg: ExperimentConfig) -> ExperimentResult:
    cap = cfg.cap or 2_000_000
    spec = parse_loss(cfg.check or cfg.loss or f"sum@{cfg.p}")
    family = cfg.family_obj
    rep = check_family(spec, family, cfg.K, cfg.B, cap=cap)
    try:
        ext = loss_extrema(spec, cfg.K, cfg.B, cap=cap)
        a, M, c = ext.a, ext.M, ext.c
    except NoPositiveLoss:  # identically zero loss
        a = M = c = None
    cx = rep.counterexample
    row = {
        "loss": str(spec), "family": str(family), "K": cfg.K, "B": cfg.B,
        "zero_matched": rep.zero_matched, "invariance_holds": rep.invariance_holds,
        "member": rep.member, "space": rep.search_space_size, "a": a, "M": M, "c": c,
        "counterexample": json.dumps(asdict(cx), sort_keys=True) if cx else None,
    }
    cols = list(row)
    return ExperimentResult("losses", rep.member, cols, [row], {"report": row})


def _batch_setup(cfg: ExperimentConfig):
    H = gen_class(cfg.n_points, cfg.n_hypotheses, cfg.K, [cfg.seed, 0])
    dist = gen_distribution(H, cfg.spec, cfg.mode, cfg.noise, [cfg.seed, 1], bound=cfg.B)
    return H, dist


def batch_trial(cfg: ExperimentConfig, H, dist, trial: int) -> dict:
    rng = np.random.default_rng([cfg.seed, 2, trial])
    spec, family = cfg.spec, cfg.family_obj
    start = time.perf_counter()
    if cfg.algorithm == 1:
        S_U = dist.sample_points(cfg.n_u, rng)
        S_L = dist.sample(cfg.n_l, rng)
        sel = algorithm1(consistent_learner, H, S_U, S_L, family, spec, int(rng.integers(2 ** 63)))
        best = float(population_risks(H, dist, spec).min())
        risk = population_risk(sel.predictor, dist, spec)
    else:
        bdist = gen_binary_distribution(H, cfg.i, cfg.j, dist.h_star)
        S_U = bdist.sample(cfg.n_u, rng).points
        S_L = bdist.sample(cfg.n_l, rng)
        sel = algorithm4(erm, H, S_U, S_L, cfg.i, cfg.j, family, spec)
        best = 0.0
        risk = binary_population_error(sel.predictor, bdist)
    wall = (time.perf_counter() - start) * 1000.0
    return {
        "seed": cfg.seed, "trial": trial, "n_u": cfg.n_u, "n_l": cfg.n_l,
        "loss": str(spec) if cfg.algorithm == 1 else "01", "risk": risk, "best_risk": best,
        "excess_risk": risk - best, "candidates": int(np.unique(sel.candidates).size),
        "wall_ms": round(wall, 3) if cfg.timing else None,
    }


def run_batch(cfg: ExperimentConfig) -> ExperimentResult:
    H, dist = _batch_setup(cfg)
    rows = map_trials(lambda t: batch_trial(cfg, H, dist, t), cfg.trials)
    cols = ["seed", "trial", "n_u", "n_l", "loss", "risk", "best_risk", "excess_risk", "candidates", "wall_ms"]
    excess = [r["excess_risk"] for r in rows]
    summary = {
        "excess_risk": mean_se(excess),
        "within_0.1": int(sum(e <= 0.1 + 1e-12 for e in excess)),
        "trials": cfg.trials,
        "n_hypotheses": len(H),
        "support_size": int(dist.probs.size),
    }
    return ExperimentResult("batch", True, cols, rows, summary)


def online_trial(cfg: ExperimentConfig, H, trial: int, T: int | None = None) -> tuple[dict, list[dict]]:
    T = cfg.T if T is None else T
    rng = np.random.default_rng([cfg.seed, 2, trial])
    h_star = int(rng.integers(len(H)))
    cap = cfg.cap or DEFAULT_EXPERT_CAP
    family, spec = cfg.family_obj, cfg.spec
    run_seed = int(rng.integers(2 ** 63))
    if cfg.variant == "necessity":
        bdist = gen_binary_distribution(H, cfg.i, cfg.j, h_star)
        stream = bdist.stream(T, rng)
        run = necessity_learner(H, stream, cfg.i, cfg.j, family, spec, cfg.beta, cap, run_seed)
    else:
        dist = gen_distribution(H, spec, cfg.mode, cfg.noise if cfg.mode == "agnostic" else 0.0,
                                rng.integers(2 ** 63), h_star=h_star, bound=cfg.B)
        stream = dist.stream(T, rng)
        run = algorithm3(H, stream, family, spec, cfg.beta, cap, run_seed)
    agg = {
        "trial": trial, "seed": cfg.seed, "T": T, "h_star": h_star, "n_updates": run.n_updates,
        "n_experts": run.n_experts, "cum_loss": run.cumulative_loss,
        "expected_cum_loss": run.expected_cumulative_loss, "best_hindsight": run.best_hindsight_loss,
        "regret": run.regret, "expected_regret": run.expected_regret,
        "regret_per_T": run.regret / T, "expected_regret_per_T": run.expected_regret / T,
        "non_realizable": run.non_realizable,
    }
    rounds = [dict(trial=trial, **r) for r in run.rows()]
    return agg, rounds


def run_online(cfg: ExperimentConfig) -> ExperimentResult:
    H = gen_class(cfg.n_points, cfg.n_hypotheses, cfg.K, [cfg.seed, 0])
    results = map_trials(lambda t: online_trial(cfg, H, t), cfg.trials)
    rows = [a for a, _ in results]
    rounds = [r for _, rs in results for r in rs]
    cols = list(rows[0]) if rows else ["trial"]
    summary = {
        "regret_per_T": mean_se([r["regret_per_T"] for r in rows]),
        "expected_regret_per_T": mean_se([r["expected_regret_per_T"] for r in rows]),
        "n_experts": mean_se([r["n_experts"] for r in rows]),
        "trials": cfg.trials,
    }
    return ExperimentResult("online", True, cols, rows, summary, {"rounds": (["trial"] + CSV_COLUMNS, rounds)})


def vc_ceiling(K: int, d: int, c: float = 4.0) -> int:
    return int(math.ceil(c * K * d * math.log2(d + 1)))


def vc_trial(cfg: ExperimentConfig, trial: int) -> list[dict]:
    rng = np.random.default_rng([cfg.seed, 2, trial])
    X = rng.standard_normal((cfg.n_points, cfg.d))
    lin = LinearRankerClass.sample(cfg.K, cfg.d, cfg.n_matrices, rng.integers(2 ** 63))
    H = lin.on_points(X)
    ceiling = vc_ceiling(cfg.K, cfg.d)
    max_m = min(cfg.n_points, cfg.max_m if cfg.max_m is not None else ceiling + 1)
    out = []
    for i in range(1, cfg.K + 1):
        for j in range(1, cfg.K + 1):
            C = threshold_restrict(H, i, j)
            vc = vc_lower_bound(C, max_m, budget=cfg.cap or 10_000_000)
            out.append({"trial": trial, "K": cfg.K, "d": cfg.d, "i": i, "j": j, "n_points": cfg.n_points,
                        "class_size": len(C), "vc": vc, "ceiling": ceiling, "ok": vc <= ceiling})
    return out


def run_vc(cfg: ExperimentConfig) -> ExperimentResult:
    rows = [r for rs in map_trials(lambda t: vc_trial(cfg, t), cfg.trials) for r in rs]
    cols = ["trial", "K", "d", "i", "j", "n_points", "class_size", "vc", "ceiling", "ok"]
    passed = all(r["ok"] for r in rows)
    summary = {"max_vc": max(r["vc"] for r in rows), "ceiling": vc_ceiling(cfg.K, cfg.d), "all_ok": passed}
    return ExperimentResult("vc", passed, cols, rows, summary)


RUNNERS = {"verify": run_verify, "losses": run_losses, "batch": run_batch, "online": run_online, "vc": run_vc}


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> tuple[int, ExperimentResult]:
    cfg.validate()
    result = RUNNERS[cfg.kind](cfg)
    if write:
        write_outputs(result, cfg)
    return result.exit_code, result
