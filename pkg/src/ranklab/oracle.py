"""Exhaustive ground truth: optimal losses, the E1 to E4 inequalities and vote soundness.

Every check enumerates its whole finite space. Counterexamples are the first
in lexicographic order of the enumeration (permutations as in
:func:`~ranklab.core.all_permutations`, relevance vectors as in
:func:`~ranklab.core.relevance_grid`, then label ``i`` and cutoff ``j``).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .core import (
    EquivalenceMode,
    Permutation,
    all_permutations,
    as_relevance,
    bin_rel_rows,
    equivalent,
    relevance_grid,
    relevance_index,
)
from .errors import CutoffOutOfRange, FamilyMismatch, NoPositiveLoss, SearchSpaceTooLarge
from .losses import TOL, LossExtrema, LossFamily, LossSpec, check_family, loss_extrema, loss_pairs, loss_table
from .online import aggregate_votes

DEFAULT_ORACLE_CAP = 10 ** 8
DEFAULT_BRUTE_K = 7
LEMMAS = ("E1", "E2", "E3", "E4")


@dataclass(frozen=True)
class VerificationReport:
    lemma_id: str
    search_space_size: int
    violations: int
    first_counterexample: dict | None = None
    constants_used: LossExtrema | None = None
    c_used: float | None = None
    spec: str | None = None

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def summary(self) -> str:
        head = f"{self.lemma_id}"
        if self.spec:
            head += f" [{self.spec}]"
        text = f"{head}: {self.violations} violations over {self.search_space_size} checks"
        if self.c_used is not None:
            text += f" (c = {self.c_used:g})"
        if self.first_counterexample:
            cx = ", ".join(f"{k}={v}" for k, v in self.first_counterexample.items())
            text += f"; first counterexample: {cx}"
        return text

    def to_record(self) -> dict:
        rec = {"lemma": self.lemma_id, "space": self.search_space_size, "violations": self.violations}
        if self.spec:
            rec["spec"] = self.spec
        if self.constants_used is not None:
            rec["constants"] = asdict(self.constants_used) | {"c": self.constants_used.c}
        if self.c_used is not None:
            rec["c_used"] = self.c_used
        if self.first_counterexample is not None:
            rec["counterexample"] = self.first_counterexample
        return rec

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


def _pstr(row) -> str:
    return ",".join(str(int(v)) for v in row)


def brute_min_loss(spec: LossSpec, y, cap: int = DEFAULT_BRUTE_K) -> tuple[float, list[Permutation]]:
    """Exact minimum of ``spec(., y)`` over all of S_K and every minimiser, in lexicographic order."""
    rel = as_relevance(y)
    K = rel.K
    if K > cap:
        raise SearchSpaceTooLarge(f"K={K} exceeds the brute-force cap {cap}")
    perms = all_permutations(K)
    L = loss_pairs(spec, perms, np.asarray(rel.scores)[None, :])
    best = float(L.min())
    arg = [Permutation(tuple(r)) for r in perms[L <= best + TOL].tolist()]
    return (int(round(best)) if spec.integer_valued else best), arg


def _check_size(size: int, cap: int) -> None:
    if size > cap:
        raise SearchSpaceTooLarge(f"search space {size} exceeds cap {cap}")


def verify_lemma(
    lemma_id: str,
    K: int,
    p: int,
    B_rel: int = 1,
    spec: LossSpec | None = None,
    c: float | None = None,
    cap: int = DEFAULT_ORACLE_CAP,
    require_family: bool = True,
) -> VerificationReport:
    """Check one of E1 to E4 over its full finite space.

    E1: ``l(pi, y) <= l(pi_hat, y) + c * sum_{j<=p} l(pi, BinRel(pi_hat, j))``,
    i.e. ``c p E_j[...]`` with ``j`` uniform on ``1..p``, for ``spec`` in the sum@p family.
    E2: ``l(pi, y) <= l(pi_hat, y) + c * l(pi, BinRel(pi_hat, p))`` for the prec@p family.
    E3: ``sum@p(pi, BinRel(pi_hat, j)) >= 1[pi^j_i != pi_hat^j_i]`` for all ``i`` and ``j <= p``.
    E4: ``prec@p(pi, BinRel(pi_hat, p)) >= 1[pi^p_i != pi_hat^p_i]`` for all ``i``.

    ``c`` overrides the constant ``M / a`` from :func:`loss_extrema` (used for
    negative controls); ``spec`` is ignored by E3 and E4. With
    ``require_family=False`` the family precondition is skipped and the
    inequality is tested as stated.
    """
    lemma_id = lemma_id.upper()
    if lemma_id not in LEMMAS:
        raise ValueError(f"unknown lemma {lemma_id!r}; expected one of {LEMMAS}")
    if not 1 <= p <= K:
        raise CutoffOutOfRange(f"cutoff {p} outside [1, {K}]")
    nP = math.factorial(K)
    perms = all_permutations(K)
    if lemma_id in ("E3", "E4"):
        return _verify_indicator(lemma_id, K, p, perms, cap)

    if spec is None:
        raise ValueError(f"{lemma_id} needs a loss spec")
    size = nP * nP * (B_rel + 1) ** K
    _check_size(size, cap)
    family = LossFamily("sum" if lemma_id == "E1" else "prec", p)
    member = check_family(spec, family, K, B_rel, cap=cap) if require_family else None
    if member is not None and not member.member:
        raise FamilyMismatch(f"{spec} is not in the {family} family for K={K}, B={B_rel}: {member.counterexample}")
    try:
        extrema = loss_extrema(spec, K, B_rel, cap=cap)
    except NoPositiveLoss:
        # an identically zero loss satisfies both inequalities for every c >= 0
        extrema = None
    c_used = (extrema.c if extrema is not None else 0.0) if c is None else float(c)
    L = np.ascontiguousarray(loss_table(spec, K, B_rel, cap=cap))
    cuts = range(1, p + 1) if lemma_id == "E1" else [p]
    bidx = np.stack([relevance_index(bin_rel_rows(perms, j), B_rel) for j in cuts], axis=1)
    count, first = kernels.subadditivity_violations(L, np.ascontiguousarray(bidx), c_used, TOL)
    cx = None
    if first is not None:
        a, b, y = first
        cx = {"pi": _pstr(perms[a]), "pi_hat": _pstr(perms[b]), "y": _pstr(relevance_grid(K, B_rel)[y])}
    return VerificationReport(lemma_id, size, int(count), cx, extrema, c_used, str(spec))


def _verify_indicator(lemma_id: str, K: int, p: int, perms: np.ndarray, cap: int) -> VerificationReport:
    nP = perms.shape[0]
    cuts = list(range(1, p + 1)) if lemma_id == "E3" else [p]
    size = nP * nP * K * len(cuts)
    _check_size(size, cap)
    spec = LossSpec("sum" if lemma_id == "E3" else "prec", p)
    violations = 0
    integral = True
    for j in cuts:
        targets = bin_rel_rows(perms, j)  # row b is BinRel(pi_hat_b, j)
        lhs = loss_pairs(spec, perms[:, None, :], targets[None, :, :])  # [a, b]
        integral &= bool(np.all((lhs >= 0) & (lhs == np.round(lhs))))
        differ = (perms[:, None, :] <= j) != (targets[None, :, :] == 1)  # [a, b, i]
        violations += int((differ & (lhs[:, :, None] < 1 - TOL)).sum())
    # the scan for the first counterexample follows the global (pi, pi_hat, i, j) order
    first = _first_indicator_violation(perms, cuts, spec) if violations else None
    if not integral:
        raise AssertionError(f"{spec} took a non-integral value on a BinRel target")
    return VerificationReport(lemma_id, size, violations, first, None, None, str(spec))


def _first_indicator_violation(perms, cuts, spec) -> dict:
    for a, pi in enumerate(perms):
        for b, pi_hat in enumerate(perms):
            for i in range(perms.shape[1]):
                for j in cuts:
                    target = (pi_hat <= j).astype(np.int64)
                    lhs = float(loss_pairs(spec, pi[None, :], target[None, :])[0])
                    if lhs < 1 - TOL and (pi[i] <= j) != (pi_hat[i] <= j):
                        return {"pi": _pstr(pi), "pi_hat": _pstr(pi_hat), "i": i + 1, "j": j, "loss": lhs}
    return None


def verify_vote_soundness(K: int, p: int, variant: str, cap: int = DEFAULT_BRUTE_K) -> VerificationReport:
    """Exact votes from every target ``pi*`` must aggregate to a ``[p]``- (sum) or ``p``- (prec) equivalent ranking."""
    if variant not in ("sum", "prec"):
        raise ValueError(f"unknown vote variant {variant!r}")
    if K > cap:
        raise SearchSpaceTooLarge(f"K={K} exceeds the vote-soundness cap {cap}")
    if not 1 <= p <= K:
        raise CutoffOutOfRange(f"cutoff {p} outside [1, {K}]")
    perms = all_permutations(K)
    mode = EquivalenceMode.bracket(p) if variant == "sum" else EquivalenceMode.at(p)
    violations = 0
    first = None
    for target in perms:
        if variant == "sum":
            v = sum(bin_rel_rows(target, j) for j in range(1, p + 1))
        else:
            v = bin_rel_rows(target, p)
        pred = aggregate_votes(v)
        if not equivalent(pred, tuple(target.tolist()), mode):
            violations += 1
            if first is None:
                first = {"pi_star": _pstr(target), "prediction": str(pred)}
    return VerificationReport(f"votes-{variant}", perms.shape[0], violations, first, None, None, f"{variant}@{p}")
