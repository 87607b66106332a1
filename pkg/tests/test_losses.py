import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ranklab.core import EquivalenceMode, all_permutations, equivalent, relevance_grid
from ranklab.errors import BinaryRelevanceRequired, CutoffOutOfRange, NoPositiveLoss
from ranklab.losses import (
    LossFamily,
    LossSpec,
    check_family,
    eval_loss,
    loss_extrema,
    loss_pairs,
    loss_table,
    normalizer_dcg,
    normalizer_prec,
    normalizer_sum,
    parse_family,
    parse_loss,
    zero_loss_targets,
)
from ranklab.oracle import brute_min_loss

import naive

SUM2, PREC1, PREC2 = LossSpec("sum", 2), LossSpec("prec", 1), LossSpec("prec", 2)


def test_normalizer_examples():
    assert normalizer_sum((2, 1, 0), 2) == 4
    assert normalizer_sum((1, 1, 1), 1) == 5
    assert normalizer_prec((2, 1, 0), 2) == 3
    assert normalizer_prec((2, 1, 0), 1) == 2
    for p in (1, 2, 3):
        assert normalizer_sum((0, 0, 0), p) == 0
        assert normalizer_prec((0, 0, 0), p) == 0
        assert normalizer_dcg((0, 0, 0), p) == 0.0
    with pytest.raises(CutoffOutOfRange):
        normalizer_sum((1, 0), 3)


def test_eval_loss_examples():
    assert eval_loss(SUM2, (2, 1, 3), (2, 1, 0)) == 1
    assert eval_loss(PREC2, (1, 3, 2), (2, 1, 0)) == 1
    assert eval_loss(LossSpec("ap"), (1, 3, 2), (1, 0, 1)) == 0
    assert eval_loss(LossSpec("auc"), (1, 2, 3), (1, 0, 1)) == pytest.approx(0.5)
    assert eval_loss(LossSpec("rr"), (1, 2, 3), (0, 0, 1)) == pytest.approx(2 / 3)
    assert eval_loss(LossSpec("pl"), (3, 2, 1), (2, 1, 0)) == 3
    assert eval_loss(LossSpec("dcg", 1), (3, 2, 1), (2, 0, 1)) == pytest.approx(2.0)


def test_integer_losses_return_ints():
    assert isinstance(eval_loss(SUM2, (2, 1, 3), (2, 1, 0)), int)
    assert isinstance(eval_loss(PREC2, (2, 1, 3), (2, 1, 0)), int)
    assert isinstance(eval_loss(LossSpec("pl"), (2, 1, 3), (2, 1, 0)), int)


def test_binary_only_losses_reject_graded_relevance():
    for name in ("ap", "auc", "rr"):
        with pytest.raises(BinaryRelevanceRequired):
            eval_loss(LossSpec(name), (1, 2, 3), (2, 0, 1))
    with pytest.raises(BinaryRelevanceRequired):
        loss_table(LossSpec("ap"), 3, 2)


def test_degenerate_relevance_gives_zero():
    for name in ("ap", "auc", "rr"):
        assert eval_loss(LossSpec(name), (3, 1, 2), (0, 0, 0)) == 0
    assert eval_loss(LossSpec("auc"), (3, 1, 2), (1, 1, 1)) == 0


def test_parse_roundtrip():
    for text in ("sum@2", "prec@1", "ap", "auc", "rr", "pl", "dcg@3"):
        assert str(parse_loss(text)) == text
    assert parse_family("sum@3") == LossFamily("sum", 3)
    assert parse_loss("rr").cutoff(5) == 1
    assert parse_loss("ap").cutoff(5) == 5
    for bad in ("sum", "foo", "sum@x", "dcg@0", "ap@2"):
        with pytest.raises(ValueError):
            parse_loss(bad)
    with pytest.raises(ValueError):
        parse_family("ap")


def test_cutoff_beyond_K_rejected():
    with pytest.raises(CutoffOutOfRange):
        eval_loss(LossSpec("sum", 4), (1, 2, 3), (1, 0, 0))


@pytest.mark.parametrize("K", range(1, 7))
def test_normalizers_match_brute_force(K):
    rng = np.random.default_rng(K)
    for _ in range(1000 if K <= 5 else 200):
        B = int(rng.integers(1, 4))
        y = tuple(int(v) for v in rng.integers(0, B + 1, size=K))
        p = int(rng.integers(1, K + 1))
        assert normalizer_sum(y, p) == naive.z_sum(y, p)
        assert normalizer_prec(y, p) == naive.z_prec(y, p)
        assert abs(normalizer_dcg(y, p) - naive.z_dcg(y, p)) <= 1e-12


@pytest.mark.parametrize("K", [2, 3, 4])
def test_eval_loss_matches_naive_definitions(K):
    specs = [LossSpec(n, p) for n in ("sum", "prec", "dcg") for p in range(1, K + 1)] + [LossSpec("pl")]
    binary = [LossSpec("ap"), LossSpec("auc"), LossSpec("rr")]
    for pi in naive.perms(K):
        for y in itertools.product(range(3), repeat=K):
            for s in specs:
                got = eval_loss(s, pi, y)
                assert got == pytest.approx(naive.loss(s.name, pi, y, s.p), abs=1e-12)
            if max(y) <= 1:
                for s in binary:
                    assert eval_loss(s, pi, y) == pytest.approx(naive.loss(s.name, pi, y), abs=1e-12)


def test_ap_and_auc_agree_with_sklearn():
    metrics = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(3)
    for _ in range(300):
        K = int(rng.integers(2, 7))
        pi = rng.permutation(K) + 1
        y = rng.integers(0, 2, size=K)
        if 0 < y.sum() < K:
            score = -pi.astype(float)
            ap = metrics.average_precision_score(y, score)
            auc = metrics.roc_auc_score(y, score)
            assert eval_loss(LossSpec("ap"), pi, y) == pytest.approx(1 - ap, abs=1e-12)
            assert eval_loss(LossSpec("auc"), pi, y) == pytest.approx(1 - auc, abs=1e-12)


@given(st.permutations(list(range(1, 6))), st.lists(st.integers(0, 3), min_size=5, max_size=5))
def test_losses_are_nonnegative(pi, y):
    for name in ("sum", "prec", "dcg"):
        for p in range(1, 6):
            assert eval_loss(LossSpec(name, p), pi, y) >= -1e-12
    assert eval_loss(LossSpec("pl"), pi, y) >= 0


@pytest.mark.parametrize("K", [2, 3, 4])
@pytest.mark.parametrize("B", [1, 2])
def test_canonical_losses_invariant_under_their_equivalence(K, B):
    P = [tuple(r) for r in all_permutations(K).tolist()]
    Y = relevance_grid(K, B)
    for p in range(1, K + 1):
        Ls = loss_table(LossSpec("sum", p), K, B)
        Lp = loss_table(LossSpec("prec", p), K, B)
        for a, b in itertools.combinations(range(len(P)), 2):
            if equivalent(P[a], P[b], EquivalenceMode.bracket(p)):
                assert np.array_equal(Ls[a], Ls[b])
            if equivalent(P[a], P[b], EquivalenceMode.at(p)):
                assert np.array_equal(Lp[a], Lp[b])
    assert Y.shape[0] == (B + 1) ** K


@pytest.mark.parametrize("K", [2, 3, 4])
def test_zero_loss_iff_brute_force_argmin(K):
    for spec in (LossSpec("sum", 1), LossSpec("sum", K), LossSpec("prec", 2 if K > 1 else 1), LossSpec("pl")):
        for y in relevance_grid(K, 2).tolist():
            best, argmin = brute_min_loss(spec, y)
            assert best == 0
            zero = {pi for pi in naive.perms(K) if abs(eval_loss(spec, pi, y)) <= 1e-9}
            assert zero == {a.ranks for a in argmin}


def test_loss_table_layout_and_readonly():
    L = loss_table(SUM2, 3, 2)
    assert L.shape == (6, 27)
    assert not L.flags.writeable
    P, Y = all_permutations(3), relevance_grid(3, 2)
    assert L[4, 11] == eval_loss(SUM2, P[4], Y[11])


def test_loss_pairs_broadcasts():
    P = all_permutations(3)
    y = np.array([2, 1, 0])
    got = loss_pairs(SUM2, P, y[None, :])
    assert got.tolist() == [eval_loss(SUM2, pi, y) for pi in P]
    assert loss_pairs(SUM2, np.zeros((0, 3), dtype=int), np.zeros((0, 3), dtype=int)).shape == (0,)
    with pytest.raises(ValueError):
        loss_pairs(SUM2, P[:1], np.array([[1, -1, 0]]))


def test_loss_extrema_examples():
    e = loss_extrema(SUM2, 3, 2)
    assert (e.a, e.M) == (1, 4)
    e = loss_extrema(PREC1, 3, 1)
    assert (e.a, e.M, e.c) == (1, 1, 1)
    with pytest.raises(NoPositiveLoss):
        loss_extrema(LossSpec("sum", 1), 1, 1)
    # prec@K never penalises any ranking
    with pytest.raises(NoPositiveLoss):
        loss_extrema(LossSpec("prec", 3), 3, 2)


def test_loss_extrema_brackets_every_positive_value():
    for spec, B in ((LossSpec("dcg", 2), 2), (LossSpec("ap"), 1), (LossSpec("pl"), 2)):
        e = loss_extrema(spec, 4, B)
        vals = loss_table(spec, 4, B).ravel()
        pos = vals[vals > 1e-9]
        assert e.a == pos.min() and e.M == vals.max() and e.c == pytest.approx(e.M / e.a)


def test_membership_examples():
    rep = check_family(LossSpec("ap"), LossFamily("sum", 3), 3, 1)
    assert rep.zero_matched and rep.invariance_holds and rep.member and rep.counterexample is None
    rep = check_family(LossSpec("sum", 1), LossFamily("prec", 2), 3, 1)
    assert not rep.zero_matched
    cx = rep.counterexample
    top1 = eval_loss(LossSpec("sum", 1), cx.pi, cx.y)
    top2 = eval_loss(LossSpec("prec", 2), cx.pi, cx.y)
    assert (top1 == 0) != (top2 == 0)


def test_rr_fails_invariance_under_prec1():
    """Reciprocal rank looks past the top label, so the 1-equivalence invariance breaks.

    pi=(1,2,3) and pi_hat=(1,3,2) share their top label, yet against
    y=(0,0,1) the first relevant label sits at rank 3 vs rank 2.
    """
    rep = check_family(LossSpec("rr"), LossFamily("prec", 1), 3, 1)
    assert rep.zero_matched
    assert not rep.invariance_holds
    cx = rep.counterexample
    assert (cx.pi, cx.pi_hat, cx.y) == ((1, 2, 3), (1, 3, 2), (0, 0, 1))
    assert eval_loss(LossSpec("rr"), cx.pi, cx.y) == pytest.approx(2 / 3)
    assert eval_loss(LossSpec("rr"), cx.pi_hat, cx.y) == pytest.approx(1 / 2)


def test_membership_counterexample_reevaluates():
    rep = check_family(LossSpec("pl"), LossFamily("prec", 1), 3, 2)
    assert not rep.member
    cx = rep.counterexample
    if cx.check == "invariance":
        assert eval_loss(LossSpec("pl"), cx.pi, cx.y) != eval_loss(LossSpec("pl"), cx.pi_hat, cx.y)
    assert rep.search_space_size == 6 * 6 * 27


def test_zero_loss_targets_sum1():
    """Zero sum@1 loss iff the top-ranked label carries a maximal score."""
    for pi in naive.perms(3):
        Z = {tuple(r) for r in zero_loss_targets(LossSpec("sum", 1), pi, 2).tolist()}
        first = pi.index(1)
        expect = {y for y in itertools.product(range(3), repeat=3) if y[first] == max(y)}
        assert Z == expect


def test_dcg_full_cutoff_matches_pairwise_free_definition():
    y = (2, 0, 1)
    best = max(naive.dcg_gain(pi, y, 3) for pi in naive.perms(3))
    assert normalizer_dcg(y, 3) == pytest.approx(best)
    assert normalizer_dcg(y, 3) == pytest.approx(3 + 1 / math.log2(3))
