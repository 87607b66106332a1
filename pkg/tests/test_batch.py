import numpy as np
import pytest

from ranklab.batch import (
    BinarySample,
    LabeledSample,
    algorithm1,
    algorithm4,
    binary_population_error,
    consistent_learner,
    empirical_risks,
    erm,
    loss_matrix,
    population_risk,
    population_risks,
)
from ranklab.errors import EmptySample, FamilyCutoffMismatch, IndexOutOfRange, NotRealizable, PointOutOfRange
from ranklab.harness import gen_binary_distribution, gen_class, gen_distribution
from ranklab.hypothesis import FiniteRankingClass
from ranklab.losses import LossFamily, LossSpec, eval_loss

SUM2 = LossSpec("sum", 2)
IDENT_REV = FiniteRankingClass([[[1, 2, 3]] * 3, [[3, 2, 1]] * 3])


def test_erm_prefers_zero_loss_hypothesis():
    S = LabeledSample([0, 1, 2], [[1, 0, 0], [1, 1, 0], [2, 1, 0]])
    assert erm(IDENT_REV, S, SUM2) == 0
    S = LabeledSample([0], [[0, 0, 1]])
    assert erm(IDENT_REV, S, SUM2) == 1


def test_erm_tie_goes_to_lower_index():
    S = LabeledSample([0], [[0, 1, 0]])
    risks = empirical_risks(IDENT_REV, S, SUM2)
    assert risks[0] == risks[1]
    assert erm(IDENT_REV, S, SUM2) == 0


def test_erm_is_exact_minimiser():
    H = gen_class(5, 30, 3, 2)
    rng = np.random.default_rng(0)
    for _ in range(20):
        S = LabeledSample(rng.integers(0, 5, 15), rng.integers(0, 3, (15, 3)))
        h = erm(H, S, SUM2)
        naive = [np.mean([eval_loss(SUM2, H.predict(g, x), y) for x, y in zip(S.points, S.ys)]) for g in range(len(H))]
        assert naive[h] == min(naive)
        assert h == int(np.argmin(naive))


def test_empirical_risk_of_empty_sample():
    with pytest.raises(EmptySample):
        empirical_risks(IDENT_REV, LabeledSample.from_pairs([], K=3), SUM2)


def test_consistent_learner_contract():
    H = gen_class(4, 12, 3, 3)
    rng = np.random.default_rng(1)
    for gen in range(len(H)):
        pts = rng.integers(0, 4, 10)
        ys = (H.table[gen, pts] <= 2).astype(int)
        h = consistent_learner(H, LabeledSample(pts, ys), SUM2)
        assert h <= gen
        assert loss_matrix(H, LabeledSample(pts, ys), SUM2)[h].max() == 0
    assert consistent_learner(H, LabeledSample.from_pairs([], K=3), SUM2) == 0
    bad = LabeledSample([0, 0], [[1, 0, 0], [0, 1, 0]])
    with pytest.raises(NotRealizable):
        consistent_learner(H, bad, LossSpec("sum", 1))


def test_sample_validation():
    with pytest.raises(PointOutOfRange):
        loss_matrix(IDENT_REV, LabeledSample([3], [[1, 0, 0]]), SUM2)
    with pytest.raises(ValueError):
        LabeledSample([0], [[1, 0]] * 2)
    with pytest.raises(ValueError):
        BinarySample([0, 1], [0, 2])


def test_algorithm1_single_hypothesis():
    H = gen_class(3, 1, 3, 0)
    S_L = LabeledSample([0, 1], [[0, 0, 1], [1, 0, 0]])
    for fam in (LossFamily("sum", 2), LossFamily("prec", 2)):
        sel = algorithm1(consistent_learner, H, [0, 1, 2], S_L, fam, SUM2, rng_seed=0)
        assert sel.hypothesis == 0 and np.array_equal(sel.predictor, H.table[0])


def test_algorithm1_empty_unlabelled_sample():
    H = gen_class(3, 5, 3, 1)
    S_L = LabeledSample([0, 1, 2], [[1, 0, 0]] * 3)
    sel = algorithm1(consistent_learner, H, [], S_L, LossFamily("sum", 2), SUM2, rng_seed=0)
    assert sel.candidates.tolist() == [0]
    assert sel.representatives.tolist() == [0]


def test_algorithm1_deterministic_and_seed_sensitive_candidates():
    H = gen_class(6, 8, 3, 4)
    dist = gen_distribution(H, SUM2, "agnostic", 0.3, seed=0, h_star=2)
    rng = np.random.default_rng(0)
    S_U = dist.sample_points(50, rng)
    S_L = dist.sample(50, rng)
    a = algorithm1(consistent_learner, H, S_U, S_L, LossFamily("sum", 2), SUM2, 123)
    b = algorithm1(consistent_learner, H, S_U, S_L, LossFamily("sum", 2), SUM2, 123)
    assert np.array_equal(a.candidates, b.candidates) and a.chosen == b.chosen


def test_algorithm1_realizable_zero_empirical_loss():
    H = gen_class(6, 8, 3, 7)
    for fam in (LossFamily("sum", 2), LossFamily("prec", 2)):
        spec = fam.reference
        dist = gen_distribution(H, spec, "realizable", 0.0, seed=1, h_star=5)
        rng = np.random.default_rng(2)
        S_L = dist.sample(40, rng)
        sel = algorithm1(consistent_learner, H, dist.sample_points(40, rng), S_L, fam, spec, 9)
        any_zero = (loss_matrix(H, S_L, spec)[sel.candidates].max(axis=1) == 0).any()
        if any_zero:
            assert sel.empirical_losses[sel.chosen] == 0


def test_algorithm4_single_and_identical_candidates():
    H = gen_class(4, 1, 3, 0)
    bd = gen_binary_distribution(H, 1, 2, 0)
    S = bd.sample(10, np.random.default_rng(0))
    sel = algorithm4(erm, H, [0, 1], S, 1, 2, LossFamily("sum", 2), SUM2)
    assert np.array_equal(sel.predictor, (H.table[0, :, 0] <= 2).astype(int))
    assert binary_population_error(sel.predictor, bd) == 0


def test_algorithm4_errors():
    H = gen_class(4, 3, 3, 0)
    S = BinarySample([0], [1])
    with pytest.raises(FamilyCutoffMismatch):
        algorithm4(erm, H, [0], S, 1, 1, LossFamily("prec", 2), LossSpec("prec", 2))
    with pytest.raises(IndexOutOfRange):
        algorithm4(erm, H, [0], S, 4, 1, LossFamily("sum", 2), SUM2)


def test_population_risk_is_weighted_sum():
    H = gen_class(4, 6, 3, 5)
    dist = gen_distribution(H, SUM2, "agnostic", 0.5, seed=3, h_star=1)
    risks = population_risks(H, dist, SUM2)
    for h in range(len(H)):
        direct = sum(q * eval_loss(SUM2, H.predict(h, x), y) for x, y, q in zip(dist.points, dist.ys, dist.probs))
        assert risks[h] == pytest.approx(direct, abs=1e-12)
        assert population_risk(H.table[h], dist, SUM2) == pytest.approx(direct, abs=1e-12)
