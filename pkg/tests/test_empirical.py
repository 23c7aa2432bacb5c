import numpy as np
import pytest
from pytest import approx

from twinmdp import (
    DegenerateRmaxWarning,
    EmpiricalModel,
    MdpPair,
    MdpSampler,
    NoSamples,
    SamplerOutOfRange,
    TabularMdp,
    TraceCoverageError,
    collect,
    coverage_deficits,
    empirical_tv,
    empirical_tv_metric,
    plan_samples,
    random_mdp,
    required_samples,
    require_coverage,
    sample_bound,
    tv_metric,
)


class ConstantSampler:
    def __init__(self, num_states, num_actions, target):
        self.num_states = num_states
        self.num_actions = num_actions
        self.target = target

    def sample_next(self, s, a, rng):
        return self.target


class TestRequiredSamples:
    def test_frozen_reference_value(self):
        # cross-checked against 50-digit arithmetic: the bound evaluates to
        # 1493996.17891614... so the ceiling is 1493997
        assert required_samples(0.1, 0.05, 0.9, 1.0, 10) == 1_493_997

    def test_against_high_precision_oracle(self):
        import mpmath as mp

        mp.mp.dps = 50
        cases = [(0.1, 0.05, 0.9, 1.0, 10), (0.2, 0.05, 0.5, 1.0, 4), (0.05, 0.01, 0.8, 2.0, 6)]
        for eps, alpha, gamma, r_max, n in cases:
            exact = (
                -mp.log(mp.mpf(repr(alpha)) / 2)
                * mp.mpf(repr(gamma)) ** 2
                * mp.mpf(repr(r_max)) ** 2
                * n**2
                / (2 * mp.mpf(repr(eps)) ** 2 * (1 - mp.mpf(repr(gamma))) ** 2)
            )
            assert required_samples(eps, alpha, gamma, r_max, n) == int(mp.ceil(exact))

    def test_less_confidence_needs_fewer_samples(self):
        ks = [required_samples(0.1, alpha, 0.9, 1.0, 10) for alpha in (0.01, 0.05, 0.2)]
        assert ks[0] > ks[1] > ks[2]

    def test_halving_epsilon_quadruples_the_bound(self):
        base = sample_bound(0.1, 0.05, 0.9, 1.0, 10)
        assert sample_bound(0.05, 0.05, 0.9, 1.0, 10) == approx(4 * base, rel=1e-15)

    def test_degenerate_rmax_returns_one_with_warning(self):
        with pytest.warns(DegenerateRmaxWarning):
            assert required_samples(0.1, 0.05, 0.9, 0.0, 10) == 1

    def test_rejects_bad_arguments(self):
        for bad in [
            dict(epsilon=0.0),
            dict(alpha=0.0),
            dict(alpha=1.0),
            dict(gamma=1.0),
            dict(r_max=-1.0),
            dict(num_states=0),
        ]:
            kwargs = dict(epsilon=0.1, alpha=0.05, gamma=0.9, r_max=1.0, num_states=10)
            kwargs.update(bad)
            with pytest.raises(ValueError):
                sample_bound(**kwargs)

    def test_plan_records_the_triplet(self):
        plan = plan_samples(0.2, 0.05, 0.5, 1.0, 4)
        assert (plan.epsilon, plan.alpha, plan.k_required) == (0.2, 0.05, 738)


class TestCollect:
    def test_constant_sampler_concentrates_counts(self):
        model = collect(ConstantSampler(3, 2, target=1), k=50, seed=0)
        assert np.all(model.counts[:, :, 1] == 50)
        assert model.counts.sum() == 3 * 2 * 50
        assert np.all(model.k_per_pair == 50)

    def test_single_sample_rows_are_point_masses(self):
        mdp = random_mdp(3, 2, 0.9, seed=1)
        model = collect(MdpSampler(mdp), k=1, seed=5)
        assert np.all(model.counts.sum(axis=2) == 1)
        assert np.all(model.counts.max(axis=2) == 1)

    def test_deterministic_given_seed(self):
        mdp = random_mdp(4, 2, 0.9, seed=2)
        a = collect(MdpSampler(mdp), k=200, seed=9)
        b = collect(MdpSampler(mdp), k=200, seed=9)
        assert np.array_equal(a.counts, b.counts)
        c = collect(MdpSampler(mdp), k=200, seed=10)
        assert not np.array_equal(a.counts, c.counts)

    def test_batched_and_scalar_paths_share_the_stream(self):
        mdp = random_mdp(4, 2, 0.9, seed=3)
        sampler = MdpSampler(mdp)
        rng1 = np.random.default_rng(77)
        rng2 = np.random.default_rng(77)
        scalar = [sampler.sample_next(2, 1, rng1) for _ in range(64)]
        batched = sampler.sample_many(2, 1, 64, rng2)
        assert scalar == list(batched)

    def test_law_of_large_numbers(self):
        mdp = random_mdp(3, 2, 0.9, seed=4)
        model = collect(MdpSampler(mdp), k=100_000, seed=12)
        freq = model.counts / 100_000
        assert np.abs(freq - mdp.transitions).max() < 0.01

    def test_sampler_out_of_range(self):
        with pytest.raises(SamplerOutOfRange):
            collect(ConstantSampler(3, 1, target=7), k=3, seed=0)

    def test_rejects_nonpositive_k(self):
        with pytest.raises(ValueError):
            collect(ConstantSampler(2, 1, target=0), k=0, seed=0)


class TestEmpiricalModelInvariants:
    def test_counts_must_match_budget(self):
        counts = np.zeros((2, 1, 2), dtype=np.int64)
        counts[0, 0, 0] = 3
        with pytest.raises(ValueError):
            EmpiricalModel(counts=counts, k_per_pair=np.full((2, 1), 5))

    def test_frequencies_are_distributions(self):
        mdp = random_mdp(3, 2, 0.9, seed=6)
        model = collect(MdpSampler(mdp), k=37, seed=1)
        for s in range(3):
            for a in range(2):
                row = model.frequencies(s, a)
                assert row.sum() == approx(1.0, abs=1e-12)
                assert row.min() >= 0.0

    def test_no_samples_raises(self):
        model = EmpiricalModel(
            counts=np.zeros((2, 1, 2), dtype=np.int64), k_per_pair=np.zeros((2, 1), dtype=np.int64)
        )
        with pytest.raises(NoSamples):
            model.frequencies(0, 0)


class TestEmpiricalTv:
    def test_identical_counts(self):
        counts = np.array([[[3, 7]]], dtype=np.int64)
        model = EmpiricalModel(counts=counts, k_per_pair=np.array([[10]]))
        assert empirical_tv(model, model, 0, 0) == 0.0

    def test_disjoint_support(self):
        a = EmpiricalModel(counts=np.array([[[10, 0]]]), k_per_pair=np.array([[10]]))
        b = EmpiricalModel(counts=np.array([[[0, 10]]]), k_per_pair=np.array([[10]]))
        assert empirical_tv(a, b, 0, 0) == 1.0

    def test_matches_naive_recomputation(self):
        mdp_a = random_mdp(4, 2, 0.9, seed=7)
        mdp_b = random_mdp(4, 2, 0.9, seed=8)
        model_a = collect(MdpSampler(mdp_a), k=500, seed=3)
        model_b = collect(MdpSampler(mdp_b), k=400, seed=4)
        for s in range(4):
            for a in range(2):
                naive = 0.5 * sum(
                    abs(model_a.counts[s, a, k] / 500 - model_b.counts[s, a, k] / 400)
                    for k in range(4)
                )
                assert empirical_tv(model_a, model_b, s, a) == approx(naive, abs=1e-12)


def exact_count_model(mdp: TabularMdp, k: int) -> EmpiricalModel:
    counts = np.rint(mdp.transitions * k).astype(np.int64)
    assert np.all(counts.sum(axis=2) == k), "transition rows must be multiples of 1/k"
    return EmpiricalModel(counts=counts, k_per_pair=np.full(mdp.shape, k, dtype=np.int64))


def quarter_mdp(rewards) -> TabularMdp:
    transitions = np.full((4, 2, 4), 0.25)
    return TabularMdp(num_states=4, num_actions=2, gamma=0.5, rewards=rewards, transitions=transitions)


class TestEmpiricalTvMetric:
    def test_exact_counts_reproduce_the_true_metric(self):
        real = TabularMdp(
            num_states=3,
            num_actions=2,
            gamma=0.9,
            rewards=np.random.default_rng(1).random((3, 2)),
            transitions=np.array(
                [
                    [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25]],
                    [[1.0, 0.0, 0.0], [0.0, 0.75, 0.25]],
                    [[0.25, 0.25, 0.5], [0.5, 0.5, 0.0]],
                ]
            ),
        )
        twin = TabularMdp(
            num_states=3,
            num_actions=2,
            gamma=0.9,
            rewards=real.rewards + 0.1,
            transitions=np.array(
                [
                    [[0.25, 0.5, 0.25], [0.25, 0.25, 0.5]],
                    [[0.75, 0.25, 0.0], [0.0, 0.5, 0.5]],
                    [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25]],
                ]
            ),
        )
        pair = MdpPair(real=real, twin=twin)
        est = empirical_tv_metric(pair, exact_count_model(real, 4), exact_count_model(twin, 4))
        true = tv_metric(pair)
        assert est.d_tv == approx(true.d_tv, abs=1e-12)
        assert est.r_max == true.r_max

    def test_converges_with_many_samples(self):
        real = random_mdp(4, 2, 0.9, seed=9)
        twin = random_mdp(4, 2, 0.9, seed=10)
        pair = MdpPair(real=real, twin=twin)
        m_real = collect(MdpSampler(real), k=100_000, seed=31)
        m_twin = collect(MdpSampler(twin), k=100_000, seed=32)
        est = empirical_tv_metric(pair, m_real, m_twin)
        assert np.abs(est.d_tv - tv_metric(pair).d_tv).max() < 0.02

    def test_accuracy_chain_at_the_premise_boundary(self):
        # rewards span exactly 1 so the metric scale constant is 1
        rewards = np.array([[0.0, 0.5], [1.0, 0.5], [0.5, 0.5], [0.5, 0.5]])
        real = quarter_mdp(rewards)
        twin = quarter_mdp(rewards)
        pair = MdpPair(real=real, twin=twin)
        eps = 0.2
        # premise: empirical rows within eps*(1-gamma)/(gamma*r_max*|S|) of truth
        entry_dev = eps * (1 - 0.5) / (0.5 * 1.0 * 4)
        k = 1000
        shift = int(entry_dev * k)
        base = np.full((4, 2, 4), k // 4, dtype=np.int64)
        plus = base.copy()
        plus[:, :, [0, 2]] += shift
        plus[:, :, [1, 3]] -= shift
        minus = base.copy()
        minus[:, :, [0, 2]] -= shift
        minus[:, :, [1, 3]] += shift
        model_real = EmpiricalModel(counts=plus, k_per_pair=np.full((4, 2), k))
        model_twin = EmpiricalModel(counts=minus, k_per_pair=np.full((4, 2), k))
        assert np.abs(plus / k - real.transitions).max() == approx(entry_dev, abs=1e-15)
        tv_err_cap = eps * (1 - 0.5) / (0.5 * 1.0)
        tv_hat = empirical_tv(model_real, model_twin, 0, 0)
        assert abs(tv_hat - 0.0) <= tv_err_cap + 1e-12
        est = empirical_tv_metric(pair, model_real, model_twin)
        true = tv_metric(pair)
        assert np.abs(est.d_tv - true.d_tv).max() <= eps + 1e-12
        # the construction is adversarial: the error cap is attained exactly
        assert np.abs(est.d_tv - true.d_tv).max() == approx(eps, abs=1e-12)

    def test_missing_samples_raise(self):
        mdp = random_mdp(3, 2, 0.9, seed=11)
        pair = MdpPair(real=mdp, twin=mdp)
        empty = EmpiricalModel(
            counts=np.zeros((3, 2, 3), dtype=np.int64), k_per_pair=np.zeros((3, 2), dtype=np.int64)
        )
        full = collect(MdpSampler(mdp), k=10, seed=0)
        with pytest.raises(NoSamples):
            empirical_tv_metric(pair, empty, full)


class TestCoverage:
    def test_deficits_listed_per_pair(self):
        counts = np.zeros((2, 2, 2), dtype=np.int64)
        counts[0, 0, 0] = 5
        counts[0, 1, 1] = 2
        model = EmpiricalModel(counts=counts, k_per_pair=counts.sum(axis=2))
        deficits = coverage_deficits(model, 5)
        assert (0, 1, 2, 5) in deficits
        assert (1, 0, 0, 5) in deficits
        assert (0, 0, 5, 5) not in deficits

    def test_require_coverage_raises_with_listing(self):
        counts = np.zeros((2, 1, 2), dtype=np.int64)
        counts[0, 0, 0] = 3
        model = EmpiricalModel(counts=counts, k_per_pair=counts.sum(axis=2))
        with pytest.raises(TraceCoverageError) as err:
            require_coverage(model, 3)
        assert err.value.deficits == [(1, 0, 0, 3)]

    def test_require_coverage_passes_through_when_met(self):
        counts = np.full((2, 1, 2), 2, dtype=np.int64)
        model = EmpiricalModel(counts=counts, k_per_pair=counts.sum(axis=2))
        assert require_coverage(model, 4) is model
