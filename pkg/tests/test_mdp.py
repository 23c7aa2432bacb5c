import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx

from twinmdp import (
    ActionOutOfRange,
    BadGamma,
    NonFiniteEntry,
    RowNotStochastic,
    StoppingRule,
    TabularMdp,
    greedy_policy,
    policy_evaluation,
    suboptimality,
    validate_mdp,
    value_iteration,
)

from oracles import enumerate_optimal_values, optimal_policies


def two_state(gamma=0.9, rewards=None, rows=None):
    rows = rows if rows is not None else [[0.5, 0.5], [1.0, 0.0]]
    rewards = rewards if rewards is not None else [[1.0], [1.0]]
    return TabularMdp(
        num_states=2,
        num_actions=1,
        gamma=gamma,
        rewards=rewards,
        transitions=np.array(rows)[:, None, :],
    )


class TestValidation:
    def test_accepts_stochastic_rows(self):
        mdp = two_state()
        assert validate_mdp(mdp) is not None
        assert mdp.transitions[0, 0] == approx([0.5, 0.5])

    def test_rejects_bad_row_sum(self):
        with pytest.raises(RowNotStochastic):
            two_state(rows=[[0.6, 0.6], [1.0, 0.0]])

    def test_rejects_boundary_gamma(self):
        for gamma in (0.0, 1.0):
            with pytest.raises(BadGamma):
                two_state(gamma=gamma)

    def test_rejects_nonfinite_reward(self):
        with pytest.raises(NonFiniteEntry):
            two_state(rewards=[[np.inf], [1.0]])

    def test_rejects_negative_probability(self):
        with pytest.raises(RowNotStochastic):
            two_state(rows=[[1.1, -0.1], [1.0, 0.0]])

    def test_renormalizes_small_drift(self):
        mdp = two_state(rows=[[0.5 + 4e-10, 0.5], [1.0, 0.0]])
        assert mdp.transitions[0, 0].sum() == approx(1.0, abs=1e-15)

    def test_arrays_are_read_only(self):
        mdp = two_state()
        with pytest.raises(ValueError):
            mdp.rewards[0, 0] = 2.0


class TestValueIteration:
    def test_constant_reward_geometric_sum(self, all_reward_one):
        v = value_iteration(all_reward_one, StoppingRule(delta=1e-10))
        assert v.values == approx(np.full(2, 10.0), abs=1e-9)

    def test_zero_reward_converges_in_one_step(self):
        mdp = two_state(rewards=[[0.0], [0.0]])
        v = value_iteration(mdp, StoppingRule(delta=1e-10))
        assert np.all(v.values == 0.0)
        assert v.residual == 0.0

    def test_fixed_step_count(self, all_reward_one):
        v = value_iteration(all_reward_one, StoppingRule(steps=3))
        # 1 + gamma + gamma^2 after three sweeps from zero
        assert v.values == approx(np.full(2, 1 + 0.9 + 0.81), abs=1e-12)

    def test_matches_policy_enumeration(self):
        from twinmdp import random_mdp

        mdp = random_mdp(3, 2, 0.9, seed=42)
        v = value_iteration(mdp, StoppingRule(delta=1e-10))
        oracle = enumerate_optimal_values(mdp)
        assert v.values == approx(oracle, abs=1e-8)

    @pytest.mark.parametrize("seed", range(12))
    def test_oracle_equivalence_small_instances(self, seed):
        from twinmdp import random_mdp

        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 4))
        mdp = random_mdp(n, m, float(rng.choice([0.5, 0.9])), seed=seed)
        v = value_iteration(mdp, StoppingRule(delta=1e-9))
        assert v.values == approx(enumerate_optimal_values(mdp), abs=1e-7)

    def test_contraction_of_sweeps(self):
        from twinmdp import random_mdp

        mdp = random_mdp(5, 2, 0.9, seed=7)
        diffs = []
        prev = np.zeros(5)
        for n in range(1, 12):
            v = value_iteration(mdp, StoppingRule(steps=n)).values
            diffs.append(np.max(np.abs(v - prev)))
            prev = v
        for before, after in zip(diffs, diffs[1:]):
            assert after <= 0.9 * before + 1e-12

    def test_value_range(self):
        from twinmdp import random_mdp

        for seed in range(5):
            mdp = random_mdp(4, 3, 0.9, seed=seed)
            v = value_iteration(mdp, StoppingRule(delta=1e-10))
            lo = mdp.rewards.min() / (1 - mdp.gamma) - v.residual
            hi = mdp.rewards.max() / (1 - mdp.gamma) + v.residual
            assert np.all(v.values >= lo - 1e-12)
            assert np.all(v.values <= hi + 1e-12)


class TestPolicyEvaluation:
    def test_constant_reward_any_policy(self, all_reward_one):
        v = policy_evaluation(all_reward_one, np.zeros(2, dtype=int))
        assert v.values == approx(np.full(2, 10.0), abs=1e-9)

    def test_deterministic_chain(self):
        # s0 -> s1 -> s1 with reward only at s0: V(s0) = 1, V(s1) = 0
        mdp = two_state(
            gamma=0.5,
            rewards=[[1.0], [0.0]],
            rows=[[0.0, 1.0], [0.0, 1.0]],
        )
        v = policy_evaluation(mdp, np.zeros(2, dtype=int))
        assert v.values == approx([1.0, 0.0], abs=1e-12)

    def test_satisfies_bellman_identity(self):
        from twinmdp import random_mdp

        mdp = random_mdp(4, 2, 0.9, seed=11)
        pi = np.array([1, 0, 1, 0])
        v = policy_evaluation(mdp, pi, StoppingRule(delta=1e-9))
        idx = np.arange(4)
        rhs = mdp.rewards[idx, pi] + mdp.gamma * mdp.transitions[idx, pi, :] @ v.values
        assert v.values == approx(rhs, abs=1e-9)
        inv = np.linalg.inv(np.eye(4) - mdp.gamma * mdp.transitions[idx, pi, :])
        assert v.values == approx(inv @ mdp.rewards[idx, pi], abs=1e-9)

    def test_fixed_steps_matches_truncated_sum(self, all_reward_one):
        v = policy_evaluation(all_reward_one, np.zeros(2, dtype=int), StoppingRule(steps=2))
        assert v.values == approx(np.full(2, 1.9), abs=1e-12)

    def test_rejects_out_of_range_action(self, all_reward_one):
        with pytest.raises(ActionOutOfRange):
            policy_evaluation(all_reward_one, np.array([0, 5]))


class TestGreedyPolicy:
    def test_zero_values_reduce_to_myopic(self):
        mdp = TabularMdp(
            num_states=2,
            num_actions=2,
            gamma=0.9,
            rewards=[[0.2, 0.7], [0.9, 0.1]],
            transitions=np.full((2, 2, 2), 0.5),
        )
        pi = greedy_policy(mdp, np.zeros(2))
        assert pi.tolist() == [1, 0]

    def test_ties_break_to_lowest_action(self):
        mdp = TabularMdp(
            num_states=2,
            num_actions=2,
            gamma=0.9,
            rewards=[[0.4, 0.4], [0.4, 0.4]],
            transitions=np.full((2, 2, 2), 0.5),
        )
        pi = greedy_policy(mdp, np.array([1.0, 2.0]))
        assert pi.tolist() == [0, 0]

    def test_greedy_on_converged_values_is_optimal(self):
        from twinmdp import random_mdp

        mdp = random_mdp(3, 2, 0.9, seed=42)
        v = value_iteration(mdp, StoppingRule(delta=1e-10))
        pi = greedy_policy(mdp, v)
        candidates = optimal_policies(mdp, tol=1e-8)
        assert any(np.array_equal(pi, cand) for cand in candidates)

    def test_suboptimality_bounded_by_residual(self):
        from twinmdp import random_mdp

        for seed in range(5):
            mdp = random_mdp(4, 3, 0.9, seed=seed)
            v = value_iteration(mdp, StoppingRule(delta=1e-6))
            pi = greedy_policy(mdp, v)
            bound = 2 * mdp.gamma * v.residual / (1 - mdp.gamma)
            assert suboptimality(mdp, pi) <= bound + 1e-9


class TestSuboptimality:
    def test_optimal_policy_has_zero_regret(self):
        from twinmdp import random_mdp

        mdp = random_mdp(3, 2, 0.9, seed=42)
        pi = greedy_policy(mdp, value_iteration(mdp))
        assert suboptimality(mdp, pi) == approx(0.0, abs=1e-8)

    def test_constant_reward_makes_every_policy_optimal(self, all_reward_one):
        assert suboptimality(all_reward_one, np.zeros(2, dtype=int)) == approx(0.0, abs=1e-8)

    def test_antigreedy_gap_matches_enumeration(self):
        from twinmdp import random_mdp

        mdp = random_mdp(3, 2, 0.9, seed=42)
        v = value_iteration(mdp, StoppingRule(delta=1e-10))
        s, a = mdp.shape
        q = mdp.rewards + mdp.gamma * (mdp.transitions.reshape(s * a, s) @ v.values).reshape(s, a)
        pi = np.argmin(q, axis=1)
        oracle_v = enumerate_optimal_values(mdp)
        idx = np.arange(s)
        v_pi = np.linalg.solve(np.eye(s) - mdp.gamma * mdp.transitions[idx, pi, :], mdp.rewards[idx, pi])
        assert suboptimality(mdp, pi) == approx(np.max(oracle_v - v_pi), abs=1e-7)


class TestStoppingRule:
    def test_requires_exactly_one_mode(self):
        with pytest.raises(ValueError):
            StoppingRule()
        with pytest.raises(ValueError):
            StoppingRule(steps=3, delta=1e-6)

    @given(st.integers(min_value=-3, max_value=0))
    def test_rejects_nonpositive_steps(self, n):
        with pytest.raises(ValueError):
            StoppingRule(steps=n)


@settings(deadline=None, max_examples=25)
@given(
    seed=st.integers(min_value=0, max_value=10_000),
    gamma=st.sampled_from([0.3, 0.5, 0.9]),
)
def test_value_iteration_certificate_is_sound(seed, gamma):
    # the residual really bounds the distance to the fixed point
    from twinmdp import random_mdp

    mdp = random_mdp(3, 2, gamma, seed=seed)
    coarse = value_iteration(mdp, StoppingRule(steps=3))
    tight = value_iteration(mdp, StoppingRule(delta=1e-12))
    assert np.max(np.abs(coarse.values - tight.values)) <= coarse.residual + 1e-10
