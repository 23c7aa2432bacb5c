import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from twinmdp import MdpPair, TabularMdp, perturb, random_mdp


def make_pair(seed: int) -> MdpPair:
    """Seeded (real, twin) pair mirroring the verification corpus.

    Sizes cycle over |S| in 3..8 and |A| in {2, 3}, gamma alternates
    between 0.5 and 0.9, and the twin is either an independent draw or a
    noisy perturbation of the real model.
    """
    rng = np.random.default_rng([71, seed])
    n_states = int(rng.integers(3, 9))
    n_actions = int(rng.integers(2, 4))
    gamma = 0.9 if seed % 2 else 0.5
    real = random_mdp(n_states, n_actions, gamma, sparsity=1.0, seed=int(rng.integers(2**31)))
    if seed % 3 == 0:
        twin = random_mdp(n_states, n_actions, gamma, sparsity=1.0, seed=int(rng.integers(2**31)))
    else:
        twin = perturb(
            real,
            reward_noise=float(rng.uniform(0.0, 0.5)),
            transition_noise=float(rng.uniform(0.0, 0.5)),
            seed=int(rng.integers(2**31)),
        )
    return MdpPair(real=real, twin=twin)


@pytest.fixture(scope="session")
def all_reward_one() -> TabularMdp:
    transitions = np.array([[[0.5, 0.5]], [[1.0, 0.0]]])
    rewards = np.ones((2, 1))
    return TabularMdp(num_states=2, num_actions=1, gamma=0.9, rewards=rewards, transitions=transitions)
