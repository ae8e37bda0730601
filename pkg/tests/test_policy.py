import math

import numpy as np
import pytest

from pbsfilter.enumeration import enumerate_by_search
from pbsfilter.errors import ConfigurationError
from pbsfilter.game import GameConfig, History, Phase, apply_action, iter_decisions, new_game, utility
from pbsfilter.observation import InfoStateKey, PublicState, infostate_of
from pbsfilter.policy import (
    BiasedRandomPolicy,
    BiasedRandomSpec,
    TabularQSpec,
    UniformPolicy,
    UniformSpec,
    load_q_policy,
    make_policy,
    policy_spec_from_json,
    save_q_policy,
    train_q_policies,
    unnormalized_reach,
)

from support import SMALL, play_out, small_instances


def _key_with_actions(k):
    """An infostate with ``k`` legal actions: the opening bid with hand size ``k - 1``."""
    return infostate_of(new_game(GameConfig(2, 2, 4, k - 1), 0))


def _keys_along(policy, seeds=range(20), config=SMALL):
    """Every infostate visited while self-playing ``policy`` from a few deals."""
    for seed in seeds:
        rng = np.random.default_rng(seed)
        state = new_game(config, seed)
        while state.phase is not Phase.TERMINAL:
            key = infostate_of(state)
            yield key
            state = apply_action(state, policy.distribution(key).sample(rng))


def test_bias_arithmetic():
    key = _key_with_actions(4)
    dist = BiasedRandomPolicy(0.9, 0).distribution(key)
    probs = sorted(dist.probs, reverse=True)
    assert probs[0] == pytest.approx(0.9)
    assert probs[1:] == pytest.approx([1 / 30] * 3)
    assert sum(dist.probs) == pytest.approx(1.0, abs=1e-12)


def test_zero_bias_is_uniform():
    for k in (2, 3, 4):
        dist = BiasedRandomPolicy(0.0, 3).distribution(_key_with_actions(k))
        assert dist.probs == pytest.approx([1 / k] * k)


def test_biased_policy_is_a_pure_function():
    key = _key_with_actions(4)
    a = BiasedRandomPolicy(0.7, 5)
    assert a.distribution(key) == a.distribution(key)
    assert BiasedRandomPolicy(0.7, 5).distribution(key) == a.distribution(key)
    assert BiasedRandomPolicy(0.7, 5).favored_action(key) == a.favored_action(key)


def test_favored_action_varies_with_seed():
    key = _key_with_actions(4)
    assert len({BiasedRandomPolicy(0.7, s).favored_action(key) for s in range(40)}) > 1


@pytest.mark.parametrize("bias", [-0.1, 1.0])
def test_bias_range(bias):
    with pytest.raises(ConfigurationError):
        BiasedRandomPolicy(bias)


def test_single_action_gets_full_mass():
    for policy in (BiasedRandomPolicy(0.9), UniformPolicy()):
        for key in _keys_along(policy, range(5)):
            dist = policy.distribution(key)
            if len(dist.actions) == 1:
                assert dist.probs == (1.0,)


def test_full_support_and_normalization():
    for policy in (BiasedRandomPolicy(0.9, 1), UniformPolicy()):
        for key in _keys_along(policy):
            dist = policy.distribution(key)
            assert dist.actions == key.legal_actions()
            assert min(dist.probs) > 0
            assert abs(sum(dist.probs) - 1.0) < 1e-12


def test_reach_of_empty_history_is_zero():
    deal = new_game(SMALL, 0).deal
    assert unnormalized_reach(History(SMALL, deal, ()), UniformPolicy()) == 0.0


def test_uniform_reach_is_product_of_uniforms():
    rng = np.random.default_rng(0)
    state = play_out(SMALL, new_game(SMALL, 9).deal, UniformPolicy(), rng)
    history = History(SMALL, state.deal, state.actions)
    expected = -sum(math.log(len(d.legal)) for d in iter_decisions(SMALL, state.deal, state.actions))
    assert unnormalized_reach(history, UniformPolicy()) == pytest.approx(expected, abs=1e-12)
    first3 = History(SMALL, state.deal, state.actions[:3])
    assert unnormalized_reach(first3, UniformPolicy()) == pytest.approx(math.log(1 / 27))


def test_normalized_reach_matches_search_oracle():
    for inst, policy, pbs in small_instances(4, 400):
        oracle = enumerate_by_search(inst.public, policy)
        assert set(oracle.deals) == set(pbs.deals)
        lr = np.array([unnormalized_reach(h, policy) for h in pbs.histories])
        mine = np.exp(lr - lr.max()) / np.exp(lr - lr.max()).sum()
        for deal, p in zip(pbs.deals, mine):
            assert p == pytest.approx(oracle.probabilities[oracle.index_of(deal)], rel=1e-12)


def test_policy_depends_on_infostate_only():
    policy = BiasedRandomPolicy(0.7, 2)
    key = _key_with_actions(3)
    twin = InfoStateKey(PublicState.from_json(key.public.to_json()), key.player, frozenset(key.hand))
    fresh = BiasedRandomPolicy(0.7, 2)
    assert fresh.distribution(twin) == policy.distribution(key)


def test_spec_json_round_trip():
    for spec in (UniformSpec(), BiasedRandomSpec(0.5, 4), TabularQSpec(episodes=10, seed=2)):
        assert policy_spec_from_json(spec.to_json()) == spec
    with pytest.raises(ConfigurationError):
        policy_spec_from_json({"type": "mystery"})


def test_untrained_q_policy_is_uniform():
    policy = train_q_policies(SMALL, TabularQSpec(episodes=0))
    for key in _keys_along(policy, range(5)):
        k = len(key.legal_actions())
        assert policy.distribution(key).probs == pytest.approx([1 / k] * k)


def test_q_policy_keeps_full_support():
    policy = train_q_policies(SMALL, TabularQSpec(episodes=2000, seed=1))
    for key in _keys_along(policy, range(10)):
        dist = policy.distribution(key)
        assert min(dist.probs) >= policy.support_floor / len(dist.probs) - 1e-15
        assert abs(sum(dist.probs) - 1.0) < 1e-12
        if len(dist.actions) == 1:
            assert dist.probs == (1.0,)


def test_q_tables_round_trip(tmp_path):
    policy = train_q_policies(SMALL, TabularQSpec(episodes=500, seed=3))
    path = tmp_path / "q.bin"
    save_q_policy(path, policy)
    loaded = load_q_policy(path, SMALL)
    for key in _keys_along(policy, range(5)):
        assert loaded.distribution(key) == policy.distribution(key)
    with pytest.raises(ConfigurationError):
        load_q_policy(path, GameConfig(3, 3, 4, 3))
    (tmp_path / "junk.bin").write_bytes(b"not a table")
    with pytest.raises(ConfigurationError):
        load_q_policy(tmp_path / "junk.bin")


def test_q_training_is_seeded():
    a = train_q_policies(SMALL, TabularQSpec(episodes=300, seed=9))
    b = train_q_policies(SMALL, TabularQSpec(episodes=300, seed=9))
    assert a.tables == b.tables


def _self_play_returns(policy, games, seed):
    rng = np.random.default_rng(seed)
    out = np.empty(games)
    for g in range(games):
        deal = new_game(SMALL, int(rng.integers(2**32))).deal
        out[g] = utility(play_out(SMALL, deal, policy, rng)).mean()
    return out


def test_trained_policy_beats_uniform():
    trained = train_q_policies(SMALL, TabularQSpec(episodes=50_000, seed=0))
    games = 10_000
    q = _self_play_returns(trained, games, 1)
    u = _self_play_returns(UniformPolicy(), games, 1)
    sigma = math.sqrt(q.var(ddof=1) / games + u.var(ddof=1) / games)
    assert q.mean() >= u.mean() - 3 * sigma


def test_make_policy_dispatch():
    assert isinstance(make_policy(UniformSpec(), SMALL), UniformPolicy)
    assert make_policy(BiasedRandomSpec(0.3, 1), SMALL).bias == 0.3
