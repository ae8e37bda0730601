import numpy as np
import pytest

from pbsfilter.enumeration import all_deals, enumerate_pbs
from pbsfilter.errors import InconsistentPublicStateError
from pbsfilter.game import Deal, History, new_game
from pbsfilter.observation import (
    PublicState,
    extract_constraints,
    infostate_of,
    public_actions,
    public_state_of,
    verify_consistency,
)
from pbsfilter.policy import BiasedRandomPolicy, UniformPolicy

from support import SMALL, unique_assignment_constraints, unique_assignment_public, play_out, random_public_state, small_instances


class CountingPolicy(UniformPolicy):
    def __init__(self):
        super().__init__()
        self.calls = 0

    def distribution(self, key):
        self.calls += 1
        return super().distribution(key)


@pytest.fixture(scope="module")
def instances():
    return small_instances(6, 1000)


def _satisfies(deal, c):
    """Deal agrees with forced cards and void marks (the constraint set, checked directly)."""
    config = c.config
    for i, hand in enumerate(deal.hands):
        if not c.forced_cards[i] <= hand:
            return False
        for card in hand - c.forced_cards[i]:
            if c.void_mask[i][config.suit_of(card)]:
                return False
    return True


def test_fresh_game_projection():
    public = public_state_of(new_game(SMALL, 0))
    assert public.bids == () and public.plays == ()
    assert public.hand_counts == (2, 2, 2)


def test_one_trick_has_three_plays():
    state = play_out(SMALL, new_game(SMALL, 5).deal, UniformPolicy(), np.random.default_rng(1), steps=6)
    assert len(public_state_of(state).plays) == 3
    assert public_state_of(state).hand_counts == (1, 1, 1)


def test_no_plays_no_constraints():
    public = public_state_of(new_game(SMALL, 2))
    c = extract_constraints(public)
    assert not any(any(row) for row in c.void_mask)
    pooled = sorted(card for pool in c.unknown_pool for card in pool)
    assert pooled == sorted(set(range(SMALL.deck_size)) - {public.trump_upcard})
    assert c.unknown_per_row == (2, 2, 2, 1)


def test_failure_to_follow_marks_void():
    # trump is card 7 (suit 1); player 0 leads suit 0, player 1 discards suit 1
    public = PublicState(SMALL, 7, (0, 0, 0), ((0, 0), (1, 4)))
    c = extract_constraints(public)
    assert c.void_mask[1][0] and not c.void_mask[1][1]
    assert not any(c.void_mask[0]) and not any(c.void_mask[2])
    assert not any(c.void_mask[c.kitty_row])
    assert c.forced_cards[1] == frozenset({4})


def test_unique_assignment_summary():
    c = extract_constraints(unique_assignment_public())
    ref = unique_assignment_constraints()
    assert c.pool_sizes == ref.pool_sizes == (3, 1, 2)
    assert c.unknown_per_row == (3, 3, 0)
    assert c.void_mask[:2] == ref.void_mask
    assert c.rows[-1] == "kitty"


@pytest.mark.parametrize(
    "public",
    [
        PublicState(SMALL, 7, (0, 0), ((0, 0),)),  # play before bidding ends
        PublicState(SMALL, 7, (0, 0, 3)),  # bid above hand size
        PublicState(SMALL, 7, (0, 0, 0), ((1, 0),)),  # out of turn
        PublicState(SMALL, 7, (0, 0, 0), ((0, 0), (1, 0))),  # card twice
        PublicState(SMALL, 7, (0, 0, 0), ((0, 7),)),  # the upcard
    ],
)
def test_malformed_public_states_raise(public):
    with pytest.raises(InconsistentPublicStateError):
        extract_constraints(public)


def test_malformed_json_raises():
    with pytest.raises(InconsistentPublicStateError):
        PublicState.from_json({"config": SMALL.to_json(), "bids": [0]})


def test_public_state_json_round_trip():
    public = unique_assignment_public()
    assert PublicState.from_json(public.to_json()) == public


def test_voids_are_monotone():
    rng = np.random.default_rng(0)
    for _ in range(200):
        public = random_public_state(SMALL, rng)
        try:
            final = extract_constraints(public).void_mask
        except InconsistentPublicStateError:
            continue
        for t in range(len(public.plays)):
            early = extract_constraints(PublicState(SMALL, public.trump_upcard, public.bids, public.plays[:t])).void_mask
            assert all(not e or f for er, fr in zip(early, final) for e, f in zip(er, fr))


def test_members_share_public_state_and_respect_voids(instances):
    for inst, policy, pbs in instances:
        c = extract_constraints(inst.public)
        for history in pbs.histories:
            assert public_state_of(history) == inst.public
            assert _satisfies(history.deal, c)


def test_constraints_characterize_members(instances):
    # every deal meeting the counts, forced cards and voids is in H_S
    for inst, policy, pbs in instances:
        c = extract_constraints(inst.public)
        expected = {d for d in all_deals(inst.config, inst.public.trump_upcard) if _satisfies(d, c)}
        assert expected == set(pbs.deals)


def test_generating_history_is_consistent():
    policy = BiasedRandomPolicy(0.7, 0)
    rng = np.random.default_rng(3)
    state = play_out(SMALL, new_game(SMALL, 8).deal, policy, rng, steps=9)
    history = History(SMALL, state.deal, state.actions)
    assert verify_consistency(public_state_of(state), history, policy)


def test_void_violation_is_inconsistent():
    # player 1 shows void in suit 0; give them the unplayed suit-0 card instead
    public = PublicState(SMALL, 7, (0, 0, 0), ((0, 0), (1, 4), (2, 1)))
    good = Deal((frozenset({0, 2}), frozenset({4, 5}), frozenset({1, 3})), 7, frozenset({6}))
    bad = Deal((frozenset({0, 5}), frozenset({4, 2}), frozenset({1, 3})), 7, frozenset({6}))
    policy = UniformPolicy()
    assert verify_consistency(public, History(SMALL, good, public_actions(public)), policy)
    assert not verify_consistency(public, History(SMALL, bad, public_actions(public)), policy)


def test_consistency_agrees_with_enumeration(instances):
    for inst, policy, pbs in instances[:3]:
        members = set(pbs.deals)
        actions = public_actions(inst.public)
        for deal in all_deals(inst.config, inst.public.trump_upcard):
            assert verify_consistency(inst.public, History(inst.config, deal, actions), policy) == (deal in members)


def test_consistency_cost_is_one_policy_call_per_decision():
    rng = np.random.default_rng(0)
    for steps in (3, 6, 9):
        state = play_out(SMALL, new_game(SMALL, steps).deal, UniformPolicy(), rng, steps=steps)
        policy = CountingPolicy()
        assert verify_consistency(public_state_of(state), History(SMALL, state.deal, state.actions), policy)
        assert policy.calls == steps


def test_infostate_hand_is_private():
    state = play_out(SMALL, new_game(SMALL, 4).deal, UniformPolicy(), np.random.default_rng(0), steps=7)
    key = infostate_of(state)
    placed = {c for _, c in key.public.plays} | {key.public.trump_upcard}
    assert key.hand.isdisjoint(placed)
    assert key.player == state.to_act


def test_enumeration_empty_on_conflict():
    # player 1 trumps the led suit 0, wins, then leads suit 0
    public = PublicState(SMALL, 7, (0, 0, 0), ((0, 0), (1, 4), (2, 1), (1, 2)))
    c = extract_constraints(public)
    assert c.conflicts
    assert len(enumerate_pbs(public, UniformPolicy())) == 0
