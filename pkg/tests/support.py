"""Shared builders and brute-force oracles for the test suite."""

from __future__ import annotations

import itertools
import math
import numpy as np

from pbsfilter.enumeration import enumerate_pbs
from pbsfilter.estimation import generate_instance
from pbsfilter.game import (
    GameConfig,
    Phase,
    apply_action,
    initial_state,
    legal_actions,
    trick_winner,
    utility,
)
from pbsfilter.observation import ConstraintSummary, PublicState, infostate_of
from pbsfilter.policy import BiasedRandomSpec, make_policy

SMALL = GameConfig(3, 2, 4, 2)
MID = GameConfig(3, 3, 4, 3)
TINY = GameConfig(2, 1, 3, 1)


def unique_assignment_constraints() -> ConstraintSummary:
    """Two rows needing 3 cards each, pools of sizes (3, 1, 2); row 0 void in
    suit 2, row 1 void in suit 1; no kitty row."""
    return ConstraintSummary(
        unknown_per_row=(3, 3),
        unknown_pool=((0, 1, 2), (3,), (4, 5)),
        void_mask=((False, False, True), (False, True, False)),
        forced_cards=(frozenset(), frozenset()),
        has_kitty=False,
    )


# a self-played public state (seed 784, uniform policy, 4 tricks) whose
# constraints are exactly the single-assignment pattern above, plus a zero-size kitty row
UNIQUE_ASSIGNMENT_PUBLIC = {
    "config": {"players": 2, "suits": 3, "ranks": 5, "hand_size": 7, "bonus": 10},
    "trump": 3,
    "bids": [7, 2],
    "plays": [[0, 8], [1, 9], [1, 11], [0, 2], [0, 5], [1, 12], [0, 6], [1, 10]],
}


def unique_assignment_public() -> PublicState:
    return PublicState.from_json(UNIQUE_ASSIGNMENT_PUBLIC)


def small_instances(count, max_size, bias=0.7, configs=(SMALL, MID), tricks=(1, 2), min_size=2, seeds=range(10_000)):
    """First ``count`` generated instances with ``min_size <= |H_S| <= max_size``,
    as ``(instance, policy, pbs)`` triples, cycling through configs and trick counts."""
    out = []
    combos = [(c, t) for c in configs for t in tricks if t <= c.hand_size]
    policies = {c: make_policy(BiasedRandomSpec(bias, 0), c) for c in configs}
    for seed in seeds:
        config, t = combos[seed % len(combos)]
        policy = policies[config]
        inst = generate_instance(config, BiasedRandomSpec(bias, 0), t, seed, policy)
        pbs = enumerate_pbs(inst.public, policy)
        if min_size <= len(pbs) <= max_size:
            out.append((inst, policy, pbs))
            if len(out) == count:
                break
    return out


def random_public_state(config: GameConfig, rng: np.random.Generator, max_plays=None) -> PublicState:
    """Turn-order-respecting public state with arbitrary (possibly contradictory) plays."""
    n = config.num_players
    trump = int(rng.integers(config.deck_size))
    bids = tuple(int(b) for b in rng.integers(0, config.hand_size + 1, size=n))
    total = n * config.hand_size
    limit = total if max_plays is None else min(total, max_plays)
    num_plays = int(rng.integers(0, limit + 1))
    free = [c for c in range(config.deck_size) if c != trump]
    rng.shuffle(free)
    plays = []
    leader = 0
    trick = []
    for card in free[:num_plays]:
        player = (leader + len(trick)) % n
        plays.append((player, int(card)))
        trick.append((player, int(card)))
        if len(trick) == n:
            leader = trick_winner(config, config.suit_of(trump), trick)
            trick = []
    return PublicState(config, trump, bids, tuple(plays))


def play_out(config, deal, policy, rng, steps=None):
    """Self-play from ``deal``; returns the final state."""
    state = initial_state(config, deal)
    taken = 0
    while state.phase is not Phase.TERMINAL and (steps is None or taken < steps):
        state = apply_action(state, policy.distribution(infostate_of(state)).sample(rng))
        taken += 1
    return state


def tree_value(state, policy) -> np.ndarray:
    """Expected terminal utility by explicit recursion over world states."""
    if state.phase is Phase.TERMINAL:
        return utility(state)
    dist = policy.distribution(infostate_of(state))
    total = np.zeros(state.config.num_players)
    for action in legal_actions(state):
        p = dist.prob(action)
        if p > 0:
            total += p * tree_value(apply_action(state, action), policy)
    return total


def brute_force_max_flow(num_vertices, edges, source, sink) -> int:
    """Largest conserving integral flow by trying every assignment of edge flows."""
    best = 0
    for flows in itertools.product(*[range(cap + 1) for _, _, cap in edges]):
        balance = [0] * num_vertices
        for (u, v, _), f in zip(edges, flows):
            balance[u] -= f
            balance[v] += f
        if all(b == 0 for i, b in enumerate(balance) if i not in (source, sink)):
            best = max(best, balance[sink])
    return best


def total_variation(counts, pbs) -> float:
    n = sum(counts.values())
    return 0.5 * sum(abs(counts.get(d, 0) / n - p) for d, p in zip(pbs.deals, pbs.probabilities))


def sem(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.std(ddof=1) / math.sqrt(len(values)))

