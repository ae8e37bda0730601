"""Exact public belief states: enumeration of H_S, values, entropy, variance.

This is the ground-truth oracle the sampler and estimators are checked
against. Enumeration walks deal space (assignments, then concrete deals)
because counts and voids characterize the consistent deals exactly;
:func:`enumerate_by_search` is the slow generic route kept for cross-checks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .assignment import deal_count, enumerate_assignments, iter_deals_in
from .errors import EnumerationCapError, IllegalActionError
from .game import Deal, History, Phase, apply_action, utility
from .observation import PublicState, extract_constraints, infostate_of, public_actions

DEFAULT_MEMBER_CAP = 2_000_000


@dataclass
class PublicBeliefState:
    public: PublicState
    histories: list[History]
    log_reach: np.ndarray
    probabilities: np.ndarray = field(init=False)
    total_unnormalized: float = field(init=False)

    def __post_init__(self) -> None:
        self.log_reach = np.asarray(self.log_reach, dtype=float)
        if len(self.histories) == 0:
            self.probabilities = np.zeros(0)
            self.total_unnormalized = 0.0
            self._index = {}
            return
        log_total = logsumexp(self.log_reach)
        self.probabilities = np.exp(self.log_reach - log_total)
        self.total_unnormalized = float(np.exp(log_total))
        self._index = {h.deal: i for i, h in enumerate(self.histories)}

    def __len__(self) -> int:
        return len(self.histories)

    @property
    def members(self) -> list[tuple[History, float]]:
        return list(zip(self.histories, self.probabilities.tolist()))

    @property
    def deals(self) -> list[Deal]:
        return [h.deal for h in self.histories]

    def index_of(self, deal: Deal) -> int:
        return self._index[deal]

    def __contains__(self, deal: Deal) -> bool:
        return deal in self._index


def enumerate_pbs(public: PublicState, policy, cap: int = DEFAULT_MEMBER_CAP) -> PublicBeliefState:
    """All histories consistent with ``public`` with their exact joint-range probabilities.

    Raises :class:`EnumerationCapError` if more than ``cap`` histories exist.
    """
    c = extract_constraints(public)
    histories: list[History] = []
    log_reach: list[float] = []
    if not c.conflicts:
        assignments = enumerate_assignments(c)
        total = sum(deal_count(a, c) for a in assignments)
        if total > cap:
            raise EnumerationCapError(f"{total} histories exceed the enumeration cap of {cap}")
        actions = public_actions(public)
        for a in assignments:
            for deal in iter_deals_in(a, c):
                history = History(public.config, deal, actions)
                lr = policy.log_reach(history)
                if np.isfinite(lr):
                    histories.append(history)
                    log_reach.append(lr)
    return PublicBeliefState(public, histories, np.array(log_reach))


def all_deals(config, trump_upcard: int):
    """Every deal with the given upcard (brute force; tiny decks only)."""
    rest = [c for c in range(config.deck_size) if c != trump_upcard]
    h = config.hand_size

    def split(cards, players_left):
        if players_left == 0:
            yield (), frozenset(cards)
            return
        for hand in itertools.combinations(cards, h):
            remaining = [c for c in cards if c not in hand]
            for hands, kitty in split(remaining, players_left - 1):
                yield (frozenset(hand),) + hands, kitty

    for hands, kitty in split(rest, config.num_players):
        yield Deal(hands=hands, trump_upcard=trump_upcard, kitty=kitty)


def enumerate_by_search(public: PublicState, policy) -> PublicBeliefState:
    """Generic filter: expand every chance outcome, keep the deals under which each
    public action in turn is legal and has positive probability."""
    actions = public_actions(public)
    frontier = [History(public.config, d, ()) for d in all_deals(public.config, public.trump_upcard)]
    for t in range(len(actions)):
        prefix = actions[: t + 1]
        survivors = []
        for h in frontier:
            candidate = History(h.config, h.deal, prefix)
            try:
                if np.isfinite(policy.log_reach(candidate)):
                    survivors.append(candidate)
            except IllegalActionError:
                pass
        frontier = survivors
    log_reach = np.array([policy.log_reach(h) for h in frontier])
    return PublicBeliefState(public, frontier, log_reach)


def _value(state, policy) -> np.ndarray:
    if state.phase is Phase.TERMINAL:
        return utility(state)
    dist = policy.distribution(infostate_of(state))
    total = np.zeros(state.config.num_players)
    for action, p in zip(dist.actions, dist.probs):
        if p > 0.0:
            total += p * _value(apply_action(state, action), policy)
    return total


def history_value(history: History, policy) -> np.ndarray:
    """Expected terminal utility below ``history`` under ``policy``, per player."""
    return _value(history.replay(), policy)


def member_values(pbs: PublicBeliefState, policy) -> np.ndarray:
    """``history_value`` of every member, shape ``(members, players)``."""
    players = pbs.public.config.num_players
    if not pbs.histories:
        return np.zeros((0, players))
    return np.array([history_value(h, policy) for h in pbs.histories])


def pbs_value(pbs: PublicBeliefState, policy, values: Optional[np.ndarray] = None) -> np.ndarray:
    if values is None:
        values = member_values(pbs, policy)
    return pbs.probabilities @ values


def pbs_entropy(pbs: PublicBeliefState) -> float:
    """Shannon entropy of the joint range, in bits."""
    p = pbs.probabilities[pbs.probabilities > 0]
    return float(-(p * np.log2(p)).sum()) if p.size else 0.0


def pbs_variance(pbs: PublicBeliefState, policy, player: int = 0, values: Optional[np.ndarray] = None) -> float:
    """Variance of one player's history value under the joint range."""
    if values is None:
        values = member_values(pbs, policy)
    if not len(pbs):
        return 0.0
    v = values[:, player]
    mean = pbs.probabilities @ v
    return float(pbs.probabilities @ (v - mean) ** 2)
