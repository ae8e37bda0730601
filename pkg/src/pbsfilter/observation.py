"""Public states, information-state keys, and deal constraints.

Everything here is a pure function of public observations. The constraint
summary produced by :func:`extract_constraints` is what the construction,
assignment, and enumeration modules work from.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import ConfigurationError, IllegalActionError, InconsistentPublicStateError
from .game import (
    Action,
    Bid,
    GameConfig,
    History,
    Play,
    WorldState,
    legal_from_hand,
    trick_winner,
)


@dataclass(frozen=True)
class PublicState:
    """The public observation sequence: upcard, bids so far, and plays so far."""

    config: GameConfig
    trump_upcard: int
    bids: tuple[int, ...] = ()
    plays: tuple[tuple[int, int], ...] = ()
    hand_counts: tuple[int, ...] = field(init=False, compare=False)

    def __post_init__(self) -> None:
        counts = [self.config.hand_size] * self.config.num_players
        for player, _ in self.plays:
            if 0 <= player < len(counts):
                counts[player] -= 1
        object.__setattr__(self, "hand_counts", tuple(counts))

    @property
    def trump_suit(self) -> int:
        return self.config.suit_of(self.trump_upcard)

    @property
    def bidding(self) -> bool:
        return len(self.bids) < self.config.num_players

    @property
    def led_suit(self) -> Optional[int]:
        """Suit led in the trick in progress, or None if a trick is about to start."""
        in_trick = len(self.plays) % self.config.num_players
        if in_trick == 0:
            return None
        return self.config.suit_of(self.plays[-in_trick][1])

    def actions(self) -> tuple[tuple[int, Action], ...]:
        """The public decisions as ``(actor, action)`` pairs, bids first."""
        return public_actions(self)

    def encode(self) -> str:
        bids = ".".join(map(str, self.bids))
        plays = ".".join(f"{p}:{c}" for p, c in self.plays)
        cfg = self.config
        return (
            f"{cfg.num_players},{cfg.num_suits},{cfg.num_ranks},{cfg.hand_size}"
            f"|t{self.trump_upcard}|b{bids}|p{plays}"
        )

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "trump": self.trump_upcard,
            "bids": list(self.bids),
            "plays": [[p, c] for p, c in self.plays],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PublicState":
        try:
            config = GameConfig.from_json(obj["config"])
            plays = tuple((int(p), int(c)) for p, c in obj.get("plays", []))
            return cls(config, int(obj["trump"]), tuple(int(b) for b in obj.get("bids", [])), plays)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise InconsistentPublicStateError(f"malformed public state {obj!r}") from exc


def public_actions(public: PublicState) -> tuple[tuple[int, Action], ...]:
    bids = tuple((i, Bid(b)) for i, b in enumerate(public.bids))
    return bids + tuple((p, Play(c)) for p, c in public.plays)


def public_state_from_actions(
    config: GameConfig, trump_upcard: int, actions: Sequence[tuple[int, Action]]
) -> PublicState:
    bids = tuple(a.count for _, a in actions if isinstance(a, Bid))
    plays = tuple((p, a.card) for p, a in actions if isinstance(a, Play))
    return PublicState(config, trump_upcard, bids, plays)


@functools.lru_cache(maxsize=4096)
def public_prefixes(config: GameConfig, trump_upcard: int, actions: tuple) -> tuple[PublicState, ...]:
    """Public state before each decision of ``actions`` (shared by every deal of a PBS)."""
    return tuple(public_state_from_actions(config, trump_upcard, actions[:t]) for t in range(len(actions)))


def public_state_of(obj: History | WorldState) -> PublicState:
    """Project a history (or the world state it leads to) onto its public observations."""
    return public_state_from_actions(obj.config, obj.deal.trump_upcard, obj.actions)


@dataclass(frozen=True)
class InfoStateKey:
    """Everything one player knows: the public state plus their current hand."""

    public: PublicState
    player: int
    hand: frozenset

    def legal_actions(self) -> tuple:
        return legal_from_hand(self.public.config, self.hand, self.public.bidding, self.public.led_suit)

    def encode(self) -> str:
        hand = ".".join(map(str, sorted(self.hand)))
        return f"{self.public.encode()}|i{self.player}|h{hand}"


def verify_consistency(public: PublicState, history: History, policy) -> bool:
    """Membership test for the filter relation: same public state and positive reach.

    Costs one policy evaluation per decision in ``history``.
    """
    if history.config != public.config or history.deal.trump_upcard != public.trump_upcard:
        return False
    if history.actions != public_actions(public):
        return False
    try:
        history.deal.validate(history.config)
        log_reach = policy.log_reach(history)
    except (IllegalActionError, ConfigurationError):
        return False
    return math.isfinite(log_reach)


@dataclass(frozen=True)
class ConstraintSummary:
    """What the public observations imply about where the unknown cards are.

    Rows are holders: one per player, then the kitty (when ``has_kitty``).
    ``unknown_pool[j]`` lists the cards of suit ``j`` that have not been
    placed publicly; ``void_mask[i][j]`` forbids row ``i`` from holding any
    of them. ``conflicts`` records plays that contradict an earlier void,
    which makes the public state unreachable regardless of the deal.
    """

    unknown_per_row: tuple[int, ...]
    unknown_pool: tuple[tuple[int, ...], ...]
    void_mask: tuple[tuple[bool, ...], ...]
    forced_cards: tuple[frozenset, ...] = ()
    has_kitty: bool = True
    config: Optional[GameConfig] = None
    trump_upcard: Optional[int] = None
    conflicts: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if len(self.void_mask) != len(self.unknown_per_row):
            raise ValueError("void_mask needs one row per holder")
        if any(len(row) != len(self.unknown_pool) for row in self.void_mask):
            raise ValueError("void_mask needs one column per suit")
        if sum(self.unknown_per_row) != sum(len(p) for p in self.unknown_pool):
            raise InconsistentPublicStateError("row totals and unknown pool sizes disagree")
        if self.has_kitty and any(self.void_mask[-1]):
            raise ValueError("the kitty row cannot be void in any suit")

    @property
    def num_rows(self) -> int:
        return len(self.unknown_per_row)

    @property
    def num_suits(self) -> int:
        return len(self.unknown_pool)

    @property
    def pool_sizes(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.unknown_pool)

    @property
    def total_unknown(self) -> int:
        return sum(self.unknown_per_row)

    @property
    def kitty_row(self) -> Optional[int]:
        return self.num_rows - 1 if self.has_kitty else None

    @property
    def rows(self) -> tuple[str, ...]:
        labels = [f"player{i}" for i in range(self.num_rows - int(self.has_kitty))]
        return tuple(labels + (["kitty"] if self.has_kitty else []))


def extract_constraints(public: PublicState) -> ConstraintSummary:
    """Single pass over the public observations.

    Validates the observation structure (turn order, trick leaders, card
    uniqueness) and records voids: a player who does not follow the led
    suit holds none of it from then on.
    """
    config = public.config
    n = config.num_players
    if not 0 <= public.trump_upcard < config.deck_size:
        raise InconsistentPublicStateError("trump upcard is not a card of this deck")
    if len(public.bids) > n:
        raise InconsistentPublicStateError("more bids than players")
    if any(not 0 <= b <= config.hand_size for b in public.bids):
        raise InconsistentPublicStateError("bid out of range")
    if public.plays and len(public.bids) < n:
        raise InconsistentPublicStateError("cards played before bidding finished")
    if len(public.plays) > n * config.hand_size:
        raise InconsistentPublicStateError("more plays than cards dealt")

    trump = config.suit_of(public.trump_upcard)
    void = [[False] * config.num_suits for _ in range(n)]
    forced: list[set[int]] = [set() for _ in range(n)]
    conflicts: list[tuple[int, int]] = []
    placed = {public.trump_upcard}
    leader = 0
    trick: list[tuple[int, int]] = []
    for player, card in public.plays:
        expected = (leader + len(trick)) % n
        if player != expected:
            raise InconsistentPublicStateError(f"player {player} played out of turn (expected {expected})")
        if not 0 <= card < config.deck_size or card in placed:
            raise InconsistentPublicStateError(f"card {card} cannot be played here")
        placed.add(card)
        suit = config.suit_of(card)
        if void[player][suit]:
            conflicts.append((player, card))
        if trick:
            led = config.suit_of(trick[0][1])
            if suit != led:
                void[player][led] = True
        forced[player].add(card)
        trick.append((player, card))
        if len(trick) == n:
            leader = trick_winner(config, trump, trick)
            trick = []

    pool = tuple(
        tuple(c for c in config.cards_of_suit(s) if c not in placed) for s in range(config.num_suits)
    )
    per_row = tuple(public.hand_counts) + (config.kitty_size,)
    void_mask = tuple(tuple(row) for row in void) + ((False,) * config.num_suits,)
    return ConstraintSummary(
        unknown_per_row=per_row,
        unknown_pool=pool,
        void_mask=void_mask,
        forced_cards=tuple(frozenset(f) for f in forced),
        has_kitty=True,
        config=config,
        trump_upcard=public.trump_upcard,
        conflicts=tuple(conflicts),
    )


def infostate_of(state: WorldState, player: Optional[int] = None) -> InfoStateKey:
    """Information state of ``player`` (default: the player to act) in ``state``."""
    player = state.to_act if player is None else player
    return InfoStateKey(public_state_of(state), player, state.hands[player])
