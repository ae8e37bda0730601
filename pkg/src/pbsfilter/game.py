"""Oh Hell engine: configuration, cards, deals, world states, and scoring.

Cards are plain integers ``suit * num_ranks + rank`` everywhere inside the
package; :class:`Card` exists for readability at the edges.

Rules implemented
-----------------
* One card is turned up after the deal; its suit is trump for the hand.
* Undealt cards other than the upcard form a hidden kitty.
* Players 0..N-1 bid once each, in order, any value in ``0..hand_size``.
* Player 0 leads the first trick, the winner of each trick leads the next.
  Following suit is mandatory when possible.
* A trick goes to the highest trump played, otherwise to the highest card
  of the led suit.
* Score: tricks won, plus ``scoring_bonus`` when the bid is made exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import ConfigurationError, IllegalActionError


@dataclass(frozen=True)
class GameConfig:
    num_players: int
    num_suits: int
    num_ranks: int
    hand_size: int
    scoring_bonus: int = 10

    def __post_init__(self) -> None:
        for name, low in (("num_players", 2), ("num_suits", 1), ("num_ranks", 2), ("hand_size", 1)):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < low:
                raise ConfigurationError(f"{name} must be an integer >= {low}, got {value!r}")
        if self.num_players * self.hand_size > self.deck_size - 1:
            raise ConfigurationError(
                f"{self.num_players} players x {self.hand_size} cards does not fit a "
                f"{self.deck_size}-card deck with one trump upcard"
            )

    @property
    def deck_size(self) -> int:
        return self.num_suits * self.num_ranks

    @property
    def kitty_size(self) -> int:
        return self.deck_size - self.num_players * self.hand_size - 1

    def suit_of(self, card: int) -> int:
        return card // self.num_ranks

    def rank_of(self, card: int) -> int:
        return card % self.num_ranks

    def cards_of_suit(self, suit: int) -> range:
        return range(suit * self.num_ranks, (suit + 1) * self.num_ranks)

    def to_json(self) -> dict:
        return {
            "players": self.num_players,
            "suits": self.num_suits,
            "ranks": self.num_ranks,
            "hand_size": self.hand_size,
            "bonus": self.scoring_bonus,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GameConfig":
        try:
            return cls(
                num_players=obj["players"],
                num_suits=obj["suits"],
                num_ranks=obj["ranks"],
                hand_size=obj["hand_size"],
                scoring_bonus=obj.get("bonus", 10),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed game config {obj!r}") from exc


class Card(NamedTuple):
    suit: int
    rank: int

    def index(self, num_ranks: int) -> int:
        return self.suit * num_ranks + self.rank

    @classmethod
    def from_index(cls, index: int, num_ranks: int) -> "Card":
        return cls(index // num_ranks, index % num_ranks)


@dataclass(frozen=True, slots=True)
class Bid:
    count: int


@dataclass(frozen=True, slots=True)
class Play:
    card: int


Action = Union[Bid, Play]


def action_sort_key(action: Action) -> tuple[int, int]:
    """Canonical action order: bids ascending, then plays by card index."""
    if isinstance(action, Bid):
        return (0, action.count)
    return (1, action.card)


@dataclass(frozen=True)
class Deal:
    """The chance outcome: initial hands, the trump upcard, and the hidden kitty."""

    hands: tuple[frozenset, ...]
    trump_upcard: int
    kitty: frozenset

    def validate(self, config: GameConfig) -> None:
        if len(self.hands) != config.num_players:
            raise ConfigurationError("deal has the wrong number of hands")
        seen: set[int] = set()
        for hand in self.hands:
            if len(hand) != config.hand_size:
                raise ConfigurationError("deal has a hand of the wrong size")
            seen |= hand
        seen |= self.kitty
        seen.add(self.trump_upcard)
        total = sum(len(h) for h in self.hands) + len(self.kitty) + 1
        if total != config.deck_size or seen != set(range(config.deck_size)):
            raise ConfigurationError("deal does not partition the deck")

    def encode(self, config: GameConfig) -> str:
        """Owner of each card in index order: player digit, ``T`` for the upcard, ``K`` for kitty."""
        owner = ["K"] * config.deck_size
        owner[self.trump_upcard] = "T"
        for player, hand in enumerate(self.hands):
            for card in hand:
                owner[card] = str(player) if player < 10 else chr(ord("a") + player - 10)
        return "".join(owner)


def deal_chance_probability(config: GameConfig) -> Fraction:
    """Probability of one specific deal given the trump upcard.

    The upcard is fixed, the remaining ``n - 1`` cards are split into hands of
    ``hand_size`` and the kitty; every such set partition is equally likely.
    """
    remaining = config.deck_size - 1
    count = math.factorial(remaining)
    count //= math.factorial(config.hand_size) ** config.num_players
    count //= math.factorial(config.kitty_size)
    return Fraction(1, count)


class Phase(enum.Enum):
    BIDDING = "bidding"
    TRICK_PLAY = "trick_play"
    TERMINAL = "terminal"


def trick_winner(config: GameConfig, trump_suit: int, trick: Sequence[tuple[int, int]]) -> int:
    """Player who wins a completed trick of ``(player, card)`` pairs."""
    led_suit = config.suit_of(trick[0][1])
    best_player, best_card = trick[0]
    for player, card in trick[1:]:
        suit = config.suit_of(card)
        best_suit = config.suit_of(best_card)
        if suit == best_suit:
            if card > best_card:
                best_player, best_card = player, card
        elif suit == trump_suit:
            best_player, best_card = player, card
        # off-suit non-trump never wins; best_suit is always led or trump
    assert config.suit_of(best_card) in (led_suit, trump_suit)
    return best_player


def legal_from_hand(config: GameConfig, hand: frozenset, bidding: bool, led_suit: Optional[int]) -> tuple:
    """Legal actions for a player holding ``hand``, in canonical order."""
    if bidding:
        return tuple(Bid(b) for b in range(config.hand_size + 1))
    if led_suit is not None:
        following = sorted(c for c in hand if config.suit_of(c) == led_suit)
        if following:
            return tuple(Play(c) for c in following)
    return tuple(Play(c) for c in sorted(hand))


@dataclass(frozen=True)
class WorldState:
    config: GameConfig
    deal: Deal
    phase: Phase
    bids: tuple[Optional[int], ...]
    hands: tuple[frozenset, ...]
    current_trick: tuple[tuple[int, int], ...]
    tricks_won: tuple[int, ...]
    to_act: int
    trick_leader: int
    played: frozenset = frozenset()
    actions: tuple[tuple[int, Action], ...] = ()

    @property
    def trump_suit(self) -> int:
        return self.config.suit_of(self.deal.trump_upcard)

    @property
    def tricks_completed(self) -> int:
        return sum(self.tricks_won)

    def canonical_encoding(self) -> bytes:
        parts = [
            repr(self.config.to_json()),
            self.deal.encode(self.config),
            self.phase.value,
            repr(self.bids),
            repr(tuple(tuple(sorted(h)) for h in self.hands)),
            repr(self.current_trick),
            repr(self.tricks_won),
            repr((self.to_act, self.trick_leader)),
            repr(tuple((p, action_sort_key(a)) for p, a in self.actions)),
        ]
        return "|".join(parts).encode()


def initial_state(config: GameConfig, deal: Deal) -> WorldState:
    """Post-deal state: bidding starts with player 0."""
    deal.validate(config)
    return WorldState(
        config=config,
        deal=deal,
        phase=Phase.BIDDING,
        bids=(None,) * config.num_players,
        hands=deal.hands,
        current_trick=(),
        tricks_won=(0,) * config.num_players,
        to_act=0,
        trick_leader=0,
    )


def random_deal(config: GameConfig, rng: np.random.Generator) -> Deal:
    order = [int(c) for c in rng.permutation(config.deck_size)]
    h = config.hand_size
    hands = tuple(frozenset(order[1 + i * h: 1 + (i + 1) * h]) for i in range(config.num_players))
    kitty = frozenset(order[1 + config.num_players * h:])
    return Deal(hands=hands, trump_upcard=order[0], kitty=kitty)


def new_game(config: GameConfig, rng_seed: int) -> WorldState:
    """Deal a fresh hand uniformly at random from ``rng_seed``."""
    if not isinstance(config, GameConfig):
        raise ConfigurationError("new_game expects a GameConfig")
    rng = np.random.default_rng(rng_seed)
    return initial_state(config, random_deal(config, rng))


def legal_actions(state: WorldState) -> tuple:
    if state.phase is Phase.TERMINAL:
        raise IllegalActionError("no legal actions in a terminal state")
    led = state.config.suit_of(state.current_trick[0][1]) if state.current_trick else None
    return legal_from_hand(state.config, state.hands[state.to_act], state.phase is Phase.BIDDING, led)


def apply_action(state: WorldState, action: Action) -> WorldState:
    if state.phase is Phase.TERMINAL:
        raise IllegalActionError("cannot act in a terminal state")
    if action not in legal_actions(state):
        raise IllegalActionError(f"{action!r} is not legal for player {state.to_act}")
    config = state.config
    actor = state.to_act
    log = state.actions + ((actor, action),)

    if state.phase is Phase.BIDDING:
        bids = list(state.bids)
        bids[actor] = action.count
        done = actor == config.num_players - 1
        return WorldState(
            config=config,
            deal=state.deal,
            phase=Phase.TRICK_PLAY if done else Phase.BIDDING,
            bids=tuple(bids),
            hands=state.hands,
            current_trick=(),
            tricks_won=state.tricks_won,
            to_act=0 if done else actor + 1,
            trick_leader=0,
            played=state.played,
            actions=log,
        )

    hands = list(state.hands)
    hands[actor] = hands[actor] - {action.card}
    trick = state.current_trick + ((actor, action.card),)
    played = state.played | {action.card}
    if len(trick) < config.num_players:
        return WorldState(
            config=config,
            deal=state.deal,
            phase=Phase.TRICK_PLAY,
            bids=state.bids,
            hands=tuple(hands),
            current_trick=trick,
            tricks_won=state.tricks_won,
            to_act=(actor + 1) % config.num_players,
            trick_leader=state.trick_leader,
            played=played,
            actions=log,
        )

    winner = trick_winner(config, state.trump_suit, trick)
    won = list(state.tricks_won)
    won[winner] += 1
    finished = sum(won) == config.hand_size
    return WorldState(
        config=config,
        deal=state.deal,
        phase=Phase.TERMINAL if finished else Phase.TRICK_PLAY,
        bids=state.bids,
        hands=tuple(hands),
        current_trick=(),
        tricks_won=tuple(won),
        to_act=winner,
        trick_leader=winner,
        played=played,
        actions=log,
    )


def utility(state: WorldState) -> np.ndarray:
    if state.phase is not Phase.TERMINAL:
        raise IllegalActionError("utility is only defined for terminal states")
    won = np.asarray(state.tricks_won, dtype=float)
    made = np.array([w == b for w, b in zip(state.tricks_won, state.bids)], dtype=float)
    return won + state.config.scoring_bonus * made


@dataclass(frozen=True)
class History:
    """A deal plus the ordered ``(actor, action)`` decisions taken after it."""

    config: GameConfig
    deal: Deal
    actions: tuple[tuple[int, Action], ...] = field(default=())

    def __len__(self) -> int:
        # one chance step (the deal) plus each decision
        return 1 + len(self.actions)

    def replay(self) -> WorldState:
        """Re-apply every action from the post-deal state, checking legality."""
        state = initial_state(self.config, self.deal)
        for actor, action in self.actions:
            if state.phase is Phase.TERMINAL or state.to_act != actor:
                raise IllegalActionError(f"player {actor} is not to act at this point")
            state = apply_action(state, action)
        return state

    def with_deal(self, deal: Deal) -> "History":
        return History(self.config, deal, self.actions)


class Decision(NamedTuple):
    step: int
    actor: int
    hand: frozenset
    legal: tuple
    action: Action


def iter_decisions(config: GameConfig, deal: Deal, actions: Sequence[tuple[int, Action]]) -> Iterator[Decision]:
    """Walk ``actions`` from the deal with mutable bookkeeping, yielding each decision.

    Much cheaper than chaining :func:`apply_action`; used on hot paths
    (reach evaluation, consistency checks). Raises :class:`IllegalActionError`
    on the first illegal or out-of-turn action.
    """
    n = config.num_players
    trump = config.suit_of(deal.trump_upcard)
    hands = [set(h) for h in deal.hands]
    trick: list[tuple[int, int]] = []
    to_act = 0
    tricks_done = 0
    for step, (actor, action) in enumerate(actions):
        if actor != to_act or tricks_done == config.hand_size:
            raise IllegalActionError(f"player {actor} acts out of turn at step {step}")
        bidding = step < n
        led = config.suit_of(trick[0][1]) if trick else None
        hand = frozenset(hands[actor])
        legal = legal_from_hand(config, hand, bidding, led)
        if action not in legal:
            raise IllegalActionError(f"{action!r} is illegal at step {step}")
        yield Decision(step, actor, hand, legal, action)
        if bidding:
            to_act = (actor + 1) % n
            continue
        hands[actor].discard(action.card)
        trick.append((actor, action.card))
        if len(trick) < n:
            to_act = (actor + 1) % n
        else:
            to_act = trick_winner(config, trump, trick)
            trick = []
            tricks_done += 1


def action_to_json(actor: int, action: Action) -> list:
    if isinstance(action, Bid):
        return [actor, "bid", action.count]
    return [actor, "play", action.card]


def action_from_json(item: Sequence) -> tuple[int, Action]:
    actor, kind, value = item
    if kind == "bid":
        return int(actor), Bid(int(value))
    if kind == "play":
        return int(actor), Play(int(value))
    raise ValueError(f"unknown action kind {kind!r}")


def history_to_json(history: History) -> dict:
    deal = history.deal
    return {
        "config": history.config.to_json(),
        "deal": {
            "hands": [sorted(h) for h in deal.hands],
            "trump": deal.trump_upcard,
            "kitty": sorted(deal.kitty),
        },
        "actions": [action_to_json(p, a) for p, a in history.actions],
    }


def history_from_json(obj: dict) -> History:
    config = GameConfig.from_json(obj["config"])
    d = obj["deal"]
    deal = Deal(
        hands=tuple(frozenset(int(c) for c in h) for h in d["hands"]),
        trump_upcard=int(d["trump"]),
        kitty=frozenset(int(c) for c in d["kitty"]),
    )
    return History(config, deal, tuple(action_from_json(a) for a in obj.get("actions", [])))
