"""Full-support joint policies and reach-probability evaluation.

A policy maps an :class:`~pbsfilter.observation.InfoStateKey` to a
distribution over its legal actions. Every policy constructed here puts
positive probability on every legal action, which is what makes the
rule-based deal constraints exact.
"""

from __future__ import annotations

import hashlib
import json
import math
import pickle
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import ConfigurationError, EnumerationCapError
from .game import (
    Action,
    GameConfig,
    History,
    Phase,
    action_sort_key,
    apply_action,
    initial_state,
    iter_decisions,
    random_deal,
    utility,
)
from .observation import InfoStateKey, infostate_of, public_prefixes


@dataclass(frozen=True)
class InfoStateDistribution:
    actions: tuple
    probs: tuple[float, ...]

    def prob(self, action: Action) -> float:
        try:
            return self.probs[self.actions.index(action)]
        except ValueError:
            return 0.0

    def sample(self, rng: np.random.Generator) -> Action:
        u = rng.random()
        acc = 0.0
        for action, p in zip(self.actions, self.probs):
            acc += p
            if u < acc:
                return action
        return self.actions[-1]


class Policy:
    """Base class; subclasses implement :meth:`_distribution`."""

    cache_size = 1 << 18

    def __init__(self) -> None:
        self._cache: dict = {}

    def _distribution(self, key: InfoStateKey) -> InfoStateDistribution:
        raise NotImplementedError

    def distribution(self, key: InfoStateKey) -> InfoStateDistribution:
        dist = self._cache.get(key)
        if dist is None:
            dist = self._distribution(key)
            if len(self._cache) >= self.cache_size:
                self._cache.clear()
            self._cache[key] = dist
        return dist

    def action_distribution(self, key: InfoStateKey) -> InfoStateDistribution:
        return self.distribution(key)

    def log_reach(self, history: History) -> float:
        """Sum of log action probabilities along ``history`` (chance omitted).

        Raises :class:`~pbsfilter.errors.IllegalActionError` when the history
        contains an illegal action.
        """
        prefixes = public_prefixes(history.config, history.deal.trump_upcard, history.actions)
        total = 0.0
        for step, actor, hand, _, action in iter_decisions(history.config, history.deal, history.actions):
            p = self.distribution(InfoStateKey(prefixes[step], actor, hand)).prob(action)
            if p <= 0.0:
                return -math.inf
            total += math.log(p)
        return total


def unnormalized_reach(history: History, policy: Policy) -> float:
    return policy.log_reach(history)


def action_distribution(policy: Policy, key: InfoStateKey) -> InfoStateDistribution:
    return policy.distribution(key)


class UniformPolicy(Policy):
    def _distribution(self, key):
        legal = key.legal_actions()
        return InfoStateDistribution(legal, (1.0 / len(legal),) * len(legal))


def _stable_index(seed: int, text: str, modulus: int) -> int:
    digest = hashlib.blake2b(f"{seed}|{text}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") % modulus


class BiasedRandomPolicy(Policy):
    """Favors one pseudo-randomly chosen action per infostate.

    The favored action gets ``max(bias, 1/k)`` of the mass and the other
    ``k - 1`` actions split the rest evenly, so ``bias=0`` is uniform. The
    choice is a hash of ``(seed, infostate)``: same inputs, same policy, in
    any process.
    """

    def __init__(self, bias: float, seed: int = 0) -> None:
        super().__init__()
        if not 0.0 <= bias < 1.0:
            raise ConfigurationError(f"bias must lie in [0, 1), got {bias}")
        self.bias = float(bias)
        self.seed = int(seed)

    def favored_action(self, key: InfoStateKey) -> Action:
        legal = key.legal_actions()
        return legal[_stable_index(self.seed, key.encode(), len(legal))]

    def _distribution(self, key):
        legal = key.legal_actions()
        k = len(legal)
        if k == 1:
            return InfoStateDistribution(legal, (1.0,))
        top = max(self.bias, 1.0 / k)
        rest = (1.0 - top) / (k - 1)
        favored = _stable_index(self.seed, key.encode(), k)
        return InfoStateDistribution(legal, tuple(top if i == favored else rest for i in range(k)))


class TabularQPolicy(Policy):
    """Greedy-with-floor policy read off per-player Q tables.

    ``tables[player][state][action_key]`` holds Q-values keyed by the
    infostate encoding and :func:`~pbsfilter.game.action_sort_key`. The
    greedy part spreads evenly over tied maxima, so an untrained table gives
    the uniform policy.
    """

    def __init__(self, config: GameConfig, tables: list[dict], support_floor: float = 0.05) -> None:
        super().__init__()
        if not 0.0 < support_floor <= 1.0:
            raise ConfigurationError("support_floor must lie in (0, 1]")
        self.config = config
        self.tables = tables
        self.support_floor = float(support_floor)

    def _distribution(self, key):
        legal = key.legal_actions()
        k = len(legal)
        row = self.tables[key.player].get(key.encode(), {})
        q = [row.get(action_sort_key(a), 0.0) for a in legal]
        best = max(q)
        ties = [i for i, v in enumerate(q) if v == best]
        floor = self.support_floor / k
        greedy = (1.0 - self.support_floor) / len(ties)
        return InfoStateDistribution(legal, tuple(floor + (greedy if i in ties else 0.0) for i in range(k)))


# -- policy specifications ---------------------------------------------------


@dataclass(frozen=True)
class UniformSpec:
    kind = "uniform"

    def to_json(self) -> dict:
        return {"type": self.kind}


@dataclass(frozen=True)
class BiasedRandomSpec:
    bias: float
    seed: int = 0
    kind = "biased_random"

    def to_json(self) -> dict:
        return {"type": self.kind, "bias": self.bias, "seed": self.seed}


@dataclass(frozen=True)
class TabularQSpec:
    episodes: int = 200_000
    learning_rate: float = 0.1
    discount: float = 1.0
    exploration: float = 0.1
    support_floor: float = 0.05
    seed: int = 0
    kind = "tabular_q"

    def to_json(self) -> dict:
        return {"type": self.kind, **asdict(self)}


PolicySpec = Union[UniformSpec, BiasedRandomSpec, TabularQSpec]


def policy_spec_from_json(obj: Optional[dict]) -> PolicySpec:
    if obj is None:
        return UniformSpec()
    kind = obj.get("type")
    fields = {k: v for k, v in obj.items() if k != "type"}
    try:
        if kind == "uniform":
            return UniformSpec()
        if kind == "biased_random":
            return BiasedRandomSpec(bias=float(fields["bias"]), seed=int(fields.get("seed", 0)))
        if kind == "tabular_q":
            return TabularQSpec(**fields)
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"malformed policy spec {obj!r}") from exc
    raise ConfigurationError(f"unknown policy type {kind!r}")


def make_policy(spec: PolicySpec, config: GameConfig) -> Policy:
    if isinstance(spec, UniformSpec):
        return UniformPolicy()
    if isinstance(spec, BiasedRandomSpec):
        return BiasedRandomPolicy(spec.bias, spec.seed)
    if isinstance(spec, TabularQSpec):
        return train_q_policies(config, spec)
    raise ConfigurationError(f"unsupported policy spec {spec!r}")


# -- independent Q-learning --------------------------------------------------


def train_q_policies(config: GameConfig, spec: TabularQSpec, max_states: int = 2_000_000) -> TabularQPolicy:
    """Independent tabular Q-learning by self-play.

    Each player keeps its own table over its own infostates and treats the
    others as part of the environment. Rewards are zero until the terminal
    utility; the bootstrap target at a player's next decision is the max
    Q-value there.
    """
    if spec.episodes < 0 or not 0.0 <= spec.exploration <= 1.0:
        raise ConfigurationError("invalid Q-learning hyperparameters")
    rng = np.random.default_rng(spec.seed)
    tables: list[dict] = [dict() for _ in range(config.num_players)]
    num_states = 0

    def row_for(player: int, state_key: str) -> dict:
        nonlocal num_states
        row = tables[player].get(state_key)
        if row is None:
            num_states += 1
            if num_states > max_states:
                raise EnumerationCapError(f"Q tables exceed {max_states} states")
            row = tables[player][state_key] = {}
        return row

    lr, gamma = spec.learning_rate, spec.discount
    for _ in range(spec.episodes):
        state = initial_state(config, random_deal(config, rng))
        pending: list = [None] * config.num_players
        while state.phase is not Phase.TERMINAL:
            player = state.to_act
            key = infostate_of(state)
            legal = key.legal_actions()
            row = row_for(player, key.encode())
            if pending[player] is not None:
                prev_row, prev_a = pending[player]
                target = gamma * max(row.get(action_sort_key(a), 0.0) for a in legal)
                old = prev_row.get(prev_a, 0.0)
                prev_row[prev_a] = old + lr * (target - old)
            if rng.random() < spec.exploration:
                action = legal[int(rng.integers(len(legal)))]
            else:
                q = [row.get(action_sort_key(a), 0.0) for a in legal]
                best = max(q)
                ties = [a for a, v in zip(legal, q) if v == best]
                action = ties[int(rng.integers(len(ties)))]
            pending[player] = (row, action_sort_key(action))
            state = apply_action(state, action)
        rewards = utility(state)
        for player, item in enumerate(pending):
            if item is not None:
                prev_row, prev_a = item
                old = prev_row.get(prev_a, 0.0)
                prev_row[prev_a] = old + lr * (rewards[player] - old)
    return TabularQPolicy(config, tables, spec.support_floor)


Q_FILE_MAGIC = b"PBSFQTAB"
Q_FILE_VERSION = 1


def config_hash(config: GameConfig) -> str:
    return hashlib.sha256(json.dumps(config.to_json(), sort_keys=True).encode()).hexdigest()


def save_q_policy(path: str | Path, policy: TabularQPolicy) -> None:
    """Write Q tables as ``magic | version byte | pickle(payload)``; the payload carries the config hash."""
    payload = {
        "config": policy.config.to_json(),
        "config_hash": config_hash(policy.config),
        "support_floor": policy.support_floor,
        "tables": policy.tables,
    }
    with open(path, "wb") as fh:
        fh.write(Q_FILE_MAGIC)
        fh.write(bytes([Q_FILE_VERSION]))
        pickle.dump(payload, fh, protocol=pickle.HIGHEST_PROTOCOL)


def load_q_policy(path: str | Path, config: Optional[GameConfig] = None) -> TabularQPolicy:
    with open(path, "rb") as fh:
        if fh.read(len(Q_FILE_MAGIC)) != Q_FILE_MAGIC:
            raise ConfigurationError(f"{path} is not a Q table file")
        version = fh.read(1)
        if not version or version[0] != Q_FILE_VERSION:
            raise ConfigurationError(f"unsupported Q table file version {version!r}")
        payload = pickle.load(fh)
    stored = GameConfig.from_json(payload["config"])
    if payload["config_hash"] != config_hash(stored):
        raise ConfigurationError("Q table file is corrupt: config hash mismatch")
    if config is not None and config_hash(config) != payload["config_hash"]:
        raise ConfigurationError("Q tables were trained for a different game config")
    return TabularQPolicy(stored, payload["tables"], payload["support_floor"])

