"""Metropolis-Hastings chain over the histories of one public state.

The chain state is a history; only its deal changes. A proposal draws a
deal uniformly from the deal-level neighborhood of the current deal (see
:class:`~pbsfilter.assignment.NeighborSet`) and is accepted with

    z = min(1, reach(h') |N(h)| / (reach(h) |N(h')|)),

which leaves the joint range ``P(. | S)`` invariant. The chance
probability is the same for every deal of a public state and is left out of
``reach``.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .assignment import (
    NeighborSet,
    SuitLengthMatrix,
    deal_count,
    enumerate_assignments,
    matrix_of,
    neighbor_set_of_matrix,
    sample_deal_in,
)
from .construction import construct_history
from .errors import ConfigurationError, EmptyBeliefError, IllegalActionError, InvariantError
from .game import Deal, History
from .observation import PublicState, extract_constraints, public_actions

CONSTRUCT = "construct"
UNIFORM = "uniform"


def derive_rng(seed: int, chain_id: int = 0) -> np.random.Generator:
    """Generator for chain ``chain_id`` of an experiment seeded with ``seed``.

    The pair is mixed by ``numpy.random.SeedSequence([seed, chain_id])``, so
    chains with different ids are independent streams and each is
    reproducible on its own.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(chain_id)]))


def randbelow(rng: np.random.Generator, n: int) -> int:
    """Uniform integer in ``[0, n)`` for arbitrarily large Python ints."""
    if n <= 0:
        raise ValueError("n must be positive")
    if n < 2**62:
        return int(rng.integers(n))
    bits = n.bit_length()
    words = (bits + 63) // 64
    while True:
        x = 0
        for w in rng.integers(0, 2**64, size=words, dtype=np.uint64):
            x = (x << 64) | int(w)
        x >>= words * 64 - bits
        if x < n:
            return x


def log_acceptance(log_reach: float, log_reach_new: float, omega: int, omega_new: int) -> float:
    """``log z`` for moving from a history with ``(log_reach, |N| = omega)`` to one
    with ``(log_reach_new, omega_new)``; never positive."""
    log_ratio = (log_reach_new - log_reach) + (math.log(omega) - math.log(omega_new))
    return min(0.0, log_ratio)


def acceptance(log_reach: float, log_reach_new: float, omega: int, omega_new: int) -> float:
    return math.exp(log_acceptance(log_reach, log_reach_new, omega, omega_new))


@dataclass(frozen=True)
class ChainConfig:
    thinning_interval: int = 20
    num_samples: int = 400
    init_mode: str = UNIFORM
    rng_seed: int = 0
    chain_id: int = 0
    discard_prefix: int = 0

    def __post_init__(self) -> None:
        if self.thinning_interval < 1 or self.num_samples < 1 or self.discard_prefix < 0:
            raise ConfigurationError("thinning and sample counts must be positive")
        if self.init_mode not in (CONSTRUCT, UNIFORM):
            raise ConfigurationError(f"unknown init mode {self.init_mode!r}")


@dataclass(frozen=True)
class ChainState:
    history: History
    assignment: SuitLengthMatrix
    log_reach: float
    omega_size: int
    step_count: int = 0

    @property
    def deal(self) -> Deal:
        return self.history.deal


class _Neighborhood:
    """A neighbor set plus cumulative weights for two-stage proposal draws."""

    __slots__ = ("ns", "cumulative", "total", "log_total")

    def __init__(self, ns: NeighborSet) -> None:
        self.ns = ns
        weights = list(ns.counts)
        if ns.include_self:
            weights.append(ns.current_count - 1)
        self.cumulative = list(itertools.accumulate(weights))
        self.total = ns.total_deal_count
        self.log_total = math.log(self.total) if self.total > 0 else -math.inf


class GibbsSampler:
    """History generator for one public state under one joint policy.

    Neighborhoods are cached per assignment and reach values per deal, so
    repeated visits are cheap. ``validate=True`` additionally re-verifies
    every new deal against the public state (slow; meant for tests).
    """

    def __init__(self, public: PublicState, policy, validate: bool = False, reach_cache_size: int = 1 << 20) -> None:
        self.public = public
        self.policy = policy
        self.validate = validate
        self.constraints = extract_constraints(public)
        self.actions = public_actions(public)
        self.transitions = 0
        self.accepted = 0
        self._neighborhoods: dict[tuple, _Neighborhood] = {}
        self._reach: dict[Deal, float] = {}
        self._reach_cache_size = reach_cache_size

    # -- cached quantities ---------------------------------------------------

    def history_of(self, deal: Deal) -> History:
        return History(self.public.config, deal, self.actions)

    def log_reach(self, deal: Deal) -> float:
        value = self._reach.get(deal)
        if value is None:
            history = self.history_of(deal)
            try:
                if self.validate:
                    matrix_of(deal, self.constraints)
                value = self.policy.log_reach(history)
            except IllegalActionError as exc:
                raise InvariantError(f"proposed history is inconsistent with the public state: {exc}") from exc
            if len(self._reach) >= self._reach_cache_size:
                self._reach.clear()
            self._reach[deal] = value
        return value

    def neighborhood(self, matrix: SuitLengthMatrix) -> _Neighborhood:
        hood = self._neighborhoods.get(matrix.entries)
        if hood is None:
            hood = _Neighborhood(neighbor_set_of_matrix(matrix, self.constraints))
            self._neighborhoods[matrix.entries] = hood
        return hood

    def omega_size(self, deal: Deal) -> int:
        return self.neighborhood(matrix_of(deal, self.constraints)).total

    def state_for(self, deal: Deal, matrix: Optional[SuitLengthMatrix] = None, step_count: int = 0) -> ChainState:
        matrix = matrix_of(deal, self.constraints) if matrix is None else matrix
        lr = self.log_reach(deal)
        if not math.isfinite(lr):
            raise InvariantError("chain state has zero reach; the policy lacks full support")
        return ChainState(self.history_of(deal), matrix, lr, self.neighborhood(matrix).total, step_count)

    # -- initialization ------------------------------------------------------

    def init_chain(self, mode: str = CONSTRUCT, rng: Optional[np.random.Generator] = None) -> ChainState:
        rng = np.random.default_rng() if rng is None else rng
        c = self.constraints
        if mode == CONSTRUCT:
            history = construct_history(self.public, self.policy, rng)
            if history is None:
                raise EmptyBeliefError("no history is consistent with this public state")
            return self.state_for(history.deal)
        if mode == UNIFORM:
            assignments = [] if c.conflicts else enumerate_assignments(c)
            counts = [deal_count(a, c) for a in assignments]
            total = sum(counts)
            if total == 0:
                raise EmptyBeliefError("no history is consistent with this public state")
            pick = randbelow(rng, total)
            idx = bisect.bisect_right(list(itertools.accumulate(counts)), pick)
            matrix = assignments[idx]
            return self.state_for(sample_deal_in(matrix, c, rng), matrix)
        raise ConfigurationError(f"unknown init mode {mode!r}")

    # -- transitions ---------------------------------------------------------

    def propose(self, state: ChainState, rng: np.random.Generator) -> Optional[tuple[Deal, SuitLengthMatrix]]:
        """Uniform draw from the neighbor set of the current deal, or None when it is empty."""
        hood = self.neighborhood(state.assignment)
        if hood.total == 0:
            return None
        pick = randbelow(rng, hood.total)
        idx = bisect.bisect_right(hood.cumulative, pick)
        if idx < len(hood.ns.assignments):
            matrix = hood.ns.assignments[idx]
            return sample_deal_in(matrix, self.constraints, rng), matrix
        # same assignment: uniform among its other deals
        matrix = state.assignment
        while True:
            deal = sample_deal_in(matrix, self.constraints, rng)
            if deal != state.deal:
                return deal, matrix

    def log_acceptance_ratio(self, deal: Deal, deal_new: Deal) -> float:
        """``log`` of the unclipped MH ratio for moving from ``deal`` to ``deal_new``."""
        c = self.constraints
        omega = self.neighborhood(matrix_of(deal, c))
        omega_new = self.neighborhood(matrix_of(deal_new, c))
        return (self.log_reach(deal_new) - self.log_reach(deal)) + (omega.log_total - omega_new.log_total)

    def acceptance_probability(self, deal: Deal, deal_new: Deal) -> float:
        return math.exp(min(0.0, self.log_acceptance_ratio(deal, deal_new)))

    def in_neighborhood(self, deal: Deal, other: Deal) -> bool:
        if deal == other:
            return False
        c = self.constraints
        hood = self.neighborhood(matrix_of(deal, c))
        target = matrix_of(other, c).entries
        if target == hood.ns.current.entries:
            return hood.ns.include_self
        return any(a.entries == target for a in hood.ns.assignments)

    def transition_probability(self, deal: Deal, other: Deal) -> float:
        """Off-diagonal kernel entry ``Q(deal -> other)``: proposal times acceptance."""
        if not self.in_neighborhood(deal, other):
            return 0.0
        total = self.neighborhood(matrix_of(deal, self.constraints)).total
        return self.acceptance_probability(deal, other) / total

    def step(self, state: ChainState, rng: np.random.Generator) -> ChainState:
        self.transitions += 1
        proposal = self.propose(state, rng)
        if proposal is None:
            return ChainState(state.history, state.assignment, state.log_reach, state.omega_size, state.step_count + 1)
        deal_new, matrix_new = proposal
        lr_new = self.log_reach(deal_new)
        hood_new = self.neighborhood(matrix_new)
        log_z = log_acceptance(state.log_reach, lr_new, state.omega_size, hood_new.total)
        if log_z == 0.0 or rng.random() < math.exp(log_z):
            self.accepted += 1
            return ChainState(self.history_of(deal_new), matrix_new, lr_new, hood_new.total, state.step_count + 1)
        return ChainState(state.history, state.assignment, state.log_reach, state.omega_size, state.step_count + 1)

    def run(self, cfg: ChainConfig, rng: Optional[np.random.Generator] = None) -> list[History]:
        """``num_samples`` histories, each ``thinning_interval`` transitions after the previous one."""
        rng = derive_rng(cfg.rng_seed, cfg.chain_id) if rng is None else rng
        state = self.init_chain(cfg.init_mode, rng)
        for _ in range(cfg.discard_prefix):
            state = self.step(state, rng)
        samples = []
        for _ in range(cfg.num_samples):
            for _ in range(cfg.thinning_interval):
                state = self.step(state, rng)
            samples.append(state.history)
        return samples


def init_chain(public: PublicState, policy, mode: str = CONSTRUCT, rng: Optional[np.random.Generator] = None) -> ChainState:
    return GibbsSampler(public, policy).init_chain(mode, rng)


def run(public: PublicState, policy, cfg: ChainConfig) -> list[History]:
    return GibbsSampler(public, policy).run(cfg)
