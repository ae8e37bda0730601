"""Exact and sampled public belief states for small Oh Hell games.

The library filters the deals consistent with a public action sequence,
builds one such deal by max flow, and samples them with a
Metropolis-Hastings chain over suit-length assignments.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    EmptyBeliefError,
    EnumerationCapError,
    IllegalActionError,
    InconsistentPublicStateError,
    InvariantError,
    PBSFilterError,
)
from .game import Bid, Deal, GameConfig, History, Play, apply_action, legal_actions, new_game, utility
from .observation import PublicState, extract_constraints, public_state_of
from .construction import construct_history
from .enumeration import enumerate_pbs, pbs_entropy, pbs_value
from .gibbs import ChainConfig, GibbsSampler, derive_rng
from .policy import BiasedRandomPolicy, TabularQPolicy, UniformPolicy
