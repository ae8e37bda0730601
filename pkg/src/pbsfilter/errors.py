"""Exception hierarchy shared by every module in the package."""


class PBSFilterError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PBSFilterError, ValueError):
    """A game or experiment configuration is invalid."""


class IllegalActionError(PBSFilterError, ValueError):
    """An operation was called outside its contract (illegal action, terminal state, ...)."""


class InconsistentPublicStateError(PBSFilterError, ValueError):
    """A public observation sequence is structurally malformed."""


class EmptyBeliefError(PBSFilterError):
    """No history is consistent with the public state."""


class EnumerationCapError(PBSFilterError):
    """Exact enumeration or a tabular state space would exceed its size cap."""


class InvariantError(PBSFilterError, RuntimeError):
    """An internal guarantee was broken. Always a bug."""
