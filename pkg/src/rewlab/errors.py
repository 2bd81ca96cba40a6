"""Exception types raised across the toolkit."""


class RewlabError(Exception):
    """Base class for every error raised by rewlab."""


class InvalidInput(RewlabError, ValueError):
    """Malformed numerical input: wrong shape, non-finite entries, bad dims."""


class SingularInput(RewlabError, ValueError):
    """A matrix that must be invertible is (numerically) singular."""


class DegenerateParameters(RewlabError, ValueError):
    """Family parameters for which a construction is undefined."""


class NotAProjector(RewlabError, ValueError):
    """A sum of projectors that was expected to be a projector is not."""


class NotApplicable(RewlabError, ValueError):
    """The operation's precondition on the input state does not hold."""


class NotAWitness(RewlabError, ValueError):
    """An operator failed the entanglement-witness checks."""


class InvalidState(RewlabError, ValueError):
    """A certificate was requested from a run that cannot support it."""
