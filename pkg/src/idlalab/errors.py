"""Error taxonomy shared across the package.

Exit-code mapping used by the CLI: InputError -> 2, everything else
raised during a run -> 3, a failed check (no exception) -> 1.
"""


class IdlalabError(Exception):
    """Base class for package errors."""


class InputError(IdlalabError, ValueError):
    """Malformed or out-of-range input (bad p, bad config, bad domain)."""


class ConditioningFailed(IdlalabError):
    """Origin could not be placed in the largest cluster within the retry budget."""

    def __init__(self, attempts: int, message: str = ""):
        self.attempts = attempts
        super().__init__(message or f"conditioning failed after {attempts} attempts")


class ConstructionError(IdlalabError):
    """Deterministic lattice construction violated its own geometric preconditions."""


class AggregationStalled(IdlalabError):
    """An aggregation walk hit the step cap before settling."""

    def __init__(self, particle: int, cap: int):
        self.particle = particle
        self.cap = cap
        super().__init__(f"particle {particle} hit step cap {cap} before settling")


class RangeError(IdlalabError):
    """A walk left the safe region of the finite box; enlarge the box."""


class SolverError(IdlalabError):
    """Linear solve failed to reach the required residual."""


class ResourceError(IdlalabError):
    """Requested computation exceeds the configured memory/size budget."""
