"""Exception types shared across the package.

Each exception is re-exported from the module that owns the failing
operation; this module only exists to avoid import cycles between the
linear-algebra backends and their callers.
"""


class SingularMatrix(Exception):
    """A pivot fell below the relative singularity threshold."""


class NoConvergence(Exception):
    """The eigenvalue iteration exceeded its step cap."""


class InconsistentData(Exception):
    """Periodic-in-time assembly was requested together with nonzero data."""


class OddDimension(Exception):
    """A grid direction with odd extent cannot be coarsened by pairing."""


class Diverged(Exception):
    """A residual ratio exceeded the divergence guard."""


class SingularSymbol(Exception):
    """A Fourier symbol that must be inverted is numerically singular."""


class ExcludedFrequency(Exception):
    """The requested frequency pair lies in the excluded singular set."""
