"""Exception hierarchy.

The CLI maps these onto exit codes: config problems exit with 2, physics
regime problems with 3 and numerical failures with 4.
"""


class RingCavError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RingCavError, ValueError):
    """Invalid experiment configuration (unknown keys, wrong types)."""


class RegimeError(RingCavError):
    """The requested physics does not exist for these parameters.

    Examples are a steady state in the heating regime, or heralding on a
    state that contains no photons.
    """


class NumericalError(RingCavError):
    """An integrator or solver could not deliver a trustworthy result."""


class DimensionError(NumericalError, ValueError):
    """A dense-algebra size guard was exceeded."""
