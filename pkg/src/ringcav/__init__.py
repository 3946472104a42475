"""Two particles in a pumped ring cavity: quantum-jump, master-equation and Gaussian simulations."""

from .errors import ConfigError, DimensionError, NumericalError, RegimeError, RingCavError

__version__ = "0.1.0"

__all__ = ["ConfigError", "DimensionError", "NumericalError", "RegimeError", "RingCavError", "__version__"]
