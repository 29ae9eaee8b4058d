"""Nonequilibrium steady states of the open XY chain.

Three routes to the same NESS: closed-form quadrature of the infinite
chain (``cstar``), Lindblad mesoreservoirs (``meso``) and the modified
Redfield generator (``redfield``), the latter two through the covariance
Lyapunov equation in ``quadratic``.  ``oracle`` holds dense brute-force
references for a few spins.
"""
from .errors import (
    ConfigError,
    NessLabError,
    NumericalError,
)
from .model import BathTemps, ModelParams, dispersion, fermi, velocity
from .quadrature import QuadratureConfig

__version__ = "0.1.0"

__all__ = [
    "BathTemps",
    "ConfigError",
    "ModelParams",
    "NessLabError",
    "NumericalError",
    "QuadratureConfig",
    "dispersion",
    "fermi",
    "velocity",
]
