"""Spectral ingredients of the transverse-field XY chain.

All functions work in the continuum k in [0, pi] of the infinite chain and
accept numpy arrays for ``k`` so that quadrature rules can evaluate them on
whole node vectors at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DegenerateDispersion

_EPS_ZERO = 1e-14


@dataclass(frozen=True)
class ModelParams:
    gamma: float
    h: float

    @property
    def h_c(self) -> float:
        return abs(1.0 - self.gamma**2)

    @property
    def in_default_domain(self) -> bool:
        """False for parameters outside the usual scan domain |gamma| < 1, h >= 0."""
        return abs(self.gamma) < 1.0 and self.h >= 0.0

    def with_h(self, h: float) -> "ModelParams":
        return ModelParams(self.gamma, h)


@dataclass(frozen=True)
class BathTemps:
    """Left/right bath temperatures (k_B = 1). ``0`` and ``math.inf`` are legal."""

    T_L: float
    T_R: float

    def __post_init__(self):
        if not (self.T_L >= 0 and self.T_R >= 0):
            raise ValueError(f"temperatures must be nonnegative, got {self.T_L}, {self.T_R}")

    @classmethod
    def equal(cls, T: float) -> "BathTemps":
        return cls(T, T)

    @property
    def is_equilibrium(self) -> bool:
        return self.T_L == self.T_R

    def __iter__(self):
        yield self.T_L
        yield self.T_R


@dataclass(frozen=True)
class BogoliubovPair:
    u: float
    v: float


def dispersion(k, p: ModelParams):
    """Quasiparticle energy eps_k = sqrt((cos k - h)^2 + gamma^2 sin^2 k)."""
    k = np.asarray(k, dtype=float)
    return np.hypot(np.cos(k) - p.h, p.gamma * np.sin(k))


def velocity(k, p: ModelParams):
    """Group velocity d eps_k / dk = sin k (h - (1 - gamma^2) cos k) / eps_k."""
    k = np.asarray(k, dtype=float)
    eps = dispersion(k, p)
    if np.any(eps < _EPS_ZERO):
        raise DegenerateDispersion(f"eps_k vanishes at some k for gamma={p.gamma}, h={p.h}")
    return _velocity_numerator(k, p) / eps


def _velocity_numerator(k, p: ModelParams):
    return np.sin(k) * (p.h - (1.0 - p.gamma**2) * np.cos(k))


def velocity_sign(k, p: ModelParams):
    """sgn(v_k) without dividing by eps_k (safe at isolated zeros of eps)."""
    return np.sign(_velocity_numerator(np.asarray(k, dtype=float), p))


def stationary_momentum(p: ModelParams) -> float | None:
    """Interior zero k0 of the velocity, or None when v_k keeps one sign on (0, pi).

    The boundary case |h| = h_c gives k0 at an endpoint and is reported as None.
    """
    a = 1.0 - p.gamma**2
    if a == 0.0 or abs(p.h) >= abs(a):
        return None
    return math.acos(p.h / a)


def fermi(eps, T: float):
    """Fermi factor 1/(exp(eps/T) + 1); exact step at T = 0 with f(0) = 1/2."""
    eps = np.asarray(eps, dtype=float)
    if T == 0:
        return np.where(eps > 0, 0.0, np.where(eps < 0, 1.0, 0.5))
    if math.isinf(T):
        return np.full_like(eps, 0.5)
    return expit(-eps / T)


def tanh_half(eps, T: float):
    """tanh(eps / 2T) = 1 - 2 f(eps); saturating, with T = 0 giving sgn(eps)."""
    eps = np.asarray(eps, dtype=float)
    if T == 0:
        return np.sign(eps)
    if math.isinf(T):
        return np.zeros_like(eps)
    return np.tanh(eps / (2.0 * T))


def sech2_half(eps, T: float):
    """sech^2(eps / 2T); zero for T = 0 (away from eps = 0) and one for T = inf."""
    eps = np.asarray(eps, dtype=float)
    if T == 0:
        return np.zeros_like(eps)
    if math.isinf(T):
        return np.ones_like(eps)
    x = np.abs(eps) / T
    # 4 e^{-x} / (1 + e^{-x})^2, overflow free
    e = np.exp(-x)
    return 4.0 * e / (1.0 + e) ** 2


def fermi_derivative(eps, T: float, order: int):
    """d^order f / d eps^order for order in 1..3 (zero for T = 0 or T = inf)."""
    eps = np.asarray(eps, dtype=float)
    if T == 0 or math.isinf(T):
        return np.zeros_like(eps)
    f = expit(-eps / T)
    s = f * (1.0 - f)
    if order == 1:
        return -s / T
    if order == 2:
        return s * (1.0 - 2.0 * f) / T**2
    if order == 3:
        return -s * (1.0 - 6.0 * f + 6.0 * f * f) / T**3
    raise ValueError("order must be 1, 2 or 3")


def mode_occupation(k, p: ModelParams, b: BathTemps):
    """NESS occupation of c_k: left-bath Fermi factor for right movers, right-bath otherwise."""
    k = np.asarray(k, dtype=float)
    v = velocity(k, p)
    eps = dispersion(k, p)
    if np.any(v == 0):
        raise DegenerateDispersion("velocity vanishes; occupation not selected by a bath")
    return np.where(v > 0, fermi(eps, b.T_L), fermi(eps, b.T_R))


def bogoliubov(k: float, p: ModelParams) -> BogoliubovPair:
    """Coefficients u, v of c_k and c_{-k}^dagger in the momentum mode a_k.

    u^2 - v^2 = (cos k - h)/eps_k and 2uv = |gamma sin k|/eps_k.
    """
    eps = float(dispersion(k, p))
    if eps < _EPS_ZERO:
        raise DegenerateDispersion(f"eps_k = {eps:g} at k = {k}")
    c = math.cos(k) - p.h
    u = math.sqrt(max(eps + c, 0.0) / (2.0 * eps))
    v = math.sqrt(max(eps - c, 0.0) / (2.0 * eps))
    return BogoliubovPair(u, v)
