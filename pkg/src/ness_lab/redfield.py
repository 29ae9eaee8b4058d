"""Boundary-driven XY chain under the modified Redfield generator.

Each bath couples through a Majorana-linear operator X_mu = x_mu . w at a
chain end.  Because the Heisenberg evolution of w is generated by 4 Hmat,
the full-line transformed coupling is Y_mu = y_mu . w with
y_mu = Gamma_mu(4 Hmat) x_mu, which makes the generator quadratic and its
covariance flow a Lyapunov problem with a non-Hermitian effective reservoir.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expm1

from .errors import ConventionUncalibrated, SystemTooSmall, ZeroTemperatureBath
from .model import BathTemps, ModelParams
from .quadratic import (
    QuadraticHamiltonian,
    ReservoirMatrix,
    build_H_xy_open,
    drift,
    lyapunov_solve,
    sigma_z_profile,
)

# fixed once against the dense generator (see check_calibration)
COUPLING_CONSTANT = 1.0
CALIBRATION_TOL = 1e-8
BOUNDARY_EXCLUSION = 5

_DEFAULT_PHIS = tuple(i * math.pi / 10 for i in range(1, 5))


@dataclass(frozen=True)
class RedfieldConfig:
    N: int
    params: ModelParams
    temps: BathTemps
    phis: tuple = field(default=_DEFAULT_PHIS)
    Gammas: tuple = field(default=(0.01, 0.01, 0.01, 0.01))

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if len(self.phis) != 4 or len(self.Gammas) != 4:
            raise ValueError("exactly four angles and four strengths are required")
        if any(not g >= 0 for g in self.Gammas):
            raise ValueError("coupling strengths must be nonnegative")
        object.__setattr__(self, "phis", tuple(float(p) for p in self.phis))
        object.__setattr__(self, "Gammas", tuple(float(g) for g in self.Gammas))

    @property
    def bath_temperatures(self) -> tuple:
        T_L, T_R = self.temps
        return (T_L, T_L, T_R, T_R)

    def with_h(self, h: float) -> "RedfieldConfig":
        return RedfieldConfig(self.N, self.params.with_h(h), self.temps, self.phis, self.Gammas)


def coupling_vectors(cfg: RedfieldConfig) -> np.ndarray:
    """Rows x_1..x_4: the first two at site 1, the last two at site N."""
    X = np.zeros((4, 2 * cfg.N))
    for mu, phi in enumerate(cfg.phis):
        a = 0 if mu < 2 else 2 * cfg.N - 2
        X[mu, a] = math.cos(phi)
        X[mu, a + 1] = math.sin(phi)
    return X


def ohmic_spectral(omega, Gamma: float, T: float):
    """omega Gamma / (exp(omega/T) - 1), equal to Gamma T at omega = 0."""
    if T == 0:
        raise ZeroTemperatureBath("the Ohmic spectrum needs T > 0")
    omega = np.asarray(omega, dtype=float)
    if math.isinf(T):
        raise ZeroTemperatureBath("the Ohmic spectrum diverges for T = inf")
    x = omega / T
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ratio = np.where(x == 0, 1.0, x / expm1(np.where(x == 0, 1.0, x)))
    return Gamma * T * ratio


def transformed_couplings(cfg: RedfieldConfig, Hq: QuadraticHamiltonian) -> np.ndarray:
    """Rows y_mu = Gamma_mu(4 Hmat) x_mu."""
    lam, V = np.linalg.eigh(4.0 * Hq.H)
    X = coupling_vectors(cfg)
    Y = np.zeros(X.shape, dtype=complex)
    for mu, (G, T) in enumerate(zip(cfg.Gammas, cfg.bath_temperatures)):
        if G == 0:
            continue
        g = ohmic_spectral(lam, G, T)
        Y[mu] = V @ (g * (V.conj().T @ X[mu]))
    return Y


def build_redfield_M(cfg: RedfieldConfig, Hq: QuadraticHamiltonian | None = None) -> ReservoirMatrix:
    """Effective reservoir matrix of the Redfield generator.

    With B = c sum_mu conj(y_mu) x_mu^T the covariance flow has the Lindblad form
    with M_r = Re B and M_i = antisym(Im B).  M_r is not symmetric in general
    (its antisymmetric part is a bath-induced energy shift), so the result is
    flagged as non-Lindblad.
    """
    if Hq is None:
        Hq = build_H_xy_open(cfg.N, cfg.params.gamma, cfg.params.h)
    for T in cfg.temps:
        if T == 0:
            raise ZeroTemperatureBath("Redfield baths need T > 0")
    Y = transformed_couplings(cfg, Hq)
    X = coupling_vectors(cfg)
    B = COUPLING_CONSTANT * (Y.conj().T @ X)
    M_i = 0.5 * (B.imag - B.imag.T)
    return ReservoirMatrix(B.real.copy(), M_i, lindblad=False)


def redfield_ness(cfg: RedfieldConfig) -> np.ndarray:
    Hq = build_H_xy_open(cfg.N, cfg.params.gamma, cfg.params.h)
    M = build_redfield_M(cfg, Hq)
    return lyapunov_solve(drift(Hq, M), M.M_i)


def bulk_magnetization(C, exclude: int = BOUNDARY_EXCLUSION) -> float:
    """Mean <sigma^z> with ``exclude`` sites dropped at each chain end."""
    prof = sigma_z_profile(C)
    if len(prof) <= 2 * exclude:
        raise SystemTooSmall(f"N = {len(prof)} leaves no bulk after excluding {exclude} sites per side")
    return float(np.mean(prof[exclude:len(prof) - exclude]))


def redfield_susceptibility(cfg: RedfieldConfig, dh: float = 1e-3, exclude: int = BOUNDARY_EXCLUSION) -> float:
    if not dh > 0:
        raise ValueError("dh must be positive")
    up = bulk_magnetization(redfield_ness(cfg.with_h(cfg.params.h + dh)), exclude)
    down = bulk_magnetization(redfield_ness(cfg.with_h(cfg.params.h - dh)), exclude)
    return (up - down) / (2.0 * dh)


def check_calibration() -> float:
    """Compare the covariance route with the dense generator at N = 3.

    Returns the max deviation; raises ConventionUncalibrated above 1e-8.
    """
    from .oracle import dense_correlation_matrix, dense_redfield_ness

    cfg = RedfieldConfig(3, ModelParams(0.5, 0.9), BathTemps(0.5, 1.0))
    dev = float(np.abs(redfield_ness(cfg) - dense_correlation_matrix(dense_redfield_ness(cfg))).max())
    if dev > CALIBRATION_TOL:
        raise ConventionUncalibrated(f"Redfield covariance route deviates from the dense generator by {dev:.3g}")
    return dev
