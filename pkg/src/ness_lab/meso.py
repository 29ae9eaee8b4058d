"""Chain segments used as thermal contacts (mesoreservoirs).

Sites are split as [-K+1, 0] (left reservoir), [1, n] (system) and
[n+1, n+K] (right reservoir) of a uniform open XY chain with N = 2K + n
sites.  Each reservoir eigenmode eta is damped towards the Fermi occupation
of its bath by the jump operators sqrt(Gamma (1-f)) eta and sqrt(Gamma f) eta^dag.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModes, DegenerateModesWarning, DimensionMismatch, SystemTooSmall
from .model import BathTemps, ModelParams, fermi
from .quadratic import (
    QuadraticHamiltonian,
    ReservoirMatrix,
    build_H_xy_open,
    drift,
    lyapunov_solve,
    sigma_z_profile,
)

BOUNDARY_EXCLUSION = 5


@dataclass(frozen=True)
class MesoConfig:
    K: int
    n: int
    Gamma: float
    params: ModelParams
    temps: BathTemps

    def __post_init__(self):
        if self.K < 1 or self.n < 1:
            raise ValueError("K and n must be at least 1")
        if not self.Gamma >= 0:
            raise ValueError("Gamma must be nonnegative")

    @property
    def N(self) -> int:
        return 2 * self.K + self.n

    @property
    def system_sites(self) -> slice:
        """0-based slice of the system region in the full chain."""
        return slice(self.K, self.K + self.n)

    def with_h(self, h: float) -> "MesoConfig":
        return MesoConfig(self.K, self.n, self.Gamma, self.params.with_h(h), self.temps)


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Reservoir eigenmodes eta_k = 1/2 sum_i (phi_ki w_{2i-1} - i psi_ki w_{2i}).

    Rows of ``phi`` and ``psi`` are the modes; ``[H, eta_k] = -eps_k eta_k``.
    """

    energies: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    degenerate: bool = False

    @property
    def K(self) -> int:
        return len(self.energies)

    def coupling_vectors(self) -> np.ndarray:
        """Rows l_k with eta_k = l_k . w in the interleaved Majorana order."""
        K = self.K
        v = np.zeros((K, 2 * K), dtype=complex)
        v[:, 0::2] = 0.5 * self.phi
        v[:, 1::2] = -0.5j * self.psi
        return v


def _bipartite_block(Hq: QuadraticHamiltonian) -> np.ndarray:
    H4 = 4.0 * Hq.H
    if np.abs(H4[0::2, 0::2]).max(initial=0.0) > 1e-14 or np.abs(H4[1::2, 1::2]).max(initial=0.0) > 1e-14:
        raise ValueError("reservoir Hamiltonian does not couple odd Majoranas only to even ones")
    # 4H = [[0, iP], [-iP^T, 0]] in (odd, even) ordering
    return np.real(-1j * H4[0::2, 1::2])


def diagonalize_reservoir(H_res: QuadraticHamiltonian, strict: bool = False) -> ModeSet:
    """Eigenmodes of a reservoir segment from the singular value decomposition of its coupling block.

    Degenerate energies (closer than 1e-12) are reported with a
    DegenerateModesWarning, or DegenerateModes when ``strict`` is set.
    """
    Q = -_bipartite_block(H_res)
    U, s, Vt = np.linalg.svd(Q)
    phi = U.T.copy()
    psi = Vt.copy()
    for k in range(len(s)):
        nz = np.flatnonzero(np.abs(phi[k]) > 1e-12)
        if len(nz) and phi[k, nz[0]] < 0:
            phi[k] *= -1
            psi[k] *= -1
    order = np.argsort(s, kind="stable")
    s, phi, psi = s[order], phi[order], psi[order]
    degenerate = bool(len(s) > 1 and np.min(np.diff(s)) < 1e-12)
    if degenerate:
        msg = "reservoir has degenerate mode energies; phi/psi pairing inside a cluster is convention dependent"
        if strict:
            raise DegenerateModes(msg)
        warnings.warn(msg, DegenerateModesWarning, stacklevel=2)
    return ModeSet(s, phi, psi, degenerate)


def lindblad_rates(ms: ModeSet, Gamma: float, T: float) -> tuple[np.ndarray, np.ndarray]:
    """Decay and pump rates (Gamma (1 - f), Gamma f) per mode."""
    if not Gamma >= 0:
        raise ValueError("Gamma must be nonnegative")
    f = fermi(ms.energies, T)
    return Gamma * (1.0 - f), Gamma * f


def _reservoir_block(ms: ModeSet, Gamma: float, T: float) -> np.ndarray:
    g = 2.0 * fermi(ms.energies, T) - 1.0
    K = ms.K
    G = np.zeros((2 * K, 2 * K))
    # G_{2i-1, 2j} = -sum g phi_i psi_j, G_{2i, 2j-1} = sum g psi_i phi_j
    G[0::2, 1::2] = -(ms.phi.T * g) @ ms.psi
    G[1::2, 0::2] = (ms.psi.T * g) @ ms.phi
    return 0.25 * Gamma * np.eye(2 * K) - 0.25j * Gamma * G


def _embed(blocks, N: int) -> np.ndarray:
    M = np.zeros((2 * N, 2 * N), dtype=complex)
    for first, B in blocks:
        s = slice(2 * first, 2 * first + B.shape[0])
        M[s, s] = B
    return M


def build_meso_M(left: ModeSet, right: ModeSet, cfg: MesoConfig) -> ReservoirMatrix:
    if left.K != cfg.K or right.K != cfg.K:
        raise DimensionMismatch(f"mode sets of size {left.K}, {right.K} do not match K = {cfg.K}")
    ML = _reservoir_block(left, cfg.Gamma, cfg.temps.T_L)
    MR = _reservoir_block(right, cfg.Gamma, cfg.temps.T_R)
    return ReservoirMatrix.from_complex(_embed([(0, ML), (cfg.K + cfg.n, MR)], cfg.N))


def meso_lindblad_vectors(left: ModeSet, right: ModeSet, cfg: MesoConfig) -> np.ndarray:
    """Coefficient rows of every jump operator sqrt(rate) eta or sqrt(rate) eta^dag in the full chain."""
    rows = []
    for ms, T, first in ((left, cfg.temps.T_L, 0), (right, cfg.temps.T_R, cfg.K + cfg.n)):
        g1, g2 = lindblad_rates(ms, cfg.Gamma, T)
        local = ms.coupling_vectors()
        for k in range(ms.K):
            for rate, vec in ((g1[k], local[k]), (g2[k], local[k].conj())):
                row = np.zeros(2 * cfg.N, dtype=complex)
                row[2 * first:2 * first + 2 * ms.K] = math.sqrt(rate) * vec
                rows.append(row)
    return np.array(rows)


def reservoir_modes(cfg: MesoConfig) -> tuple[ModeSet, ModeSet]:
    """Left and right mode sets; both reservoirs are copies of the same K-site chain."""
    ms = diagonalize_reservoir(build_H_xy_open(cfg.K, cfg.params.gamma, cfg.params.h))
    return ms, ms


def meso_ness(cfg: MesoConfig) -> np.ndarray:
    Hq = build_H_xy_open(cfg.N, cfg.params.gamma, cfg.params.h)
    left, right = reservoir_modes(cfg)
    M = build_meso_M(left, right, cfg)
    return lyapunov_solve(drift(Hq, M), M.M_i)


def bulk_magnetization(C, cfg: MesoConfig) -> float:
    """Mean <sigma^z> over system sites 6 .. n-5."""
    return float(np.mean(bulk_profile(C, cfg)))


def bulk_profile(C, cfg: MesoConfig) -> np.ndarray:
    if cfg.n <= 2 * BOUNDARY_EXCLUSION:
        raise SystemTooSmall(f"n = {cfg.n} leaves no bulk after excluding {BOUNDARY_EXCLUSION} sites per side")
    prof = sigma_z_profile(C)[cfg.system_sites]
    return prof[BOUNDARY_EXCLUSION:cfg.n - BOUNDARY_EXCLUSION]


def meso_susceptibility(cfg: MesoConfig, dh: float = 1e-3) -> float:
    """Centered difference of the bulk magnetization in h."""
    if not dh > 0:
        raise ValueError("dh must be positive")
    up = bulk_magnetization(meso_ness(cfg.with_h(cfg.params.h + dh)), cfg)
    down = bulk_magnetization(meso_ness(cfg.with_h(cfg.params.h - dh)), cfg)
    return (up - down) / (2.0 * dh)
