"""Majorana <-> Dirac fermion basis change for two-point functions.

Convention: w_{2m-1} = f_m + f_m^dagger, w_{2m} = i (f_m - f_m^dagger), so in
0-based arrays site j owns Majorana indices 2j and 2j+1.  A correlation
matrix is C_ab = <w_a w_b> - delta_ab.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PairCorrelation:
    l: int
    m: int
    ff: complex
    fdf: complex


def _omega(n: int) -> np.ndarray:
    """Matrix with w = Omega (f_1..f_n, f_1^dag..f_n^dag)."""
    om = np.zeros((2 * n, 2 * n), dtype=complex)
    j = np.arange(n)
    om[2 * j, j] = 1.0
    om[2 * j, n + j] = 1.0
    om[2 * j + 1, j] = 1j
    om[2 * j + 1, n + j] = -1j
    return om


def majorana_from_pairs(G: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Correlation matrix from G_lm = <f_l^dag f_m> and F_lm = <f_l f_m>."""
    G = np.asarray(G, dtype=complex)
    F = np.asarray(F, dtype=complex)
    n = G.shape[0]
    phi = np.block([[F, np.eye(n) - G.T], [G, -F.conj()]])
    om = _omega(n)
    return om @ phi @ om.T - np.eye(2 * n)


def pairs_from_majorana(C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`majorana_from_pairs`; returns (G, F)."""
    C = np.asarray(C)
    n = C.shape[0] // 2
    om_inv = np.linalg.inv(_omega(n))
    phi = om_inv @ (C + np.eye(2 * n)) @ om_inv.T
    return phi[n:, :n], phi[:n, :n]


def check_correlation_matrix(C: np.ndarray, tol: float = 1e-9) -> None:
    """Raise ValueError unless C is Hermitian, purely imaginary and antisymmetric."""
    C = np.asarray(C)
    if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] % 2:
        raise ValueError(f"correlation matrix must be square of even size, got {C.shape}")
    scale = max(1.0, float(np.abs(C).max(initial=0.0)))
    if np.abs(C + C.T).max(initial=0.0) > tol * scale:
        raise ValueError("correlation matrix is not antisymmetric")
    if np.abs(np.real(C)).max(initial=0.0) > tol * scale:
        raise ValueError("correlation matrix is not purely imaginary")
