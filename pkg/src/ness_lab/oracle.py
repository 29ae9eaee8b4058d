"""Brute-force reference at a handful of spins.

Everything here works with full 2^N x 2^N density matrices and the
4^N x 4^N Liouvillian, so it is only meant for N <= 5.  Vectorization is
row-major: vec(A rho B) = (A kron B^T) vec(rho).

Majoranas carry the Jordan-Wigner string over the sites to their left:
w_{2m-1} = S_m sigma^x_m, w_{2m} = S_m sigma^y_m, S_m = prod_{j<m} sigma^z_j.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DegenerateNESS, DimensionMismatch, NotAState, TooLarge

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)

MAX_HAMILTONIAN_SITES = 12
MAX_LIOUVILLIAN_SITES = 5


@dataclass(frozen=True, eq=False)
class DenseState:
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionMismatch("density matrix must be square")
        if np.abs(rho - rho.conj().T).max() > 1e-10:
            raise NotAState("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > 1e-12:
            raise NotAState(f"trace {np.trace(rho).real:.15g} differs from 1")
        if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -1e-10:
            raise NotAState("density matrix has negative eigenvalues")
        object.__setattr__(self, "rho", rho)

    @property
    def n_sites(self) -> int:
        return int(round(np.log2(self.rho.shape[0])))

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.rho @ op))


def site_operator(op: np.ndarray, site: int, N: int) -> np.ndarray:
    """Embed a one-site operator at 0-based ``site``."""
    return reduce(np.kron, [op if j == site else _I2 for j in range(N)])


def dense_majoranas(N: int) -> list[np.ndarray]:
    if N > MAX_HAMILTONIAN_SITES:
        raise TooLarge(f"N = {N} exceeds {MAX_HAMILTONIAN_SITES}")
    out = []
    for m in range(N):
        string = [_SZ] * m + [None] + [_I2] * (N - m - 1)
        for s in (_SX, _SY):
            ops = [s if o is None else o for o in string]
            out.append(reduce(np.kron, ops))
    return out


def dense_hamiltonian(N: int, gamma: float, h: float) -> np.ndarray:
    """Open XY chain, -sum[(1+g)/4 xx + (1-g)/4 yy] - (h/2) sum z."""
    if N > MAX_HAMILTONIAN_SITES:
        raise TooLarge(f"N = {N} exceeds {MAX_HAMILTONIAN_SITES}")
    dim = 2**N
    H = np.zeros((dim, dim), dtype=complex)
    for m in range(N - 1):
        xx = site_operator(_SX, m, N) @ site_operator(_SX, m + 1, N)
        yy = site_operator(_SY, m, N) @ site_operator(_SY, m + 1, N)
        H -= 0.25 * (1 + gamma) * xx + 0.25 * (1 - gamma) * yy
    for m in range(N):
        H -= 0.5 * h * site_operator(_SZ, m, N)
    return H


def _check_liouvillian_size(dim: int) -> None:
    if dim > 2**MAX_LIOUVILLIAN_SITES:
        raise TooLarge(f"Liouvillian for Hilbert dimension {dim} is too large")


def _left(A):
    return np.kron(A, np.eye(A.shape[0]))


def _right(B):
    return np.kron(np.eye(B.shape[0]), B.T)


def lindblad_liouvillian(H: np.ndarray, lindblad_ops) -> np.ndarray:
    """Superoperator of -i[H, rho] + sum 2 L rho L^dag - {L^dag L, rho}."""
    dim = H.shape[0]
    _check_liouvillian_size(dim)
    L = -1j * (_left(H) - _right(H))
    for op in lindblad_ops:
        LdL = op.conj().T @ op
        L += 2.0 * np.kron(op, op.conj()) - _left(LdL) - _right(LdL)
    return L


def redfield_liouvillian(H: np.ndarray, couplings, spectra) -> np.ndarray:
    """Superoperator of -i[H, rho] + sum_mu [Y_mu rho, X_mu] + h.c.

    Y_mu is the full-line transform of the interaction-picture coupling,
    (Y_mu)_ab = (X_mu)_ab * spectrum_mu(E_a - E_b) in the eigenbasis of H.
    """
    dim = H.shape[0]
    _check_liouvillian_size(dim)
    E, V = np.linalg.eigh(H)
    omega = E[:, None] - E[None, :]
    L = -1j * (_left(H) - _right(H))
    for X, spec in zip(couplings, spectra):
        Xe = V.conj().T @ X @ V
        Y = V @ (Xe * spec(omega)) @ V.conj().T
        Yd = Y.conj().T
        # Y rho X + X rho Y^dag - X Y rho - rho Y^dag X
        L += np.kron(Y, X.T) + np.kron(X, Yd.T) - _left(X @ Y) - _right(Yd @ X)
    return L


def liouvillian_null_state(L: np.ndarray, dim: int, tol: float = 1e-9) -> DenseState:
    vals, vecs = np.linalg.eig(L)
    scale = max(1.0, float(np.abs(vals).max()))
    zero = np.flatnonzero(np.abs(vals) < tol * scale)
    if len(zero) != 1:
        raise DegenerateNESS(f"{len(zero)} stationary directions found")
    rho = vecs[:, zero[0]].reshape(dim, dim)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    rho = _polish_null(L, rho)
    return DenseState(rho)


def _polish_null(L, rho):
    # one step of inverse iteration sharpens the eigensolver output
    dim = rho.shape[0]
    v = rho.ravel()
    try:
        w = np.linalg.solve(L - 1e-13 * np.eye(L.shape[0]), v)
    except np.linalg.LinAlgError:
        return rho
    r = w.reshape(dim, dim)
    tr = np.trace(r)
    if not np.isfinite(tr) or abs(tr) == 0:
        return rho
    r = r / tr
    return 0.5 * (r + r.conj().T)


def dense_lindblad_ness(H_dense: np.ndarray, lindblad_ops) -> DenseState:
    L = lindblad_liouvillian(H_dense, lindblad_ops)
    return liouvillian_null_state(L, H_dense.shape[0])


def dense_redfield_ness(cfg) -> DenseState:
    """Stationary state of the dense Redfield generator for a RedfieldConfig."""
    from .redfield import coupling_vectors, ohmic_spectral

    N = cfg.N
    if N > 4:
        raise TooLarge("dense Redfield oracle is limited to N <= 4")
    H = dense_hamiltonian(N, cfg.params.gamma, cfg.params.h)
    X = majorana_linear_operators(coupling_vectors(cfg), N)
    spectra = [
        (lambda w, G=G, T=T: ohmic_spectral(w, G, T))
        for G, T in zip(cfg.Gammas, cfg.bath_temperatures)
    ]
    return liouvillian_null_state(redfield_liouvillian(H, X, spectra), H.shape[0])


def majorana_linear_operators(vectors, N: int) -> list[np.ndarray]:
    """Dense operators x . w for each coefficient vector x."""
    w = dense_majoranas(N)
    return [sum(c * wa for c, wa in zip(x, w) if c != 0) for x in vectors]


def gibbs_state(H_dense: np.ndarray, T: float) -> DenseState:
    if not T > 0:
        raise ValueError("Gibbs state needs T > 0")
    E, V = np.linalg.eigh(H_dense)
    if np.isinf(T):
        p = np.ones_like(E)
    else:
        p = np.exp(-(E - E.min()) / T)
    p /= p.sum()
    return DenseState((V * p) @ V.conj().T)


def dense_correlation_matrix(state: DenseState) -> np.ndarray:
    """C_ab = <w_a w_b> - delta_ab from a dense state."""
    w = dense_majoranas(state.n_sites)
    n = len(w)
    C = np.empty((n, n), dtype=complex)
    rho = state.rho
    for a in range(n):
        ra = rho @ w[a]
        for b in range(n):
            # tr(rho w_a w_b) = sum (rho w_a) * w_b^T
            C[a, b] = np.sum(ra * w[b].T)
    return C - np.eye(n)


def wick_check(state: DenseState, quadruple) -> float:
    a, b, c, d = quadruple
    if len({a, b, c, d}) != 4:
        raise ValueError("wick_check needs four distinct indices")
    w = dense_majoranas(state.n_sites)

    def two(i, j):
        return state.expect(w[i] @ w[j])

    four = state.expect(w[a] @ w[b] @ w[c] @ w[d])
    pf = two(a, b) * two(c, d) - two(a, c) * two(b, d) + two(a, d) * two(b, c)
    return float(abs(four - pf))


def max_wick_deviation(state: DenseState) -> float:
    """Largest wick_check deviation over all ordered-increasing quadruples."""
    n = 2 * state.n_sites
    w = dense_majoranas(state.n_sites)
    rho = state.rho
    two = np.array([[np.trace(rho @ w[i] @ w[j]) for j in range(n)] for i in range(n)])
    worst = 0.0
    for a, b, c, d in itertools.combinations(range(n), 4):
        four = np.trace(rho @ w[a] @ w[b] @ w[c] @ w[d])
        pf = two[a, b] * two[c, d] - two[a, c] * two[b, d] + two[a, d] * two[b, c]
        worst = max(worst, abs(four - pf))
    return float(worst)


def trace_distance(r1: DenseState, r2: DenseState) -> float:
    if r1.rho.shape != r2.rho.shape:
        raise DimensionMismatch("states act on different spaces")
    s = np.linalg.eigvalsh(r1.rho - r2.rho)
    return float(0.5 * np.abs(s).sum())
