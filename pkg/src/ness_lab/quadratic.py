"""Covariance-level engine for quadratic open fermionic dynamics.

A quadratic Hamiltonian H = w . Hmat w together with a reservoir matrix M
drives the Majorana correlation matrix through

    dC/dt = -2 X^T C - 2 C X + 8i M_i,      X = -2i Hmat + 2 M_r,

whose fixed point solves the Lyapunov equation X^T C + C X = 4i M_i.
For the XY chain Hmat is purely imaginary, so X is a real matrix and the
steady state is i times a real antisymmetric solution; the solver below
works entirely in real arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, SolveFailure, UnstableDrift
from .majorana import PairCorrelation, pairs_from_majorana

_TRSYL = sla.get_lapack_funcs("trsyl", dtype=np.float64)
_LEAF = 64


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    H: np.ndarray
    N: int

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        if H.shape != (2 * self.N, 2 * self.N):
            raise DimensionMismatch(f"H has shape {H.shape}, expected {(2 * self.N,) * 2}")
        if np.abs(H + H.T).max(initial=0.0) > 1e-14:
            raise ValueError("quadratic Hamiltonian matrix must be antisymmetric")
        if np.abs(H.real).max(initial=0.0) > 1e-14:
            raise ValueError("quadratic Hamiltonian matrix must be purely imaginary")
        object.__setattr__(self, "H", H)

    def single_particle_energies(self) -> np.ndarray:
        """Eigenvalues of 4 Hmat (they come in +/- eps pairs)."""
        return np.linalg.eigvalsh(4.0 * self.H)

    def block(self, first: int, count: int) -> "QuadraticHamiltonian":
        """Restriction to sites first .. first+count-1 (0-based)."""
        s = slice(2 * first, 2 * (first + count))
        return QuadraticHamiltonian(self.H[s, s], count)


@dataclass(frozen=True, eq=False)
class ReservoirMatrix:
    """Real and imaginary parts of the reservoir matrix M = M_r + i M_i.

    Lindblad reservoirs give a Hermitian positive semidefinite M.  Effective
    reservoirs of non-Lindblad generators (Redfield) are stored with
    ``lindblad=False``; then M_r may carry an antisymmetric part and only the
    antisymmetric part of M_i enters the dynamics.
    """

    M_r: np.ndarray
    M_i: np.ndarray
    lindblad: bool = True

    def __post_init__(self):
        M_r = np.asarray(self.M_r, dtype=float)
        M_i = np.asarray(self.M_i, dtype=float)
        if M_r.shape != M_i.shape or M_r.ndim != 2 or M_r.shape[0] != M_r.shape[1]:
            raise DimensionMismatch("M_r and M_i must be equal square matrices")
        object.__setattr__(self, "M_r", M_r)
        object.__setattr__(self, "M_i", M_i)
        if self.lindblad:
            M = self.M
            scale = max(1.0, float(np.abs(M).max(initial=0.0)))
            if np.abs(M - M.conj().T).max(initial=0.0) > 1e-12 * scale:
                raise ValueError("Lindblad reservoir matrix must be Hermitian")
            if M.shape[0] and np.linalg.eigvalsh(M).min() < -1e-10 * scale:
                raise ValueError("Lindblad reservoir matrix must be positive semidefinite")

    @classmethod
    def from_complex(cls, M, lindblad: bool = True) -> "ReservoirMatrix":
        M = np.asarray(M, dtype=complex)
        return cls(M.real.copy(), M.imag.copy(), lindblad)

    @classmethod
    def from_vectors(cls, vectors) -> "ReservoirMatrix":
        """M_jk = sum_mu conj(l_mu,j) l_mu,k for Lindblad operators L_mu = l_mu . w."""
        L = np.atleast_2d(np.asarray(vectors, dtype=complex))
        return cls.from_complex(L.conj().T @ L)

    @classmethod
    def zeros(cls, dim: int) -> "ReservoirMatrix":
        return cls(np.zeros((dim, dim)), np.zeros((dim, dim)))

    @property
    def M(self) -> np.ndarray:
        return self.M_r + 1j * self.M_i

    @property
    def dim(self) -> int:
        return self.M_r.shape[0]


@dataclass(frozen=True, eq=False)
class DriftMatrix:
    X: np.ndarray

    @cached_property
    def schur(self) -> tuple[np.ndarray, np.ndarray]:
        """Real Schur form X = U T U^T."""
        return sla.schur(self.X, output="real")

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        T, _ = self.schur
        return _quasi_triangular_eigvals(T)

    @property
    def spectral_abscissa(self) -> float:
        """Smallest real part over the spectrum of X (positive means decaying)."""
        return float(self.eigenvalues.real.min())

    @property
    def stable(self) -> bool:
        return self.spectral_abscissa > 0

    @property
    def dim(self) -> int:
        return self.X.shape[0]


def _quasi_triangular_eigvals(T: np.ndarray) -> np.ndarray:
    n = T.shape[0]
    out = []
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            out.extend(np.linalg.eigvals(T[i:i + 2, i:i + 2]))
            i += 2
        else:
            out.append(T[i, i])
            i += 1
    return np.asarray(out, dtype=complex)


def build_H_xy_open(N: int, gamma: float, h: float) -> QuadraticHamiltonian:
    """Hamiltonian matrix of the open XY chain, Hmat = A (x) sigma_y / 4 + i B (x) sigma_x / 4.

    A holds hopping 1/2 and field -h.  The pairing matrix is
    B_ij = (gamma/2)(delta_{i,j-1} - delta_{i,j+1}), the orientation for which
    w . Hmat w equals the spin Hamiltonian with the Jordan-Wigner string running
    over sites to the left.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    off = np.ones(N - 1)
    A = 0.5 * (np.diag(off, 1) + np.diag(off, -1)) - h * np.eye(N)
    B = 0.5 * gamma * (np.diag(off, 1) - np.diag(off, -1))
    sy = np.array([[0, -1j], [1j, 0]])
    sx = np.array([[0, 1], [1, 0]])
    H = 0.25 * np.kron(A, sy) + 0.25j * np.kron(B, sx)
    return QuadraticHamiltonian(H, N)


def drift(Hq: QuadraticHamiltonian, M: ReservoirMatrix) -> DriftMatrix:
    if M.dim != 2 * Hq.N:
        raise DimensionMismatch(f"reservoir matrix is {M.dim}x{M.dim}, Hamiltonian has 2N = {2 * Hq.N}")
    X = -2j * Hq.H + 2.0 * M.M_r
    if np.abs(X.imag).max(initial=0.0) > 1e-13:
        raise ValueError("drift matrix is expected to be real")
    return DriftMatrix(np.ascontiguousarray(X.real))


def _split_point(T: np.ndarray, k: int) -> int:
    # never cut through a 2x2 diagonal block
    if 0 < k < T.shape[0] and T[k, k - 1] != 0.0:
        k += 1
    return k


def _triangular_sylvester(A: np.ndarray, B: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Solve A^T Y + Y B = R for upper quasi-triangular A, B by recursive blocking."""
    m, n = R.shape
    if m <= _LEAF and n <= _LEAF:
        y, scale, info = _TRSYL(A, B, R, trana="T", tranb="N", isgn=1)
        if info < 0:
            raise SolveFailure(f"trsyl argument error {info}")
        return y / scale
    if n >= m:
        k = _split_point(B, n // 2)
        if k >= n:
            k = _split_point(B, n // 2 - 1)
        Y1 = _triangular_sylvester(A, B[:k, :k], R[:, :k])
        Y2 = _triangular_sylvester(A, B[k:, k:], R[:, k:] - Y1 @ B[:k, k:])
        return np.hstack([Y1, Y2])
    k = _split_point(A, m // 2)
    if k >= m:
        k = _split_point(A, m // 2 - 1)
    Y1 = _triangular_sylvester(A[:k, :k], B, R[:k])
    Y2 = _triangular_sylvester(A[k:, k:], B, R[k:] - A[:k, k:].T @ Y1)
    return np.vstack([Y1, Y2])


def solve_real_lyapunov(X: DriftMatrix, Q: np.ndarray) -> np.ndarray:
    """Bartels-Stewart solve of X^T Y + Y X = Q for real X, Q."""
    T, U = X.schur
    Qt = U.T @ Q @ U
    Y = _triangular_sylvester(T, T, Qt)
    return U @ Y @ U.T


def lyapunov_solve(X: DriftMatrix, M_i: np.ndarray, check: bool = True) -> np.ndarray:
    """Steady-state correlation matrix: X^T C + C X = 4i M_i.

    Raises UnstableDrift for a spectral abscissa <= 1e-12 and SolveFailure
    when the max-norm residual exceeds 1e-10 of the right-hand side (or the
    rounding level 4 n eps |X| |C| when that is larger, as for very weak coupling).
    """
    M_i = np.asarray(M_i, dtype=float)
    if M_i.shape != X.X.shape:
        raise DimensionMismatch("M_i and X differ in shape")
    if X.spectral_abscissa <= 1e-12:
        raise UnstableDrift(f"spectral abscissa {X.spectral_abscissa:.3g} is not positive")
    M_anti = 0.5 * (M_i - M_i.T)
    Q = 4.0 * M_anti
    Y = solve_real_lyapunov(X, Q)
    Y = 0.5 * (Y - Y.T)
    if check:
        n = X.dim
        x_max = np.abs(X.X).max(initial=0.0)
        for attempt in range(3):
            R = Q - (X.X.T @ Y + Y @ X.X)
            res = np.abs(R).max(initial=0.0)
            # relative bound, floored at the rounding error of forming the residual itself
            floor = 4.0 * n * np.finfo(float).eps * x_max * np.abs(Y).max(initial=0.0)
            bound = max(1e-10 * np.abs(Q).max(initial=0.0), floor)
            if res <= bound:
                break
            # iterative refinement; the Schur form is reused
            Y = Y + solve_real_lyapunov(X, R)
            Y = 0.5 * (Y - Y.T)
        else:
            raise SolveFailure(f"Lyapunov residual {res:.3g} exceeds {bound:.3g}")
    return 1j * Y


def propagate(C0, X: DriftMatrix, M_i, t: float, method: str = "closed") -> np.ndarray:
    """Correlation matrix after time t starting from C0.

    ``method="closed"`` uses C(t) = e^{-2X^T t}(C0 - C_inf)e^{-2Xt} + C_inf and
    needs a stable drift.  ``method="stepping"`` integrates the flow equation
    directly and works for any X.
    """
    C0 = np.asarray(C0, dtype=complex)
    M_i = np.asarray(M_i, dtype=float)
    if t == 0:
        return C0.copy()
    if method == "closed":
        C_inf = lyapunov_solve(X, M_i)
        E = sla.expm(-2.0 * X.X * t)
        return E.T @ (C0 - C_inf) @ E + C_inf
    if method == "stepping":
        from scipy.integrate import solve_ivp

        n = X.dim
        Xm = X.X
        src = 8.0 * (0.5 * (M_i - M_i.T))

        def rhs(_, y):
            Y = y.reshape(n, n)
            return (-2.0 * Xm.T @ Y - 2.0 * Y @ Xm + src).ravel()

        # C is i times a real matrix for every admissible state
        sol = solve_ivp(rhs, (0.0, t), C0.imag.ravel(), method="DOP853", rtol=1e-12, atol=1e-14)
        if not sol.success:
            raise SolveFailure(sol.message)
        return 1j * sol.y[:, -1].reshape(n, n) + C0.real
    raise ValueError(f"unknown propagation method {method!r}")


def sigma_z_profile(C) -> np.ndarray:
    """<sigma^z_m> = -i C_{2m-1, 2m} for every site."""
    C = np.asarray(C)
    return np.real(-1j * np.diagonal(C, offset=1)[::2])


def fermionic_pairs(C, l: int, m: int) -> PairCorrelation:
    """<f_l f_m> and <f_l^dag f_m> for 1-based sites l, m."""
    C = np.asarray(C)
    n = C.shape[0] // 2
    if not (1 <= l <= n and 1 <= m <= n):
        raise IndexError(f"sites must lie in 1..{n}")
    sites = sorted({l, m})
    idx = np.concatenate([[2 * s - 2, 2 * s - 1] for s in sites])
    G, F = pairs_from_majorana(C[np.ix_(idx, idx)])
    pos = {s: i for i, s in enumerate(sites)}
    return PairCorrelation(l, m, complex(F[pos[l], pos[m]]), complex(G[pos[l], pos[m]]))


def gibbs_covariance(Hq: QuadraticHamiltonian, T: float) -> np.ndarray:
    """Correlation matrix of exp(-H/T)/Z, equal to tanh(2 Hmat / T)."""
    lam, V = np.linalg.eigh(Hq.H)
    if T == 0:
        f = np.sign(lam)
    elif np.isinf(T):
        f = np.zeros_like(lam)
    else:
        f = np.tanh(2.0 * lam / T)
    C = (V * f) @ V.conj().T
    return 1j * np.imag(C)
