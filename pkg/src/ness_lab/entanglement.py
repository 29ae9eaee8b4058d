"""Von Neumann entropy and mutual information of Gaussian fermionic blocks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFit, NotAState

_CLAMP = 1e-9
_BOUND = 1e-6


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    residual: float
    fitted_range: float = 0.0

    def predict(self, n):
        return self.slope * np.log(n) + self.intercept


def block_entropy(C) -> float:
    """S = -sum (1 + lam)/2 log((1 + lam)/2) over the eigenvalues of the Hermitian C."""
    C = np.asarray(C)
    lam = np.linalg.eigvalsh(0.5 * (C + C.conj().T))
    if lam.size and (lam.min() < -1 - _BOUND or lam.max() > 1 + _BOUND):
        raise NotAState(f"correlation spectrum [{lam.min():.6g}, {lam.max():.6g}] leaves [-1, 1]")
    lam = np.clip(lam, -1.0, 1.0)
    p = 0.5 * (1.0 + lam)
    p = p[p > 1e-15]
    return float(max(-np.sum(p * np.log(p)), 0.0))


def mutual_information(C) -> float:
    """I(2n) = S(A) + S(B) - S(AB) for the two halves of a 4n x 4n block."""
    C = np.asarray(C)
    dim = C.shape[0]
    if dim % 4:
        raise ValueError("mutual information needs an even number of sites")
    half = dim // 2
    val = block_entropy(C[:half, :half]) + block_entropy(C[half:, half:]) - block_entropy(C)
    if val < -_CLAMP:
        raise NotAState(f"negative mutual information {val:.3g}")
    return max(val, 0.0)


def qmi_scaling(C_big, sizes) -> list[float]:
    """I(2n) for each n, taken from leading principal submatrices of one large window."""
    C_big = np.asarray(C_big)
    out = []
    for n in sizes:
        if 4 * n > C_big.shape[0]:
            raise ValueError(f"window too small for n = {n}")
        out.append(mutual_information(C_big[:4 * n, :4 * n]))
    return out


def fit_log_scaling(sizes, values) -> ScalingFit:
    """Least squares of values against ln(sizes)."""
    sizes = np.asarray(sizes, dtype=float)
    values = np.asarray(values, dtype=float)
    if sizes.shape != values.shape or sizes.ndim != 1:
        raise ValueError("sizes and values must be 1-d of equal length")
    if np.all(sizes == sizes[0]):
        raise DegenerateFit("all sizes are equal")
    if len(sizes) < 4:
        raise ValueError("at least four points are required")
    if np.any(np.diff(sizes) <= 0):
        raise ValueError("sizes must be strictly increasing")
    x = np.log(sizes)
    slope, intercept = np.polyfit(x, values, 1)
    resid = values - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    return ScalingFit(float(slope), float(intercept), rms, float(abs(slope) * (x[-1] - x[0])))
