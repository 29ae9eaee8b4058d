"""NESS observables of the infinite XY chain between two thermal half-chains.

Every quantity is a momentum integral over [0, pi] evaluated with the
adaptive rule in :mod:`ness_lab.quadrature`.  Right movers (v_k > 0) carry
the left bath's Fermi factor and left movers the right one, so equilibrium
parts are averages of the two baths and the nonequilibrium content sits in
Im <f_l^dag f_m>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DivergentSusceptibility,
    IsotropicPoint,
    OnCriticalField,
    OutsideValidity,
    PoorFit,
)
from .majorana import PairCorrelation, majorana_from_pairs
from .model import (
    BathTemps,
    ModelParams,
    dispersion,
    fermi,
    fermi_derivative,
    sech2_half,
    stationary_momentum,
    tanh_half,
    velocity_sign,
)
from .quadrature import QuadratureConfig, integrate

_ENDPOINT_SPLITS = tuple(10.0**-j for j in range(1, 9))
# tight enough that third differences with steps ~1e-4 stay clean
FD_QUADRATURE = QuadratureConfig(rel_tol=1e-13, abs_tol=1e-14, max_subdivisions=5000)


def split_points(p: ModelParams, extra=()) -> list[float]:
    """Momenta where the integrands have kinks or sharp features."""
    pts = list(extra)
    k0 = stationary_momentum(p)
    if k0 is not None:
        pts.append(k0)
    if p.gamma == 0 and abs(p.h) <= 1:
        pts.append(math.acos(p.h))
    if abs(p.h - 1) < 0.2:
        pts.extend(_ENDPOINT_SPLITS)
    if abs(p.h + 1) < 0.2:
        pts.extend(math.pi - s for s in _ENDPOINT_SPLITS)
    return sorted(s for s in set(pts) if 0 < s < math.pi)


def _quad(f, p: ModelParams, q: QuadratureConfig | None):
    value, _ = integrate(f, 0.0, math.pi, split_points(p), q)
    return value


def _safe_div(num, den):
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def _active(b: BathTemps):
    # infinite temperature baths contribute tanh = 0
    return [T for T in b if not math.isinf(T)]


def _tanh_sum(eps, b: BathTemps):
    out = np.zeros_like(eps)
    for T in _active(b):
        out = out + tanh_half(eps, T)
    return out


def _fermi_difference(eps, b: BathTemps, order: int = 0):
    if order == 0:
        return fermi(eps, b.T_L) - fermi(eps, b.T_R)
    return fermi_derivative(eps, b.T_L, order) - fermi_derivative(eps, b.T_R, order)


def _ff_integrand(d: np.ndarray, p: ModelParams, b: BathTemps):
    d = np.asarray(d, dtype=float)

    def f(k):
        eps = dispersion(k, p)
        base = _safe_div(p.gamma * np.sin(k), eps) * _tanh_sum(eps, b) / (4.0 * math.pi)
        return np.sin(np.outer(d, k)) * base

    return f


def _re_fdf_integrand(d, p: ModelParams, b: BathTemps):
    d = np.asarray(d, dtype=float)

    def f(k):
        eps = dispersion(k, p)
        base = -_safe_div(np.cos(k) - p.h, eps) * _tanh_sum(eps, b) / (4.0 * math.pi)
        return np.cos(np.outer(d, k)) * base

    return f


def _im_fdf_integrand(d, p: ModelParams, b: BathTemps):
    d = np.asarray(d, dtype=float)

    def f(k):
        eps = dispersion(k, p)
        base = velocity_sign(k, p) * _fermi_difference(eps, b) / (2.0 * math.pi)
        return np.sin(np.outer(d, k)) * base

    return f


def ness_ff(l: int, m: int, p: ModelParams, b: BathTemps, q: QuadratureConfig | None = None) -> float:
    """<f_l f_m> (real); antisymmetric in l, m."""
    d = m - l
    if d == 0 or p.gamma == 0:
        return 0.0
    return float(_quad(_ff_integrand([d], p, b), p, q)[0])


def ness_fdf(l: int, m: int, p: ModelParams, b: BathTemps, q: QuadratureConfig | None = None) -> complex:
    """<f_l^dag f_m>; the imaginary part vanishes in equilibrium."""
    d = m - l
    re = float(_quad(_re_fdf_integrand([d], p, b), p, q)[0]) + (0.5 if d == 0 else 0.0)
    if d == 0 or b.is_equilibrium:
        return complex(re, 0.0)
    im = float(_quad(_im_fdf_integrand([d], p, b), p, q)[0])
    return complex(re, im)


def ness_pair(l: int, m: int, p: ModelParams, b: BathTemps, q: QuadratureConfig | None = None) -> PairCorrelation:
    return PairCorrelation(l, m, complex(ness_ff(l, m, p, b, q)), ness_fdf(l, m, p, b, q))


def im_fdf(d: int, p: ModelParams, b: BathTemps, q: QuadratureConfig | None = None) -> float:
    """Im <f_l^dag f_{l+d}> as a plain float (the quantity scanned in h)."""
    if d == 0 or b.is_equilibrium:
        return 0.0
    return float(_quad(_im_fdf_integrand([d], p, b), p, q)[0])


def magnetization(p: ModelParams, b: BathTemps, q: QuadratureConfig | None = None) -> float:
    """<sigma^z>, identical on every site of the infinite chain."""

    def f(k):
        eps = dispersion(k, p)
        return _safe_div(p.h - np.cos(k), eps) * _tanh_sum(eps, b) / (2.0 * math.pi)

    return float(_quad(f, p, q))


def _check_divergence(p: ModelParams, b: BathTemps) -> None:
    if min(b) == 0 and abs(abs(p.h) - 1.0) < 1e-12:
        raise DivergentSusceptibility(f"chi diverges at gamma={p.gamma}, h={p.h} with a zero-temperature bath")


def susceptibility(p: ModelParams, b: BathTemps, q: QuadratureConfig | None = None) -> float:
    """d<sigma^z>/dh.

    A zero-temperature bath at gamma = 0 and |h| < 1 contributes the
    Fermi-point term 1/(pi sqrt(1 - h^2)) on top of the regular integral.
    """
    _check_divergence(p, b)
    temps = _active(b)

    def f(k):
        eps = dispersion(k, p)
        hc = p.h - np.cos(k)
        # (h - cos k)^2 / eps^2 -> 1 at the Fermi points of the isotropic chain
        ratio = np.where(eps > 0, hc**2 / np.where(eps > 0, eps, 1.0) ** 2, 1.0 if p.gamma == 0 else 0.0)
        curv = _safe_div(p.gamma**2 * np.sin(k) ** 2, eps**3)
        out = np.zeros_like(eps)
        for T in temps:
            out = out + curv * tanh_half(eps, T)
            if T > 0:
                out = out + ratio * sech2_half(eps, T) / (2.0 * T)
        return out / (2.0 * math.pi)

    chi = float(_quad(f, p, q))
    if p.gamma == 0 and abs(p.h) < 1:
        chi += sum(1 for T in b if T == 0) / (math.pi * math.sqrt(1.0 - p.h**2))
    return chi


def dIm_fdf_dh(l: int, m: int, p: ModelParams, b: BathTemps, q: QuadratureConfig | None = None) -> float:
    """h-derivative of Im <f_l^dag f_m> including the moving-node boundary term."""
    if abs(abs(p.h) - p.h_c) < 1e-12:
        raise OnCriticalField(f"h = {p.h} sits on the critical field {p.h_c}")
    d = m - l
    if d == 0 or b.is_equilibrium:
        return 0.0

    def f(k):
        eps = dispersion(k, p)
        a = _safe_div(p.h - np.cos(k), eps)
        return np.sin(d * k) * velocity_sign(k, p) * a * _fermi_difference(eps, b, 1) / (2.0 * math.pi)

    val = float(_quad(f, p, q))
    k0 = stationary_momentum(p)
    if k0 is not None:
        a = 1.0 - p.gamma**2
        s0 = math.copysign(1.0, p.h - a)
        eps0 = float(dispersion(k0, p))
        diff = float(_fermi_difference(np.array([eps0]), b)[0])
        val += -s0 * math.sin(k0 * d) * diff / (math.pi * a * math.sin(k0))
    return val


def d3Im_fdf_dh3(l: int, m: int, p: ModelParams, b: BathTemps, q: QuadratureConfig | None = None) -> float:
    """Third h-derivative of Im <f_l^dag f_m>; closed form valid for h > h_c."""
    if p.h <= p.h_c:
        raise OutsideValidity(f"closed form needs h > h_c = {p.h_c}, got h = {p.h}")
    d = m - l
    if d == 0 or b.is_equilibrium:
        return 0.0
    g2 = p.gamma**2

    def f(k):
        eps = dispersion(k, p)
        s2 = np.sin(k) ** 2
        a = _safe_div(p.h - np.cos(k), eps)
        bb = _safe_div(g2 * s2, eps**3)
        c = _safe_div(g2 * s2 * a, eps**4)
        D1 = _fermi_difference(eps, b, 1)
        D2 = _fermi_difference(eps, b, 2)
        D3 = _fermi_difference(eps, b, 3)
        return np.sin(d * k) * (D3 * a**3 + 3.0 * D2 * a * bb - 3.0 * D1 * c) / (2.0 * math.pi)

    return float(_quad(f, p, q))


def third_derivative_jump(l: int, m: int, gamma: float, b: BathTemps) -> float:
    """Closed-form jump (value at h = 1+) - (value at h = 1-) of the third derivative."""
    if gamma == 0:
        raise IsotropicPoint("the third-derivative jump is absent at gamma = 0")
    if not (b.T_L > 0 and b.T_R > 0):
        raise ValueError("the jump formula needs positive temperatures")
    return (m - l) / (2.0 * math.pi * gamma**2) * (1.0 / b.T_L - 1.0 / b.T_R)


def first_derivative_jump(l: int, m: int, p: ModelParams, b: BathTemps) -> float:
    """Limit from below minus limit from above of dIm<f^dag f>/dh at h = h_c."""
    eps = abs(1.0 - p.h_c)
    diff = float(_fermi_difference(np.array([eps]), b)[0])
    return (m - l) * diff / (math.pi * p.h_c)


def correlation_window(first: int, n: int, p: ModelParams, b: BathTemps,
                       q: QuadratureConfig | None = None) -> np.ndarray:
    """Majorana correlation matrix of n contiguous sites (2n x 2n).

    Translation invariance makes every entry a function of m - l, so all
    distances are integrated together as one vector-valued integrand.
    """
    if n < 1:
        raise ValueError("block size must be at least 1")
    d = np.arange(n)
    if p.gamma != 0:
        ff = _quad(_ff_integrand(d, p, b), p, q)
    else:
        ff = np.zeros(n)
    re = _quad(_re_fdf_integrand(d, p, b), p, q)
    re[0] += 0.5
    im = np.zeros(n) if b.is_equilibrium else _quad(_im_fdf_integrand(d, p, b), p, q)
    idx = np.arange(n)
    D = idx[None, :] - idx[:, None]
    A = np.abs(D)
    sgn = np.sign(D)
    G = re[A] + 1j * sgn * im[A]
    F = sgn * ff[A]
    C = majorana_from_pairs(G, F)
    return 1j * C.imag


def fd_third_derivative_jump(l: int, m: int, gamma: float, b: BathTemps, h_star: float = 1.0,
                             degree: int = 2, n_points: int = 8) -> JumpEstimate:
    """Third-derivative jump at h_star from finite differences of Im <f_l^dag f_m> alone.

    The one-sided structure lives on an h-scale set by the colder bath, so
    the stencil step is min(T)/100 and the samples cover offsets of 3 to 15
    steps, keeping every stencil on one side of h_star.
    """
    T = min(b)
    if not T > 0:
        raise ValueError("finite-difference jump needs positive temperatures")
    s = T / 100.0
    q = FD_QUADRATURE
    d = m - l

    def third(h):
        return central_difference(lambda x: im_fdf(d, ModelParams(gamma, x), b, q), h, s, 3, richardson=False)

    return estimate_jump(third, h_star, 15 * s, degree, n_points, 3 * s)


# --- finite differences and jump extraction ---------------------------------

def central_difference(f, x: float, step: float = 1e-3, order: int = 1, richardson: bool = True) -> float:
    """Central difference of order 1 or 3 with an optional Richardson level."""

    def raw(s):
        if order == 1:
            return (f(x + s) - f(x - s)) / (2.0 * s)
        if order == 3:
            return (f(x + 2 * s) - 2.0 * f(x + s) + 2.0 * f(x - s) - f(x - 2 * s)) / (2.0 * s**3)
        raise ValueError("order must be 1 or 3")

    if not richardson:
        return raw(step)
    return (4.0 * raw(0.5 * step) - raw(step)) / 3.0


@dataclass(frozen=True)
class JumpEstimate:
    left: float
    right: float
    jump: float
    residual: float
    stderr: float = 0.0

    def significant(self, reference: float = 0.0, sigmas: float = 3.0, fraction: float = 0.1) -> bool:
        """True when the jump exceeds ``sigmas`` standard errors and ``fraction`` of |reference|."""
        return abs(self.jump) > sigmas * self.stderr and abs(self.jump) > fraction * abs(reference)


def estimate_jump(f, h_star: float, window: float, degree: int = 2, n_points: int | None = None,
                  min_offset: float = 0.0, strict: bool = True) -> JumpEstimate:
    """One-sided polynomial extrapolation of f to h_star.

    Samples ``n_points`` offsets in [min_offset, window] on each side (the
    default grid j*window/n avoids h_star itself), fits polynomials of the
    given degree and reports right limit minus left limit.  PoorFit is raised
    when the combined RMS residual exceeds 10% of |jump| and is not at
    rounding level, unless ``strict`` is off (used when the jump is expected
    to vanish).  ``stderr`` is the least-squares standard error of the
    difference of the two extrapolated limits.
    """
    if not 0 <= degree <= 4:
        raise ValueError("degree must lie in 0..4")
    n = max(degree + 3, n_points or 0)
    if min_offset > 0:
        offs = np.linspace(min_offset, window, n)
    else:
        offs = window * np.arange(1, n + 1) / n
    left_vals = np.array([f(h_star - o) for o in offs])
    right_vals = np.array([f(h_star + o) for o in offs])
    V = np.vander(offs, degree + 1, increasing=True)
    # variance factor of the intercept in ordinary least squares
    c00 = float(np.linalg.inv(V.T @ V)[0, 0])
    dof = max(n - degree - 1, 1)
    limits, rms, se = [], [], []
    for vals in (left_vals, right_vals):
        coef, *_ = np.linalg.lstsq(V, vals, rcond=None)
        resid = V @ coef - vals
        limits.append(float(coef[0]))
        rms.append(float(np.sqrt(np.mean(resid**2))))
        se.append(math.sqrt(float(resid @ resid) / dof * c00))
    left, right = limits
    jump = right - left
    residual = math.hypot(*rms)
    scale = float(np.abs(np.concatenate([left_vals, right_vals])).max(initial=0.0))
    if strict and residual > 0.1 * abs(jump) and residual > 1e-9 * max(scale, 1e-300):
        raise PoorFit(f"fit residual {residual:.3g} exceeds 10% of the jump {jump:.3g}")
    return JumpEstimate(left, right, jump, residual, math.hypot(*se))
