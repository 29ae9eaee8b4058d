import inspect
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ness_lab import cstar
from ness_lab.cstar import (
    central_difference,
    correlation_window,
    d3Im_fdf_dh3,
    dIm_fdf_dh,
    estimate_jump,
    first_derivative_jump,
    im_fdf,
    magnetization,
    ness_fdf,
    ness_ff,
    susceptibility,
    third_derivative_jump,
)
from ness_lab.errors import (
    DivergentSusceptibility,
    IsotropicPoint,
    OnCriticalField,
    OutsideValidity,
    PoorFit,
)
from ness_lab.majorana import pairs_from_majorana
from ness_lab.model import BathTemps, ModelParams
from ness_lab.quadrature import QuadratureConfig

# independent mpmath quadrature at 30 digits (gamma = 0.5, T_L = 0.01, T_R = 1 unless noted)
FF_12 = 0.110131717898636864357742196221
RE_FDF_12 = -0.125987807143809813860334077663
IM_FDF_12 = -0.0876564601050672349918831818663
MAG_H2 = 0.981499592048815020770569136171
CHI_H12_T01 = 0.427220556602770281755177889999
DIM_H05 = -0.127124306961122269417305708757
DIM_H09 = 0.041618624662626292619186008971

P09 = ModelParams(0.5, 0.9)
NEQ = BathTemps(0.01, 1.0)


def test_ness_ff_examples():
    assert ness_ff(1, 3, ModelParams(0.0, 0.4), NEQ) == 0.0
    assert ness_ff(2, 2, P09, NEQ) == 0.0
    assert ness_ff(1, 2, P09, NEQ) == pytest.approx(FF_12, abs=1e-12)
    assert ness_ff(2, 1, P09, NEQ) == pytest.approx(-FF_12, abs=1e-12)


def test_ness_fdf_examples():
    z = ness_fdf(1, 2, P09, NEQ)
    assert z.real == pytest.approx(RE_FDF_12, abs=1e-12)
    assert z.imag == pytest.approx(IM_FDF_12, abs=1e-12)
    assert ness_fdf(1, 3, P09, BathTemps(0.4, 0.4)).imag == 0.0
    assert ness_fdf(3, 3, ModelParams(0.5, 1e4), NEQ).real == pytest.approx(1.0, abs=1e-3)
    # hermiticity of <f_l^dag f_m>
    assert ness_fdf(2, 1, P09, NEQ) == pytest.approx(z.conjugate(), abs=1e-13)


def test_magnetization_examples():
    assert magnetization(ModelParams(0.5, 0.0), NEQ) == pytest.approx(0.0, abs=1e-13)
    assert magnetization(ModelParams(0.5, 1e4), NEQ) == pytest.approx(1.0, abs=1e-3)
    assert magnetization(ModelParams(0.5, 2.0), BathTemps.equal(0.01)) == pytest.approx(MAG_H2, abs=1e-12)


def test_magnetization_has_no_site_argument():
    params = inspect.signature(magnetization).parameters
    assert list(params) == ["p", "b", "q"]


def test_susceptibility_examples():
    with pytest.raises(DivergentSusceptibility):
        susceptibility(ModelParams(0.5, 1.0), BathTemps.equal(0.0))
    with pytest.raises(DivergentSusceptibility):
        susceptibility(ModelParams(0.5, 1.0), BathTemps(0.0, 1.0))
    assert susceptibility(ModelParams(0.5, 1e3), NEQ) == pytest.approx(0.0, abs=1e-5)
    assert susceptibility(ModelParams(0.5, 1.2), BathTemps.equal(0.1)) == pytest.approx(CHI_H12_T01, abs=1e-11)


def test_susceptibility_log_in_temperature():
    Ts = np.array([1e-2, 1e-3, 1e-4])
    chi = np.array([susceptibility(ModelParams(0.5, 1.0), BathTemps.equal(T)) for T in Ts])
    x = np.log(1 / Ts)
    a, b = np.polyfit(x, chi, 1)
    resid = chi - (a * x + b)
    assert a > 0
    assert np.sqrt(np.mean(resid**2)) < 0.01 * (chi.max() - chi.min())


def test_isotropic_susceptibility_zero_temperature():
    p = ModelParams(0.0, 0.6)
    # each zero-temperature bath contributes the Fermi-point term 1/(pi sqrt(1 - h^2))
    assert susceptibility(p, BathTemps(0.0, 0.0)) == pytest.approx(2 / (math.pi * 0.8), rel=1e-10)
    assert susceptibility(p, BathTemps(0.0, math.inf)) == pytest.approx(1 / (math.pi * 0.8), rel=1e-10)
    assert susceptibility(ModelParams(0.0, 1.3), BathTemps(0.0, 0.0)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DivergentSusceptibility):
        susceptibility(ModelParams(0.0, 1.0), BathTemps(0.0, 0.0))


@settings(max_examples=12)
@given(st.floats(-0.9, 0.9), st.floats(0.05, 1.8), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_susceptibility_is_derivative_of_magnetization(gamma, h, TL, TR):
    assume(abs(gamma) > 0.05 and abs(h - 1) > 0.05)
    p, b = ModelParams(gamma, h), BathTemps(TL, TR)
    fd = central_difference(lambda x: magnetization(p.with_h(x), b), h, 1e-3)
    assert susceptibility(p, b) == pytest.approx(fd, abs=1e-6)


def test_dIm_fdf_dh_examples():
    assert dIm_fdf_dh(1, 2, P09, BathTemps.equal(0.2)) == 0.0
    with pytest.raises(OnCriticalField):
        dIm_fdf_dh(1, 2, ModelParams(0.5, 0.75), NEQ)
    assert dIm_fdf_dh(1, 2, P09, NEQ) == pytest.approx(DIM_H09, abs=1e-11)
    assert dIm_fdf_dh(1, 2, ModelParams(0.5, 0.5), NEQ) == pytest.approx(DIM_H05, abs=1e-11)


def test_dIm_fdf_dh_matches_finite_difference():
    q = cstar.FD_QUADRATURE
    for h in (0.3, 0.6, 0.9, 1.2):
        fd = central_difference(lambda x: im_fdf(1, ModelParams(0.5, x), NEQ, q), h, 1e-4)
        assert dIm_fdf_dh(1, 2, ModelParams(0.5, h), NEQ, q) == pytest.approx(fd, abs=1e-6)


def test_first_derivative_jump_formula():
    p = ModelParams(0.5, 0.75)
    # (m - l)(f_L(gamma^2) - f_R(gamma^2)) / (pi h_c), written out directly
    fL = 1 / (math.exp(0.25 / 0.01) + 1)
    fR = 1 / (math.exp(0.25 / 1.0) + 1)
    assert first_derivative_jump(1, 2, p, NEQ) == pytest.approx((fL - fR) / (math.pi * 0.75), rel=1e-13)
    below = dIm_fdf_dh(1, 2, p.with_h(0.75 - 1e-7), NEQ)
    above = dIm_fdf_dh(1, 2, p.with_h(0.75 + 1e-7), NEQ)
    assert below - above == pytest.approx(first_derivative_jump(1, 2, p, NEQ), rel=1e-4)


def test_d3_examples():
    assert d3Im_fdf_dh3(1, 2, ModelParams(0.5, 1.2), BathTemps.equal(0.3)) == 0.0
    with pytest.raises(OutsideValidity):
        d3Im_fdf_dh3(1, 2, ModelParams(0.5, 0.7), NEQ)
    b = BathTemps(0.1, 1.0)
    q = cstar.FD_QUADRATURE
    fd = central_difference(lambda x: im_fdf(1, ModelParams(0.5, x), b, q), 1.2, 1e-2, order=3)
    assert d3Im_fdf_dh3(1, 2, ModelParams(0.5, 1.2), b, q) == pytest.approx(fd, rel=1e-4)


@pytest.mark.parametrize("h", [0.85, 0.95, 1.1, 1.5])
def test_d3_matches_finite_difference(h):
    b = BathTemps(0.1, 1.0)
    q = cstar.FD_QUADRATURE
    fd = central_difference(lambda x: im_fdf(1, ModelParams(0.5, x), b, q), h, 1e-2, order=3)
    assert d3Im_fdf_dh3(1, 2, ModelParams(0.5, h), b, q) == pytest.approx(fd, rel=1e-4)


def test_third_derivative_jump_examples():
    b = BathTemps(0.1, 1.0)
    assert third_derivative_jump(1, 2, 0.5, b) == pytest.approx(9 / (2 * math.pi * 0.25), rel=1e-15)
    assert third_derivative_jump(1, 2, 0.5, b) == pytest.approx(5.729578, abs=1e-6)
    assert third_derivative_jump(1, 3, 0.5, b) == pytest.approx(11.459156, abs=1e-6)
    assert third_derivative_jump(1, 2, 0.5, BathTemps.equal(0.3)) == 0.0
    with pytest.raises(IsotropicPoint):
        third_derivative_jump(1, 2, 0.0, b)
    with pytest.raises(ValueError):
        third_derivative_jump(1, 2, 0.5, BathTemps(0.0, 1.0))


def test_correlation_window_examples():
    C = correlation_window(1, 3, P09, BathTemps(math.inf, math.inf))
    assert np.abs(C).max() < 1e-14
    C = correlation_window(1, 4, P09, BathTemps.equal(0.2))
    G, F = pairs_from_majorana(C)
    assert np.abs(G.imag).max() < 1e-14 and np.abs(F.imag).max() < 1e-14
    C = correlation_window(1, 2, P09, BathTemps(0.1, 1.0))
    assert np.abs(C - C.conj().T).max() < 1e-12
    assert np.abs(C.real).max() == 0.0
    lam = np.linalg.eigvalsh(C)
    assert lam.min() >= -1 and lam.max() <= 1


def test_correlation_window_matches_pairs():
    C = correlation_window(1, 5, P09, NEQ)
    G, F = pairs_from_majorana(C)
    for l, m in ((1, 2), (2, 4), (1, 5)):
        assert G[l - 1, m - 1] == pytest.approx(ness_fdf(l, m, P09, NEQ), abs=1e-12)
        assert F[l - 1, m - 1].real == pytest.approx(ness_ff(l, m, P09, NEQ), abs=1e-12)


@settings(max_examples=10)
@given(st.floats(-0.9, 0.9), st.floats(0.0, 1.6), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_correlation_window_is_a_state(gamma, h, TL, TR):
    assume(abs(h - 1) > 1e-3 and abs(h - abs(1 - gamma**2)) > 1e-3)
    assume(not (gamma == 0 and abs(h) <= 1))
    C = correlation_window(1, 6, ModelParams(gamma, h), BathTemps(TL, TR))
    assert np.abs(C - C.conj().T).max() < 1e-12
    assert np.abs((1j * C).imag).max() < 1e-15
    assert np.abs(1j * C + (1j * C).T).max() < 1e-12
    lam = np.linalg.eigvalsh(C)
    assert lam.min() > -1 - 1e-9 and lam.max() < 1 + 1e-9


@settings(max_examples=10)
@given(st.integers(1, 4), st.integers(1, 4), st.floats(-0.9, 0.9), st.floats(0.0, 1.6),
       st.floats(0.01, 2.0), st.floats(0.01, 2.0))
def test_real_parts_are_equilibrium_averages(l, m, gamma, h, TL, TR):
    assume(abs(h - 1) > 1e-3 and not (gamma == 0 and abs(h) <= 1))
    p = ModelParams(gamma, h)
    avg = 0.5 * (ness_fdf(l, m, p, BathTemps.equal(TL)).real + ness_fdf(l, m, p, BathTemps.equal(TR)).real)
    assert ness_fdf(l, m, p, BathTemps(TL, TR)).real == pytest.approx(avg, abs=1e-11)
    avg = 0.5 * (ness_ff(l, m, p, BathTemps.equal(TL)) + ness_ff(l, m, p, BathTemps.equal(TR)))
    assert ness_ff(l, m, p, BathTemps(TL, TR)) == pytest.approx(avg, abs=1e-11)
    assert abs(ness_fdf(l, m, p, BathTemps.equal(TL)).imag) < 1e-9


def test_estimate_jump_step():
    est = estimate_jump(lambda h: 0.3 + 2.0 * (h > 1.0), 1.0, 0.1, degree=2)
    assert est.jump == pytest.approx(2.0, abs=1e-10)
    assert est.left == pytest.approx(0.3, abs=1e-10)


def test_estimate_jump_smooth_polynomial():
    est = estimate_jump(lambda h: 1 - 2 * h + 3 * h**2, 0.5, 0.1, degree=2, strict=False)
    assert abs(est.jump) <= max(est.residual, 1e-12)


def test_estimate_jump_poor_fit():
    with pytest.raises(PoorFit):
        estimate_jump(lambda h: 1e-3 * (h > 0) + math.sin(2000 * h), 0.0, 0.1, degree=2)
    with pytest.raises(ValueError):
        estimate_jump(lambda h: h, 0.0, 0.1, degree=5)


def test_estimate_jump_on_first_derivative():
    p = ModelParams(0.5, 0.75)
    est = estimate_jump(lambda h: dIm_fdf_dh(1, 2, p.with_h(h), NEQ, cstar.FD_QUADRATURE), 0.75, 1e-2, 2, 8, 1e-3)
    assert -est.jump == pytest.approx(first_derivative_jump(1, 2, p, NEQ), rel=1e-4)


def test_central_difference_orders():
    assert central_difference(math.sin, 0.3) == pytest.approx(math.cos(0.3), abs=1e-12)
    assert central_difference(math.sin, 0.3, 1e-2, 3) == pytest.approx(-math.cos(0.3), abs=1e-8)
    with pytest.raises(ValueError):
        central_difference(math.sin, 0.3, 1e-2, 2)


def test_quadrature_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(extra_splits=(4.0,))
    q = QuadratureConfig(extra_splits=(0.3, 1.2))
    assert ness_ff(1, 2, P09, NEQ, q) == pytest.approx(FF_12, abs=1e-12)
