import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from ness_lab.errors import DegenerateDispersion
from ness_lab.model import (
    BathTemps,
    ModelParams,
    bogoliubov,
    dispersion,
    fermi,
    fermi_derivative,
    mode_occupation,
    stationary_momentum,
    velocity,
)

gammas = st.floats(-0.95, 0.95)
fields = st.floats(0.0, 2.0)
momenta = st.floats(0.01, math.pi - 0.01)


def test_h_c():
    assert ModelParams(0.5, 0.9).h_c == pytest.approx(0.75)
    assert ModelParams(1.5, 0.0).h_c == pytest.approx(1.25)
    assert not ModelParams(1.5, 0.0).in_default_domain
    assert not ModelParams(0.5, -0.1).in_default_domain
    assert ModelParams(0.5, 0.1).in_default_domain


def test_bath_temps_validation():
    with pytest.raises(ValueError):
        BathTemps(-1.0, 1.0)
    assert BathTemps(0.0, math.inf).T_R == math.inf
    assert BathTemps.equal(0.3).is_equilibrium


@pytest.mark.parametrize("k, gamma, h, expected", [
    (0.0, 0.5, 0.5, 0.5),
    (math.pi, 0.5, 0.5, 1.5),
    (math.pi / 2, 0.5, 0.75, math.sqrt(0.8125)),
])
def test_dispersion_examples(k, gamma, h, expected):
    assert dispersion(k, ModelParams(gamma, h)) == pytest.approx(expected, abs=1e-15)


def test_velocity_example():
    assert velocity(math.pi / 2, ModelParams(0.5, 0.9)) == pytest.approx(0.9 / math.sqrt(1.06), abs=1e-12)


def test_velocity_vanishes_at_k0():
    p = ModelParams(0.5, 0.375)
    k0 = stationary_momentum(p)
    assert k0 == pytest.approx(math.pi / 3, abs=1e-15)
    assert abs(velocity(k0, p)) < 1e-15


def test_velocity_degenerate():
    with pytest.raises(DegenerateDispersion):
        velocity(0.0, ModelParams(0.5, 1.0))
    with pytest.raises(DegenerateDispersion):
        velocity(math.acos(0.3), ModelParams(0.0, 0.3))


@pytest.mark.parametrize("h, expected", [(0.375, math.pi / 3), (0.9, None), (0.75, None)])
def test_stationary_momentum(h, expected):
    k0 = stationary_momentum(ModelParams(0.5, h))
    if expected is None:
        assert k0 is None
    else:
        assert k0 == pytest.approx(expected, abs=1e-15)


def test_fermi_examples():
    assert fermi(0.0, 0.0) == 0.5
    assert fermi(0.0, 3.7) == 0.5
    assert fermi(1.0, 0.0) == 0.0
    assert fermi(-1.0, 0.0) == 1.0
    assert fermi(0.25, 1.0) == pytest.approx(1.0 / (1.0 + math.exp(0.25)), rel=1e-15)
    assert fermi(0.25, 1.0) == pytest.approx(0.437823499114201, abs=1e-12)
    assert fermi(5.0, math.inf) == 0.5


def test_fermi_saturates_without_overflow():
    with np.errstate(all="raise"):
        assert fermi(1000.0, 0.001) == 0.0
        assert fermi(-1000.0, 0.001) == 1.0


@given(st.floats(-5, 5), st.floats(0.05, 3.0), st.integers(1, 3))
def test_fermi_derivative_matches_difference(eps, T, order):
    s = 1e-3 * T
    f = lambda x: float(fermi(x, T))
    if order == 1:
        fd = (f(eps + s) - f(eps - s)) / (2 * s)
    elif order == 2:
        fd = (f(eps + s) - 2 * f(eps) + f(eps - s)) / s**2
    else:
        fd = (f(eps + 2 * s) - 2 * f(eps + s) + 2 * f(eps - s) - f(eps - 2 * s)) / (2 * s**3)
    scale = T ** -order
    assert float(fermi_derivative(eps, T, order)) == pytest.approx(fd, abs=2e-4 * scale)


def test_mode_occupation_examples():
    p = ModelParams(0.5, 0.9)
    b = BathTemps(0.3, 1.0)
    k = np.linspace(0.05, math.pi - 0.05, 50)
    assert np.all(mode_occupation(k, p, b) == fermi(dispersion(k, p), 0.3))
    q = ModelParams(0.5, 0.375)
    eps = dispersion(k, q)
    occ = mode_occupation(k, q, b)
    below = k < math.pi / 3
    assert np.all(occ[below] == fermi(eps[below], 1.0))
    assert np.all(occ[~below] == fermi(eps[~below], 0.3))


@given(momenta, gammas, fields, st.floats(0.0, 2.0))
def test_mode_occupation_equal_baths(k, gamma, h, T):
    p = ModelParams(gamma, h)
    assume(dispersion(k, p) > 1e-6 and abs(velocity(k, p)) > 0)
    assert mode_occupation(k, p, BathTemps.equal(T)) == fermi(dispersion(k, p), T)


def test_bogoliubov_examples():
    pair = bogoliubov(math.acos(0.3), ModelParams(0.5, 0.3))
    assert pair.u == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert pair.v == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    pair = bogoliubov(math.pi / 2, ModelParams(0.5, 0.0))
    assert pair.u == pytest.approx(pair.v, abs=1e-15)
    p = ModelParams(0.5, 0.75)
    k = math.pi / 4
    pair = bogoliubov(k, p)
    eps = float(dispersion(k, p))
    assert pair.u**2 - pair.v**2 == pytest.approx((math.cos(k) - 0.75) / eps, abs=1e-14)
    assert 2 * pair.u * pair.v == pytest.approx(0.5 * math.sin(k) / eps, abs=1e-14)


@given(momenta, gammas, fields)
def test_dispersion_nonnegative_and_velocity_is_derivative(k, gamma, h):
    p = ModelParams(gamma, h)
    assert dispersion(k, p) >= 0
    assume(min(dispersion(k + d, p) for d in (-1e-4, 0, 1e-4)) > 1e-3)
    s = 1e-6
    fd = (dispersion(k + s, p) - dispersion(k - s, p)) / (2 * s)
    assert velocity(k, p) == pytest.approx(fd, abs=1e-8)


@given(gammas, st.floats(0.0, 2.0))
def test_velocity_sign_structure(gamma, h):
    p = ModelParams(gamma, h)
    assume(abs(h - p.h_c) > 1e-3 and abs(h - 1) > 1e-3 and gamma != 0)
    k = np.linspace(1e-3, math.pi - 1e-3, 400)
    v = velocity(k, p)
    if h > p.h_c:
        assert np.all(v > 0)
    else:
        changes = np.count_nonzero(np.diff(np.sign(v)) != 0)
        assert changes == 1


@given(momenta, gammas, fields)
def test_bogoliubov_normalization(k, gamma, h):
    p = ModelParams(gamma, h)
    assume(dispersion(k, p) > 1e-10)
    pair = bogoliubov(k, p)
    assert pair.u**2 + pair.v**2 == pytest.approx(1.0, abs=1e-12)
