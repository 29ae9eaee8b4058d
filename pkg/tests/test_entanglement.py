import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ness_lab.cstar import correlation_window
from ness_lab.entanglement import block_entropy, fit_log_scaling, mutual_information, qmi_scaling
from ness_lab.errors import DegenerateFit, NotAState
from ness_lab.majorana import majorana_from_pairs
from ness_lab.model import BathTemps, ModelParams


def _site(p):
    return majorana_from_pairs(np.array([[p]]), np.zeros((1, 1)))


def test_block_entropy_examples():
    assert block_entropy(np.zeros((6, 6))) == pytest.approx(3 * math.log(2), rel=1e-15)
    assert block_entropy(_site(1.0)) == pytest.approx(0.0, abs=1e-15)
    p = 0.3
    assert block_entropy(_site(p)) == pytest.approx(-p * math.log(p) - (1 - p) * math.log(1 - p), rel=1e-14)


def test_block_entropy_rejects_non_state():
    with pytest.raises(NotAState):
        block_entropy(1j * np.array([[0, 2.0], [-2.0, 0]]))


@given(st.floats(0.0, 1.0))
def test_block_entropy_swap_invariant(p):
    C = np.kron(np.eye(2), _site(p))
    P = np.eye(4)[[1, 0, 3, 2]]
    assert block_entropy(P @ C @ P.T) == pytest.approx(block_entropy(C), abs=1e-14)
    assert block_entropy(C) >= 0


def test_mutual_information_examples():
    assert mutual_information(np.zeros((8, 8))) == 0.0
    with pytest.raises(ValueError):
        mutual_information(np.zeros((6, 6)))


SIZES = [16, 32, 48, 64]


def test_equilibrium_qmi_saturates_while_ness_grows():
    eq = correlation_window(1, 128, ModelParams(0.5, 0.9), BathTemps.equal(0.1))
    neq = correlation_window(1, 128, ModelParams(0.5, 0.9), BathTemps(0.1, 1.0))
    fit_eq = fit_log_scaling(SIZES, qmi_scaling(eq, SIZES))
    vals = qmi_scaling(neq, SIZES)
    fit = fit_log_scaling(SIZES, vals)
    assert fit.slope > 0
    assert abs(fit_eq.slope) < 1e-3 * fit.slope
    assert fit.residual < 0.05 * fit.fitted_range
    assert all(v >= 0 for v in vals)


def test_fit_examples():
    n = np.array([2, 4, 8, 16, 32])
    fit = fit_log_scaling(n, 2 * np.log(n) + 1)
    assert fit.slope == pytest.approx(2, abs=1e-12)
    assert fit.intercept == pytest.approx(1, abs=1e-12)
    assert fit.residual < 1e-12
    assert fit_log_scaling(n, np.full(5, 0.7)).slope == pytest.approx(0, abs=1e-14)
    with pytest.raises(DegenerateFit):
        fit_log_scaling([4, 4, 4, 4], [1, 2, 3, 4])
    with pytest.raises(ValueError):
        fit_log_scaling([1, 2, 3], [1, 2, 3])
    with pytest.raises(ValueError):
        fit_log_scaling([1, 3, 2, 4], [1, 2, 3, 4])


@given(st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4))
def test_mutual_information_nonnegative(occ):
    G = np.diag(occ)
    C = majorana_from_pairs(G, np.zeros((4, 4)))
    assert mutual_information(C) >= 0
