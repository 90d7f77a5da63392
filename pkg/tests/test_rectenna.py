import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from config import RectennaParams
from errors import DimensionMismatch, OddOrder
from rectenna import (
    beta, dc_voltage_branch, dc_voltage_from_gain, gain_to_power_rfc, harmonic_moment, power_dcc, power_rfc,
    voltage_coefficients, zeta,
)

SAMPLES = np.linspace(0.0, 2 * np.pi, 512, endpoint=False)


def _time_average(amplitude: complex, i: int) -> float:
    """(1/T)∫ (Re{A e^{jωt}})^i dt по равномерной сетке из 512 точек."""
    return float(np.mean(np.real(amplitude * np.exp(1j * SAMPLES)) ** i))


def _voltage_by_quadrature(amplitude: complex, p: RectennaParams) -> float:
    return sum(beta(i, p) * _time_average(amplitude, i) for i in range(2, p.n_0 + 1, 2))


def test_zeta_closed_form():
    assert zeta(2) == 0.5
    assert zeta(4) == 0.375
    assert zeta(6) == pytest.approx(5 / 16, rel=1e-15)
    for i in (2, 4, 6, 8):
        assert zeta(i) == pytest.approx(np.mean(np.sin(SAMPLES) ** i), rel=1e-12)


def test_odd_order_rejected():
    with pytest.raises(OddOrder):
        harmonic_moment(1.0, 3)
    with pytest.raises(OddOrder):
        zeta(0)


def test_harmonic_moment_examples():
    assert harmonic_moment(1.0, 2) == 0.5
    assert harmonic_moment(0.0, 4) == 0.0
    assert harmonic_moment(2.0, 4) == pytest.approx(6.0, rel=1e-15)


def test_harmonic_moment_matches_quadrature(rng):
    amplitudes = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    for a in amplitudes:
        for i in (2, 4):
            assert harmonic_moment(a, i) == pytest.approx(_time_average(a, i), rel=1e-9)


def test_beta_with_default_constants(params):
    assert beta(2, params) == pytest.approx(952.38, rel=1e-5)
    assert beta(4, params) == pytest.approx(5.7589e6, rel=1e-4)


def test_dc_voltage_branch_example(params):
    expected = beta(2, params) * 0.5 * 1e-6 + beta(4, params) * 0.375 * 1e-12
    assert dc_voltage_branch(1e-3, params) == pytest.approx(expected, rel=1e-14)
    assert dc_voltage_branch(0.0, params) == 0.0


def test_voltage_terms_scale_per_order(params):
    (i2, c2), (i4, c4) = voltage_coefficients(params)
    assert (i2, i4) == (2, 4)
    a = 3e-3
    v1, v2 = dc_voltage_branch(a, params), dc_voltage_branch(2 * a, params)
    assert v2 == pytest.approx(4 * c2 * a ** 2 + 16 * c4 * a ** 4, rel=1e-14)
    assert v1 == pytest.approx(c2 * a ** 2 + c4 * a ** 4, rel=1e-14)


def test_higher_truncation_order_adds_terms():
    p6 = RectennaParams(n_0=6)
    assert [i for i, _ in voltage_coefficients(p6)] == [2, 4, 6]
    assert dc_voltage_branch(0.01, p6) > dc_voltage_branch(0.01, RectennaParams())


def test_power_dcc_matches_quadrature(rng, params):
    for _ in range(20):
        h = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) * 1e-3
        p_t = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        y = h @ p_t
        oracle = sum(_voltage_by_quadrature(a, params) ** 2 for a in y) / params.r_l
        assert power_dcc(h, p_t, params) == pytest.approx(oracle, rel=1e-9)


def test_power_dcc_special_cases(rng, params):
    h = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    assert power_dcc(h, np.zeros(2), params) == 0.0

    row = h[:1]
    p_t = np.array([0.3 + 0.1j, -0.2j])
    single = power_dcc(row, p_t, params)
    assert single == pytest.approx(dc_voltage_branch(row[0] @ p_t, params) ** 2 / params.r_l, rel=1e-14)

    with pytest.raises(DimensionMismatch):
        power_dcc(h, np.ones(3), params)


def test_power_rfc_matches_quadrature_and_dcc(rng, params):
    for _ in range(20):
        h = (rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))) * 1e-3
        p_t = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        p_r = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        combined = np.vdot(p_r, h @ p_t)
        oracle = _voltage_by_quadrature(combined, params) ** 2 / params.r_l
        assert power_rfc(h, p_t, p_r, params) == pytest.approx(oracle, rel=1e-9)

    h1 = rng.standard_normal((1, 2)) + 1j * rng.standard_normal((1, 2))
    p_t = np.array([1.0, 1j])
    assert power_rfc(h1, p_t, np.ones(1), params) == pytest.approx(power_dcc(h1, p_t, params), rel=1e-14)


def test_power_rfc_orthogonal_combiner(params):
    h = np.eye(2, dtype=complex)
    assert power_rfc(h, np.array([1.0, 0.0]), np.array([0.0, 1.0]), params) == 0.0
    with pytest.raises(DimensionMismatch):
        power_rfc(h, np.ones(2), np.ones(3), params)


@given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=1e-9, max_value=1.0))
@settings(max_examples=100, deadline=None)
def test_rfc_power_strictly_increasing_in_gain(gain, delta):
    params = RectennaParams()
    assert gain_to_power_rfc(gain + delta, params) > gain_to_power_rfc(gain, params)


@given(st.lists(st.floats(min_value=0.0, max_value=1e-2), min_size=2, max_size=2),
       st.integers(min_value=0, max_value=1))
@settings(max_examples=50, deadline=None)
def test_dcc_power_monotone_in_branch_amplitude(amps, branch):
    params = RectennaParams()
    h = np.diag(np.asarray(amps, dtype=complex))
    bumped = h.copy()
    bumped[branch, branch] += 1e-4
    p_t = np.ones(2, dtype=complex)
    assert power_dcc(bumped, p_t, params) >= power_dcc(h, p_t, params)


def test_vectorized_voltage(params):
    gains = np.array([0.0, 1e-6, 4e-6])
    v = dc_voltage_from_gain(gains, params)
    assert v.shape == (3,)
    np.testing.assert_allclose(v, [dc_voltage_branch(np.sqrt(g), params) for g in gains], rtol=1e-14)
