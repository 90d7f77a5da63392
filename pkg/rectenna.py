"""
Truncated diode rectenna model.

Every even order i ≤ n_0 contributes β_i·ζ_i·|y|^i to the branch DC voltage,
where y is the RF voltage phasor seen by the rectifier.
"""
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.special import factorial, factorial2

from config import RectennaParams
from errors import DimensionMismatch, OddOrder


def _check_order(i: int) -> None:
    if i < 2 or i % 2:
        raise OddOrder(f"moment order must be an even integer >= 2, got {i}")


@lru_cache(maxsize=64)
def zeta(i: int) -> float:
    """(1/2π)∫ sinⁱ t dt = (i-1)!!/i!! для чётного i."""
    _check_order(i)
    return float(factorial2(i - 1, exact=True)) / float(factorial2(i, exact=True))


def beta(i: int, p: RectennaParams) -> float:
    _check_order(i)
    return p.r_ant ** (i / 2) / (float(factorial(i, exact=True)) * (p.i_d * p.v_t) ** (i - 1))


def even_orders(p: RectennaParams) -> range:
    return range(2, p.n_0 + 1, 2)


def voltage_coefficients(p: RectennaParams) -> Tuple[Tuple[int, float], ...]:
    """Пары (i, β_i·ζ_i) для всех чётных порядков до n_0."""
    return tuple((i, beta(i, p) * zeta(i)) for i in even_orders(p))


def harmonic_moment(amplitude: complex, i: int) -> float:
    return zeta(i) * abs(amplitude) ** i


def dc_voltage_from_gain(gain, p: RectennaParams):
    """Напряжение как функция |y|² (скаляр или массив)."""
    gain = np.asarray(gain, dtype=float)
    v = np.zeros_like(gain)
    for i, c in voltage_coefficients(p):
        v = v + c * gain ** (i // 2)
    return v


def dc_voltage_branch(amplitude: complex, p: RectennaParams) -> float:
    return float(dc_voltage_from_gain(abs(amplitude) ** 2, p))


def _check_shapes(h: np.ndarray, p_t: np.ndarray) -> None:
    if h.ndim != 2 or p_t.shape != (h.shape[1],):
        raise DimensionMismatch(f"channel {h.shape} does not accept a transmit vector of shape {p_t.shape}")


def power_dcc(h: np.ndarray, p_t: np.ndarray, p: RectennaParams) -> float:
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    p_t = np.asarray(p_t, dtype=complex)
    _check_shapes(h, p_t)
    v = dc_voltage_from_gain(np.abs(h @ p_t) ** 2, p)
    return float(np.sum(v ** 2) / p.r_l)


def gain_to_power_rfc(gain: float, p: RectennaParams) -> float:
    """Строго возрастающее отображение |p_Rᴴ H p_T|² -> мощность RFC."""
    return float(dc_voltage_from_gain(gain, p) ** 2 / p.r_l)


def power_rfc(h: np.ndarray, p_t: np.ndarray, p_r: np.ndarray, p: RectennaParams) -> float:
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    p_t = np.asarray(p_t, dtype=complex)
    p_r = np.asarray(p_r, dtype=complex)
    _check_shapes(h, p_t)
    if p_r.shape != (h.shape[0],):
        raise DimensionMismatch(f"channel {h.shape} does not accept a receive vector of shape {p_r.shape}")
    y = np.vdot(p_r, h @ p_t)
    return gain_to_power_rfc(abs(y) ** 2, p)
