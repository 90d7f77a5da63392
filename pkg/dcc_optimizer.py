"""
DC combining: closed-form SCA transmit beamforming, alternated with binary
(SEBO) or continuous (reactance quasi-Newton) antenna coding.
"""
import logging
from typing import List, Optional, Tuple

import numpy as np

from channel import CodingContext, effective_channel
from config import LoopConfig, OptimizerConfig, RectennaParams
from errors import ZeroChannel
from models import (
    BeamspaceChannel, CoderMatrix, CodingResult, ReactanceMatrix, ScaIterate, Side, join_bits, split_bits,
)
from rectenna import power_dcc, voltage_coefficients
from rfc_optimizer import svd_beamformers
from search_core import quasi_newton_maximize, sebo_maximize

logger = logging.getLogger(__name__)


def default_beamformer(h: np.ndarray, power: float) -> np.ndarray:
    """Согласованный фильтр к строке канала с наибольшей нормой, мощность P."""
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    norms = np.linalg.norm(h, axis=1)
    row = int(np.argmax(norms))
    if norms[row] == 0.0:
        raise ZeroChannel("effective channel is identically zero")
    return np.sqrt(2.0 * power) * h[row].conj() / norms[row]


def sca_direction(h: np.ndarray, p_t: np.ndarray, params: RectennaParams) -> Tuple[np.ndarray, np.ndarray]:
    """Направление подъёма a и вспомогательные r_n = |h_n p_T|²."""
    y = h @ p_t
    r = np.abs(y) ** 2
    coef = np.zeros_like(r)
    for i, ci in voltage_coefficients(params):
        for j, cj in voltage_coefficients(params):
            coef = coef + ci * cj * (i + j) * r ** ((i + j) / 2 - 1)
    return h.conj().T @ (coef * y) / params.r_l, r


def _sca(h: np.ndarray, power: float, params: RectennaParams, tol: float, max_iter: int,
         init: Optional[np.ndarray], history: Optional[List[ScaIterate]]) -> Tuple[np.ndarray, float, int]:
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    p_t = default_beamformer(h, power) if init is None else np.asarray(init, dtype=complex)
    value = power_dcc(h, p_t, params)
    radius = np.sqrt(2.0 * power)

    for k in range(max_iter):
        a, r = sca_direction(h, p_t, params)
        norm = np.linalg.norm(a)
        if norm == 0.0:
            logger.warning("⚠️ SCA direction is zero (all branch amplitudes vanish), keeping the initial beamformer")
            return p_t, value, k
        p_new = radius * a / norm
        new_value = power_dcc(h, p_new, params)
        if history is not None:
            history.append(ScaIterate(p_t=p_new, r=np.abs(h @ p_new) ** 2, a=a, objective=new_value))
        change = abs(new_value - value) / max(abs(new_value), 1e-300)
        p_t, value = p_new, new_value
        if change < tol:
            return p_t, value, k + 1
    return p_t, value, max_iter


def sca_transmit_beamforming(h: np.ndarray, power: float, params: RectennaParams, tol: float, max_iter: int,
                             init: Optional[np.ndarray] = None,
                             history: Optional[List[ScaIterate]] = None) -> np.ndarray:
    """p_T^{(k)} = √(2P)·a^{(k-1)}/‖a^{(k-1)}‖ до сходимости мощности DCC."""
    p_t, _, _ = _sca(h, power, params, tol, max_iter, init, history)
    return p_t


def power_dcc_of_coders(b_t: CoderMatrix, b_r: CoderMatrix, ch: BeamspaceChannel, p_t: np.ndarray,
                        ctx: CodingContext, params: RectennaParams) -> float:
    w_t = ctx.assemble(b_t, Side.TRANSMIT)
    w_r = ctx.assemble(b_r, Side.RECEIVE)
    return power_dcc(effective_channel(ch, w_t, w_r), p_t, params)


def svd_transmit(h: np.ndarray, power: float) -> np.ndarray:
    return svd_beamformers(h, power).p_t


def _converged(history: List[float], value: float, loop: LoopConfig) -> bool:
    return (value - history[-1]) / max(abs(value), 1e-300) < loop.outer_tol


def optimize_dcc_binary(ctx: CodingContext, ch: BeamspaceChannel, power: float, params: RectennaParams,
                        cfg: OptimizerConfig, init: Tuple[CoderMatrix, CoderMatrix]) -> CodingResult:
    """
    Alternates SCA beamforming (coders fixed) with SEBO over the concatenated
    (B_T, B_R) bits (beamformer fixed). The SCA step is warm-started from the
    previous beamformer, so the outer objective never decreases.
    """
    b_t, b_r = init
    m, n, q = b_t.count, b_r.count, ctx.q
    loop = cfg.loop
    p_t, value, _ = _sca(ctx.effective(ch, b_t, b_r), power, params, loop.sca_tol, loop.sca_max_iter, None, None)
    history = [value]
    iterations = 0

    for it in range(loop.outer_max_iter):
        iterations = it + 1
        fixed_p = p_t
        objective = ctx.bits_objective(ch, m, n, lambda h: power_dcc(h, fixed_p, params))
        sebo_cfg = cfg.sebo.model_copy(update={"rng_seed": cfg.sebo.rng_seed + it})
        bits, _ = sebo_maximize(objective, q * (m + n), join_bits(b_t, b_r), sebo_cfg)
        b_t, b_r = split_bits(bits, q, m, n)
        h = ctx.effective(ch, b_t, b_r)
        p_t, value, _ = _sca(h, power, params, loop.sca_tol, loop.sca_max_iter, p_t, None)
        done = _converged(history, value, loop)
        history.append(value)
        logger.debug(f"🔎 DCC binary outer {iterations}: P_out={value:.6e} W")
        if done:
            break

    return CodingResult(b_t=b_t, b_r=b_r, p_t=p_t, power=value, iterations=iterations, history=history)


def optimize_dcc_continuous(ctx: CodingContext, ch: BeamspaceChannel, power: float, params: RectennaParams,
                            cfg: OptimizerConfig, init: Tuple[CoderMatrix, CoderMatrix],
                            init_p_t: Optional[np.ndarray] = None) -> CodingResult:
    """
    SCA beamforming alternated with quasi-Newton over the stacked reactances
    (X_T, X_R). The incumbent x = x_oc·b is always one of the starts, so the
    result never falls below the coders passed in `init`.
    """
    b_t, b_r = init
    m, n = b_t.count, b_r.count
    loop = cfg.loop
    x = ReactanceMatrix(ctx.reactance_of(b_t), ctx.reactance_of(b_r)).flatten()
    h = ctx.effective_from_reactance(ch, *ctx.split_reactance(x, m, n))
    p_t, value, _ = _sca(h, power, params, loop.sca_tol, loop.sca_max_iter, init_p_t, None)
    history = [value]
    iterations = 0

    for it in range(loop.outer_max_iter):
        iterations = it + 1
        fixed_p = p_t
        objective = ctx.reactance_objective(ch, m, n, lambda hh: power_dcc(hh, fixed_p, params))
        x, _ = quasi_newton_maximize(objective, x.size, cfg.qn, starts=[x])
        h = ctx.effective_from_reactance(ch, *ctx.split_reactance(x, m, n))
        p_t, value, _ = _sca(h, power, params, loop.sca_tol, loop.sca_max_iter, p_t, None)
        done = _converged(history, value, loop)
        history.append(value)
        logger.debug(f"🔎 DCC continuous outer {iterations}: P_out={value:.6e} W")
        if done:
            break

    b_t, b_r, reactance = ctx.coders_from_reactance(x, m, n)
    return CodingResult(b_t=b_t, b_r=b_r, p_t=p_t, power=value, iterations=iterations,
                        reactance=reactance, history=history)


def optimize_dcc_svd_binary(ctx: CodingContext, ch: BeamspaceChannel, power: float, params: RectennaParams,
                            cfg: OptimizerConfig, init: Tuple[CoderMatrix, CoderMatrix]) -> CodingResult:
    """DCC с p_T = √(2P)·v₁: оптимально для линейного ректенны, дешевле SCA."""
    b_t, b_r = init
    m, n, q = b_t.count, b_r.count, ctx.q
    objective = ctx.bits_objective(ch, m, n, lambda h: power_dcc(h, svd_transmit(h, power), params))
    history: List[float] = []
    bits, value = sebo_maximize(objective, q * (m + n), join_bits(b_t, b_r), cfg.sebo, history)
    b_t, b_r = split_bits(bits, q, m, n)
    p_t = svd_transmit(ctx.effective(ch, b_t, b_r), power)
    return CodingResult(b_t=b_t, b_r=b_r, p_t=p_t, power=value, iterations=1, history=history)


def optimize_dcc_svd_continuous(ctx: CodingContext, ch: BeamspaceChannel, power: float, params: RectennaParams,
                                cfg: OptimizerConfig, init: Tuple[CoderMatrix, CoderMatrix]) -> CodingResult:
    b_t, b_r = init
    m, n = b_t.count, b_r.count
    x0 = ReactanceMatrix(ctx.reactance_of(b_t), ctx.reactance_of(b_r)).flatten()
    objective = ctx.reactance_objective(ch, m, n, lambda h: power_dcc(h, svd_transmit(h, power), params))
    x, value = quasi_newton_maximize(objective, x0.size, cfg.qn, starts=[x0])
    b_t, b_r, reactance = ctx.coders_from_reactance(x, m, n)
    p_t = svd_transmit(ctx.effective_from_reactance(ch, reactance.x_t, reactance.x_r), power)
    return CodingResult(b_t=b_t, b_r=b_r, p_t=p_t, power=value, iterations=1,
                        reactance=reactance, history=[value])
