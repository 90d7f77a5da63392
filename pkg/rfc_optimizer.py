"""
RF combining: SVD beamformers, coding on 2P·σ_max², and the phase-only
(analog) receive beamformer with MRT transmit.
"""
import logging
from typing import List, Optional, Tuple

import numpy as np

from channel import CodingContext
from config import OptimizerConfig, RectennaParams
from errors import ZeroChannel
from models import (
    BeamspaceChannel, CoderMatrix, CodingResult, ReactanceMatrix, RfcBeamformers,
    join_bits, split_bits,
)
from rectenna import power_rfc
from search_core import quasi_newton_maximize, sebo_maximize

logger = logging.getLogger(__name__)

ZERO_ARGUMENT = 1e-15


def _as_channel(h: np.ndarray) -> np.ndarray:
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    if not np.any(h):
        raise ZeroChannel("effective channel is identically zero")
    return h


def svd_beamformers(h: np.ndarray, power: float) -> RfcBeamformers:
    h = _as_channel(h)
    u, s, vh = np.linalg.svd(h)
    v1, u1 = vh[0].conj(), u[:, 0]
    # фаза: самый большой по модулю элемент v₁ вещественный и положительный
    k = int(np.argmax(np.abs(v1)))
    phase = v1[k] / abs(v1[k])
    v1, u1 = v1 / phase, u1 / phase
    return RfcBeamformers(p_t=np.sqrt(2.0 * power) * v1, p_r=u1, gain=2.0 * power * float(s[0]) ** 2)


def sigma_max_gain(h: np.ndarray, power: float) -> float:
    return 2.0 * power * float(np.linalg.norm(h, 2)) ** 2


def mrt_transmit(h: np.ndarray, p_r: np.ndarray, power: float) -> np.ndarray:
    g = p_r.conj() @ h
    norm = np.linalg.norm(g)
    if norm == 0.0:
        raise ZeroChannel("receive combiner annihilates the effective channel")
    return np.sqrt(2.0 * power) * g.conj() / norm


def abf_gain(h: np.ndarray, p_r: np.ndarray, power: float) -> float:
    return 2.0 * power * float(np.linalg.norm(p_r.conj() @ h)) ** 2


def abf_receive_beamforming(h: np.ndarray, power: float, tol: float, max_iter: int,
                            init: Optional[np.ndarray] = None,
                            history: Optional[List[float]] = None) -> RfcBeamformers:
    """
    Фазовый приёмный beamformer: p_R ← e^{j·arg(H Hᴴ p_R)}/√N.

    Останов только по относительному изменению p_R (< tol); history
    получает значение целевой функции. Для z_n = 0 сохраняется прежняя фаза.
    """
    h = _as_channel(h)
    n = h.shape[0]
    p_r = np.ones(n, dtype=complex) / np.sqrt(n) if init is None else np.asarray(init, dtype=complex)
    p_r = np.exp(1j * np.angle(p_r)) / np.sqrt(n)
    gram = h @ h.conj().T
    value = float(np.real(np.vdot(p_r, gram @ p_r)))
    step = float("inf")
    if history is not None:
        history.append(value)

    for k in range(max_iter):
        z = gram @ p_r
        zero = np.abs(z) <= ZERO_ARGUMENT * max(float(np.max(np.abs(z))), 1e-300)
        if np.any(zero):
            logger.warning(f"⚠️ ABF: {int(zero.sum())} zero arguments at iteration {k}, keeping previous phase")
        angles = np.where(zero, np.angle(p_r), np.angle(z))
        new = np.exp(1j * angles) / np.sqrt(n)
        new_value = float(np.real(np.vdot(new, gram @ new)))
        step = np.linalg.norm(new - p_r) / np.linalg.norm(new)
        p_r, value = new, new_value
        if history is not None:
            history.append(value)
        if step < tol:
            break
    else:
        logger.debug(f"🔎 ABF hit max_iter={max_iter}, last step {step:.2e}")

    p_t = mrt_transmit(h, p_r, power)
    return RfcBeamformers(p_t=p_t, p_r=p_r, gain=2.0 * power * value)


def _bf_power(h: np.ndarray, bf: RfcBeamformers, params: RectennaParams) -> float:
    return power_rfc(h, bf.p_t, bf.p_r, params)


def optimize_rfc_binary(ctx: CodingContext, ch: BeamspaceChannel, power: float, params: RectennaParams,
                        cfg: OptimizerConfig, init: Tuple[CoderMatrix, CoderMatrix]) -> CodingResult:
    b_t, b_r = init
    m, n, q = b_t.count, b_r.count, ctx.q
    objective = ctx.bits_objective(ch, m, n, lambda h: sigma_max_gain(h, power))
    history: List[float] = []
    bits, gain = sebo_maximize(objective, q * (m + n), join_bits(b_t, b_r), cfg.sebo, history)
    b_t, b_r = split_bits(bits, q, m, n)
    h = ctx.effective(ch, b_t, b_r)
    bf = svd_beamformers(h, power)
    result = CodingResult(b_t=b_t, b_r=b_r, p_t=bf.p_t, power=_bf_power(h, bf, params),
                          iterations=1, beamformers=bf, history=history)
    logger.debug(f"✅ RFC binary: gain={gain:.6e}, power={result.power:.6e} W")
    return result


def _reactance_result(ctx: CodingContext, x: np.ndarray, m: int, n: int, bf: RfcBeamformers,
                      power_out: float, iterations: int, history: List[float]) -> CodingResult:
    b_t, b_r, reactance = ctx.coders_from_reactance(x, m, n)
    return CodingResult(b_t=b_t, b_r=b_r, p_t=bf.p_t, power=power_out, iterations=iterations,
                        beamformers=bf, reactance=reactance, history=history)


def optimize_rfc_continuous(ctx: CodingContext, ch: BeamspaceChannel, power: float, params: RectennaParams,
                            cfg: OptimizerConfig, init: Tuple[CoderMatrix, CoderMatrix]) -> CodingResult:
    """Квази-Ньютон по реактивностям; стартовая точка init входит в набор стартов."""
    b_t, b_r = init
    m, n = b_t.count, b_r.count
    x0 = ReactanceMatrix(ctx.reactance_of(b_t), ctx.reactance_of(b_r)).flatten()
    objective = ctx.reactance_objective(ch, m, n, lambda h: sigma_max_gain(h, power))
    x, gain = quasi_newton_maximize(objective, x0.size, cfg.qn, starts=[x0])
    h = ctx.effective_from_reactance(ch, *ctx.split_reactance(x, m, n))
    bf = svd_beamformers(h, power)
    return _reactance_result(ctx, x, m, n, bf, _bf_power(h, bf, params), 1, [gain])


def optimize_abf_binary(ctx: CodingContext, ch: BeamspaceChannel, power: float, params: RectennaParams,
                        cfg: OptimizerConfig, init: Tuple[CoderMatrix, CoderMatrix]) -> CodingResult:
    """Чередование: ABF при фиксированных кодерах, затем SEBO при фиксированном p_R (p_T по MRT)."""
    b_t, b_r = init
    m, n, q = b_t.count, b_r.count, ctx.q
    loop = cfg.loop
    h = ctx.effective(ch, b_t, b_r)
    bf = abf_receive_beamforming(h, power, loop.abf_tol, loop.abf_max_iter)
    history = [bf.gain]
    iterations = 0

    for it in range(loop.outer_max_iter):
        iterations = it + 1
        p_r = bf.p_r
        objective = ctx.bits_objective(ch, m, n, lambda hh: abf_gain(hh, p_r, power))
        sebo_cfg = cfg.sebo.model_copy(update={"rng_seed": cfg.sebo.rng_seed + it})
        bits, _ = sebo_maximize(objective, q * (m + n), join_bits(b_t, b_r), sebo_cfg)
        b_t, b_r = split_bits(bits, q, m, n)
        h = ctx.effective(ch, b_t, b_r)
        bf = abf_receive_beamforming(h, power, loop.abf_tol, loop.abf_max_iter, init=p_r)
        change = (bf.gain - history[-1]) / max(bf.gain, 1e-300)
        history.append(bf.gain)
        if change < loop.outer_tol:
            break

    return CodingResult(b_t=b_t, b_r=b_r, p_t=bf.p_t, power=_bf_power(h, bf, params),
                        iterations=iterations, beamformers=bf, history=history)


def optimize_abf_continuous(ctx: CodingContext, ch: BeamspaceChannel, power: float, params: RectennaParams,
                            cfg: OptimizerConfig, init: Tuple[CoderMatrix, CoderMatrix],
                            init_p_r: Optional[np.ndarray] = None) -> CodingResult:
    """QN-зеркало optimize_abf_binary; init_p_r продолжает ABF с бинарного решения."""
    b_t, b_r = init
    m, n = b_t.count, b_r.count
    loop = cfg.loop
    x = ReactanceMatrix(ctx.reactance_of(b_t), ctx.reactance_of(b_r)).flatten()
    h = ctx.effective_from_reactance(ch, *ctx.split_reactance(x, m, n))
    bf = abf_receive_beamforming(h, power, loop.abf_tol, loop.abf_max_iter, init=init_p_r)
    history = [bf.gain]
    iterations = 0

    for it in range(loop.outer_max_iter):
        iterations = it + 1
        p_r = bf.p_r
        objective = ctx.reactance_objective(ch, m, n, lambda hh: abf_gain(hh, p_r, power))
        x, _ = quasi_newton_maximize(objective, x.size, cfg.qn, starts=[x])
        h = ctx.effective_from_reactance(ch, *ctx.split_reactance(x, m, n))
        bf = abf_receive_beamforming(h, power, loop.abf_tol, loop.abf_max_iter, init=p_r)
        change = (bf.gain - history[-1]) / max(bf.gain, 1e-300)
        history.append(bf.gain)
        if change < loop.outer_tol:
            break

    return _reactance_result(ctx, x, m, n, bf, _bf_power(h, bf, params), iterations, history)
