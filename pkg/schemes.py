"""Диспетчеризация по схеме объединения: оптимизаторы и оценка заданных кодеров."""
from typing import Callable, Dict, Optional, Tuple

from channel import CodingContext
from config import OptimizerConfig, RectennaParams
from dcc_optimizer import (
    optimize_dcc_binary, optimize_dcc_continuous, optimize_dcc_svd_binary, optimize_dcc_svd_continuous,
    sca_transmit_beamforming, svd_transmit,
)
from models import AntennaCoder, BeamspaceChannel, CoderMatrix, CodingResult, Scheme
from rectenna import power_dcc, power_rfc
from rfc_optimizer import (
    abf_receive_beamforming, optimize_abf_binary, optimize_abf_continuous, optimize_rfc_binary,
    optimize_rfc_continuous, sigma_max_gain, svd_beamformers,
)

Optimizer = Callable[..., CodingResult]

BINARY_OPTIMIZERS: Dict[Scheme, Optimizer] = {
    Scheme.DCC_OPT: optimize_dcc_binary,
    Scheme.DCC_SVD: optimize_dcc_svd_binary,
    Scheme.RFC_SVD: optimize_rfc_binary,
    Scheme.RFC_ABF: optimize_abf_binary,
}


def optimize_binary(scheme: Scheme, ctx: CodingContext, ch: BeamspaceChannel, power: float,
                    params: RectennaParams, cfg: OptimizerConfig,
                    init: Tuple[CoderMatrix, CoderMatrix]) -> CodingResult:
    return BINARY_OPTIMIZERS[scheme](ctx, ch, power, params, cfg, init)


def optimize_continuous(scheme: Scheme, ctx: CodingContext, ch: BeamspaceChannel, power: float,
                        params: RectennaParams, cfg: OptimizerConfig,
                        start: CodingResult) -> CodingResult:
    """Непрерывное кодирование, стартующее с бинарного решения `start`."""
    init = (start.b_t, start.b_r)
    if scheme == Scheme.DCC_OPT:
        return optimize_dcc_continuous(ctx, ch, power, params, cfg, init, init_p_t=start.p_t)
    if scheme == Scheme.DCC_SVD:
        return optimize_dcc_svd_continuous(ctx, ch, power, params, cfg, init)
    if scheme == Scheme.RFC_SVD:
        return optimize_rfc_continuous(ctx, ch, power, params, cfg, init)
    return optimize_abf_continuous(ctx, ch, power, params, cfg, init, init_p_r=start.p_r)


def evaluate_coders(scheme: Scheme, ctx: CodingContext, ch: BeamspaceChannel, b_t: CoderMatrix,
                    b_r: CoderMatrix, power: float, params: RectennaParams, cfg: OptimizerConfig,
                    sca_max_iter: Optional[int] = None) -> CodingResult:
    """Мощность при заданных кодерах и оптимальном для схемы beamforming."""
    loop = cfg.loop
    h = ctx.effective(ch, b_t, b_r)
    if scheme == Scheme.DCC_OPT:
        p_t = sca_transmit_beamforming(h, power, params, loop.sca_tol, sca_max_iter or loop.sca_max_iter)
        return CodingResult(b_t=b_t, b_r=b_r, p_t=p_t, power=power_dcc(h, p_t, params))
    if scheme == Scheme.DCC_SVD:
        p_t = svd_transmit(h, power)
        return CodingResult(b_t=b_t, b_r=b_r, p_t=p_t, power=power_dcc(h, p_t, params))
    if scheme == Scheme.RFC_SVD:
        bf = svd_beamformers(h, power)
    else:
        bf = abf_receive_beamforming(h, power, loop.abf_tol, loop.abf_max_iter)
    return CodingResult(b_t=b_t, b_r=b_r, p_t=bf.p_t, power=power_rfc(h, bf.p_t, bf.p_r, params), beamformers=bf)


def deployment_score(scheme: Scheme, ctx: CodingContext, ch: BeamspaceChannel, b_t: CoderMatrix,
                     b_r: CoderMatrix, power: float, params: RectennaParams, cfg: OptimizerConfig) -> float:
    """Целевая функция BCD: 2P·σ_max² для RFC-SVD, иначе мощность (SCA ограничен по итерациям)."""
    if scheme == Scheme.RFC_SVD:
        return sigma_max_gain(ctx.effective(ch, b_t, b_r), power)
    if scheme == Scheme.RFC_ABF:
        return evaluate_coders(scheme, ctx, ch, b_t, b_r, power, params, cfg).beamformers.gain
    return evaluate_coders(scheme, ctx, ch, b_t, b_r, power, params, cfg,
                           sca_max_iter=cfg.loop.deploy_sca_max_iter).power


def zero_coders(q: int, m: int, n: int) -> Tuple[CoderMatrix, CoderMatrix]:
    zero = AntennaCoder.zeros(q)
    return CoderMatrix.uniform(zero, m), CoderMatrix.uniform(zero, n)
