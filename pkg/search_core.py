"""
Поисковое ядро: warm-start SEBO по битовым векторам и multi-start
квази-Ньютон (BFGS) по вещественным векторам.
"""
import logging
from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from config import QuasiNewtonConfig, SeboConfig
from errors import DimensionMismatch, ObjectiveNonFinite

logger = logging.getLogger(__name__)

BitObjective = Callable[[np.ndarray], float]
RealObjective = Callable[[np.ndarray], float]

POLISH_PASSES = 4


def _evaluate(objective: Callable[[np.ndarray], float], x: np.ndarray) -> float:
    value = float(objective(x))
    if not np.isfinite(value):
        raise ObjectiveNonFinite(np.asarray(x).tolist(), value)
    return value


def make_blocks(n_bits: int, block_size: int) -> List[np.ndarray]:
    """Непрерывные блоки по J бит, последний короче."""
    return [np.arange(s, min(s + block_size, n_bits)) for s in range(0, n_bits, block_size)]


def block_patterns(width: int) -> np.ndarray:
    """Все 2^width шаблонов по возрастанию; бит j числа -> позиция j блока."""
    codes = np.arange(1 << width)
    return ((codes[:, None] >> np.arange(width)[None, :]) & 1).astype(np.uint8)


def _search_block(objective: BitObjective, x: np.ndarray, value: float,
                  block: np.ndarray) -> Tuple[np.ndarray, float, bool]:
    best_x, best_v, improved = x, value, False
    for pattern in block_patterns(block.size):
        if np.array_equal(pattern, x[block]):
            continue
        cand = x.copy()
        cand[block] = pattern
        v = _evaluate(objective, cand)
        # строго лучше; среди равных побеждает первый найденный
        if v > best_v:
            best_x, best_v, improved = cand, v, True
    return best_x, best_v, improved


def sebo_maximize(objective: BitObjective, n_bits: int, init: np.ndarray, cfg: SeboConfig,
                  history: Optional[List[float]] = None) -> Tuple[np.ndarray, float]:
    """
    Successive exhaustive Boolean optimization.

    Each round sweeps the blocks cyclically until a full sweep finds nothing
    strictly better (or `max_sweeps` is hit), then tries `flip_count` random
    single-bit flips. The next round starts from the incumbent. `history`, if
    given, receives the incumbent value after every sweep and every round.
    """
    if n_bits < 1:
        raise DimensionMismatch("SEBO needs at least one bit")
    raw = np.asarray(init).reshape(-1)
    if raw.size != n_bits:
        raise DimensionMismatch(f"init has {raw.size} bits, expected {n_bits}")
    if not np.all((raw == 0) | (raw == 1)):
        raise DimensionMismatch("init must be a 0/1 vector")
    x = raw.astype(np.uint8)

    rng = np.random.Generator(np.random.Philox(cfg.rng_seed))
    blocks = make_blocks(n_bits, cfg.block_size)
    flip_count = cfg.flip_count if cfg.flip_count is not None else n_bits // 4
    value = _evaluate(objective, x)
    start_value = value
    # точка, на которой последний полный проход ничего не улучшил
    settled: Optional[np.ndarray] = None

    for w in range(cfg.rounds):
        if settled is None or not np.array_equal(settled, x):
            sweeps = 0
            while True:
                improved_any = False
                for block in blocks:
                    x, value, improved = _search_block(objective, x, value, block)
                    improved_any |= improved
                sweeps += 1
                if history is not None:
                    history.append(value)
                if not improved_any:
                    settled = x.copy()
                    break
                if cfg.max_sweeps is not None and sweeps >= cfg.max_sweeps:
                    settled = None
                    break

        for _ in range(flip_count):
            j = int(rng.integers(n_bits))
            cand = x.copy()
            cand[j] ^= 1
            v = _evaluate(objective, cand)
            if v > value:
                x, value = cand, v
        if history is not None:
            history.append(value)
        logger.debug(f"🔎 SEBO round {w + 1}/{cfg.rounds}: value={value:.6e}")

    logger.debug(f"🔎 SEBO finished: {start_value:.6e} -> {value:.6e} over {n_bits} bits")
    return x, value


def _central_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, step: float) -> np.ndarray:
    h = step * (1.0 + np.abs(x))
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        grad[i] = (f(x + e) - f(x - e)) / (2.0 * h[i])
    return grad


def _bfgs_run(objective: RealObjective, x0: np.ndarray, cfg: QuasiNewtonConfig) -> Tuple[np.ndarray, float]:
    x, value = x0, _evaluate(objective, x0)
    for _ in range(POLISH_PASSES):
        # нормируем на |f| в стартовой точке, чтобы допуски не зависели от масштаба мощности
        scale = abs(value) if value != 0.0 else 1.0

        def neg(z: np.ndarray) -> float:
            return -_evaluate(objective, z) / scale

        res = minimize(
            neg, x, method="BFGS",
            jac=lambda z: _central_gradient(neg, z, cfg.gradient_step),
            options={"gtol": cfg.tolerance, "maxiter": cfg.max_iters},
        )
        cand = np.asarray(res.x, dtype=float)
        v = _evaluate(objective, cand)
        if not v > value:
            break
        x, value = cand, v
    return x, value


def quasi_newton_maximize(objective: RealObjective, dim: int, cfg: QuasiNewtonConfig,
                          starts: Optional[Iterable[np.ndarray]] = None) -> Tuple[np.ndarray, float]:
    """Лучший из `restarts` случайных стартов BFGS плюс явные стартовые точки."""
    if dim < 1:
        raise DimensionMismatch("quasi-Newton search needs dim >= 1")
    rng = np.random.Generator(np.random.Philox(cfg.rng_seed))
    low, high = cfg.init_range
    points = [rng.uniform(low, high, dim) for _ in range(cfg.restarts)]
    for s in starts or ():
        s = np.asarray(s, dtype=float).reshape(-1)
        if s.size != dim:
            raise DimensionMismatch(f"start point has {s.size} entries, expected {dim}")
        points.append(s)

    best_x, best_v = None, -np.inf
    for idx, x0 in enumerate(points):
        x, v = _bfgs_run(objective, x0, cfg)
        logger.debug(f"🔎 BFGS start {idx + 1}/{len(points)}: value={v:.6e}")
        if v > best_v:
            best_x, best_v = x, v
    return best_x, best_v
