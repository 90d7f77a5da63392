"""
Кодбук кодеров антенн: офлайн-обучение K-means (центры ищутся SEBO) и
онлайн-развёртывание блочно-координатным перебором (BCD).
"""
import json
import logging
from concurrent.futures import Executor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from channel import CodingContext
from config import CodebookConfig, OptimizerConfig, RectennaParams, SeboConfig
from errors import EmptyCodebook, InvalidAntennaData, PixelWptError
from models import (
    Assignment, BeamspaceChannel, Codebook, CoderMatrix, CoderPool, CodingResult, PoolObjective, Scheme,
    join_bits, split_bits,
)
from schemes import deployment_score, evaluate_coders, optimize_binary, zero_coders
from search_core import sebo_maximize

logger = logging.getLogger(__name__)


def siso_gain_sum(h: np.ndarray) -> float:
    """Сумма SISO-усилений |h_ij|² по всем парам антенн."""
    return float(np.sum(np.abs(h) ** 2))


def channel_gain_coders(ctx: CodingContext, ch: BeamspaceChannel, sebo: SeboConfig,
                        m: int, n: int) -> Tuple[CoderMatrix, CoderMatrix]:
    """SEBO по кодерам без учёта выпрямителя и схемы формирования луча."""
    init = join_bits(*zero_coders(ctx.q, m, n))
    bits, _ = sebo_maximize(ctx.bits_objective(ch, m, n, siso_gain_sum), init.size, init, sebo)
    return split_bits(bits, ctx.q, m, n)


def build_pool(ctx: CodingContext, training_channels: Sequence[BeamspaceChannel], scheme: Scheme,
               power: float, params: RectennaParams, cfg: OptimizerConfig, m: int, n: int,
               executor: Optional[Executor] = None,
               objective: PoolObjective = PoolObjective.POWER) -> CoderPool:
    """
    Для каждого обучающего канала: совместная оптимизация, все M+N столбцов в пул.
    CHANNEL_GAIN вместо выходной мощности максимизирует сумму SISO-усилений.
    """
    init = zero_coders(ctx.q, m, n)

    def solve(item: Tuple[int, BeamspaceChannel]) -> Tuple[CoderMatrix, CoderMatrix]:
        idx, ch = item
        try:
            if objective == PoolObjective.CHANNEL_GAIN:
                return channel_gain_coders(ctx, ch, cfg.sebo, m, n)
            res = optimize_binary(scheme, ctx, ch, power, params, cfg, init)
            return res.b_t, res.b_r
        except PixelWptError as e:
            e.add_note(f"while optimizing training channel {idx}")
            raise

    items = list(enumerate(training_channels))
    results = list(executor.map(solve, items)) if executor is not None else [solve(it) for it in items]

    rows = []
    for b_t, b_r in results:
        rows.extend(c.b for c in b_t.columns)
        rows.extend(c.b for c in b_r.columns)
    pool = CoderPool(np.array(rows).reshape(len(rows), ctx.q))
    logger.info(f"✅ Coder pool built: L={pool.size} from {len(items)} channels "
                f"({scheme.value}, {objective.value})")
    return pool


def distance_table(pool: CoderPool, cb: Codebook) -> np.ndarray:
    """‖b̄_l − c_d‖ = √Hamming, L×D."""
    if pool.q != cb.q:
        raise InvalidAntennaData(f"pool coders have {pool.q} bits, codewords have {cb.q}")
    hamming = np.count_nonzero(pool.entries[:, None, :] != cb.codewords[None, :, :], axis=2)
    return np.sqrt(hamming)


def assign_coders(pool: CoderPool, cb: Codebook) -> Assignment:
    # argmin возвращает первый индекс при равенстве
    return Assignment(labels=np.argmin(distance_table(pool, cb), axis=1), clusters=cb.size)


def distortion(pool: CoderPool, cb: Codebook, asg: Assignment) -> float:
    table = distance_table(pool, cb)
    return float(table[np.arange(pool.size), asg.labels].sum())


def update_centers(pool: CoderPool, asg: Assignment, previous: Codebook, cfg: SeboConfig) -> Codebook:
    """
    Each codeword becomes the SEBO minimizer of the summed √Hamming distance to
    its members, searched from the previous codeword. Empty clusters take the
    pool entry farthest from its assigned center.
    """
    centers = previous.codewords.copy()
    table = distance_table(pool, previous)
    own = table[np.arange(pool.size), asg.labels]
    taken: set = set()

    for d in range(previous.size):
        members = pool.entries[asg.labels == d]
        if members.shape[0] == 0:
            order = np.argsort(-own, kind="stable")
            pick = next((int(i) for i in order if int(i) not in taken), int(order[0]))
            taken.add(pick)
            centers[d] = pool.entries[pick]
            logger.warning(f"⚠️ Cluster {d} is empty, re-seeded with pool entry {pick}")
            continue

        def objective(c: np.ndarray, members=members) -> float:
            return -float(np.sqrt(np.count_nonzero(members != c[None, :], axis=1)).sum())

        best, _ = sebo_maximize(objective, previous.q, previous.codewords[d], cfg)
        centers[d] = best
    return Codebook(centers)


def _seed_codebook(pool: CoderPool, size: int, rng: np.random.Generator) -> Codebook:
    """Farthest-point seeding по различным элементам пула."""
    distinct = np.unique(pool.entries, axis=0)
    first = int(rng.integers(distinct.shape[0]))
    chosen = [first]
    nearest = np.sqrt(np.count_nonzero(distinct != distinct[first], axis=1)).astype(float)
    while len(chosen) < min(size, distinct.shape[0]):
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, np.sqrt(np.count_nonzero(distinct != distinct[nxt], axis=1)))
    codewords = distinct[chosen]
    if size > distinct.shape[0]:
        logger.warning(f"⚠️ Codebook size {size} exceeds {distinct.shape[0]} distinct pool coders, "
                       f"padding with duplicates")
        codewords = np.vstack([codewords, codewords[np.arange(size - len(chosen)) % len(chosen)]])
    return Codebook(codewords)


def train_codebook(pool: CoderPool, size: int, cfg: CodebookConfig,
                   history: Optional[List[float]] = None) -> Codebook:
    if size < 1:
        raise EmptyCodebook("codebook size must be at least 1")
    if pool.size == 0:
        raise EmptyCodebook("cannot train a codebook on an empty pool")
    rng = np.random.Generator(np.random.Philox(cfg.rng_seed))
    cb = _seed_codebook(pool, size, rng)
    asg = assign_coders(pool, cb)
    current = distortion(pool, cb, asg)
    if history is not None:
        history.append(current)

    for k in range(cfg.max_iter):
        cb = update_centers(pool, asg, cb, cfg.sebo)
        asg = assign_coders(pool, cb)
        new = distortion(pool, cb, asg)
        if history is not None:
            history.append(new)
        logger.debug(f"🔎 K-means iteration {k + 1}: distortion={new:.6f}")
        done = current - new < cfg.tol
        current = new
        if done:
            break

    if np.unique(cb.codewords, axis=0).shape[0] < cb.size:
        logger.warning("⚠️ Trained codebook contains duplicate codewords")
    logger.info(f"✅ Codebook trained: D={cb.size}, distortion={current:.4f}")
    return cb


def random_codebook(q: int, size: int, seed: int) -> Codebook:
    rng = np.random.Generator(np.random.Philox(seed))
    return Codebook(rng.integers(0, 2, size=(size, q), dtype=np.uint8))


def nested_codebooks(pool: CoderPool, sizes: Sequence[int], cfg: CodebookConfig) -> Dict[int, Codebook]:
    """Обучает самый большой кодбук; меньшие = префиксы, упорядоченные по населённости кластеров."""
    if not sizes:
        return {}
    largest = train_codebook(pool, max(sizes), cfg)
    counts = np.bincount(assign_coders(pool, largest).labels, minlength=largest.size)
    order = np.argsort(-counts, kind="stable")
    ordered = largest.codewords[order]
    return {s: Codebook(ordered[:s]) for s in sizes}


def deploy_codebook(ctx: CodingContext, ch: BeamspaceChannel, cb: Codebook, scheme: Scheme, power: float,
                    params: RectennaParams, cfg: OptimizerConfig, m: int, n: int,
                    init_indices: Optional[Sequence[int]] = None,
                    evaluations: Optional[List[int]] = None) -> CodingResult:
    """
    BCD over per-antenna codeword indices (transmit 1..M, then receive 1..N).
    Every sweep scores all D codewords for every antenna, so it costs exactly
    (M+N)·D objective evaluations; a swap happens only on strict improvement.
    """
    if cb.q != ctx.q:
        raise InvalidAntennaData(f"codewords have {cb.q} bits, antenna has {ctx.q} pixel ports")
    idx = list(init_indices) if init_indices is not None else [0] * (m + n)
    coders = [cb.coder(d) for d in range(cb.size)]

    def score(indices: List[int]) -> float:
        b_t = CoderMatrix(tuple(coders[i] for i in indices[:m]))
        b_r = CoderMatrix(tuple(coders[i] for i in indices[m:]))
        return deployment_score(scheme, ctx, ch, b_t, b_r, power, params, cfg)

    best = score(idx)
    history = [best]
    sweeps = 0
    for sweeps in range(1, cfg.loop.deploy_max_sweeps + 1):
        changed = False
        count = 0
        for antenna in range(m + n):
            for d in range(cb.size):
                trial = idx.copy()
                trial[antenna] = d
                value = score(trial)
                count += 1
                if value > best:
                    idx, best, changed = trial, value, True
                    history.append(best)
        if evaluations is not None:
            evaluations.append(count)
        if not changed:
            break

    b_t = CoderMatrix(tuple(coders[i] for i in idx[:m]))
    b_r = CoderMatrix(tuple(coders[i] for i in idx[m:]))
    result = evaluate_coders(scheme, ctx, ch, b_t, b_r, power, params, cfg)
    result.iterations = sweeps
    result.history = history
    logger.debug(f"✅ Codebook deployed after {sweeps} sweeps: indices={idx}")
    return result


def save_codebook(cb: Codebook, path: Union[str, Path]) -> None:
    data = {"q": cb.q, "d": cb.size, "codewords": cb.to_bits()}
    Path(path).write_text(json.dumps(data, indent=2), encoding="utf-8")


def load_codebook(path: Union[str, Path]) -> Codebook:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        cb = Codebook.from_bits(list(data["codewords"]))
    except (OSError, KeyError, TypeError, ValueError) as e:
        raise InvalidAntennaData(f"cannot read codebook file {path}: {e}") from e
    if cb.q != int(data["q"]) or cb.size != int(data["d"]):
        raise InvalidAntennaData(f"codebook header q={data['q']}, d={data['d']} does not match its codewords")
    logger.info(f"✅ Codebook loaded from {path}: D={cb.size}, Q={cb.q}")
    return cb
