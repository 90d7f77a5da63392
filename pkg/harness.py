"""
Monte Carlo runner: per-trial channel sampling, the configured coding
pipeline, the fixed-configuration baseline, summaries, sweeps and CSV output.
"""
import asyncio
import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from functools import partial
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from antenna_model import load_network, synthesize_antenna
from cache_service import PoolCache, pool_key
from channel import CodingContext, derive_seed, sample_channel
from codebook import build_pool, deploy_codebook, load_codebook, nested_codebooks, random_codebook, train_codebook
from config import ExperimentConfig, Settings, get_settings
from errors import ConfigInvalid, ExperimentFailed, PixelWptError
from models import (
    AntennaCoder, BeamspaceChannel, Codebook, CoderMatrix, CoderPool, Coding, CodingResult,
    ExperimentSummary, PoolObjective, SweepRow, TrialResult,
)
from schemes import evaluate_coders, optimize_binary, optimize_continuous

logger = logging.getLogger(__name__)

CSV_HEADER = ["trial", "scheme", "coding", "power_watts", "power_dbm", "iterations", "wall_ms"]
SWEEP_HEADER = ["value", "series", "mean_watts", "mean_dbm", "trials_ok", "trials_failed"]


class SweepAxis(str, Enum):
    RECEIVE_ANTENNAS = "receive_antennas"
    CODEBOOK_SIZE = "codebook_size"


def fixed_baseline(cfg: ExperimentConfig) -> Tuple[CoderMatrix, CoderMatrix]:
    """Фиксированная антенна: все ключи замкнуты (нули) либо baseline_coder."""
    coder = AntennaCoder.from_bits(cfg.baseline_coder) if cfg.baseline_coder else AntennaCoder.zeros(cfg.q)
    return CoderMatrix.uniform(coder, cfg.m), CoderMatrix.uniform(coder, cfg.n)


def build_context(cfg: ExperimentConfig) -> CodingContext:
    if cfg.antenna_path is not None:
        antenna = load_network(cfg.antenna_path)
        if antenna.q != cfg.q:
            raise ConfigInvalid("q", f"antenna file has Q={antenna.q}, config says {cfg.q}")
    else:
        antenna = synthesize_antenna(cfg.antenna_seed, cfg.q, cfg.k, cfg.target_rank, cfg.antenna)
    ctx = CodingContext(antenna, cfg.antenna)
    logger.info(f"📡 Antenna ready: Q={antenna.q}, K={antenna.k}, N_eff={ctx.n_eff}")
    return ctx


def trial_channel(cfg: ExperimentConfig, ctx: CodingContext, seed: int) -> BeamspaceChannel:
    return sample_channel(seed, cfg.n * ctx.n_eff, cfg.m * ctx.n_eff, cfg.amplitude_scale)


def _paired_gain_db(ok: Sequence[TrialResult], reference: str) -> Optional[float]:
    """10·log10 отношения средних по парным испытаниям; None, если опоры нет."""
    mean_ref = float(np.mean([getattr(r, reference) for r in ok]))
    mean = float(np.mean([r.power_watts for r in ok]))
    if not (mean_ref > 0 and mean > 0):
        return None
    return float(10.0 * np.log10(mean / mean_ref))


def summarize(results: Sequence[TrialResult], coding: Coding) -> ExperimentSummary:
    ok = [r for r in results if not r.failed]
    mean_watts = float(np.mean([r.power_watts for r in ok])) if ok else float("nan")
    gain_fixed = _paired_gain_db(ok, "baseline_watts") if ok and coding != Coding.FIXED else None
    gain_binary = _paired_gain_db(ok, "binary_watts") if ok and coding == Coding.CONTINUOUS else None
    return ExperimentSummary(mean_watts=mean_watts, trials_ok=len(ok), trials_failed=len(results) - len(ok),
                             gain_over_fixed_db=gain_fixed, gain_over_binary_db=gain_binary)


def check_failures(summary: ExperimentSummary, threshold: float) -> None:
    total = summary.trials_ok + summary.trials_failed
    rate = summary.trials_failed / total if total else 0.0
    if rate > threshold:
        raise ExperimentFailed(f"{summary.trials_failed}/{total} trials failed "
                               f"({rate:.1%} > {threshold:.1%})")


def _fmt(value: float) -> str:
    return repr(float(value))


def write_results_csv(results: Sequence[TrialResult], summary: ExperimentSummary, out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in results:
        writer.writerow([
            r.trial_index, r.scheme.value, r.coding.value, _fmt(r.power_watts), _fmt(r.power_dbm),
            r.iterations, "" if r.wall_time_ms is None else f"{r.wall_time_ms:.3f}",
        ])
    footer = (f"# mean_watts={_fmt(summary.mean_watts)},mean_dbm={_fmt(summary.mean_dbm)},"
              f"trials_ok={summary.trials_ok},trials_failed={summary.trials_failed}")
    if summary.gain_over_fixed_db is not None:
        footer += f",gain_over_fixed_db={_fmt(summary.gain_over_fixed_db)}"
    if summary.gain_over_binary_db is not None:
        footer += f",gain_over_binary_db={_fmt(summary.gain_over_binary_db)}"
    out.write(footer + "\n")


def write_sweep_csv(rows: Sequence[SweepRow], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for row in rows:
        s = row.summary
        writer.writerow([row.value, row.series, _fmt(s.mean_watts), _fmt(s.mean_dbm), s.trials_ok, s.trials_failed])


class ExperimentRunner:
    """Испытания независимы (свой seed, своё состояние оптимизаторов) и идут параллельно."""

    def __init__(self, cfg: ExperimentConfig, settings: Optional[Settings] = None,
                 workers: Optional[int] = None, context: Optional[CodingContext] = None,
                 codebook: Optional[Codebook] = None):
        self.cfg = cfg
        self.settings = settings or get_settings()
        self.workers = workers or cfg.workers
        self._ctx = context
        self._codebook = codebook

    @property
    def context(self) -> CodingContext:
        if self._ctx is None:
            self._ctx = build_context(self.cfg)
        return self._ctx

    @property
    def codebook(self) -> Codebook:
        if self._codebook is None:
            self._codebook = load_codebook(self.cfg.codebook_path)
        return self._codebook

    def _pipeline(self, ch: BeamspaceChannel,
                  seed: int) -> Tuple[CodingResult, CodingResult, Optional[CodingResult]]:
        """(результат, фиксированная опора, бинарный шаг для continuous)."""
        cfg, ctx = self.cfg, self.context
        power, params = cfg.transmit_power_watts, cfg.rectenna
        opt_cfg = cfg.optimizer_config(seed)
        baseline = fixed_baseline(cfg)
        fixed = evaluate_coders(cfg.scheme, ctx, ch, *baseline, power, params, opt_cfg)

        if cfg.coding == Coding.FIXED:
            return fixed, fixed, None
        if cfg.coding == Coding.CODEBOOK:
            deployed = deploy_codebook(ctx, ch, self.codebook, cfg.scheme, power, params, opt_cfg, cfg.m, cfg.n)
            return deployed, fixed, None
        binary = optimize_binary(cfg.scheme, ctx, ch, power, params, opt_cfg, baseline)
        if cfg.coding == Coding.BINARY:
            return binary, fixed, None
        return optimize_continuous(cfg.scheme, ctx, ch, power, params, opt_cfg, binary), fixed, binary

    def run_trial(self, trial: int) -> TrialResult:
        cfg = self.cfg
        seed = derive_seed(cfg.master_seed, trial)
        start = time.perf_counter()
        try:
            ch = trial_channel(cfg, self.context, seed)
            result, fixed, binary = self._pipeline(ch, seed)
        except PixelWptError as e:
            logger.error(f"❌ Trial {trial} failed: {e}")
            return TrialResult(trial, cfg.scheme, cfg.coding, float("nan"), error_message=str(e))
        except Exception as e:
            logger.error(f"❌ Trial {trial} crashed: {e}", exc_info=True)
            return TrialResult(trial, cfg.scheme, cfg.coding, float("nan"), error_message=repr(e))

        wall = (time.perf_counter() - start) * 1000.0 if cfg.record_timing else None
        logger.debug(f"✅ Trial {trial}: {result.power:.6e} W (baseline {fixed.power:.6e} W)")
        return TrialResult(trial, cfg.scheme, cfg.coding, result.power, iterations=result.iterations,
                           wall_time_ms=wall, baseline_watts=fixed.power,
                           binary_watts=binary.power if binary is not None else float("nan"))

    async def run(self) -> Tuple[List[TrialResult], ExperimentSummary]:
        cfg = self.cfg
        # контекст строим до запуска потоков, чтобы не синтезировать антенну дважды
        _ = self.context
        if cfg.coding == Coding.CODEBOOK:
            _ = self.codebook
        logger.info(f"🚀 Running {cfg.trials} trials: scheme={cfg.scheme.value}, coding={cfg.coding.value}, "
                    f"workers={self.workers}")

        loop = asyncio.get_running_loop()
        semaphore = asyncio.Semaphore(self.workers)
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            async def one(t: int) -> TrialResult:
                async with semaphore:
                    return await loop.run_in_executor(pool, self.run_trial, t)

            results = await asyncio.gather(*(one(t) for t in range(cfg.trials)))

        summary = summarize(results, cfg.coding)
        logger.info(f"✅ Done: mean={summary.mean_watts:.6e} W ({summary.mean_dbm:.3f} dBm), "
                    f"ok={summary.trials_ok}, failed={summary.trials_failed}")
        return list(results), summary


def training_channels(cfg: ExperimentConfig, ctx: CodingContext, count: int) -> List[BeamspaceChannel]:
    """Обучающие каналы из отдельного потока seed'ов, не пересекаются с испытаниями."""
    return [trial_channel(cfg, ctx, derive_seed(cfg.master_seed, t, stream=1)) for t in range(count)]


async def obtain_pool(cfg: ExperimentConfig, ctx: CodingContext, pool_channels: int,
                      cache: Optional[PoolCache] = None, workers: int = 1,
                      objective: PoolObjective = PoolObjective.POWER) -> CoderPool:
    key = pool_key(
        antenna=str(cfg.antenna_path) if cfg.antenna_path else cfg.antenna_seed,
        q=cfg.q, k=cfg.k, target_rank=cfg.target_rank, m=cfg.m, n=cfg.n, scheme=cfg.scheme.value,
        objective=objective.value, pool_channels=pool_channels, master_seed=cfg.master_seed,
        transmit_power_dbm=cfg.transmit_power_dbm, path_loss_db=cfg.path_loss_db,
        antenna_cfg=cfg.antenna.model_dump(), rectenna=cfg.rectenna.model_dump(),
        sebo=cfg.sebo.model_dump(), loop=cfg.loop.model_dump(),
    )
    if cache is not None:
        cached = await cache.get_pool(key)
        if cached is not None:
            return cached

    channels = training_channels(cfg, ctx, pool_channels)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        pool = await asyncio.to_thread(
            build_pool, ctx, channels, cfg.scheme, cfg.transmit_power_watts, cfg.rectenna,
            cfg.optimizer_config(cfg.master_seed), cfg.m, cfg.n, executor, objective,
        )
    if cache is not None:
        await cache.put_pool(key, pool)
    return pool


async def train_codebook_for(cfg: ExperimentConfig, pool_channels: int, size: int,
                             cache: Optional[PoolCache] = None, workers: int = 1,
                             context: Optional[CodingContext] = None,
                             objective: PoolObjective = PoolObjective.POWER) -> Codebook:
    ctx = context or build_context(cfg)
    pool = await obtain_pool(cfg, ctx, pool_channels, cache, workers, objective)
    codebook_cfg = cfg.codebook.model_copy(update={"size": size, "pool_channels": pool_channels})
    return await asyncio.to_thread(train_codebook, pool, size, codebook_cfg)


async def codebook_series(template: ExperimentConfig, ctx: CodingContext, sizes: Sequence[int],
                          cache: Optional[PoolCache] = None, workers: int = 1,
                          benchmarks: bool = False) -> Dict[str, Dict[int, Codebook]]:
    """
    Обученные вложенные кодбуки по размерам; с benchmarks ещё случайный
    кодбук и кодбук, обученный на пуле по SISO-усилению канала.
    """
    sizes = [int(s) for s in sizes]
    series: Dict[str, Dict[int, Codebook]] = {}
    pool = await obtain_pool(template, ctx, template.codebook.pool_channels, cache, workers)
    series["learned"] = await asyncio.to_thread(partial(nested_codebooks, pool, sizes, template.codebook))
    if benchmarks:
        series["random"] = {
            s: random_codebook(template.q, s, derive_seed(template.master_seed, s, stream=2)) for s in sizes
        }
        gain_pool = await obtain_pool(template, ctx, template.codebook.pool_channels, cache, workers,
                                      PoolObjective.CHANNEL_GAIN)
        series["channel_gain"] = await asyncio.to_thread(
            partial(nested_codebooks, gain_pool, sizes, template.codebook))
    return series


async def sweep(template: ExperimentConfig, axis: SweepAxis, values: Sequence[int],
                settings: Optional[Settings] = None, cache: Optional[PoolCache] = None,
                workers: Optional[int] = None, benchmarks: bool = False) -> List[SweepRow]:
    """
    Одна строка на значение (и на серию кодбука); seed'ы общие для всех точек,
    кривые парные.
    """
    if not values:
        raise ConfigInvalid("values", "sweep needs at least one value")
    settings = settings or get_settings()
    ctx = build_context(template)
    rows: List[SweepRow] = []

    if axis == SweepAxis.RECEIVE_ANTENNAS:
        for value in values:
            cfg = template.model_copy(update={"n": int(value)})
            logger.info(f"📈 Sweep {axis.value}={value}")
            _, summary = await ExperimentRunner(cfg, settings, workers, context=ctx).run()
            rows.append(SweepRow(value=int(value), summary=summary, series=cfg.coding.value))
        return rows

    series = await codebook_series(template, ctx, values, cache, workers or template.workers, benchmarks)
    cfg = template.model_copy(update={"coding": Coding.CODEBOOK})
    for value in values:
        for name, books in series.items():
            logger.info(f"📈 Sweep {axis.value}={value} ({name})")
            runner = ExperimentRunner(cfg, settings, workers, context=ctx, codebook=books[int(value)])
            _, summary = await runner.run()
            rows.append(SweepRow(value=int(value), summary=summary, series=name))
    return rows
