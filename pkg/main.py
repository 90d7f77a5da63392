import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional

from antenna_model import save_network, synthesize_antenna
from cache_service import PoolCache
from codebook import save_codebook
from config import AntennaConfig, ExperimentConfig, get_settings, load_experiment_config
from errors import ConfigInvalid, PixelWptError
from harness import (
    ExperimentRunner, SweepAxis, check_failures, sweep, train_codebook_for, write_results_csv,
    write_sweep_csv,
)
from logging_setup import setup_logging

logger = logging.getLogger("main")


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pixelwpt", description="Pixel-antenna MIMO WPT experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Monte Carlo experiment, per-trial CSV")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", type=Path, help="CSV path (stdout when omitted)")
    run.add_argument("--workers", type=int)
    run.add_argument("--paper-scale", action="store_true", help="Q=39, K=72, N_eff=7, 1000 trials")
    run.add_argument("--timing", action="store_true", help="record wall_ms per trial")
    run.add_argument("--baseline-coder", help="bit string of length Q for the fixed baseline")

    sw = sub.add_parser("sweep", help="one summary row per axis value")
    sw.add_argument("--config", required=True, type=Path)
    sw.add_argument("--axis", required=True, choices=[a.value for a in SweepAxis])
    sw.add_argument("--values", required=True, type=_int_list)
    sw.add_argument("--out", type=Path)
    sw.add_argument("--workers", type=int)
    sw.add_argument("--benchmarks", action="store_true",
                    help="codebook_size: also deploy random and channel-gain codebooks")

    tc = sub.add_parser("train-codebook", help="offline codebook training")
    tc.add_argument("--config", required=True, type=Path)
    tc.add_argument("--pool-channels", required=True, type=int)
    tc.add_argument("--size", required=True, type=int)
    tc.add_argument("--out", required=True, type=Path)
    tc.add_argument("--workers", type=int)

    ga = sub.add_parser("gen-antenna", help="synthetic pixel antenna to JSON")
    ga.add_argument("--seed", required=True, type=int)
    ga.add_argument("--q", required=True, type=int)
    ga.add_argument("--k", required=True, type=int)
    ga.add_argument("--rank", required=True, type=int)
    ga.add_argument("--out", required=True, type=Path)
    return parser


def apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    """CLI-флаги поверх файла; результат валидируется заново."""
    data = cfg.model_dump()
    if getattr(args, "paper_scale", False):
        data.update(cfg.full_scale().model_dump(include={"q", "k", "target_rank", "trials"}))
    if getattr(args, "workers", None):
        data["workers"] = args.workers
    if getattr(args, "timing", False):
        data["record_timing"] = True
    if getattr(args, "baseline_coder", None):
        data["baseline_coder"] = args.baseline_coder
    try:
        return ExperimentConfig.model_validate(data)
    except ValueError as e:
        raise ConfigInvalid("<cli>", str(e)) from e


async def cmd_run(args: argparse.Namespace) -> None:
    settings = get_settings()
    cfg = apply_overrides(load_experiment_config(args.config, settings), args)
    results, summary = await ExperimentRunner(cfg, settings).run()
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with args.out.open("w", encoding="utf-8", newline="") as f:
            write_results_csv(results, summary, f)
        logger.info(f"💾 Results written to {args.out}")
    else:
        write_results_csv(results, summary, sys.stdout)
    check_failures(summary, cfg.failure_threshold)


async def cmd_sweep(args: argparse.Namespace) -> None:
    settings = get_settings()
    cfg = apply_overrides(load_experiment_config(args.config, settings), args)
    async with PoolCache(settings.CACHE_DB_PATH) as cache:
        rows = await sweep(cfg, SweepAxis(args.axis), args.values, settings, cache, benchmarks=args.benchmarks)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with args.out.open("w", encoding="utf-8", newline="") as f:
            write_sweep_csv(rows, f)
    else:
        write_sweep_csv(rows, sys.stdout)
    for row in rows:
        check_failures(row.summary, cfg.failure_threshold)


async def cmd_train_codebook(args: argparse.Namespace) -> None:
    settings = get_settings()
    cfg = apply_overrides(load_experiment_config(args.config, settings), args)
    async with PoolCache(settings.CACHE_DB_PATH) as cache:
        cb = await train_codebook_for(cfg, args.pool_channels, args.size, cache, cfg.workers)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_codebook(cb, args.out)
    logger.info(f"💾 Codebook (D={cb.size}) written to {args.out}")


def cmd_gen_antenna(args: argparse.Namespace) -> None:
    net = synthesize_antenna(args.seed, args.q, args.k, args.rank, AntennaConfig())
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_network(net, args.out)
    logger.info(f"💾 Antenna Q={net.q}, K={net.k} written to {args.out}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(get_settings().LOG_LEVEL)
    try:
        if args.command == "run":
            asyncio.run(cmd_run(args))
        elif args.command == "sweep":
            asyncio.run(cmd_sweep(args))
        elif args.command == "train-codebook":
            asyncio.run(cmd_train_codebook(args))
        else:
            cmd_gen_antenna(args)
    except PixelWptError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return 1
    except KeyboardInterrupt:
        logger.warning("⚠️ Interrupted")
        return 130
    return 0


if __name__ == "__main__":
    sys.exit(main())
