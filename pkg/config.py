from pathlib import Path
from typing import Any, Optional, Tuple, Union
from functools import lru_cache
import logging
import json
import math
import tomllib

from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from errors import ConfigInvalid
from models import Coding, Scheme

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="PIXELWPT_", extra="ignore"
    )

    LOG_LEVEL: str = "INFO"
    SEED: Optional[int] = None
    WORKERS: int = 1

    BASE_DIR: Path = Path(__file__).resolve().parent
    CACHE_DB_PATH: Path = BASE_DIR / "cache.db"

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def _normalize_level(cls, v: Any) -> str:
        if not v: return "INFO"
        return str(v).strip().upper()


@lru_cache()
def get_settings() -> Settings:
    return Settings()


class AntennaConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_oc: float = 1e9
    power_fraction: float = 0.998
    unit_excitation: complex = 1 + 0j

    @field_validator("x_oc")
    @classmethod
    def _positive_x_oc(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("x_oc must be positive")
        return v

    @field_validator("power_fraction")
    @classmethod
    def _fraction_range(cls, v: float) -> float:
        if not 0.9 < v < 1:
            raise ValueError("power_fraction must lie in (0.9, 1)")
        return v


class RectennaParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    r_ant: float = 50.0
    r_l: float = 5000.0
    i_d: float = 1.05
    v_t: float = 0.025
    n_0: int = 4

    @field_validator("r_ant", "r_l", "i_d", "v_t")
    @classmethod
    def _strictly_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be strictly positive")
        return v

    @field_validator("n_0")
    @classmethod
    def _even_order(cls, v: int) -> int:
        if v < 2 or v % 2:
            raise ValueError("truncation order must be an even integer >= 2")
        return v


class SeboConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    block_size: int = Field(default=10, ge=1)
    rounds: int = Field(default=20, ge=1)
    # None -> n_bits // 4
    flip_count: Optional[int] = Field(default=None, ge=0)
    # None -> sweep until no improvement
    max_sweeps: Optional[int] = Field(default=None, ge=1)
    rng_seed: int = 0


class QuasiNewtonConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    restarts: int = Field(default=10, ge=1)
    init_range: Tuple[float, float] = (-50.0, 50.0)
    gradient_step: float = Field(default=1e-4, gt=0)
    tolerance: float = Field(default=1e-6, gt=0)
    max_iters: int = Field(default=200, ge=1)
    rng_seed: int = 0

    @field_validator("init_range")
    @classmethod
    def _nonempty_range(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if not v[0] < v[1]:
            raise ValueError("init_range must be a nonempty interval (low < high)")
        return v


class LoopConfig(BaseModel):
    """Пороги сходимости и лимиты итераций для всех чередующихся алгоритмов."""
    model_config = ConfigDict(frozen=True)

    sca_tol: float = 1e-9
    sca_max_iter: int = Field(default=200, ge=1)
    outer_tol: float = 1e-6
    outer_max_iter: int = Field(default=30, ge=1)
    abf_tol: float = 1e-12
    abf_max_iter: int = Field(default=2000, ge=1)
    deploy_sca_max_iter: int = Field(default=10, ge=1)
    deploy_max_sweeps: int = Field(default=20, ge=1)


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    sebo: SeboConfig = SeboConfig()
    qn: QuasiNewtonConfig = QuasiNewtonConfig()
    loop: LoopConfig = LoopConfig()

    def reseeded(self, seed: int) -> "OptimizerConfig":
        return self.model_copy(update={
            "sebo": self.sebo.model_copy(update={"rng_seed": seed}),
            "qn": self.qn.model_copy(update={"rng_seed": seed}),
        })


class CodebookConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    size: int = Field(default=8, ge=1)
    pool_channels: int = Field(default=100, ge=1)
    tol: float = 1e-9
    max_iter: int = Field(default=50, ge=1)
    rng_seed: int = 0
    # центры кластеров ищутся исчерпывающе блоками по 10 бит
    sebo: SeboConfig = SeboConfig(rounds=2)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    m: int = Field(default=2, ge=1)
    n: int = Field(default=2, ge=1)
    q: int = Field(default=10, ge=1)
    k: int = Field(default=16, ge=1)
    target_rank: int = Field(default=4, ge=1)
    antenna_seed: int = 1
    antenna_path: Optional[Path] = None

    scheme: Scheme = Scheme.DCC_OPT
    coding: Coding = Coding.BINARY
    transmit_power_dbm: float = 36.0
    path_loss_db: float = 66.0
    trials: int = Field(default=200, ge=1)
    master_seed: int = 0
    workers: int = Field(default=1, ge=1)
    record_timing: bool = False
    failure_threshold: float = 0.01
    baseline_coder: Optional[str] = None
    codebook_path: Optional[Path] = None

    antenna: AntennaConfig = AntennaConfig()
    rectenna: RectennaParams = RectennaParams()
    sebo: SeboConfig = SeboConfig()
    qn: QuasiNewtonConfig = QuasiNewtonConfig()
    loop: LoopConfig = LoopConfig()
    codebook: CodebookConfig = CodebookConfig()

    @field_validator("transmit_power_dbm", "path_loss_db")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    @model_validator(mode="after")
    def _check_consistency(self) -> "ExperimentConfig":
        if self.baseline_coder is not None:
            if len(self.baseline_coder) != self.q or set(self.baseline_coder) - {"0", "1"}:
                raise ValueError(f"baseline_coder must be a bit string of length q={self.q}")
        if self.target_rank > min(2 * self.k, self.q + 1):
            raise ValueError("target_rank must not exceed min(2k, q+1)")
        if self.coding == Coding.CODEBOOK and self.codebook_path is None:
            raise ValueError("codebook_path is required when coding = codebook")
        return self

    @property
    def transmit_power_watts(self) -> float:
        return 10 ** (self.transmit_power_dbm / 10) / 1000

    @property
    def amplitude_scale(self) -> float:
        return 10 ** (-self.path_loss_db / 20)

    def optimizer_config(self, seed: Optional[int] = None) -> OptimizerConfig:
        cfg = OptimizerConfig(sebo=self.sebo, qn=self.qn, loop=self.loop)
        return cfg if seed is None else cfg.reseeded(seed)

    def full_scale(self) -> "ExperimentConfig":
        return self.model_copy(update={"q": 39, "k": 72, "target_rank": 7, "trials": 1000})


def _field_path(loc: Tuple[Union[int, str], ...]) -> str:
    return ".".join(str(p) for p in loc) or "<root>"


def parse_experiment_config(data: dict, settings: Optional[Settings] = None) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigInvalid(_field_path(first["loc"]), first["msg"]) from e

    settings = settings or get_settings()
    if settings.SEED is not None:
        logger.info(f"🎲 master_seed overridden from environment: {settings.SEED}")
        cfg = cfg.model_copy(update={"master_seed": settings.SEED})
    if "workers" not in data and settings.WORKERS > 1:
        cfg = cfg.model_copy(update={"workers": settings.WORKERS})
    return cfg


def load_experiment_config(path: Union[str, Path], settings: Optional[Settings] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        else:
            data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ConfigInvalid("<file>", f"cannot read {path}: {e}") from e
    return parse_experiment_config(data, settings)
