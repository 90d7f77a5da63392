"""
Beamspace MIMO channel: sampling, pattern-coder assembly and the effective
M→N channel H = W_Rᴴ H_C W_T.
"""
import json
import logging
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import block_diag

from antenna_model import coder_from_reactance, compute_basis, pattern_coder, pattern_coder_from_reactance
from config import AntennaConfig
from errors import DegenerateRadiator, DimensionMismatch, InvalidAntennaData, SingularLoadedNetwork
from models import (
    AntennaCoder, BeamspaceChannel, CoderMatrix, CoderMode, MultiportNetwork,
    PatternBasis, ReactanceMatrix, Side, VirtualChannel, split_bits,
)

logger = logging.getLogger(__name__)


def derive_seed(master_seed: int, trial: int, stream: int = 0) -> int:
    """Независимый 64-битный seed для (trial, stream); не зависит от порядка запуска."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial, stream))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def sample_channel(rng_seed: int, n_r: int, n_t: int, amplitude_scale: float) -> BeamspaceChannel:
    if n_r < 1 or n_t < 1:
        raise DimensionMismatch(f"channel needs at least one row and column, got {n_r}×{n_t}")
    if not amplitude_scale > 0:
        raise ValueError(f"amplitude_scale must be positive, got {amplitude_scale}")
    rng = np.random.Generator(np.random.Philox(rng_seed))
    # (re, im) парами по строкам: при том же seed канал с большим n_r продолжает меньший
    draws = rng.standard_normal((n_r, n_t, 2))
    g = (draws[..., 0] + 1j * draws[..., 1]) / np.sqrt(2.0)
    return BeamspaceChannel(h_c=g * amplitude_scale, amplitude_scale=amplitude_scale)


def _block_diagonal(columns: Sequence[np.ndarray]) -> np.ndarray:
    return block_diag(*[np.asarray(w, dtype=complex).reshape(-1, 1) for w in columns])


def assemble_pattern_coders(coders: CoderMatrix, antenna: MultiportNetwork, basis: PatternBasis,
                            cfg: AntennaConfig, side: Side) -> np.ndarray:
    columns = []
    for idx, coder in enumerate(coders.columns):
        try:
            columns.append(pattern_coder(basis, antenna, coder, cfg, side))
        except DegenerateRadiator as e:
            raise DegenerateRadiator(f"{side.value} antenna {idx}: {e}", index=idx, side=side.value) from e
    return _block_diagonal(columns)


def effective_channel(ch: BeamspaceChannel, w_t: np.ndarray, w_r: np.ndarray) -> np.ndarray:
    w_t = np.atleast_2d(np.asarray(w_t, dtype=complex))
    w_r = np.atleast_2d(np.asarray(w_r, dtype=complex))
    if w_t.shape[0] != ch.n_t or w_r.shape[0] != ch.n_r:
        raise DimensionMismatch(
            f"coders {w_r.shape} / {w_t.shape} do not fit channel {ch.h_c.shape}")
    return w_r.conj().T @ ch.h_c @ w_t


def virtual_to_beamspace(hv: VirtualChannel, basis_t: Sequence[PatternBasis],
                         basis_r: Sequence[PatternBasis]) -> BeamspaceChannel:
    dim = hv.h_v.shape[0]
    for b in (*basis_t, *basis_r):
        if b.u.shape[0] != dim:
            raise DimensionMismatch(f"basis has {b.u.shape[0]} pattern samples, virtual channel has {dim}")
    e_t = np.hstack([b.u for b in basis_t])
    e_r = np.hstack([b.u for b in basis_r])
    # транспонирование, не эрмитово сопряжение
    return BeamspaceChannel(h_c=e_r.T @ hv.h_v @ e_t, amplitude_scale=1.0)


def save_channel(ch: BeamspaceChannel, path: Union[str, Path]) -> None:
    data = {
        "n_r": ch.n_r,
        "n_t": ch.n_t,
        "scale": ch.amplitude_scale,
        "real": ch.h_c.real.ravel().tolist(),
        "imag": ch.h_c.imag.ravel().tolist(),
    }
    Path(path).write_text(json.dumps(data), encoding="utf-8")


def load_channel(path: Union[str, Path]) -> BeamspaceChannel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        n_r, n_t = int(data["n_r"]), int(data["n_t"])
        h = np.asarray(data["real"], dtype=float) + 1j * np.asarray(data["imag"], dtype=float)
        return BeamspaceChannel(h_c=h.reshape(n_r, n_t), amplitude_scale=float(data["scale"]))
    except (OSError, KeyError, TypeError, ValueError) as e:
        raise InvalidAntennaData(f"cannot read channel file {path}: {e}") from e


class CodingContext:
    """
    Антенна + её базис + параметры нагрузок. Общий для всех испытаний:
    кодеры диаграмм зависят только от антенны, поэтому кэшируются по битам.
    """

    def __init__(self, antenna: MultiportNetwork, cfg: AntennaConfig,
                 basis: Optional[PatternBasis] = None, cache_size: int = 1 << 16):
        self.antenna = antenna
        self.cfg = cfg
        self.basis = basis if basis is not None else compute_basis(antenna, cfg)
        self._cached_coder = lru_cache(maxsize=cache_size)(self._binary_coder)

    @property
    def q(self) -> int:
        return self.antenna.q

    @property
    def n_eff(self) -> int:
        return self.basis.n_eff

    def _binary_coder(self, bits: bytes, side: Side) -> np.ndarray:
        coder = AntennaCoder(np.frombuffer(bits, dtype=np.uint8).astype(float), CoderMode.BINARY)
        w = pattern_coder(self.basis, self.antenna, coder, self.cfg, side)
        w.flags.writeable = False
        return w

    def pattern_coder(self, coder: AntennaCoder, side: Side) -> np.ndarray:
        if coder.mode == CoderMode.BINARY:
            return self._cached_coder(coder.b.astype(np.uint8).tobytes(), side)
        return pattern_coder(self.basis, self.antenna, coder, self.cfg, side)

    def assemble(self, coders: CoderMatrix, side: Side) -> np.ndarray:
        columns = []
        for idx, coder in enumerate(coders.columns):
            try:
                columns.append(self.pattern_coder(coder, side))
            except DegenerateRadiator as e:
                raise DegenerateRadiator(f"{side.value} antenna {idx}: {e}", index=idx, side=side.value) from e
        return _block_diagonal(columns)

    def assemble_reactance(self, x: np.ndarray, side: Side) -> np.ndarray:
        """x: Q×count реактивностей нагрузок (Ом)."""
        x = np.asarray(x, dtype=float)
        columns = []
        for idx in range(x.shape[1]):
            try:
                columns.append(pattern_coder_from_reactance(self.basis, self.antenna, x[:, idx], self.cfg, side))
            except DegenerateRadiator as e:
                raise DegenerateRadiator(f"{side.value} antenna {idx}: {e}", index=idx, side=side.value) from e
        return _block_diagonal(columns)

    def effective(self, ch: BeamspaceChannel, b_t: CoderMatrix, b_r: CoderMatrix) -> np.ndarray:
        return effective_channel(ch, self.assemble(b_t, Side.TRANSMIT), self.assemble(b_r, Side.RECEIVE))

    def effective_from_reactance(self, ch: BeamspaceChannel, x_t: np.ndarray, x_r: np.ndarray) -> np.ndarray:
        return effective_channel(ch, self.assemble_reactance(x_t, Side.TRANSMIT),
                                 self.assemble_reactance(x_r, Side.RECEIVE))

    def split_reactance(self, x: np.ndarray, m: int, n: int):
        """Плоский вектор (столбцы X_T, затем X_R) -> (X_T, X_R)."""
        x = np.asarray(x, dtype=float)
        q = self.q
        if x.size != q * (m + n):
            raise DimensionMismatch(f"expected {q * (m + n)} reactances, got {x.size}")
        return x[:q * m].reshape(m, q).T, x[q * m:].reshape(n, q).T

    def reactance_of(self, coders: CoderMatrix) -> np.ndarray:
        return self.cfg.x_oc * coders.as_matrix()

    def bits_objective(self, ch: BeamspaceChannel, m: int, n: int,
                       score: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
        """Целевая функция SEBO: биты (B_T, B_R) -> score(H)."""
        q = self.q

        def objective(bits: np.ndarray) -> float:
            b_t, b_r = split_bits(bits, q, m, n)
            try:
                h = self.effective(ch, b_t, b_r)
            except (DegenerateRadiator, SingularLoadedNetwork) as e:
                # конфигурация ничего не излучает
                logger.debug(f"🔎 Degenerate coders {''.join(str(int(v)) for v in bits)} scored 0: {e}")
                return 0.0
            return score(h)
        return objective

    def reactance_objective(self, ch: BeamspaceChannel, m: int, n: int,
                            score: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
        def objective(x: np.ndarray) -> float:
            x_t, x_r = self.split_reactance(x, m, n)
            try:
                h = self.effective_from_reactance(ch, x_t, x_r)
            except (DegenerateRadiator, SingularLoadedNetwork) as e:
                logger.debug(f"🔎 Degenerate reactances {np.array2string(np.asarray(x), precision=3)} scored 0: {e}")
                return 0.0
            return score(h)
        return objective

    def coders_from_reactance(self, x: np.ndarray, m: int, n: int) -> Tuple[CoderMatrix, CoderMatrix, ReactanceMatrix]:
        """Отчётные кодеры b = clamp(|x|/x_oc, 0, 1) и сами реактивности."""
        x_t, x_r = self.split_reactance(x, m, n)
        b_t = CoderMatrix(tuple(coder_from_reactance(x_t[:, j], self.cfg) for j in range(m)))
        b_r = CoderMatrix(tuple(coder_from_reactance(x_r[:, j], self.cfg) for j in range(n)))
        return b_t, b_r, ReactanceMatrix(x_t, x_r)
