from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from errors import DimensionMismatch, EmptyCodebook, InvalidCoder, ZeroPatternMatrix


class CoderMode(str, Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class Side(str, Enum):
    TRANSMIT = "transmit"
    RECEIVE = "receive"


class Scheme(str, Enum):
    DCC_OPT = "dcc_opt"
    DCC_SVD = "dcc_svd"
    RFC_SVD = "rfc_svd"
    RFC_ABF = "rfc_abf"


class Coding(str, Enum):
    FIXED = "fixed"
    BINARY = "binary"
    CONTINUOUS = "continuous"
    CODEBOOK = "codebook"


class PoolObjective(str, Enum):
    """Чем оценивать кодеры при сборе обучающего пула."""
    POWER = "power"
    CHANNEL_GAIN = "channel_gain"


def _frozen_array(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class AntennaCoder:
    b: np.ndarray
    mode: CoderMode = CoderMode.BINARY

    def __post_init__(self):
        b = _frozen_array(self.b, float).reshape(-1)
        object.__setattr__(self, "b", b)
        if self.mode == CoderMode.BINARY:
            if not np.all((b == 0) | (b == 1)):
                raise InvalidCoder("binary coder entries must be exactly 0 or 1")
        elif not np.all((b >= 0) & (b <= 1)):
            raise InvalidCoder("continuous coder entries must lie in [0, 1]")

    @property
    def q(self) -> int:
        return self.b.size

    @classmethod
    def zeros(cls, q: int, mode: CoderMode = CoderMode.BINARY) -> "AntennaCoder":
        return cls(np.zeros(q), mode)

    @classmethod
    def from_bits(cls, bits: str) -> "AntennaCoder":
        return cls(np.array([int(c) for c in bits], dtype=float), CoderMode.BINARY)

    def to_bits(self) -> str:
        return "".join(str(int(v)) for v in self.b)


@dataclass(frozen=True)
class CoderMatrix:
    """B_T (Q×M) или B_R (Q×N): по одному кодеру на антенну."""
    columns: Tuple[AntennaCoder, ...]

    def __post_init__(self):
        cols = tuple(self.columns)
        object.__setattr__(self, "columns", cols)
        if not cols:
            raise InvalidCoder("coder matrix needs at least one column")
        if len({c.q for c in cols}) != 1 or len({c.mode for c in cols}) != 1:
            raise InvalidCoder("all coder columns must share length Q and mode")

    @property
    def q(self) -> int:
        return self.columns[0].q

    @property
    def count(self) -> int:
        return len(self.columns)

    @property
    def mode(self) -> CoderMode:
        return self.columns[0].mode

    def as_matrix(self) -> np.ndarray:
        return np.column_stack([c.b for c in self.columns])

    def flatten(self) -> np.ndarray:
        # column-major: b_1, b_2, ...
        return np.concatenate([c.b for c in self.columns])

    @classmethod
    def from_matrix(cls, mat: np.ndarray, mode: CoderMode = CoderMode.BINARY) -> "CoderMatrix":
        mat = np.asarray(mat, dtype=float)
        return cls(tuple(AntennaCoder(mat[:, j], mode) for j in range(mat.shape[1])))

    @classmethod
    def from_flat(cls, vec: np.ndarray, q: int, count: int, mode: CoderMode = CoderMode.BINARY) -> "CoderMatrix":
        vec = np.asarray(vec, dtype=float)
        if vec.size != q * count:
            raise DimensionMismatch(f"expected {q * count} coder entries, got {vec.size}")
        return cls.from_matrix(vec.reshape(count, q).T, mode)

    @classmethod
    def uniform(cls, coder: AntennaCoder, count: int) -> "CoderMatrix":
        return cls(tuple(coder for _ in range(count)))


def split_bits(bits: np.ndarray, q: int, m: int, n: int, mode: CoderMode = CoderMode.BINARY) -> Tuple[CoderMatrix, CoderMatrix]:
    """Разбивает конкатенацию (B_T, B_R) обратно на две матрицы кодеров."""
    bits = np.asarray(bits)
    return (CoderMatrix.from_flat(bits[:q * m], q, m, mode),
            CoderMatrix.from_flat(bits[q * m:], q, n, mode))


def join_bits(b_t: CoderMatrix, b_r: CoderMatrix) -> np.ndarray:
    return np.concatenate([b_t.flatten(), b_r.flatten()])


@dataclass(frozen=True)
class MultiportNetwork:
    q: int
    k: int
    z: np.ndarray
    e_oc: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", _frozen_array(self.z, complex))
        object.__setattr__(self, "e_oc", _frozen_array(self.e_oc, complex))
        if self.z.shape != (self.q + 1, self.q + 1):
            raise DimensionMismatch(f"z must be {(self.q + 1,) * 2}, got {self.z.shape}")
        if self.e_oc.shape != (2 * self.k, self.q + 1):
            raise DimensionMismatch(f"e_oc must be {(2 * self.k, self.q + 1)}, got {self.e_oc.shape}")

    @property
    def z_aa(self) -> complex:
        return complex(self.z[0, 0])

    @property
    def z_ap(self) -> np.ndarray:
        return self.z[0, 1:]

    @property
    def z_pa(self) -> np.ndarray:
        return self.z[1:, 0]

    @property
    def z_pp(self) -> np.ndarray:
        return self.z[1:, 1:]


@dataclass(frozen=True)
class PatternBasis:
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen_array(self.u, complex))
        object.__setattr__(self, "s", _frozen_array(self.s, float))
        object.__setattr__(self, "v", _frozen_array(self.v, complex))
        u, s, v = self.u, self.s, self.v
        if u.ndim != 2 or v.ndim != 2 or s.ndim != 1 or s.size == 0:
            raise DimensionMismatch("basis needs 2-D u, v and a non-empty 1-D s")
        if u.shape[1] != s.size or v.shape[1] != s.size:
            raise DimensionMismatch(f"u {u.shape}, s {s.shape}, v {v.shape} disagree on N_eff")
        if not np.all(np.isfinite(s)) or np.any(s <= 0) or np.any(np.diff(s) > 0):
            raise ZeroPatternMatrix("singular values must be positive and non-increasing")

    @property
    def n_eff(self) -> int:
        return self.s.size


@dataclass(frozen=True)
class BeamspaceChannel:
    h_c: np.ndarray
    amplitude_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "h_c", _frozen_array(np.atleast_2d(self.h_c), complex))
        if not np.all(np.isfinite(self.h_c)):
            raise DimensionMismatch("channel contains NaN/Inf entries")

    @property
    def n_r(self) -> int:
        return self.h_c.shape[0]

    @property
    def n_t(self) -> int:
        return self.h_c.shape[1]


@dataclass(frozen=True)
class VirtualChannel:
    h_v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h_v", _frozen_array(np.atleast_2d(self.h_v), complex))
        rows, cols = self.h_v.shape
        if rows != cols or rows % 2:
            raise DimensionMismatch(f"virtual channel must be square with even dimension 2K, got {self.h_v.shape}")


@dataclass(frozen=True)
class ReactanceMatrix:
    """X_T (Q×M) и X_R (Q×N) в омах."""
    x_t: np.ndarray
    x_r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_t", _frozen_array(np.atleast_2d(self.x_t), float))
        object.__setattr__(self, "x_r", _frozen_array(np.atleast_2d(self.x_r), float))
        if not (np.all(np.isfinite(self.x_t)) and np.all(np.isfinite(self.x_r))):
            raise DimensionMismatch("reactance matrix contains NaN/Inf entries")

    def flatten(self) -> np.ndarray:
        # тот же порядок, что и у битов: столбцы X_T, затем X_R
        return np.concatenate([self.x_t.T.ravel(), self.x_r.T.ravel()])


@dataclass
class ScaIterate:
    p_t: np.ndarray
    r: np.ndarray
    a: np.ndarray
    objective: float


@dataclass
class RfcBeamformers:
    p_t: np.ndarray
    p_r: np.ndarray
    gain: float


@dataclass
class CodingResult:
    b_t: CoderMatrix
    b_r: CoderMatrix
    p_t: np.ndarray
    power: float
    iterations: int = 0
    beamformers: Optional[RfcBeamformers] = None
    reactance: Optional[ReactanceMatrix] = None
    history: List[float] = field(default_factory=list)

    @property
    def p_r(self) -> Optional[np.ndarray]:
        return self.beamformers.p_r if self.beamformers is not None else None


def _bit_rows(a, what: str) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(a))
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise InvalidCoder(f"{what} entries must be binary")
    arr = arr.astype(np.uint8)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class CoderPool:
    """L бинарных кодеров длины Q, собранных по обучающим каналам."""
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _bit_rows(self.entries, "pool"))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def q(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class Codebook:
    codewords: np.ndarray

    def __post_init__(self):
        cw = _bit_rows(self.codewords, "codeword")
        if cw.shape[0] == 0 or cw.shape[1] == 0:
            raise EmptyCodebook("codebook must contain at least one codeword")
        object.__setattr__(self, "codewords", cw)

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @property
    def q(self) -> int:
        return self.codewords.shape[1]

    def coder(self, index: int) -> AntennaCoder:
        return AntennaCoder(self.codewords[index].astype(float), CoderMode.BINARY)

    def to_bits(self) -> List[str]:
        return ["".join(str(int(v)) for v in row) for row in self.codewords]

    @classmethod
    def from_bits(cls, bits: List[str]) -> "Codebook":
        if not bits:
            raise EmptyCodebook("codebook must contain at least one codeword")
        if len({len(s) for s in bits}) != 1:
            raise DimensionMismatch("all codewords must have the same length")
        return cls(np.array([[int(c) for c in s] for s in bits], dtype=np.uint8).reshape(len(bits), -1))


@dataclass(frozen=True)
class Assignment:
    """r_{l,d}: ровно одна единица в каждой строке."""
    labels: np.ndarray
    clusters: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int).reshape(-1).copy()
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        if labels.size and (labels.min() < 0 or labels.max() >= self.clusters):
            raise DimensionMismatch("assignment label out of range")

    @property
    def r(self) -> np.ndarray:
        mat = np.zeros((self.labels.size, self.clusters), dtype=np.uint8)
        mat[np.arange(self.labels.size), self.labels] = 1
        return mat


@dataclass
class TrialResult:
    trial_index: int
    scheme: Scheme
    coding: Coding
    power_watts: float
    iterations: int = 0
    wall_time_ms: Optional[float] = None
    baseline_watts: float = float("nan")
    binary_watts: float = float("nan")
    error_message: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error_message is not None

    @property
    def power_dbm(self) -> float:
        return watts_to_dbm(self.power_watts)


@dataclass
class ExperimentSummary:
    mean_watts: float
    trials_ok: int
    trials_failed: int
    gain_over_fixed_db: Optional[float] = None
    gain_over_binary_db: Optional[float] = None

    @property
    def mean_dbm(self) -> float:
        return watts_to_dbm(self.mean_watts)


@dataclass
class SweepRow:
    value: int
    summary: ExperimentSummary
    series: str = ""


def watts_to_dbm(watts: float) -> float:
    if np.isnan(watts):
        return float("nan")
    return float(10.0 * np.log10(watts * 1000.0)) if watts > 0 else float("-inf")
