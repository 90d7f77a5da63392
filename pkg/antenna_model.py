"""
Pixel antenna as a (Q+1)-port network: load mapping, port currents,
orthogonal pattern basis and pattern coders.
"""
import json
import logging
from pathlib import Path
from typing import Union

import numpy as np

from config import AntennaConfig
from errors import (
    DegenerateRadiator, DimensionMismatch, InfeasibleRank, InvalidAntennaData,
    SingularLoadedNetwork, ZeroPatternMatrix,
)
from models import AntennaCoder, CoderMode, MultiportNetwork, PatternBasis, Side

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e14
DEGENERATE_NORM = 1e-14
RECIPROCITY_TOL = 1e-9


def load_impedance(coder: AntennaCoder, cfg: AntennaConfig) -> np.ndarray:
    return np.diag(1j * cfg.x_oc * coder.b)


def coder_to_reactance(coder: AntennaCoder, cfg: AntennaConfig) -> np.ndarray:
    return cfg.x_oc * coder.b


def coder_from_reactance(x: np.ndarray, cfg: AntennaConfig) -> AntennaCoder:
    """b = clamp(|x| / x_oc, 0, 1). Только для отчёта: физика считается по x."""
    return AntennaCoder(np.clip(np.abs(np.asarray(x, dtype=float)) / cfg.x_oc, 0.0, 1.0), CoderMode.CONTINUOUS)


def port_currents_from_reactance(net: MultiportNetwork, x: np.ndarray, cfg: AntennaConfig) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (net.q,):
        raise DimensionMismatch(f"expected {net.q} load reactances, got shape {x.shape}")
    loaded = net.z_pp + np.diag(1j * x)
    cond = np.linalg.cond(loaded)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularLoadedNetwork(cond)
    return -np.linalg.solve(loaded, net.z_pa * cfg.unit_excitation)


def port_currents(net: MultiportNetwork, coder: AntennaCoder, cfg: AntennaConfig) -> np.ndarray:
    if coder.q != net.q:
        raise DimensionMismatch(f"coder has {coder.q} entries, network has {net.q} pixel ports")
    return port_currents_from_reactance(net, coder_to_reactance(coder, cfg), cfg)


def compute_basis(net: MultiportNetwork, cfg: AntennaConfig) -> PatternBasis:
    u, s, vh = np.linalg.svd(net.e_oc, full_matrices=False)
    total = float(np.sum(s ** 2))
    if total == 0.0:
        raise ZeroPatternMatrix("open-circuit pattern matrix is all zeros")
    energy = np.cumsum(s ** 2) / total
    n_eff = int(np.argmax(energy >= cfg.power_fraction)) + 1
    return PatternBasis(u=u[:, :n_eff], s=s[:n_eff], v=vh[:n_eff].conj().T)


def pattern_coder_from_currents(basis: PatternBasis, i: np.ndarray, side: Side) -> np.ndarray:
    if side == Side.TRANSMIT:
        w = basis.s * (basis.v.conj().T @ i)
    else:
        # приём: S Vᵀ i*, а не S Vᴴ i
        w = basis.s * (basis.v.T @ i.conj())
    norm = np.linalg.norm(w)
    if norm < DEGENERATE_NORM:
        raise DegenerateRadiator(f"coder radiates nothing through the basis (|w|={norm:.3e})", side=side.value)
    return w / norm


def pattern_coder_from_reactance(basis: PatternBasis, net: MultiportNetwork, x: np.ndarray,
                                 cfg: AntennaConfig, side: Side) -> np.ndarray:
    i = np.concatenate([[cfg.unit_excitation], port_currents_from_reactance(net, x, cfg)])
    return pattern_coder_from_currents(basis, i, side)


def pattern_coder(basis: PatternBasis, net: MultiportNetwork, coder: AntennaCoder,
                  cfg: AntennaConfig, side: Side) -> np.ndarray:
    if coder.q != net.q:
        raise DimensionMismatch(f"coder has {coder.q} entries, network has {net.q} pixel ports")
    return pattern_coder_from_reactance(basis, net, coder_to_reactance(coder, cfg), cfg, side)


def radiation_pattern(basis: PatternBasis, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    if w.shape != (basis.n_eff,):
        raise DimensionMismatch(f"pattern coder must have {basis.n_eff} entries, got shape {w.shape}")
    return basis.u @ w


def _random_orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    g = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    qm, r = np.linalg.qr(g)
    # фиксируем фазы, чтобы разложение было однозначным
    return qm * (np.diag(r) / np.abs(np.diag(r)))


def synthesize_antenna(seed: int, q: int, k: int, target_rank: int, cfg: AntennaConfig) -> MultiportNetwork:
    """
    Synthetic stand-in for full-wave antenna data.

    Re{z} = RᵀR·scale + r0·I is symmetric positive definite, Im{z} is a random
    symmetric reactance matrix, so every loaded matrix Z_PP + jX stays
    nonsingular. e_oc = U₀·diag(σ)·V₀ᴴ where the top `target_rank` singular
    values carry all but a quarter of the (1 − power_fraction) energy budget.
    """
    full_rank = min(2 * k, q + 1)
    if not 1 <= target_rank <= full_rank:
        raise InfeasibleRank(f"target_rank={target_rank} must lie in [1, {full_rank}]")

    rng = np.random.Generator(np.random.Philox(seed))
    ports = q + 1

    r = rng.standard_normal((ports, ports))
    resistance = (r.T @ r) * (20.0 / ports) + 5.0 * np.eye(ports)
    reactance = rng.standard_normal((ports, ports)) * 40.0
    z = 0.5 * (resistance + resistance.T) + 1j * 0.5 * (reactance + reactance.T)

    head = np.logspace(0.0, -0.3, target_rank)
    head_energy = float(np.sum(head ** 2))
    tail_count = full_rank - target_rank
    if tail_count:
        weights = np.logspace(0.0, -3.0, tail_count)
        tail_energy = 0.25 * (1.0 - cfg.power_fraction) * head_energy
        tail = np.sqrt(tail_energy * weights / weights.sum())
        sigma = np.sort(np.concatenate([head, tail]))[::-1]
    else:
        sigma = head
    u0 = _random_orthonormal(rng, 2 * k, full_rank)
    v0 = _random_orthonormal(rng, ports, full_rank)
    e_oc = (u0 * sigma) @ v0.conj().T

    net = MultiportNetwork(q=q, k=k, z=z, e_oc=e_oc)
    n_eff = compute_basis(net, cfg).n_eff
    if n_eff != target_rank:
        raise InfeasibleRank(f"generator produced N_eff={n_eff}, wanted {target_rank} "
                             f"(power_fraction={cfg.power_fraction})")
    logger.debug(f"📡 Synthesized antenna seed={seed} Q={q} K={k} N_eff={n_eff}")
    return net


def validate_network(net: MultiportNetwork) -> None:
    """Проверяет инварианты и сообщает о первом нарушенном."""
    if not np.all(np.isfinite(net.z)):
        raise InvalidAntennaData("z contains NaN/Inf entries")
    if not np.all(np.isfinite(net.e_oc)):
        raise InvalidAntennaData("e_oc contains NaN/Inf entries")
    scale = max(float(np.max(np.abs(net.z))), 1e-300)
    asym = float(np.max(np.abs(net.z - net.z.T)))
    if asym > RECIPROCITY_TOL * scale:
        raise InvalidAntennaData(f"z is not reciprocal (max |z - zᵀ| = {asym:.3e})")
    resistance = net.z.real
    eig_min = float(np.min(np.linalg.eigvalsh(0.5 * (resistance + resistance.T))))
    if eig_min < -RECIPROCITY_TOL * scale:
        raise InvalidAntennaData(f"Re{{z}} is not positive semidefinite (min eigenvalue {eig_min:.3e})")
    if not np.any(net.e_oc):
        raise InvalidAntennaData("e_oc is all zeros")


def network_to_dict(net: MultiportNetwork) -> dict:
    return {
        "q": net.q,
        "k": net.k,
        "z_real": net.z.real.ravel().tolist(),
        "z_imag": net.z.imag.ravel().tolist(),
        "eoc_real": net.e_oc.real.ravel().tolist(),
        "eoc_imag": net.e_oc.imag.ravel().tolist(),
    }


def network_from_dict(data: dict) -> MultiportNetwork:
    try:
        q, k = int(data["q"]), int(data["k"])
        ports = q + 1
        z = (np.asarray(data["z_real"], dtype=float) + 1j * np.asarray(data["z_imag"], dtype=float))
        e_oc = (np.asarray(data["eoc_real"], dtype=float) + 1j * np.asarray(data["eoc_imag"], dtype=float))
        if z.size != ports * ports:
            raise InvalidAntennaData(f"z needs {ports * ports} entries, got {z.size}")
        if e_oc.size != 2 * k * ports:
            raise InvalidAntennaData(f"e_oc needs {2 * k * ports} entries, got {e_oc.size}")
        net = MultiportNetwork(q=q, k=k, z=z.reshape(ports, ports), e_oc=e_oc.reshape(2 * k, ports))
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidAntennaData(f"malformed antenna document: {e}") from e
    validate_network(net)
    return net


def save_network(net: MultiportNetwork, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net)), encoding="utf-8")


def load_network(path: Union[str, Path]) -> MultiportNetwork:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise InvalidAntennaData(f"cannot read antenna file {path}: {e}") from e
    net = network_from_dict(data)
    logger.info(f"✅ Antenna loaded from {path}: Q={net.q}, K={net.k}")
    return net
