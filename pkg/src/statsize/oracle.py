"""Monte Carlo ground truth for circuit delay statistics.

Each gate draws its own standard-normal stream, keyed by (seed, gate id,
chunk index), so results do not depend on gate count, evaluation order or
how trials are split across workers.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .netlist import CellLibrary, Circuit, gate_delay, topo_order

CHUNK = 1 << 16
QUANTILES = (0.01, 0.5, 0.99)


@dataclass(frozen=True)
class McResult:
    trials: int
    mean: float
    std: float
    quantiles: Mapping[float, float]
    samples: np.ndarray | None = field(default=None, repr=False)

    def to_csv(self) -> str:
        if self.samples is None:
            raise ValueError("samples were not retained")
        return "delay\n" + "".join(f"{x:.6g}\n" for x in self.samples)


def _gate_key(gid: str) -> int:
    return zlib.crc32(gid.encode())


def _normals(seed: int, gid: str, chunk: int, size: int) -> np.ndarray:
    ss = np.random.SeedSequence(seed, spawn_key=(_gate_key(gid), chunk))
    return np.random.Generator(np.random.PCG64(ss)).standard_normal(size)


def _chunks(trials: int):
    for k, start in enumerate(range(0, trials, CHUNK)):
        yield k, min(CHUNK, trials - start)


def _simulate(circuit: Circuit, delays: Mapping[str, tuple[float, float]], seed: int, chunk: int,
              size: int, truncate: bool, shift: Mapping[str, tuple[float, float]] | None = None):
    """Circuit delay per trial for one chunk; with ``shift`` also the perturbed run."""
    arr = {net: np.zeros(size) for net in circuit.inputs}
    alt = dict(arr) if shift is not None else None
    for gid in topo_order(circuit):
        gate = circuit.gates[gid]
        z = _normals(seed, gid, chunk, size)
        mu, sigma = delays[gid]
        d = mu + sigma * z
        if truncate:
            np.maximum(d, 0.0, out=d)
        arr[gate.output] = _max_of(arr, gate.inputs) + d
        if alt is not None:
            if gid in shift:
                dmu, dsig = shift[gid]
                d = (mu + dmu) + (sigma + dsig) * z
                if truncate:
                    np.maximum(d, 0.0, out=d)
            alt[gate.output] = _max_of(alt, gate.inputs) + d
    out = _max_of(arr, circuit.outputs) if circuit.outputs else np.zeros(size)
    if alt is None:
        return out, None
    return out, (_max_of(alt, circuit.outputs) if circuit.outputs else np.zeros(size))


def _max_of(arr, nets):
    it = iter(nets)
    acc = arr[next(it)]
    for n in it:
        acc = np.maximum(acc, arr[n])
    return acc


def _delays(circuit, sizing, lib):
    return {g: gate_delay(circuit, g, sizing, lib) for g in circuit.gates}


def monte_carlo(circuit: Circuit, sizing: Mapping[str, int], lib: CellLibrary, trials: int = 100_000,
                seed: int = 0, *, truncate: bool = False, keep_samples: bool = False) -> McResult:
    """Sample gate delays independently and record the longest-path delay per trial."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    delays = _delays(circuit, sizing, lib)
    samples = np.concatenate([_simulate(circuit, delays, seed, k, m, truncate)[0]
                              for k, m in _chunks(trials)])
    q = np.quantile(samples, QUANTILES)
    return McResult(trials, float(samples.mean()), float(samples.std()),
                    dict(zip(QUANTILES, q.tolist())), samples if keep_samples else None)


def _check_path(circuit: Circuit, path: Sequence[str]) -> None:
    for gid in path:
        if gid not in circuit.gates:
            raise ValueError(f"unknown gate {gid!r} in path")
    for u, v in zip(path, path[1:]):
        if circuit.gates[u].output not in circuit.gates[v].inputs:
            raise ValueError(f"path gates {u} -> {v} are not connected")


def perturbed_variance(circuit: Circuit, sizing: Mapping[str, int], lib: CellLibrary,
                       path, h: float, trials: int = 100_000, seed: int = 0,
                       *, truncate: bool = False) -> float:
    """Var(circuit delay) with every gate on ``path`` shifted by +h (mean) and +c*h (sigma),
    minus the baseline variance, using common random numbers."""
    gates = list(getattr(path, "gates", path))
    _check_path(circuit, gates)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    delays = _delays(circuit, sizing, lib)
    shift = {g: (h, lib.c * h) for g in gates}
    base, pert = [], []
    for k, m in _chunks(trials):
        b, p = _simulate(circuit, delays, seed, k, m, truncate, shift)
        base.append(b)
        pert.append(p)
    return float(np.concatenate(pert).var() - np.concatenate(base).var())
