"""Discrete-pdf statistical timing (the accurate outer-loop engine).

Arrival times are sampled distributions on a handful of points.  Sums are
full convolutions, maxima are CDF products, and every result is resampled
back onto a bounded uniform grid so pdf sizes stay fixed through the circuit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import ndtr

from .fassta import Moments
from .netlist import CellLibrary, Circuit, gate_delay, topo_order

DEFAULT_SAMPLES = 13
GRID_SPAN = 4.0  # discretization half-width in sigmas
_NORM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DiscretePdf:
    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        p = np.ascontiguousarray(self.probs, dtype=float)
        if v.ndim != 1 or v.shape != p.shape or v.size == 0:
            raise ValueError("values/probs must be equal-length non-empty vectors")
        if v.size > 1 and not np.all(np.diff(v) > 0):
            raise ValueError("values must be strictly increasing")
        if not np.all(p > 0):
            raise ValueError("probabilities must be positive")
        if abs(math.fsum(p) - 1.0) > _NORM_TOL:
            raise ValueError(f"probabilities sum to {math.fsum(p)!r}")
        v.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    @classmethod
    def point(cls, x: float) -> "DiscretePdf":
        return cls(np.array([float(x)]), np.array([1.0]))

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probs.tolist()))

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, DiscretePdf):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(self.probs, other.probs)

    def cdf(self, x) -> np.ndarray:
        """P(X <= x), vectorized over x."""
        idx = np.searchsorted(self.values, x, side="right")
        c = np.concatenate(([0.0], np.cumsum(self.probs)))
        return np.minimum(c[idx], 1.0)

    def to_csv(self) -> str:
        rows = ["value,prob"]
        rows += [f"{v:.6g},{p:.6g}" for v, p in self.points]
        return "\n".join(rows) + "\n"


def _from_masses(values: np.ndarray, probs: np.ndarray) -> DiscretePdf:
    """Build a pdf from unsorted, possibly repeated, possibly zero masses."""
    order = np.argsort(values, kind="stable")
    v, p = values[order], probs[order]
    uniq, start = np.unique(v, return_index=True)
    merged = np.add.reduceat(p, start)
    keep = merged > 0
    uniq, merged = uniq[keep], merged[keep]
    return DiscretePdf(uniq, merged / merged.sum())


def resample(values: np.ndarray, probs: np.ndarray, cap: int) -> DiscretePdf:
    """Merge equal values and reduce to at most ``cap`` uniformly spaced points.

    Mass is first split between the two nearest points of a grid spanning
    the support; the grid is then shifted and scaled so the result keeps the
    exact mass, mean and variance of the input.
    """
    pdf = _from_masses(np.asarray(values, float), np.asarray(probs, float))
    if len(pdf) <= cap:
        return pdf
    lo, hi = pdf.values[0], pdf.values[-1]
    pos = (pdf.values - lo) / (hi - lo) * (cap - 1)
    left = np.clip(np.floor(pos).astype(int), 0, cap - 2)
    frac = pos - left
    mass = np.zeros(cap)
    np.add.at(mass, left, pdf.probs * (1.0 - frac))
    np.add.at(mass, left + 1, pdf.probs * frac)
    keep = mass > 0
    mass = mass[keep] / mass[keep].sum()
    grid = np.linspace(lo, hi, cap)[keep]
    target = pdf_moments(pdf)
    mu = float(np.dot(grid, mass))
    var = float(np.dot((grid - mu) ** 2, mass))
    scale = math.sqrt(target.var / var) if var > 0 else 1.0
    return DiscretePdf(target.mu + (grid - mu) * scale, mass)


def discretize_normal(mu: float, sigma: float, n: int = DEFAULT_SAMPLES) -> DiscretePdf:
    """N(mu, sigma^2) on ``n`` uniform points over mu +/- 4 sigma.

    Each point takes the normal mass of the cell between its neighbouring
    midpoints; the two end cells absorb the tails.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return DiscretePdf.point(mu)
    if not 3 <= n <= 64:
        raise ValueError(f"sample count {n} outside [3, 64]")
    z = np.linspace(-GRID_SPAN, GRID_SPAN, n)
    edges = np.concatenate(([-np.inf], 0.5 * (z[1:] + z[:-1]), [np.inf]))
    cdf = ndtr(edges)
    mass = np.diff(cdf)
    # symmetric grid: mirror the upper half so the mean is exact
    mass = 0.5 * (mass + mass[::-1])
    return DiscretePdf(mu + sigma * z, mass / mass.sum())


def pdf_moments(pdf: DiscretePdf) -> Moments:
    mu = float(np.dot(pdf.values, pdf.probs))
    var = float(np.dot((pdf.values - mu) ** 2, pdf.probs))
    return Moments(mu, var)


def pdf_sum(a: DiscretePdf, b: DiscretePdf, cap: int = DEFAULT_SAMPLES) -> DiscretePdf:
    """Distribution of A + B for independent A, B."""
    values = (a.values[:, None] + b.values[None, :]).ravel()
    probs = (a.probs[:, None] * b.probs[None, :]).ravel()
    return resample(values, probs, cap)


def pdf_max(a: DiscretePdf, b: DiscretePdf, cap: int = DEFAULT_SAMPLES) -> DiscretePdf:
    """Distribution of max(A, B) for independent A, B (CDF product)."""
    # disjoint supports: the upper operand is the max, exactly
    if b.values[-1] <= a.values[0]:
        return resample(a.values, a.probs, cap)
    if a.values[-1] <= b.values[0]:
        return resample(b.values, b.probs, cap)
    grid = np.union1d(a.values, b.values)
    cdf = a.cdf(grid) * b.cdf(grid)
    mass = np.diff(np.concatenate(([0.0], cdf)))
    return resample(grid, np.clip(mass, 0.0, None), cap)


def pdf_max_all(pdfs, cap: int = DEFAULT_SAMPLES) -> DiscretePdf:
    it = iter(pdfs)
    acc = next(it)
    for p in it:
        acc = pdf_max(acc, p, cap)
    return acc


@dataclass(frozen=True)
class TimingAnnotation:
    pdfs: Mapping[str, DiscretePdf]
    moments: Mapping[str, Moments]
    circuit_rv: DiscretePdf
    circuit_moments: Moments
    samples: int = DEFAULT_SAMPLES
    gate_delays: Mapping[str, Moments] = field(default_factory=dict)


def propagate_full(circuit: Circuit, sizing: Mapping[str, int], lib: CellLibrary,
                   n: int = DEFAULT_SAMPLES) -> TimingAnnotation:
    """Propagate arrival-time pdfs from zero at the primary inputs."""
    pdfs: dict[str, DiscretePdf] = {}
    delays: dict[str, Moments] = {}
    zero = DiscretePdf.point(0.0)
    for net in circuit.inputs:
        pdfs[net] = zero
    for gid in topo_order(circuit):
        gate = circuit.gates[gid]
        arr = pdf_max_all((pdfs[net] for net in gate.inputs), n)
        mu, sigma = gate_delay(circuit, gid, sizing, lib)
        delays[gid] = Moments(mu, sigma * sigma)
        pdfs[gate.output] = pdf_sum(arr, discretize_normal(mu, sigma, n), n)
    if circuit.outputs:
        rv = pdf_max_all((pdfs[net] for net in circuit.outputs), n)
    else:
        rv = zero
    moments = {net: pdf_moments(p) for net, p in pdfs.items()}
    return TimingAnnotation(pdfs, moments, rv, pdf_moments(rv), n, delays)
