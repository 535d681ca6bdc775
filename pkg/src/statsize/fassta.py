"""Moment-only statistical timing.

Arrival times are carried as (mean, variance) pairs.  The max of two
independent normals uses Clark's moment formulas with a piecewise quadratic
stand-in for the normal CDF; when one operand dominates by 2.6 combined
standard deviations the other is dropped outright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .netlist import CellLibrary, Circuit, Subcircuit, gate_delay, whole_circuit

DOMINANCE = 2.6
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Moments:
    mu: float
    var: float

    def __post_init__(self):
        if not self.var >= 0:
            raise ValueError(f"negative variance {self.var}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.var)


ZERO = Moments(0.0, 0.0)


class ShortcutStats:
    """Counts how often clark_max takes each branch."""

    def __init__(self):
        self.degenerate = 0
        self.dominant = 0
        self.full = 0

    @property
    def total(self) -> int:
        return self.degenerate + self.dominant + self.full

    def __repr__(self):
        return (f"ShortcutStats(degenerate={self.degenerate}, dominant={self.dominant}, "
                f"full={self.full})")


stats = ShortcutStats()


def normal_sum(a: Moments, b: Moments) -> Moments:
    return Moments(a.mu + b.mu, a.var + b.var)


def phi_approx(x: float) -> float:
    """Normal CDF from the quadratic approximation of erf (about two decimals)."""
    if x < 0:
        return 1.0 - phi_approx(-x)
    if x <= 2.2:
        q = 0.1 * x * (4.4 - x)
    elif x < 2.6:
        q = 0.49
    else:
        q = 0.5
    return 0.5 + q


def normal_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def clark_max(a: Moments, b: Moments) -> Moments:
    """Mean and variance of max(A, B) for independent normal A and B."""
    # canonical operand order keeps the result bit-identical under swapping
    if (b.mu, b.var) > (a.mu, a.var):
        a, b = b, a
    s2 = a.var + b.var
    if s2 == 0:
        stats.degenerate += 1
        return Moments(max(a.mu, b.mu), 0.0)
    s = math.sqrt(s2)
    alpha = (a.mu - b.mu) / s
    if alpha >= DOMINANCE:
        stats.dominant += 1
        return a
    if alpha <= -DOMINANCE:
        stats.dominant += 1
        return b
    stats.full += 1
    pa = phi_approx(alpha)
    pb = phi_approx(-alpha)
    d = s * normal_pdf(alpha)
    v1 = a.mu * pa + b.mu * pb + d
    v2 = (a.mu * a.mu + a.var) * pa + (b.mu * b.mu + b.var) * pb + (a.mu + b.mu) * d
    return Moments(v1, max(0.0, v2 - v1 * v1))


def max_all(items) -> Moments:
    it = iter(items)
    acc = next(it)
    for m in it:
        acc = clark_max(acc, m)
    return acc


def delay_moments(circuit: Circuit, gid: str, sizing: Mapping[str, int], lib: CellLibrary) -> Moments:
    mu, sigma = gate_delay(circuit, gid, sizing, lib)
    return Moments(mu, sigma * sigma)


def propagate_fast(sub: Subcircuit, boundary: Mapping[str, Moments], sizing: Mapping[str, int],
                   lib: CellLibrary) -> dict[str, Moments]:
    """Moments at each local output of ``sub`` under ``sizing``.

    Boundary moments are held fixed; loads (including load-only sinks outside
    the subcircuit) follow the candidate sizing.
    """
    circuit = sub.circuit
    arrival: dict[str, Moments] = {}
    for net in sub.boundary_inputs:
        try:
            arrival[net] = boundary[net]
        except KeyError:
            raise KeyError(f"missing boundary moments for net {net!r}") from None
    for gid in sub.order:
        gate = circuit.gates[gid]
        arr = max_all(arrival[n] for n in gate.inputs)
        arrival[gate.output] = normal_sum(arr, delay_moments(circuit, gid, sizing, lib))
    return {net: arrival[net] for net in sub.local_outputs}


def propagate_fast_circuit(circuit: Circuit, sizing: Mapping[str, int],
                           lib: CellLibrary) -> tuple[dict[str, Moments], Moments]:
    """Whole-circuit moment propagation from zero arrivals; returns (outputs, circuit max)."""
    sub = whole_circuit(circuit)
    boundary = {n: ZERO for n in circuit.inputs}
    outs = propagate_fast(sub, boundary, sizing, lib)
    # outputs tied straight to primary inputs are not local outputs of any gate
    per_output = {n: outs.get(n, ZERO) for n in circuit.outputs}
    return per_output, max_all(per_output[n] for n in circuit.outputs)
