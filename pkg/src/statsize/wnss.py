"""Worst negative statistical slack (WNSS) path tracing.

Starting from the costliest primary output, walk backwards and at every
gate follow the input with the dominant influence on the output variance:
the higher mean when one input clearly dominates, otherwise the input whose
mean perturbation moves Var(max) the most (forward finite difference).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .fassta import DOMINANCE, Moments, clark_max
from .netlist import Circuit
from .pdf_engine import TimingAnnotation

H_FLOOR = 1e-6


@dataclass(frozen=True)
class WnssPath:
    nets: tuple[str, ...]   # primary input ... primary output
    gates: tuple[str, ...]  # gates traversed, input side first

    def __len__(self):
        return len(self.gates)

    def report(self, circuit: Circuit, ann: TimingAnnotation) -> str:
        lines = []
        for gid in self.gates:
            m = ann.moments[circuit.gates[gid].output]
            lines.append(f"{gid} ({m.mu:.6g}, {m.sigma:.6g})")
        return "\n".join(lines) + ("\n" if lines else "")


def _var_max(mu_a, mu_b, sd_a, sd_b) -> float:
    return clark_max(Moments(mu_a, sd_a * sd_a), Moments(mu_b, sd_b * sd_b)).var


def var_sensitivities(a: Moments, b: Moments, h: float, c: float) -> tuple[float, float]:
    """Forward differences of Var(max(A, B)) w.r.t. each mean.

    Raising a mean by ``h`` also raises that operand's sigma by ``c * h``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    sa, sb = a.sigma, b.sigma
    base = _var_max(a.mu, b.mu, sa, sb)
    sens_a = (_var_max(a.mu + h, b.mu, sa + c * h, sb) - base) / h
    sens_b = (_var_max(a.mu, b.mu + h, sa, sb + c * h) - base) / h
    return sens_a, sens_b


def _challenger_wins(champ: Moments, chal: Moments, h: float, c: float) -> bool:
    s2 = champ.var + chal.var
    if s2 == 0:
        return chal.mu > champ.mu
    alpha = (champ.mu - chal.mu) / math.sqrt(s2)
    if abs(alpha) >= DOMINANCE:
        return chal.mu > champ.mu
    sens_champ, sens_chal = var_sensitivities(champ, chal, h, c)
    return sens_chal > sens_champ


def dominant_input(inputs: Sequence[tuple[str, Moments]], h: float, c: float) -> str:
    """Net of the input that dominates the output variance (pairwise tournament).

    Ties go to the earlier input.
    """
    if not inputs:
        raise ValueError("dominant_input needs at least one input")
    champ_net, champ = inputs[0]
    for net, m in inputs[1:]:
        if _challenger_wins(champ, m, h, c):
            champ_net, champ = net, m
    return champ_net


def output_cost(m: Moments, lam: float) -> float:
    return m.mu + lam * m.sigma


def trace_wnss(circuit: Circuit, ann: TimingAnnotation, lam: float = 3.0, h_frac: float = 0.01,
               c: float = 0.1) -> WnssPath:
    """Trace the WNSS path from the output with the largest mean + lam * sigma."""
    if not circuit.outputs:
        return WnssPath((), ())
    start = circuit.outputs[0]
    best = output_cost(ann.moments[start], lam)
    for net in circuit.outputs[1:]:
        cost = output_cost(ann.moments[net], lam)
        if cost > best:
            start, best = net, cost
    nets, gates = [start], []
    net = start
    while (gid := circuit.nets[net].driver) is not None:
        gate = circuit.gates[gid]
        h = max(h_frac * ann.moments[gate.output].mu, H_FLOOR)
        net = dominant_input([(n, ann.moments[n]) for n in gate.inputs], h, c)
        gates.append(gid)
        nets.append(net)
    return WnssPath(tuple(reversed(nets)), tuple(reversed(gates)))
