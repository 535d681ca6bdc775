"""StatisticalGreedy gate sizing.

Each outer pass runs the full pdf engine, traces the WNSS path, and for
every gate on it tries all variants on a small subcircuit with the fast
moment engine.  Gates whose best variant is larger than the current one are
upsized together at the end of the pass.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Mapping

from .fassta import ZERO, Moments, normal_sum, propagate_fast
from .netlist import CellLibrary, Circuit, Sizing, circuit_area, extract_subcircuit
from .pdf_engine import DEFAULT_SAMPLES, TimingAnnotation, propagate_full
from .wnss import trace_wnss

log = logging.getLogger(__name__)

NO_IMPROVEMENT = "no-improvement"
NO_RESIZES = "no-resizes"
MAX_ITERS = "max-iters"


@dataclass(frozen=True)
class OptimizerConfig:
    lam: float = 3.0
    depth: int = 2
    samples: int = DEFAULT_SAMPLES
    h_frac: float = 0.01
    max_outer_iters: int = 100
    epsilon_improve: float = 1e-6
    patience: int = 5
    seed: int = 0  # reserved; nothing is randomized
    project_outputs: bool = True

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError("lambda must be a finite value >= 0")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if not 3 <= self.samples <= 64:
            raise ValueError("samples must be in [3, 64]")
        if not self.h_frac > 0:
            raise ValueError("h_frac must be > 0")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.epsilon_improve < 0:
            raise ValueError("epsilon_improve must be >= 0")


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    mu: float
    sigma: float
    area: float
    objective: float
    best_objective: float
    resizes: int
    wall_time: float


@dataclass
class SizingResult:
    final_sizing: Sizing
    initial_moments: Moments
    final_moments: Moments
    initial_area: float
    final_area: float
    lam: float
    trace: list[IterationRecord] = field(default_factory=list)
    termination_reason: str = NO_RESIZES
    wall_time: float = 0.0

    @property
    def initial_objective(self) -> float:
        return cost(self.initial_moments, self.lam)

    @property
    def final_objective(self) -> float:
        return cost(self.final_moments, self.lam)

    def trace_csv(self) -> str:
        rows = ["iter,mu,sigma,area,resizes"]
        rows += [f"{r.iter},{r.mu:.6g},{r.sigma:.6g},{r.area:.6g},{r.resizes}" for r in self.trace]
        return "\n".join(rows) + "\n"


def cost(m: Moments, lam: float) -> float:
    return m.mu + lam * math.sqrt(m.var)


def subcircuit_cost(outputs: Mapping[str, Moments], lam: float) -> float:
    if not outputs:
        raise ValueError("subcircuit has no outputs")
    return max(cost(m, lam) for m in outputs.values())


def downstream_delay(circuit: Circuit, ann: TimingAnnotation) -> dict[str, Moments | None]:
    """Longest mean delay from each net to a primary output, as a zero-variance shift.

    None marks nets that reach no primary output.
    """
    tail: dict[str, Moments | None] = {}
    for gid in reversed(circuit.order):
        out = circuit.gates[gid].output
        best = 0.0 if circuit.is_output(out) else None
        for sink, _ in circuit.nets[out].fanout:
            rest = tail[circuit.gates[sink].output]
            if rest is not None:
                cand = ann.gate_delays[sink].mu + rest.mu
                if best is None or cand > best:
                    best = cand
        tail[out] = None if best is None else Moments(best, 0.0)
    return tail


def evaluate_gate(circuit: Circuit, gate: str, sizing: Sizing, ann: TimingAnnotation,
                  lib: CellLibrary, cfg: OptimizerConfig,
                  tail: Mapping[str, Moments | None] | None = None) -> int | None:
    """Best variant index for ``gate`` if it is an upsize, else None.

    With ``tail`` given, each subcircuit output is extended by its downstream
    delay so exits at different depths compete on projected circuit-output
    arrival rather than on local arrival.
    """
    sub = extract_subcircuit(circuit, gate, cfg.depth)
    if tail is None:
        outs = sub.local_outputs
        shift = {n: ZERO for n in outs}
    else:
        outs = tuple(n for n in sub.local_outputs if tail[n] is not None)
        shift = {n: tail[n] for n in outs}
    if not outs:
        return None
    boundary = {n: ann.moments[n] for n in sub.boundary_inputs}

    def sub_cost(sz):
        res = propagate_fast(sub, boundary, sz, lib)
        return subcircuit_cost({n: normal_sum(res[n], shift[n]) for n in outs}, cfg.lam)

    current = sizing[gate]
    best_idx = current
    best = sub_cost(sizing)
    n_variants = len(lib.cells[circuit.gates[gate].cell_type].variants)
    for idx in range(n_variants):
        c = sub_cost(sizing.replace({gate: idx}))
        if c < best:
            best_idx, best = idx, c
    return best_idx if best_idx > current else None


def statistical_greedy(circuit: Circuit, lib: CellLibrary, cfg: OptimizerConfig | None = None,
                       initial: Sizing | None = None) -> SizingResult:
    cfg = cfg or OptimizerConfig()
    sizing = initial if initial is not None else Sizing.smallest(circuit)
    sizing.check(circuit, lib)
    t_start = time.perf_counter()

    trace: list[IterationRecord] = []
    best_sizing, best_obj, best_moments = sizing, math.inf, None
    initial_moments = None
    reason = MAX_ITERS
    stale = 0
    # the extra pass only measures the sizing produced by the last allowed one
    for it in range(cfg.max_outer_iters + 1):
        t0 = time.perf_counter()
        ann = propagate_full(circuit, sizing, lib, cfg.samples)
        m = ann.circuit_moments
        obj = cost(m, cfg.lam)
        area = circuit_area(circuit, sizing, lib)
        if initial_moments is None:
            initial_moments = m
        improved = obj <= best_obj - cfg.epsilon_improve
        if obj < best_obj:
            best_sizing, best_obj, best_moments = sizing, obj, m

        def record(resizes):
            trace.append(IterationRecord(it, m.mu, m.sigma, area, obj, best_obj, resizes,
                                         time.perf_counter() - t0))

        stale = 0 if improved else stale + 1
        if stale >= cfg.patience:
            record(0)
            reason = NO_IMPROVEMENT
            break
        if it == cfg.max_outer_iters:
            record(0)
            reason = MAX_ITERS
            break
        path = trace_wnss(circuit, ann, cfg.lam, cfg.h_frac, lib.c)
        tail = downstream_delay(circuit, ann) if cfg.project_outputs else None
        scheduled: dict[str, int] = {}
        for gid in path.gates:
            if gid in scheduled:
                continue
            idx = evaluate_gate(circuit, gid, sizing, ann, lib, cfg, tail)
            if idx is not None:
                scheduled[gid] = idx
        record(len(scheduled))
        log.debug("iter %d: mu=%.6g sigma=%.6g obj=%.6g resized %d", it, m.mu, m.sigma, obj,
                  len(scheduled))
        if not scheduled:
            reason = NO_RESIZES
            break
        sizing = sizing.replace(scheduled)

    return SizingResult(
        final_sizing=best_sizing,
        initial_moments=initial_moments,
        final_moments=best_moments,
        initial_area=trace[0].area,
        final_area=circuit_area(circuit, best_sizing, lib),
        lam=cfg.lam,
        trace=trace,
        termination_reason=reason,
        wall_time=time.perf_counter() - t_start,
    )
