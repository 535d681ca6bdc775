"""Circuit and cell-library data model.

Holds the parsers for the line-based library format and the BLIF-subset
netlist format, topological ordering, subcircuit extraction around a gate,
and the load/area/delay accounting every timing engine builds on.
"""

from __future__ import annotations

import heapq
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping


class NetlistError(ValueError):
    """Base class for library/netlist problems."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParseError(NetlistError):
    """Malformed input text (syntax, unknown keyword or reference)."""


class InvariantError(NetlistError):
    """Well-formed input describing an invalid model."""


# --------------------------------------------------------------------------
# cell library


@dataclass(frozen=True)
class CellVariant:
    name: str
    area: float
    input_cap: float
    d0: float
    d1: float

    def __post_init__(self):
        if not self.area > 0:
            raise InvariantError(f"variant {self.name}: non-positive area")
        if not self.input_cap > 0:
            raise InvariantError(f"variant {self.name}: non-positive cap")
        if self.d0 < 0 or self.d1 < 0:
            raise InvariantError(f"variant {self.name}: negative delay coefficient")

    def mean_delay(self, load: float) -> float:
        return self.d0 + self.d1 * load


@dataclass(frozen=True)
class CellType:
    name: str
    input_pins: tuple[str, ...]
    output_pin: str
    variants: tuple[CellVariant, ...]

    def __post_init__(self):
        if not self.input_pins:
            raise InvariantError(f"cell {self.name}: needs at least one input pin")
        pins = list(self.input_pins) + [self.output_pin]
        if len(set(pins)) != len(pins):
            raise InvariantError(f"cell {self.name}: duplicate pin name")
        if not self.variants:
            raise InvariantError(f"cell {self.name}: no variants")
        names = [v.name for v in self.variants]
        if len(set(names)) != len(names):
            raise InvariantError(f"cell {self.name}: duplicate variant name")
        areas = [v.area for v in self.variants]
        if any(a >= b for a, b in zip(areas, areas[1:])):
            raise InvariantError(f"cell {self.name}: variants must be strictly ascending in area")

    def variant_index(self, name: str) -> int:
        for i, v in enumerate(self.variants):
            if v.name == name:
                return i
        raise KeyError(f"cell {self.name} has no variant {name!r}")


@dataclass(frozen=True)
class CellLibrary:
    cells: Mapping[str, CellType]
    c: float = 0.0
    sigma_rand: float = 0.0
    out_load: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "cells", MappingProxyType(dict(self.cells)))
        if self.c < 0 or self.sigma_rand < 0 or self.out_load < 0:
            raise InvariantError("library parameters c, sigma_rand, out_load must be >= 0")
        if self.c == 0 and self.sigma_rand == 0:
            warnings.warn("library has no delay variation (c = sigma_rand = 0); "
                          "timing is deterministic", stacklevel=3)

    def __getitem__(self, name: str) -> CellType:
        return self.cells[name]

    def gate_sigma(self, mean_delay: float) -> float:
        """Standard deviation of a gate delay: proportional and random parts in quadrature."""
        return math.hypot(self.c * mean_delay, self.sigma_rand)

    def with_params(self, **params) -> "CellLibrary":
        kw = {"c": self.c, "sigma_rand": self.sigma_rand, "out_load": self.out_load}
        kw.update(params)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return CellLibrary(self.cells, **kw)


def _float(tok: str, what: str, lineno: int) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise ParseError(f"bad number for {what}: {tok!r}", lineno) from None
    if not math.isfinite(val):
        raise ParseError(f"non-finite number for {what}: {tok!r}", lineno)
    return val


def parse_library(text: str) -> CellLibrary:
    params = {"c": 0.0, "sigma_rand": 0.0, "out_load": 0.0}
    # name -> (inputs, output, [variants], lineno)
    cells: dict[str, tuple[list[str], str, list[CellVariant], int]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kw = tok[0]
        if kw == "param":
            if len(tok) != 3 or tok[1] not in params:
                raise ParseError(f"expected 'param c|sigma_rand|out_load <float>'", lineno)
            params[tok[1]] = _float(tok[2], tok[1], lineno)
        elif kw == "cell":
            if len(tok) < 6 or tok[2] != "inputs" or tok[-2] != "output":
                raise ParseError("expected 'cell <NAME> inputs <pin>... output <pin>'", lineno)
            name = tok[1]
            if name in cells:
                raise InvariantError(f"duplicate cell name {name}", lineno)
            cells[name] = (tok[3:-2], tok[-1], [], lineno)
            current = name
        elif kw == "variant":
            if current is None:
                raise ParseError("variant before any cell", lineno)
            if len(tok) != 10 or tok[2::2] != ["area", "cap", "d0", "d1"]:
                raise ParseError("expected 'variant <NAME> area <f> cap <f> d0 <f> d1 <f>'", lineno)
            vals = [_float(t, k, lineno) for k, t in zip(tok[2::2], tok[3::2])]
            if vals[0] <= 0:
                raise InvariantError(f"variant {tok[1]}: non-positive area", lineno)
            if vals[1] <= 0:
                raise InvariantError(f"variant {tok[1]}: non-positive cap", lineno)
            variants = cells[current][2]
            if any(v.name == tok[1] for v in variants):
                raise InvariantError(f"duplicate variant name {tok[1]} in cell {current}", lineno)
            try:
                variants.append(CellVariant(tok[1], *vals))
            except InvariantError as exc:
                raise InvariantError(str(exc), lineno) from None
        else:
            raise ParseError(f"unknown keyword {kw!r}", lineno)

    types = {}
    for name, (inputs, output, variants, lineno) in cells.items():
        try:
            types[name] = CellType(name, tuple(inputs), output,
                                   tuple(sorted(variants, key=lambda v: v.area)))
        except InvariantError as exc:
            raise InvariantError(str(exc), lineno) from None
    return CellLibrary(types, **params)


def format_library(lib: CellLibrary) -> str:
    out = [f"param c {lib.c!r}", f"param sigma_rand {lib.sigma_rand!r}",
           f"param out_load {lib.out_load!r}"]
    for cell in lib.cells.values():
        out.append(f"cell {cell.name} inputs {' '.join(cell.input_pins)} output {cell.output_pin}")
        for v in cell.variants:
            out.append(f"variant {v.name} area {v.area!r} cap {v.input_cap!r} "
                       f"d0 {v.d0!r} d1 {v.d1!r}")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# circuit


@dataclass(frozen=True)
class Gate:
    id: str
    cell_type: str
    pins: Mapping[str, str]  # pin -> net
    inputs: tuple[str, ...]  # input nets in the cell's pin order
    output: str


@dataclass(frozen=True)
class Net:
    name: str
    driver: str | None  # gate id, or None for a primary input
    fanout: tuple[tuple[str, str], ...]  # (gate id, pin)


@dataclass(frozen=True, eq=False)
class Circuit:
    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    gates: Mapping[str, Gate]  # declaration order
    nets: Mapping[str, Net]
    order: tuple[str, ...] = field(repr=False)
    output_set: frozenset = field(repr=False, default=frozenset())

    def __len__(self):
        return len(self.gates)

    def fanin_gates(self, gid: str) -> list[str]:
        seen = []
        for net in self.gates[gid].inputs:
            d = self.nets[net].driver
            if d is not None and d not in seen:
                seen.append(d)
        return seen

    def fanout_gates(self, gid: str) -> list[str]:
        seen = []
        for g, _ in self.nets[self.gates[gid].output].fanout:
            if g not in seen:
                seen.append(g)
        return seen

    def is_output(self, net: str) -> bool:
        return net in self.output_set

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return (self.name, self.inputs, self.outputs, list(self.gates.values())) == \
            (other.name, other.inputs, other.outputs, list(other.gates.values()))

    __hash__ = None


def build_circuit(name: str, inputs: Iterable[str], outputs: Iterable[str],
                  gates: Iterable[tuple[str, str, Mapping[str, str]]],
                  lib: CellLibrary) -> Circuit:
    """Assemble and validate a circuit from (gate id, cell type, pin->net) triples."""
    inputs, outputs = tuple(inputs), tuple(outputs)
    if len(set(inputs)) != len(inputs):
        raise InvariantError("duplicate primary input")
    if len(set(outputs)) != len(outputs):
        raise InvariantError("duplicate primary output")
    driver: dict[str, str | None] = {n: None for n in inputs}
    fanout: dict[str, list[tuple[str, str]]] = {n: [] for n in inputs}
    gate_map: dict[str, Gate] = {}
    for gid, ctype, pins in gates:
        if gid in gate_map:
            raise InvariantError(f"duplicate gate id {gid}")
        if ctype not in lib.cells:
            raise ParseError(f"unknown cell type {ctype!r}")
        cell = lib.cells[ctype]
        known = set(cell.input_pins) | {cell.output_pin}
        for p in pins:
            if p not in known:
                raise ParseError(f"gate {gid}: unknown pin {p!r} for cell {ctype}")
        for p in known:
            if p not in pins:
                raise InvariantError(f"gate {gid}: pin {p!r} of {ctype} is unconnected")
        out = pins[cell.output_pin]
        if out in driver:
            raise InvariantError(f"multiply-driven net {out!r}")
        driver[out] = gid
        fanout.setdefault(out, [])
        g = Gate(gid, ctype, MappingProxyType(dict(pins)),
                 tuple(pins[p] for p in cell.input_pins), out)
        gate_map[gid] = g
        for p in cell.input_pins:
            fanout.setdefault(pins[p], []).append((gid, p))
    for net in fanout:
        if net not in driver:
            users = ", ".join(g for g, _ in fanout[net])
            raise InvariantError(f"undriven net {net!r} (used by {users})")
    for net in outputs:
        if net not in driver:
            raise InvariantError(f"primary output {net!r} is undriven")
    nets = {n: Net(n, driver[n], tuple(fanout[n])) for n in driver}
    order = _topo(gate_map, nets)
    return Circuit(name, inputs, outputs, MappingProxyType(gate_map),
                   MappingProxyType(nets), order, frozenset(outputs))


def _topo(gates: Mapping[str, Gate], nets: Mapping[str, Net]) -> tuple[str, ...]:
    # Kahn's algorithm; the ready set is kept in declaration order for a stable tie-break.
    rank = {g: i for i, g in enumerate(gates)}
    indeg = {g: sum(1 for n in gates[g].inputs if nets[n].driver is not None) for g in gates}
    ready = [rank[g] for g, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    ids = list(gates)
    order = []
    while ready:
        gid = ids[heapq.heappop(ready)]
        order.append(gid)
        for succ, _ in nets[gates[gid].output].fanout:
            indeg[succ] -= 1
            if indeg[succ] == 0:
                heapq.heappush(ready, rank[succ])
    if len(order) != len(gates):
        stuck = sorted((g for g in gates if indeg[g] > 0), key=rank.get)
        raise InvariantError(f"combinational cycle through gates {', '.join(stuck[:8])}")
    return tuple(order)


def topo_order(circuit: Circuit) -> list[str]:
    """Gate ids ordered so every gate follows its transitive fanin.

    Independent gates keep their declaration order.
    """
    return list(circuit.order)


def _logical_lines(text: str) -> Iterator[tuple[int, str]]:
    buf, start = "", None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if start is None:
            start = lineno
        if line.endswith("\\"):
            buf += line[:-1] + " "
            continue
        buf += line
        if buf.strip():
            yield start, buf.strip()
        buf, start = "", None
    if buf.strip():
        yield start, buf.strip()


def parse_netlist(text: str, lib: CellLibrary) -> Circuit:
    """Parse a BLIF-subset netlist (.model/.inputs/.outputs/.gate/.end).

    Gates are named ``g1``, ``g2``, ... in declaration order.
    """
    name = None
    inputs: list[str] = []
    outputs: list[str] = []
    gates = []
    ended = False
    for lineno, line in _logical_lines(text):
        if ended:
            raise ParseError("content after .end", lineno)
        tok = line.split()
        kw = tok[0]
        if kw == ".model":
            if name is not None or len(tok) != 2:
                raise ParseError("expected a single '.model <name>'", lineno)
            name = tok[1]
        elif kw == ".inputs":
            inputs.extend(tok[1:])
        elif kw == ".outputs":
            outputs.extend(tok[1:])
        elif kw == ".gate":
            if len(tok) < 3:
                raise ParseError("expected '.gate <CELL> <pin>=<net> ...'", lineno)
            pins = {}
            for b in tok[2:]:
                pin, eq, net = b.partition("=")
                if not eq or not pin or not net:
                    raise ParseError(f"bad pin binding {b!r}", lineno)
                if pin in pins:
                    raise ParseError(f"pin {pin!r} bound twice", lineno)
                pins[pin] = net
            gates.append((f"g{len(gates) + 1}", tok[1], pins, lineno))
        elif kw == ".end":
            ended = True
        else:
            raise ParseError(f"unsupported directive {kw!r}", lineno)
    if name is None:
        raise ParseError("missing .model")
    # line-numbered checks first; build_circuit repeats them without line info
    driven = set(inputs)
    for gid, ctype, pins, lineno in gates:
        if ctype not in lib.cells:
            raise ParseError(f"unknown cell type {ctype!r}", lineno)
        out = pins.get(lib.cells[ctype].output_pin)
        if out in driven:
            raise InvariantError(f"multiply-driven net {out!r}", lineno)
        driven.add(out)
    return build_circuit(name, inputs, outputs, [(g, t, p) for g, t, p, _ in gates], lib)


def format_netlist(circuit: Circuit, lib: CellLibrary) -> str:
    out = [f".model {circuit.name}", ".inputs " + " ".join(circuit.inputs),
           ".outputs " + " ".join(circuit.outputs)]
    for g in circuit.gates.values():
        cell = lib.cells[g.cell_type]
        pins = list(cell.input_pins) + [cell.output_pin]
        out.append(f".gate {g.cell_type} " + " ".join(f"{p}={g.pins[p]}" for p in pins))
    out.append(".end")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# sizing, load, area, delay


class Sizing(Mapping):
    """Immutable gate-id -> variant index assignment."""

    __slots__ = ("_a",)

    def __init__(self, assignment: Mapping[str, int]):
        self._a = dict(assignment)

    def __getitem__(self, gid):
        return self._a[gid]

    def __iter__(self):
        return iter(self._a)

    def __len__(self):
        return len(self._a)

    def __repr__(self):
        return f"Sizing({self._a!r})"

    def __hash__(self):
        return hash(frozenset(self._a.items()))

    def replace(self, changes: Mapping[str, int]) -> "Sizing":
        new = dict(self._a)
        new.update(changes)
        return Sizing(new)

    @classmethod
    def smallest(cls, circuit: Circuit) -> "Sizing":
        return cls({g: 0 for g in circuit.gates})

    def check(self, circuit: Circuit, lib: CellLibrary) -> None:
        if set(self._a) != set(circuit.gates):
            missing = set(circuit.gates) - set(self._a)
            extra = set(self._a) - set(circuit.gates)
            raise InvariantError(f"sizing mismatch (missing {sorted(missing)[:5]}, "
                                 f"unknown {sorted(extra)[:5]})")
        for gid, idx in self._a.items():
            n = len(lib.cells[circuit.gates[gid].cell_type].variants)
            if not 0 <= idx < n:
                raise InvariantError(f"gate {gid}: variant index {idx} out of range")


def variant_of(circuit: Circuit, gid: str, sizing: Mapping[str, int], lib: CellLibrary) -> CellVariant:
    return lib.cells[circuit.gates[gid].cell_type].variants[sizing[gid]]


def net_load(circuit: Circuit, net: str, sizing: Mapping[str, int], lib: CellLibrary) -> float:
    load = 0.0
    for gid, _ in circuit.nets[net].fanout:
        load += variant_of(circuit, gid, sizing, lib).input_cap
    if circuit.is_output(net):
        load += lib.out_load
    return load


def circuit_area(circuit: Circuit, sizing: Mapping[str, int], lib: CellLibrary) -> float:
    return math.fsum(variant_of(circuit, g, sizing, lib).area for g in circuit.gates)


def gate_delay(circuit: Circuit, gid: str, sizing: Mapping[str, int],
               lib: CellLibrary) -> tuple[float, float]:
    """(mean, sigma) of a gate's delay under its current output load.

    The single point where the delay model is evaluated.
    """
    load = net_load(circuit, circuit.gates[gid].output, sizing, lib)
    mu = variant_of(circuit, gid, sizing, lib).mean_delay(load)
    return mu, lib.gate_sigma(mu)


def parse_sizing(text: str, circuit: Circuit, lib: CellLibrary) -> Sizing:
    """Read ``gate-id variant-name`` lines; unlisted gates get their smallest variant."""
    assign = {g: 0 for g in circuit.gates}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) != 2:
            raise ParseError("expected '<gate-id> <variant-name>'", lineno)
        gid, vname = tok
        if gid not in circuit.gates:
            raise ParseError(f"unknown gate {gid!r}", lineno)
        try:
            assign[gid] = lib.cells[circuit.gates[gid].cell_type].variant_index(vname)
        except KeyError as exc:
            raise ParseError(str(exc.args[0]), lineno) from None
    return Sizing(assign)


def format_sizing(circuit: Circuit, sizing: Mapping[str, int], lib: CellLibrary) -> str:
    return "".join(f"{g} {variant_of(circuit, g, sizing, lib).name}\n" for g in circuit.gates)


# --------------------------------------------------------------------------
# subcircuits


@dataclass(frozen=True)
class Subcircuit:
    circuit: Circuit = field(repr=False, compare=False)
    center: str
    members: frozenset
    order: tuple[str, ...]  # members in topological order
    boundary_inputs: tuple[str, ...]
    local_outputs: tuple[str, ...]
    load_sinks: frozenset  # gates whose input caps load member outputs but which are not timed


def _bfs(start: str, depth: int, step) -> set[str]:
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        g, d = frontier.popleft()
        if d == depth:
            continue
        for nxt in step(g):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, d + 1))
    return seen


def _make_subcircuit(circuit: Circuit, center: str, members: set[str]) -> Subcircuit:
    order = tuple(g for g in circuit.order if g in members)
    boundary, outs, sinks = [], [], set()
    for g in order:
        gate = circuit.gates[g]
        for net in gate.inputs:
            if circuit.nets[net].driver not in members and net not in boundary:
                boundary.append(net)
        external = [s for s, _ in circuit.nets[gate.output].fanout if s not in members]
        sinks.update(external)
        if external or circuit.is_output(gate.output):
            outs.append(gate.output)
    return Subcircuit(circuit, center, frozenset(members), order, tuple(boundary), tuple(outs),
                      frozenset(sinks))


def extract_subcircuit(circuit: Circuit, center: str, depth: int = 2) -> Subcircuit:
    """Gates within ``depth`` levels of fanin and of fanout around ``center``."""
    if center not in circuit.gates:
        raise KeyError(f"unknown gate {center!r}")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    members = _bfs(center, depth, circuit.fanin_gates) | _bfs(center, depth, circuit.fanout_gates)
    return _make_subcircuit(circuit, center, members)


def whole_circuit(circuit: Circuit) -> Subcircuit:
    """Every gate of the circuit as one subcircuit (centered on the first gate)."""
    center = circuit.order[0] if circuit.order else ""
    return _make_subcircuit(circuit, center, set(circuit.gates))
