"""Synthetic cell library and seeded random benchmark circuits.

The bundled benchmark suite under ``statsize/data`` was produced by
``write_suite``; regenerating with the same seeds reproduces it byte for byte.
"""

from __future__ import annotations

import random
from importlib import resources
from pathlib import Path

from .netlist import CellLibrary, CellType, CellVariant, Circuit, build_circuit, format_library, \
    format_netlist, parse_library, parse_netlist

STRENGTHS = (1, 2, 3, 4, 6, 8)

# name: (input pins, intrinsic delay, drive resistance, unit input cap, unit area)
CELL_SPECS = {
    "INV": (("A",), 1.0, 2.0, 1.0, 1.0),
    "BUF": (("A",), 2.0, 2.0, 1.0, 1.5),
    "NAND2": (("A", "B"), 1.4, 2.6, 1.2, 1.4),
    "NOR2": (("A", "B"), 1.6, 3.2, 1.4, 1.5),
    "AND2": (("A", "B"), 2.4, 2.2, 1.1, 1.9),
    "OR2": (("A", "B"), 2.6, 2.4, 1.1, 2.0),
    "XOR2": (("A", "B"), 3.0, 3.0, 1.8, 2.8),
    "NAND3": (("A", "B", "C"), 1.9, 3.4, 1.4, 1.9),
    "AOI21": (("A", "B", "C"), 2.1, 3.6, 1.5, 2.1),
}


def synthetic_library(c: float = 0.1, sigma_rand: float = 0.1, out_load: float = 2.0,
                      cap_exp: float = 1.0) -> CellLibrary:
    """Six drive strengths per cell: input cap grows as size**cap_exp, load slope shrinks as 1/size."""
    cells = {}
    for name, (pins, p, r, cin, a0) in CELL_SPECS.items():
        variants = tuple(
            CellVariant(f"X{s}", area=round(a0 * (1 + 0.75 * (s - 1)), 4),
                        input_cap=round(cin * s ** cap_exp, 4), d0=p, d1=round(r / s, 6))
            for s in STRENGTHS)
        cells[name] = CellType(name, pins, "Y", variants)
    return CellLibrary(cells, c=c, sigma_rand=sigma_rand, out_load=out_load)


def random_circuit(lib: CellLibrary, n_gates: int, seed: int, reuse: float = 0.0,
                   window: int = 16, name: str | None = None) -> Circuit:
    """Seeded random combinational DAG.

    Each fanin is, with probability ``1 - reuse``, a recent net nobody
    consumes yet, or a fresh primary input when there is none; otherwise it
    is any recent net, which creates fanout and reconvergence.  With
    ``reuse=0`` every net has at most one sink and the circuit is a forest
    of fanin trees.  Nets left without fanout become primary outputs.
    """
    rng = random.Random(seed)
    cell_names = sorted(lib.cells)
    inputs: list[str] = []
    nets: list[str] = []
    unused: list[str] = []
    gates = []

    def new_input():
        inputs.append(f"i{len(inputs)}")
        nets.append(inputs[-1])
        return inputs[-1]

    for k in range(n_gates):
        cell = lib.cells[rng.choice(cell_names)]
        picks: list[str] = []
        while len(picks) < len(cell.input_pins):
            if nets and rng.random() < reuse:
                net = rng.choice(nets[-window:])
            else:
                fresh = [n for n in unused[-window:] if n not in picks]
                # a new input now and then keeps path depths varied
                net = rng.choice(fresh) if fresh and rng.random() < 0.8 else new_input()
            if net not in picks:
                picks.append(net)
        out = f"n{k}"
        pins = dict(zip(cell.input_pins, picks))
        pins[cell.output_pin] = out
        gates.append((f"g{k + 1}", cell.name, pins))
        unused = [n for n in unused if n not in picks] + [out]
        nets.append(out)
    return build_circuit(name or f"rand{n_gates}_{seed}", inputs, unused, gates, lib)


def layered_circuit(lib: CellLibrary, n_gates: int, seed: int, depth: int | None = None,
                    n_inputs: int | None = None, span: int = 3, name: str | None = None) -> Circuit:
    """Seeded levelized DAG with fanout and reconvergence.

    Gates are spread evenly over ``depth`` levels.  A gate's first input is
    the least-loaded net of the previous level; further inputs are drawn from
    the last ``span`` levels.  Nets without fanout become primary outputs.
    """
    rng = random.Random(seed)
    depth = depth or max(6, round(n_gates ** 0.5 * 1.2))
    n_inputs = n_inputs or max(4, n_gates // 8)
    levels = [[f"i{k}" for k in range(n_inputs)]]
    counts = [n_gates // depth + (1 if k < n_gates % depth else 0) for k in range(depth)]
    cell_names = sorted(lib.cells)
    fanout: dict[str, int] = {}
    gates = []
    for lvl, count in enumerate(counts, 1):
        cur = []
        for _ in range(count):
            cell = lib.cells[rng.choice(cell_names)]
            prev = sorted(levels[lvl - 1], key=lambda x: (fanout.get(x, 0), rng.random()))
            picks = [prev[0]]
            pool = [x for lv in levels[max(0, lvl - span):lvl] for x in lv]
            while len(picks) < len(cell.input_pins):
                x = rng.choice(pool)
                if x not in picks:
                    picks.append(x)
            for x in picks:
                fanout[x] = fanout.get(x, 0) + 1
            out = f"n{len(gates) + 1}"
            pins = dict(zip(cell.input_pins, picks))
            pins[cell.output_pin] = out
            gates.append((f"g{len(gates) + 1}", cell.name, pins))
            cur.append(out)
        levels.append(cur)
    inputs = [x for x in levels[0] if x in fanout]
    outputs = [x for lv in levels[1:] for x in lv if x not in fanout]
    return build_circuit(name or f"layered{n_gates}_{seed}", inputs, outputs, gates, lib)


# benchmark library: sub-linear input-cap growth makes upsizing pay off
SUITE_LIBRARY = dict(c=0.1, sigma_rand=0.1, out_load=4.0, cap_exp=0.6)

SUITE = {
    # name: (gates, seed)
    "syn120": (120, 11),
    "syn160": (160, 23),
    "syn200": (200, 37),
    "syn250": (250, 41),
    "syn300": (300, 53),
}


def data_dir() -> Path:
    return Path(str(resources.files("statsize") / "data"))


def write_suite(dest: Path | None = None) -> None:
    dest = Path(dest) if dest is not None else data_dir()
    dest.mkdir(parents=True, exist_ok=True)
    lib = synthetic_library(**SUITE_LIBRARY)
    (dest / "synth6.lib").write_text(format_library(lib))
    for name, (n, seed) in SUITE.items():
        circ = layered_circuit(lib, n, seed, name=name)
        (dest / f"{name}.blif").write_text(format_netlist(circ, lib))


def load_suite() -> tuple[CellLibrary, dict[str, Circuit]]:
    """The bundled benchmark library and circuits."""
    d = data_dir()
    lib = parse_library((d / "synth6.lib").read_text())
    circuits = {name: parse_netlist((d / f"{name}.blif").read_text(), lib) for name in SUITE}
    return lib, circuits
