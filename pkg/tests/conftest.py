import warnings

import pytest

from statsize.netlist import CellLibrary, CellType, CellVariant, build_circuit

LIB_TEXT = """\
# two-size inverter and nand
param c 0.1
param sigma_rand 0.05
param out_load 0.5
cell INV inputs A output Y
variant X1 area 1 cap 1 d0 10 d1 2
variant X2 area 2 cap 2 d0 8 d1 1
cell NAND2 inputs A B output Y
variant X1 area 1.5 cap 1.2 d0 12 d1 2.5
variant X2 area 3 cap 2.4 d0 10 d1 1.2
"""


def fixed_lib(delays, c=0.0, sigma_rand=0.0, out_load=0.0, max_inputs=3):
    """One load-independent cell type per delay value: ``D<k>_<n>`` has ``n`` inputs and delay delays[k]."""
    cells = {}
    for k, d in enumerate(delays):
        for n in range(1, max_inputs + 1):
            name = f"D{k}_{n}"
            pins = tuple("ABCDEFGH"[:n])
            cells[name] = CellType(name, pins, "Y", (CellVariant("X1", 1.0, 1.0, float(d), 0.0),))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return CellLibrary(cells, c=c, sigma_rand=sigma_rand, out_load=out_load)


def chain(lib, cells, name="chain"):
    """Linear chain i0 -> g1 -> g2 ... with the given cell type per gate."""
    gates = []
    prev = "i0"
    for k, ct in enumerate(cells, 1):
        out = f"n{k}"
        gates.append((f"g{k}", ct, {"A": prev, "Y": out}))
        prev = out
    return build_circuit(name, ["i0"], [prev], gates, lib)


@pytest.fixture
def no_variation_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


# criterion number -> (passed, detail); filled by test_acceptance, printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
