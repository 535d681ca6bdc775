import math

import numpy as np
import pytest

from statsize.benchgen import random_circuit, synthetic_library
from statsize.netlist import Sizing, build_circuit
from statsize.oracle import monte_carlo, perturbed_variance

from conftest import chain, fixed_lib


def test_single_gate_clt(no_variation_warning):
    lib = fixed_lib([10.0], c=0.2)
    c = chain(lib, ["D0_1"])
    r = monte_carlo(c, Sizing.smallest(c), lib, 1_000_000, seed=5)
    assert abs(r.mean - 10) <= 3 * 2 / 1000
    assert r.std == pytest.approx(2, rel=0.02)


def test_zero_variation(no_variation_warning):
    lib = fixed_lib([2.0, 3.5])
    gates = [("g1", "D0_1", {"A": "a", "Y": "x"}), ("g2", "D1_1", {"A": "a", "Y": "y"}),
             ("g3", "D0_2", {"A": "x", "B": "y", "Y": "z"})]
    c = build_circuit("z", ["a"], ["z"], gates, lib)
    r = monte_carlo(c, Sizing.smallest(c), lib, 1000, seed=1)
    assert r.std == 0.0 and r.mean == 5.5
    assert set(r.quantiles.values()) == {5.5}


def test_two_parallel_iid_paths(no_variation_warning):
    lib = fixed_lib([0.0], sigma_rand=1.0)
    gates = [("g1", "D0_1", {"A": "a", "Y": "x"}), ("g2", "D0_1", {"A": "b", "Y": "y"})]
    c = build_circuit("par", ["a", "b"], ["x", "y"], gates, lib)
    r = monte_carlo(c, Sizing.smallest(c), lib, 1_000_000, seed=2)
    assert r.mean == pytest.approx(1 / math.sqrt(math.pi), abs=0.004)
    assert r.std == pytest.approx(math.sqrt(1 - 1 / math.pi), rel=0.01)


def test_seeded_determinism():
    lib = synthetic_library()
    c = random_circuit(lib, 20, 3, reuse=0.3)
    s = Sizing.smallest(c)
    a = monte_carlo(c, s, lib, 70_000, seed=9, keep_samples=True)
    b = monte_carlo(c, s, lib, 70_000, seed=9, keep_samples=True)
    assert a.mean == b.mean and a.std == b.std and a.quantiles == b.quantiles
    assert np.array_equal(a.samples, b.samples)
    assert monte_carlo(c, s, lib, 70_000, seed=10).mean != a.mean


def test_trial_prefix_stable():
    # streams are keyed per gate and chunk, so a short run is a prefix of a long one
    lib = synthetic_library()
    c = random_circuit(lib, 10, 4)
    s = Sizing.smallest(c)
    short = monte_carlo(c, s, lib, 100, seed=1, keep_samples=True).samples
    long = monte_carlo(c, s, lib, 1000, seed=1, keep_samples=True).samples
    assert np.array_equal(short, long[:100])


def test_quantiles_monotone_and_csv():
    lib = synthetic_library()
    c = random_circuit(lib, 12, 8)
    r = monte_carlo(c, Sizing.smallest(c), lib, 5000, seed=0, keep_samples=True)
    q = [r.quantiles[p] for p in sorted(r.quantiles)]
    assert q == sorted(q) and r.std >= 0
    lines = r.to_csv().splitlines()
    assert lines[0] == "delay" and len(lines) == 5001
    with pytest.raises(ValueError):
        monte_carlo(c, Sizing.smallest(c), lib, 10).to_csv()
    with pytest.raises(ValueError):
        monte_carlo(c, Sizing.smallest(c), lib, 0)


def test_truncation_clips_negative_delays(no_variation_warning):
    lib = fixed_lib([0.5], sigma_rand=1.0)
    c = chain(lib, ["D0_1"])
    s = Sizing.smallest(c)
    plain = monte_carlo(c, s, lib, 20_000, seed=1, keep_samples=True)
    clipped = monte_carlo(c, s, lib, 20_000, seed=1, truncate=True, keep_samples=True)
    assert plain.samples.min() < 0
    assert clipped.samples.min() == 0.0
    assert np.array_equal(np.maximum(plain.samples, 0), clipped.samples)


def test_estimator_standard_error_scaling():
    lib = synthetic_library()
    c = random_circuit(lib, 8, 2)
    s = Sizing.smallest(c)
    small = [monte_carlo(c, s, lib, 500, seed=k).mean for k in range(60)]
    big = [monte_carlo(c, s, lib, 1000, seed=100 + k).mean for k in range(60)]
    assert 1.0 < np.std(small) / np.std(big) < 2.0


# ---------------------------------------------------------------- perturbed variance


@pytest.fixture
def two_path(no_variation_warning):
    # path x: mean 10, path y: mean 3, merged by g3
    lib = fixed_lib([10.0, 3.0, 1.0], c=0.1, sigma_rand=0.2)
    gates = [("g1", "D0_1", {"A": "a", "Y": "x"}), ("g2", "D1_1", {"A": "b", "Y": "y"}),
             ("g3", "D2_2", {"A": "x", "B": "y", "Y": "z"}), ("g4", "D2_1", {"A": "a", "Y": "w"})]
    return lib, build_circuit("tp", ["a", "b"], ["z"], gates, lib)


def test_perturbed_empty_path(two_path):
    lib, c = two_path
    assert perturbed_variance(c, Sizing.smallest(c), lib, [], 0.1, 1000, seed=1) == 0.0


def test_perturbed_dominant_path(two_path):
    lib, c = two_path
    s = Sizing.smallest(c)
    dom = perturbed_variance(c, s, lib, ["g1", "g3"], 0.11, 1_000_000, seed=1)
    other = perturbed_variance(c, s, lib, ["g2", "g3"], 0.11, 1_000_000, seed=1)
    assert dom > 0 and dom > other


def test_perturbed_dangling_gate(two_path):
    lib, c = two_path
    assert perturbed_variance(c, Sizing.smallest(c), lib, ["g4"], 0.5, 5000, seed=3) == 0.0


def test_perturbed_invalid_path(two_path):
    lib, c = two_path
    with pytest.raises(ValueError, match="unknown gate"):
        perturbed_variance(c, Sizing.smallest(c), lib, ["g9"], 0.1, 10)
    with pytest.raises(ValueError, match="not connected"):
        perturbed_variance(c, Sizing.smallest(c), lib, ["g1", "g2"], 0.1, 10)
