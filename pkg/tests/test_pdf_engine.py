import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from statsize.benchgen import random_circuit, synthetic_library
from statsize.fassta import Moments
from statsize.netlist import Sizing, gate_delay
from statsize.oracle import monte_carlo
from statsize.pdf_engine import (
    DiscretePdf, discretize_normal, pdf_max, pdf_max_all, pdf_moments, pdf_sum, propagate_full,
    resample)

from conftest import chain, fixed_lib


def P(*pts):
    return DiscretePdf(np.array([v for v, _ in pts], float), np.array([p for _, p in pts], float))


@st.composite
def pdfs(draw, max_size=20):
    vals = draw(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=max_size,
                         unique=True))
    w = draw(st.lists(st.floats(0.01, 1.0), min_size=len(vals), max_size=len(vals)))
    order = np.argsort(vals)
    v = np.asarray(vals)[order]
    p = np.asarray(w)[order]
    return DiscretePdf(v, p / p.sum())


# ---------------------------------------------------------------- type


def test_pdf_validation():
    with pytest.raises(ValueError):
        P((1, 0.5), (0, 0.5))
    with pytest.raises(ValueError):
        P((0, 0.5), (1, 0.4))
    with pytest.raises(ValueError):
        P((0, 1.0), (1, 0.0))
    with pytest.raises(ValueError):
        DiscretePdf(np.array([]), np.array([]))


def test_pdf_is_read_only():
    p = P((0, 0.5), (1, 0.5))
    with pytest.raises(ValueError):
        p.probs[0] = 1.0


def test_pdf_csv():
    assert P((1.5, 0.25), (3, 0.75)).to_csv() == "value,prob\n1.5,0.25\n3,0.75\n"


# ---------------------------------------------------------------- discretize


def test_discretize_degenerate():
    assert discretize_normal(5.0, 0.0, 7) == DiscretePdf.point(5.0)


def test_discretize_symmetric_mean():
    m = pdf_moments(discretize_normal(0.0, 1.0, 15))
    assert abs(m.mu) <= 1e-9


def _quadrature_masses(n):
    z = np.linspace(-4, 4, n)
    edges = np.concatenate(([-np.inf], 0.5 * (z[1:] + z[:-1]), [np.inf]))
    masses = np.array([integrate.quad(stats.norm.pdf, lo, hi, epsabs=1e-14)[0]
                       for lo, hi in zip(edges[:-1], edges[1:])])
    return z, masses / masses.sum()


@pytest.mark.parametrize("n", [3, 10, 13, 15, 64])
def test_discretize_matches_quadrature(n):
    z, masses = _quadrature_masses(n)
    pdf = discretize_normal(0.0, 1.0, n)
    np.testing.assert_allclose(pdf.values, z, atol=1e-12)
    np.testing.assert_allclose(pdf.probs, masses, atol=1e-10)
    ref_var = float(np.dot(z * z, masses))
    assert pdf_moments(pdf).var == pytest.approx(ref_var, abs=1e-9)


@pytest.mark.xfail(strict=True, reason="midpoint cells on a 15-point grid inflate the variance "
                                       "by about 2.7%, so the 2% bound cannot hold")
def test_discretize_variance_within_two_percent():
    assert pdf_moments(discretize_normal(0.0, 1.0, 15)).var == pytest.approx(1.0, rel=0.02)


def test_discretize_scales():
    a = discretize_normal(0.0, 1.0, 13)
    b = discretize_normal(10.0, 2.0, 13)
    np.testing.assert_allclose(b.values, 10 + 2 * a.values)
    np.testing.assert_array_equal(a.probs, b.probs)


@pytest.mark.parametrize("n", [2, 65])
def test_discretize_rejects_sample_count(n):
    with pytest.raises(ValueError):
        discretize_normal(0, 1, n)


# ---------------------------------------------------------------- moments, sum, max


def test_pdf_moments_examples():
    assert pdf_moments(P((0, .5), (2, .5))) == Moments(1, 1)
    assert pdf_moments(P((7, 1.0))) == Moments(7, 0)
    assert pdf_moments(P((0, .25), (1, .5), (2, .25))) == Moments(1, 0.5)


def test_pdf_sum_examples():
    assert pdf_sum(P((1, 1)), P((2, 1))) == P((3, 1))
    coin = P((0, .5), (1, .5))
    assert pdf_sum(coin, coin, 3) == P((0, .25), (1, .5), (2, .25))


def test_pdf_max_examples():
    assert pdf_max(P((0, .5), (2, .5)), P((1, 1))) == P((1, .5), (2, .5))
    p = P((3, .2), (4, .5), (6, .3))
    assert pdf_max(p, P((1, 1))) == p
    assert pdf_max(P((2, 1)), P((2, 1))) == P((2, 1))


@settings(max_examples=60)
@given(pdfs(), pdfs(), st.integers(3, 20))
def test_pdf_sum_preserves_moments(a, b, cap):
    r = pdf_sum(a, b, cap)
    ma, mb, mr = pdf_moments(a), pdf_moments(b), pdf_moments(r)
    assert len(r) <= max(cap, 1)
    assert math.fsum(r.probs) == pytest.approx(1.0, abs=1e-9)
    assert mr.mu == pytest.approx(ma.mu + mb.mu, abs=1e-9 * (1 + abs(ma.mu) + abs(mb.mu)))
    assert mr.var == pytest.approx(ma.var + mb.var, rel=1e-6, abs=1e-7)


@settings(max_examples=60)
@given(pdfs(), pdfs())
def test_pdf_max_dominates_without_resampling(a, b):
    r = pdf_max(a, b, cap=10_000)
    grid = np.union1d(a.values, b.values)
    assert np.all(r.cdf(grid) <= np.minimum(a.cdf(grid), b.cdf(grid)) + 1e-12)


@settings(max_examples=60)
@given(pdfs(), pdfs(), st.integers(3, 20))
def test_pdf_max_mean_lower_bound(a, b, cap):
    r = pdf_max(a, b, cap)
    assert len(r) <= cap
    assert math.fsum(r.probs) == pytest.approx(1.0, abs=1e-9)
    # resampling preserves the mean, so the bound is exact up to rounding
    lo = max(pdf_moments(a).mu, pdf_moments(b).mu)
    assert pdf_moments(r).mu >= lo - 1e-9 * (1 + abs(lo))


@settings(max_examples=40)
@given(pdfs(max_size=60), st.integers(3, 30))
def test_resample_keeps_mass_mean_variance(p, cap):
    r = resample(p.values, p.probs, cap)
    assert len(r) <= cap
    mp, mr = pdf_moments(p), pdf_moments(r)
    assert mr.mu == pytest.approx(mp.mu, abs=1e-9 * (1 + abs(mp.mu)))
    assert mr.var == pytest.approx(mp.var, rel=1e-6, abs=1e-9)


def test_resample_merges_duplicates():
    r = resample(np.array([1.0, 0.0, 1.0]), np.array([0.25, 0.5, 0.25]), 13)
    assert r == P((0, .5), (1, .5))


def test_max_all_fold():
    assert pdf_max_all([P((1, 1)), P((5, 1)), P((3, 1))]) == P((5, 1))


# ---------------------------------------------------------------- propagation


def test_propagate_single_gate_vs_mc(no_variation_warning):
    lib = fixed_lib([10.0], c=0.2)
    c = chain(lib, ["D0_1"])
    m = propagate_full(c, Sizing.smallest(c), lib).circuit_moments
    mc = monte_carlo(c, Sizing.smallest(c), lib, 1_000_000, seed=3)
    assert m.mu == pytest.approx(mc.mean, rel=0.01)
    assert m.var == pytest.approx(mc.std ** 2, rel=0.05)


def test_propagate_two_chain_vs_mc(no_variation_warning):
    lib = fixed_lib([5.0], c=0.2)
    c = chain(lib, ["D0_1", "D0_1"])
    m = propagate_full(c, Sizing.smallest(c), lib).circuit_moments
    mc = monte_carlo(c, Sizing.smallest(c), lib, 1_000_000, seed=4)
    assert mc.mean == pytest.approx(10, rel=0.01) and mc.std ** 2 == pytest.approx(2, rel=0.01)
    assert m.mu == pytest.approx(mc.mean, rel=0.01)
    assert m.var == pytest.approx(mc.std ** 2, rel=0.05)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), data=st.data())
def test_zero_variation_is_longest_path(seed, data):
    lib = synthetic_library().with_params(c=0.0, sigma_rand=0.0)
    c = random_circuit(lib, 30, seed, reuse=0.5)
    sizing = Sizing({g: data.draw(st.integers(0, 5)) for g in c.gates})
    arr = {n: 0.0 for n in c.inputs}
    for g in c.order:
        gate = c.gates[g]
        arr[gate.output] = max(arr[n] for n in gate.inputs) + gate_delay(c, g, sizing, lib)[0]
    ann = propagate_full(c, sizing, lib)
    assert len(ann.circuit_rv) == 1
    assert ann.circuit_moments.mu == max(arr[n] for n in c.outputs)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 16))
def test_annotation_invariants(seed, n):
    lib = synthetic_library()
    c = random_circuit(lib, 20, seed, reuse=0.3)
    ann = propagate_full(c, Sizing.smallest(c), lib, n)
    assert set(ann.pdfs) == set(c.nets)
    for net, pdf in ann.pdfs.items():
        assert len(pdf) <= n
        assert abs(math.fsum(pdf.probs) - 1) <= 1e-9
        m = pdf_moments(pdf)
        assert ann.moments[net].mu == pytest.approx(m.mu, abs=1e-9)
        assert ann.moments[net].var == pytest.approx(m.var, abs=1e-9)
