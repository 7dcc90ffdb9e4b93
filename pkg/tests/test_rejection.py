import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from bitsampler.analysis import riemann_gap
from bitsampler.bisection import get_cdf, inversion_bisect
from bitsampler.bitstream import CountingBitSource, ReplayBitSource, SeededBitSource
from bitsampler.errors import DomainError, NaiveLoopForever, NonRiemannSuspected
from bitsampler.oracle import cantor_density, get_density
from bitsampler.rejection import (
    Decision,
    RectBox,
    grid_points,
    grid_spiked_density,
    grid_zeroed_density,
    naive_sample_broken,
    naive_trial,
    quadtree_step,
    sample_compact,
    sample_general,
)

COMPACT = ["uniform", "linear", "quadratic", "pyramid", "uniform2d", "product-linear2d"]


def _walk_depth(density, source):
    """Depth T at which one trial decides, with the decision."""
    rect = RectBox.root(density.dimension, density.sup_global)
    depth = 0
    while True:
        decision, nxt = quadtree_step(rect, density, source)
        if decision is not Decision.UNDECIDED:
            return depth, decision
        rect, depth = nxt, depth + 1


# --- traced examples ------------------------------------------------------------


def test_uniform_accepts_at_root():
    f = get_density("uniform")
    src = ReplayBitSource([])
    decision, rect = quadtree_step(RectBox.root(1, 1.0), f, src)
    assert decision is Decision.ACCEPT and rect.level == 0
    assert src.consumed == 0


def test_linear_root_undecided():
    f = get_density("linear")
    src = ReplayBitSource([1, 0])
    decision, child = quadtree_step(RectBox.root(1, 2.0), f, src)
    assert decision is Decision.UNDECIDED
    assert src.consumed == 2
    assert child.projection() == ((0.5, 1.0),)
    assert child.y_range() == (0.0, 1.0)


@pytest.mark.parametrize(
    "bits, expected",
    [([1, 0], Decision.ACCEPT), ([0, 1], Decision.REJECT), ([0, 0], Decision.UNDECIDED), ([1, 1], Decision.UNDECIDED)],
)
def test_linear_depth_one_quadrants(bits, expected):
    f = get_density("linear")
    child = RectBox.root(1, 2.0).child(bits)
    decision, _ = quadtree_step(child, f, SeededBitSource(0))
    assert decision is expected


def test_uniform_sample_trace():
    src = ReplayBitSource([0, 1, 1])
    res = sample_compact(get_density("uniform"), 1 / 16, src)
    assert res.telemetry.decision_bits == 0
    assert res.telemetry.bisection_bits == 3
    assert res.value == 7 / 16


def test_linear_full_trace():
    # quadrant bits 1,0 accept [1/2,1]; then 2 bisection bits at eps=1/16 for width 1/2
    src = ReplayBitSource([1, 0, 0, 0])
    res = sample_compact(get_density("linear"), 1 / 16, src)
    tel = res.telemetry
    assert (tel.decision_bits, tel.bisection_bits, tel.oracle_calls, tel.restarts) == (2, 2, 2, 0)
    assert res.value == 0.5 + 1 / 16


def test_restart_after_reject():
    src = ReplayBitSource([0, 1, 1, 0])
    res = sample_compact(get_density("linear"), 0.25, src)
    assert res.telemetry.restarts == 1
    assert res.telemetry.trials == 2
    assert res.telemetry.oracle_calls == 4
    assert res.value == 0.75


def test_domain_errors():
    with pytest.raises(DomainError):
        sample_compact(get_density("linear"), 0.0, SeededBitSource(0))
    with pytest.raises(DomainError):
        sample_compact(get_density("linear"), 0.1, SeededBitSource(0), depth_cap=-1)


def test_identity_envelope_is_inversion():
    from bitsampler.oracle import RatioDensitySpec

    cdf = get_cdf("linear")
    spec = RatioDensitySpec(
        "same", lambda x: 1.0, lambda x1, x2: (1.0, 1.0), cdf, target_cdf=cdf.G, target_pdf=lambda x: 2 * x
    )
    a = sample_general(spec, 2**-10, SeededBitSource(4))
    b = inversion_bisect(cdf, 0.0, 1.0, 2**-10, SeededBitSource(4))
    assert a.value == b.value
    assert a.telemetry.decision_bits == 0


# --- properties --------------------------------------------------------------------


@pytest.mark.parametrize("name", COMPACT + ["exp2-over-exp"])
def test_decision_soundness(name):
    target = get_density(name)
    f = target.tilde if hasattr(target, "tilde") else target
    src = SeededBitSource(5)
    rng = np.random.default_rng(5)
    d = f.dimension
    for _ in range(300):
        rect = RectBox.root(d, f.sup_global)
        while True:
            decision, nxt = quadtree_step(rect, f, src)
            if decision is Decision.UNDECIDED:
                rect = nxt
                continue
            box = rect.projection()
            pts = [tuple(rng.uniform(lo, hi) for lo, hi in box) for _ in range(30)]
            y_lo, y_hi = rect.y_range()
            if decision is Decision.ACCEPT:
                assert all(f.eval(p) >= y_hi - 1e-12 for p in pts)
            else:
                assert all(f.eval(p) <= y_lo + 1e-12 for p in pts)
            break


def test_depth_two_reach_is_uniform():
    # with a density that never decides above depth 2, every depth-2 box is equally likely
    cantor = cantor_density(0.2)
    src = SeededBitSource(11)
    counts = Counter()
    n = 40_000
    for _ in range(n):
        rect = RectBox.root(1, cantor.sup_global)
        for _ in range(2):
            decision, rect = quadtree_step(rect, cantor, src)
            assert decision is Decision.UNDECIDED
        counts[(rect.xs, rect.ny)] += 1
    assert len(counts) == 16
    p = stats.chisquare(list(counts.values())).pvalue
    assert p > 1e-3


@pytest.mark.parametrize("name", ["linear", "quadratic", "pyramid", "product-linear2d"])
def test_acceptance_rate_is_one_over_c(name):
    f = get_density(name)
    src = SeededBitSource(17)
    n = 20_000
    accepts = sum(_walk_depth(f, src)[1] is Decision.ACCEPT for _ in range(n))
    p = 1 / f.sup_global
    assert abs(accepts / n - p) <= 4 * math.sqrt(p * (1 - p) / n)


@pytest.mark.parametrize("name", ["linear", "quadratic", "exp2-over-exp"])
def test_monotone_iterations_per_trial(name):
    target = get_density(name)
    f = target.tilde if hasattr(target, "tilde") else target
    assert f.monotone
    src = SeededBitSource(19)
    depths = [_walk_depth(f, src)[0] + 1 for _ in range(20_000)]
    se = np.std(depths) / math.sqrt(len(depths))
    assert np.mean(depths) <= 4 + 3 * se


@pytest.mark.parametrize("name", COMPACT)
def test_survival_bound(name):
    f = get_density(name)
    C = f.sup_global
    src = SeededBitSource(23)
    n = 20_000
    depths = np.array([_walk_depth(f, src)[0] for _ in range(n)])
    k_top = 12 if f.dimension == 1 else 8
    for k in range(k_top + 1):
        emp = float(np.mean(depths > k))
        bound = 2 / 2**k + riemann_gap(f, k).gap / C
        assert emp <= bound + 3 * math.sqrt(max(emp, 1 / n) / n)


@pytest.mark.parametrize("name", ["uniform", "linear", "quadratic", "pyramid"])
def test_end_to_end_coupling(name):
    f = get_density(name)
    eps = 2**-4
    for seed in range(500):
        a = sample_compact(f, eps, SeededBitSource(seed)).value
        b = sample_compact(f, eps / 2**10, SeededBitSource(seed)).value
        assert abs(a - b) <= eps


def test_general_coupling():
    spec = get_density("exp2-over-exp")
    eps = 2**-4
    for seed in range(500):
        a = sample_general(spec, eps, SeededBitSource(seed)).value
        b = sample_general(spec, eps / 2**10, SeededBitSource(seed)).value
        assert abs(a - b) <= eps


@pytest.mark.parametrize(
    "name, cdf", [("linear", lambda x: x**2), ("quadratic", lambda x: x**3), ("pyramid", None)]
)
def test_compact_ks(name, cdf):
    if cdf is None:
        def cdf(x):
            x = np.asarray(x)
            return np.where(x < 0.5, 2 * x**2, 1 - 2 * (1 - x) ** 2)
    f = get_density(name)
    src = SeededBitSource(29)
    xs = [sample_compact(f, 2**-12, src).value for _ in range(20_000)]
    assert stats.kstest(xs, cdf).pvalue > 1e-3


def test_product_marginals():
    f = get_density("product-linear2d")
    src = SeededBitSource(31)
    pts = np.array([sample_compact(f, 2**-10, src).value for _ in range(10_000)])
    for axis in range(2):
        assert stats.kstest(pts[:, axis], lambda x: x**2).pvalue > 1e-3
    assert abs(np.corrcoef(pts.T)[0, 1]) < 0.05


def test_general_ks():
    spec = get_density("exp2-over-exp")
    src = SeededBitSource(37)
    xs = [sample_general(spec, 2**-10, src).value for _ in range(20_000)]
    assert stats.kstest(xs, lambda x: -np.expm1(-2 * np.asarray(x))).pvalue > 1e-3


def test_telemetry_accounting():
    src = CountingBitSource(SeededBitSource(41))
    for name in COMPACT:
        f = get_density(name)
        before = src.consumed
        res = sample_compact(f, 2**-9, src)
        tel = res.telemetry
        assert tel.total_bits == src.consumed - before
        assert tel.decision_bits == (f.dimension + 1) * tel.quadtree_steps
        assert tel.oracle_calls == tel.quadtree_steps + tel.trials


# --- non-halting and broken samplers --------------------------------------------------


def test_cantor_hits_cap():
    f = cantor_density(0.2)
    src = SeededBitSource(43)
    hits = 0
    for _ in range(200):
        try:
            sample_compact(f, 2**-10, src, depth_cap=24)
        except NonRiemannSuspected as exc:
            assert exc.depth_cap == 24
            hits += 1
    assert hits / 200 > 0.1


def test_zero_cap_error_carries_state():
    with pytest.raises(NonRiemannSuspected):
        sample_compact(get_density("linear"), 0.1, ReplayBitSource([0, 0]), depth_cap=0)


def test_naive_spikes_always_accepted():
    eps = 0.125
    f = grid_spiked_density(eps)
    src = SeededBitSource(47)
    grid = set(grid_points(eps))
    for _ in range(2_000):
        (x,), accepted = naive_trial(f, eps, src)
        assert x in grid
        assert accepted


def test_naive_zeroed_loops():
    eps = 0.125
    with pytest.raises(NaiveLoopForever) as info:
        naive_sample_broken(grid_zeroed_density(eps), eps, SeededBitSource(53), max_iterations=5_000)
    assert info.value.iterations == 5_000


def test_naive_uniform_is_accidentally_fine():
    src = SeededBitSource(59)
    res = naive_sample_broken(get_density("uniform"), 2**-8, src)
    assert res.telemetry.restarts == 0
    assert 0 < res.value < 1


def test_correct_sampler_ignores_spikes():
    # the quadtree oracle sees spike sup only on boxes that contain a grid point,
    # yet the output law stays uniform
    eps = 0.125
    f = grid_spiked_density(eps, stride=1)
    src = SeededBitSource(61)
    xs = [sample_compact(f, 2**-12, src, depth_cap=40).value for _ in range(5_000)]
    assert stats.kstest(xs, "uniform").pvalue > 1e-3


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=3, max_size=3), st.integers(0, 6))
def test_child_nesting(bits, level):
    rect = RectBox.root(2, 3.0)
    for _ in range(level):
        rect = rect.child([0, 1, 1])
    child = rect.child(bits)
    for (plo, phi), (clo, chi) in zip(rect.projection(), child.projection()):
        assert plo <= clo < chi <= phi and chi - clo == (phi - plo) / 2
    (ylo, yhi), (cylo, cyhi) = rect.y_range(), child.y_range()
    assert ylo <= cylo < cyhi <= yhi
    assert child.volume == pytest.approx(rect.volume / 8)
