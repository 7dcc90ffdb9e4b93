import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bitsampler.errors import DomainError, ValidationError
from bitsampler.oracle import (
    CantorSet,
    OracleBounds,
    cantor_density,
    exp2_over_exp,
    get_density,
    lambda_cantor,
    linear_density,
    tilde_bounds,
    uniform_density,
)

COMPACT_BUILTINS = ["uniform", "linear", "quadratic", "pyramid", "uniform2d", "product-linear2d"]


def exact_cantor_pieces(delta, levels):
    """Closed pieces of the construction, by exact rational arithmetic."""
    pieces = [(Fraction(0), Fraction(1))]
    for j in range(1, levels + 1):
        gap = delta**j
        nxt = []
        for lo, hi in pieces:
            c = (hi - lo - gap) / 2
            nxt += [(lo, lo + c), (hi - c, hi)]
        pieces = nxt
    return pieces


def test_linear_bounds_example():
    assert linear_density().bounds([(0.25, 0.5)]) == OracleBounds(0.5, 1.0)


def test_constant_bounds():
    assert get_density("uniform2d").bounds([(0.1, 0.3), (0.5, 0.9)]) == OracleBounds(1.0, 1.0)


def test_bounds_outside_support():
    with pytest.raises(DomainError):
        linear_density().bounds([(0.5, 1.5)])


@pytest.mark.parametrize("delta, expected", [(0.0, 1.0), (0.2, 2 / 3), (0.25, 0.5)])
def test_lambda_cantor(delta, expected):
    d = Fraction(str(delta))
    assert lambda_cantor(delta) == float((1 - 3 * d) / (1 - 2 * d))
    assert lambda_cantor(delta) == pytest.approx(expected, rel=1e-15)


def test_lambda_cantor_limit():
    assert lambda_cantor(1 / 3 - 1e-12) < 1e-11


@pytest.mark.parametrize("delta", [-0.1, 1 / 3, 0.5])
def test_cantor_domain(delta):
    with pytest.raises(DomainError):
        lambda_cantor(delta)
    with pytest.raises(DomainError):
        cantor_density(delta)


def test_cantor_zero_is_uniform():
    dens = cantor_density(0.0)
    assert dens.bounds([(0.2, 0.7)]) == OracleBounds(1.0, 1.0)
    assert dens.sup_global == 1.0


@pytest.mark.parametrize("j", [1, 2, 3])
def test_cantor_remaining_length(j):
    delta = Fraction(1, 5)
    pieces = exact_cantor_pieces(delta, j)
    assert len(pieces) == 2**j
    total = sum(hi - lo for lo, hi in pieces)
    assert total == 2**j * (pieces[0][1] - pieces[0][0])
    assert total == 1 - delta * ((2 * delta) ** j - 1) / (2 * delta - 1)
    fl = CantorSet(0.2).intervals(j)
    exact = [float(v) for piece in pieces for v in piece]
    assert exact == pytest.approx([v for piece in fl for v in piece], abs=1e-15)


def test_cantor_bounds_against_enumeration():
    dens = cantor_density(0.2)
    height = 1 / lambda_cantor(0.2)
    assert height == pytest.approx(1.5)
    pieces = exact_cantor_pieces(Fraction(1, 5), 3)
    # strictly inside the first removed middle interval
    (l1, r1), (l2, r2) = exact_cantor_pieces(Fraction(1, 5), 1)
    inside_gap = [(float(r1) + 0.01, float(l2) - 0.01)]
    assert dens.bounds(inside_gap) == OracleBounds(0.0, 0.0)
    # straddling a piece endpoint: meets the set and its complement
    lo, hi = pieces[3]
    rect = [(float(lo) - 1e-3, float(lo) + 1e-3)]
    assert dens.bounds(rect) == OracleBounds(0.0, 1.5)
    assert dens.bounds([(0.0, 1.0)]) == OracleBounds(0.0, 1.5)


def test_cantor_gap_persists_at_every_level():
    dens = cantor_density(0.2)
    full = 1 / lambda_cantor(0.2)
    for k in range(13):
        widths = [(math.ldexp(i, -k), math.ldexp(i + 1, -k)) for i in range(2**k)]
        gaps = [dens.bounds([w]).sup_f - dens.bounds([w]).inf_f for w in widths]
        assert max(gaps) == full


def test_tilde_bounds_examples():
    spec = exp2_over_exp()
    lo, hi = tilde_bounds(spec, 0.0, 0.5)
    assert (lo, hi) == pytest.approx((1.0, 2.0), rel=1e-15)
    assert tuple(tilde_bounds(spec, 0.0, 1.0)) == (0.0, 2.0)
    assert spec.C == 2.0
    with pytest.raises(DomainError):
        tilde_bounds(spec, 0.5, 0.5)


@given(st.floats(0, 1, exclude_max=True))
def test_tilde_matches_algebra(u):
    # f/g = 2 exp(-x) at x = -log(1 - u) is 2 (1 - u)
    assert exp2_over_exp().tilde_eval(u) == pytest.approx(2 * (1 - u), rel=1e-12, abs=1e-15)


def test_identity_envelope():
    from bitsampler.oracle import RatioDensitySpec

    spec = RatioDensitySpec("id", lambda x: 1.0, lambda a, b: (1.0, 1.0), exp2_over_exp().cdf)
    assert tuple(tilde_bounds(spec, 0.25, 0.75)) == (1.0, 1.0)


def test_registry():
    assert get_density("cantor:0.2").sup_global == pytest.approx(1.5)
    with pytest.raises(ValidationError):
        get_density("nope")
    with pytest.raises(ValidationError):
        get_density("cantor:0.5")


def _random_rect(rng, d):
    rect = []
    for _ in range(d):
        a, b = sorted((rng.random(), rng.random()))
        rect.append((a, b))
    return rect


@pytest.mark.parametrize("name", COMPACT_BUILTINS)
def test_sandwich_property(name):
    dens = get_density(name)
    rng = random.Random(name)
    for _ in range(10_000):
        rect = _random_rect(rng, dens.dimension)
        x = tuple(lo + (hi - lo) * rng.random() for lo, hi in rect)
        b = dens.bounds(rect)
        assert 0 <= b.inf_f <= dens.eval(x) <= b.sup_f


@pytest.mark.parametrize("name", COMPACT_BUILTINS + ["cantor:0.2"])
@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_inclusion_monotone(name, data):
    dens = get_density(name)
    unit = st.floats(0, 1)
    outer, inner = [], []
    for _ in range(dens.dimension):
        a, b, c, e = sorted(data.draw(st.tuples(unit, unit, unit, unit)))
        outer.append((a, e))
        inner.append((b, c))
    big, small = dens.bounds(outer), dens.bounds(inner)
    assert small.inf_f >= big.inf_f
    assert small.sup_f <= big.sup_f


def test_sup_global_is_one_oracle_call():
    assert get_density("product-linear2d").sup_global == 4.0
    assert get_density("quadratic").sup_global == 3.0
    assert get_density("pyramid").sup_global == 2.0
