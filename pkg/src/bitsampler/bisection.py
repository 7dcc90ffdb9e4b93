"""Bisection primitives that turn fair bits into epsilon-approximate variates.

Three entry points:

* :func:`bisect_cdf` -- bisection driven by a continuous CDF and its inverse.
* :func:`bisect_uniform_box` -- per-axis deterministic halving of a box.
* :func:`inversion_bisect` -- bisection of a u-interval mapped through ``G_inv``.

The u-space endpoints are kept as exact dyadic rationals (integer numerator
at a common level); only x-space endpoints are floats. Every halving draws one
fresh bit: 0 keeps the lower half, 1 the upper half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

from scipy.optimize import brentq

from .bitstream import BitSource
from .errors import DomainError, EnvelopeError, ProbabilityZeroEvent, ValidationError

# Failsafe on bisection depth; a continuous CDF never needs this many halvings.
BISECTION_DEPTH_CAP = 4096
# Absolute tolerance used when G_inv has to be obtained by root finding.
INVERSION_XTOL = 2.0**-48


class CdfSpec:
    """A continuous CDF ``G`` on ``[a, b]`` together with its inverse.

    ``b`` may be ``math.inf`` for envelopes with unbounded support. When
    ``G_inv`` is omitted it is computed by root finding on ``G``; this needs a
    finite ``b``.
    """

    def __init__(
        self,
        a: float,
        b: float,
        G: Callable[[float], float],
        G_inv: Optional[Callable[[float], float]] = None,
        name: str = "",
    ) -> None:
        if not a < b:
            raise DomainError(f"CDF support needs a < b, got [{a}, {b}]")
        self.a = float(a)
        self.b = float(b)
        self.G = G
        self.name = name
        if G_inv is None:
            if math.isinf(b):
                raise DomainError("numeric inversion needs a bounded support")
            G_inv = self._numeric_inverse
        self._G_inv = G_inv

    @property
    def length(self) -> float:
        return self.b - self.a

    def _numeric_inverse(self, u: float) -> float:
        return brentq(lambda x: self.G(x) - u, self.a, self.b, xtol=INVERSION_XTOL)

    def G_inv(self, u: float) -> float:
        # Endpoints are pinned so that u in {0, 1} maps exactly onto the support.
        if u <= 0.0:
            return self.a
        if u >= 1.0:
            return self.b
        try:
            x = self._G_inv(u)
        except (ValueError, OverflowError, ZeroDivisionError) as exc:
            raise EnvelopeError(f"G_inv({u}) failed: {exc}") from exc
        if x != x:
            raise EnvelopeError(f"G_inv({u}) returned NaN")
        return x

    def __repr__(self) -> str:
        return f"CdfSpec({self.name or '?'}, [{self.a}, {self.b}])"


@dataclass
class Telemetry:
    """Per-sample cost accounting."""

    decision_bits: int = 0
    bisection_bits: int = 0
    oracle_calls: int = 0
    restarts: int = 0
    quadtree_steps: int = 0
    quadtree_depth_last: int = 0

    @property
    def total_bits(self) -> int:
        return self.decision_bits + self.bisection_bits

    @property
    def trials(self) -> int:
        return self.restarts + 1


@dataclass
class SampleResult:
    """An epsilon-approximate sample; ``value`` is a float for d=1, a tuple otherwise."""

    value: object
    epsilon: float
    telemetry: Telemetry = field(default_factory=Telemetry)

    @property
    def coords(self) -> Tuple[float, ...]:
        if isinstance(self.value, tuple):
            return self.value
        return (self.value,)


def to_dyadic(u: float) -> Tuple[int, int]:
    """Exact ``(numerator, level)`` with ``u == numerator / 2**level``."""
    num, den = float(u).as_integer_ratio()
    return num, den.bit_length() - 1


def _bisect_u(cdf: CdfSpec, n1: int, n2: int, level: int, epsilon: float, source: BitSource):
    x1 = cdf.G_inv(math.ldexp(n1, -level))
    x2 = cdf.G_inv(math.ldexp(n2, -level))
    bits = 0
    while not abs(x2 - x1) <= 2.0 * epsilon:
        if bits >= BISECTION_DEPTH_CAP:
            raise ProbabilityZeroEvent(
                f"bisection exceeded {BISECTION_DEPTH_CAP} halvings; is G continuous?"
            )
        level += 1
        mid = n1 + n2
        n1 *= 2
        n2 *= 2
        bits += 1
        if source.next_bit():
            n1 = mid
            x1 = cdf.G_inv(math.ldexp(n1, -level))
        else:
            n2 = mid
            x2 = cdf.G_inv(math.ldexp(n2, -level))
    return 0.5 * (x1 + x2), bits


def bisect_cdf(cdf: CdfSpec, epsilon: float, source: BitSource) -> SampleResult:
    """Epsilon-approximate sample from ``G`` by bisection in u-space.

    Each step splits the current x-interval at ``G_inv`` of the midpoint of its
    u-interval and keeps a half chosen by one fresh bit. Halts once the
    x-interval has length at most ``2*epsilon`` and returns its midpoint.
    """
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    value, bits = _bisect_u(cdf, 0, 1, 0, epsilon, source)
    return SampleResult(value, epsilon, Telemetry(bisection_bits=bits))


def inversion_bisect(
    cdf: CdfSpec, u1: float, u2: float, epsilon: float, source: BitSource
) -> SampleResult:
    """Bisect ``[u1, u2]`` with fresh bits until ``|G_inv(u2) - G_inv(u1)| <= 2*epsilon``.

    The limit variate has CDF ``G`` restricted to ``[G_inv(u1), G_inv(u2)]``.
    ``u1`` and ``u2`` are converted to exact dyadics, so they must be finite
    binary floats (true of every quadtree projection).
    """
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if not 0.0 <= u1 < u2 <= 1.0:
        raise DomainError(f"need 0 <= u1 < u2 <= 1, got [{u1}, {u2}]")
    m1, k1 = to_dyadic(u1)
    m2, k2 = to_dyadic(u2)
    level = max(k1, k2)
    n1 = m1 << (level - k1)
    n2 = m2 << (level - k2)
    value, bits = _bisect_u(cdf, n1, n2, level, epsilon, source)
    return SampleResult(value, epsilon, Telemetry(bisection_bits=bits))


def bisect_uniform_box(
    box: Sequence[Tuple[float, float]], epsilon: float, source: BitSource
) -> Tuple[float, ...]:
    """Point within ``epsilon`` (sup-norm) of a uniform variate on ``box``.

    Axes are processed in order, axis 0 first. Each axis is halved until its
    width is at most ``2*epsilon``, consuming ``max(0, ceil(log2(w / 2eps)))``
    bits for width ``w``.
    """
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if len(box) == 0:
        raise DomainError("empty box")
    point = []
    for lo, hi in box:
        if not lo <= hi:
            raise DomainError(f"empty interval [{lo}, {hi}]")
        steps = 0
        while hi - lo > 2.0 * epsilon:
            mid = 0.5 * (lo + hi)
            if source.next_bit():
                lo = mid
            else:
                hi = mid
            steps += 1
            if steps > BISECTION_DEPTH_CAP:
                raise ProbabilityZeroEvent("box bisection did not terminate")
        point.append(0.5 * (lo + hi))
    return tuple(point)


def uniform_bits(length: float, epsilon: float) -> int:
    """Deterministic bit count of bisection on a uniform interval of ``length``."""
    bits = 0
    while length > 2.0 * epsilon:
        length *= 0.5
        bits += 1
    return bits


def _exp2_trunc(b: float = 8.0) -> CdfSpec:
    mass = -math.expm1(-2.0 * b)
    return CdfSpec(
        0.0,
        b,
        lambda x: -math.expm1(-2.0 * x) / mass,
        lambda u: -0.5 * math.log1p(-u * mass),
        name="exp2-trunc",
    )


CDF_REGISTRY = {
    "uniform": lambda: CdfSpec(0.0, 1.0, lambda x: x, lambda u: u, name="uniform"),
    "linear": lambda: CdfSpec(0.0, 1.0, lambda x: x * x, math.sqrt, name="linear"),
    "quadratic": lambda: CdfSpec(0.0, 1.0, lambda x: x**3, lambda u: u ** (1.0 / 3.0), name="quadratic"),
    "exp2-trunc": _exp2_trunc,
}


def get_cdf(name: str) -> CdfSpec:
    try:
        return CDF_REGISTRY[name]()
    except KeyError:
        raise ValidationError(
            f"unknown CDF {name!r}; choose from {', '.join(sorted(CDF_REGISTRY))}"
        ) from None
