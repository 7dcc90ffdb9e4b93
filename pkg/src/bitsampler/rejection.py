"""Quadtree rejection sampling driven by the sup/inf oracle.

The decision phase walks a regular quadtree over ``[0,1]^d x [0,C]``. At each
node the oracle is asked for inf and sup of the density over the spatial
projection of the current box; the box is accepted when it lies entirely
under the graph (``inf >= y_hi``), rejected when it lies entirely above
(``sup <= y_lo``), and otherwise split into one of its ``2**(d+1)`` children
chosen with ``d+1`` fresh bits. Rejection restarts from the root with a fresh
walk. An accepted box is turned into an epsilon-approximate point by
bisection.

:func:`sample_compact` handles densities on the unit cube,
:func:`sample_general` densities on the line via an envelope CDF ``G``, and
:func:`naive_sample_broken` is the tempting but wrong shortcut kept for
demonstrations.
"""

from __future__ import annotations

import enum
import math
from typing import List, Optional, Sequence, Tuple

from .bisection import (
    SampleResult,
    Telemetry,
    bisect_uniform_box,
    inversion_bisect,
    uniform_bits,
)
from .bitstream import BitSource
from .discrete import binary_digits, decide_leq
from .errors import DomainError, NaiveLoopForever, NonRiemannSuspected, ValidationError
from .oracle import DensitySpec, RatioDensitySpec

DEFAULT_DEPTH_CAP = 64
NAIVE_LOOP_CAP = 10**6


class Decision(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    UNDECIDED = "undecided"


class RectBox:
    """A level-k quadtree box: dyadic spatial intervals plus a scaled y-interval.

    Axis i covers ``[xs[i] / 2**k, (xs[i] + 1) / 2**k]``; the y-axis covers
    ``[C * ny / 2**k, C * (ny + 1) / 2**k]``.
    """

    __slots__ = ("level", "xs", "ny", "scale")

    def __init__(self, level: int, xs: Tuple[int, ...], ny: int, scale: float) -> None:
        self.level = level
        self.xs = xs
        self.ny = ny
        self.scale = scale

    @classmethod
    def root(cls, d: int, scale: float) -> "RectBox":
        return cls(0, (0,) * d, 0, scale)

    @property
    def dimension(self) -> int:
        return len(self.xs)

    def projection(self) -> Tuple[Tuple[float, float], ...]:
        k = self.level
        return tuple((math.ldexp(n, -k), math.ldexp(n + 1, -k)) for n in self.xs)

    def y_range(self) -> Tuple[float, float]:
        k = self.level
        return self.scale * math.ldexp(self.ny, -k), self.scale * math.ldexp(self.ny + 1, -k)

    @property
    def volume(self) -> float:
        return self.scale * math.ldexp(1.0, -(self.dimension + 1) * self.level)

    def child(self, bits: Sequence[int]) -> "RectBox":
        """Child quadrant; ``bits[i]`` selects the upper half of axis i, the last bit the y-axis."""
        xs = tuple(2 * n + b for n, b in zip(self.xs, bits))
        return RectBox(self.level + 1, xs, 2 * self.ny + bits[-1], self.scale)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RectBox)
            and (self.level, self.xs, self.ny, self.scale)
            == (other.level, other.xs, other.ny, other.scale)
        )

    def __hash__(self) -> int:
        return hash((self.level, self.xs, self.ny, self.scale))

    def __repr__(self) -> str:
        return f"RectBox(k={self.level}, x={self.projection()}, y={self.y_range()})"


def quadtree_step(
    rect: RectBox, density: DensitySpec, source: BitSource
) -> Tuple[Decision, RectBox]:
    """One oracle call on ``rect``; on indecision descend into a random child."""
    f_lo, f_hi = density.raw_bounds(rect.projection())
    y_lo, y_hi = rect.y_range()
    # Accept is tested first so that boundary ties decide instead of splitting
    if f_lo >= y_hi:
        return Decision.ACCEPT, rect
    if f_hi <= y_lo:
        return Decision.REJECT, rect
    return Decision.UNDECIDED, rect.child(source.next_bits(rect.dimension + 1))


def _check_unit_cube(density: DensitySpec) -> None:
    if any(s != (0.0, 1.0) for s in density.support):
        raise DomainError(f"{density.name!r} is not supported on the unit cube")


def _decision_phase(
    density: DensitySpec, C: float, source: BitSource, depth_cap: int, tel: Telemetry
) -> RectBox:
    d = density.dimension
    root = RectBox.root(d, C)
    while True:
        rect, depth = root, 0
        while True:
            if depth > depth_cap:
                raise NonRiemannSuspected(depth_cap, tel.restarts)
            tel.oracle_calls += 1
            decision, nxt = quadtree_step(rect, density, source)
            if decision is Decision.ACCEPT:
                tel.quadtree_depth_last = depth
                return rect
            if decision is Decision.REJECT:
                break
            rect = nxt
            depth += 1
            tel.quadtree_steps += 1
            tel.decision_bits += d + 1
        tel.restarts += 1


def _check_args(epsilon: float, depth_cap: int) -> None:
    if not epsilon > 0 or math.isnan(epsilon):
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if depth_cap < 0:
        raise DomainError(f"depth_cap must be nonnegative, got {depth_cap}")


def sample_compact(
    density: DensitySpec,
    epsilon: float,
    source: BitSource,
    depth_cap: int = DEFAULT_DEPTH_CAP,
) -> SampleResult:
    """Epsilon-approximate sample from a Riemann-integrable density on ``[0,1]^d``.

    Raises :class:`NonRiemannSuspected` if a walk reaches ``depth_cap``
    without a decision.
    """
    _check_args(epsilon, depth_cap)
    _check_unit_cube(density)
    C = density.sup_global
    if not C > 0:
        raise ValidationError(f"density {density.name!r} has zero supremum")
    tel = Telemetry()
    rect = _decision_phase(density, C, source, depth_cap, tel)
    start = source.consumed
    point = bisect_uniform_box(rect.projection(), epsilon, source)
    tel.bisection_bits = source.consumed - start
    value = point[0] if density.dimension == 1 else point
    return SampleResult(value, epsilon, tel)


def sample_general(
    spec: RatioDensitySpec,
    epsilon: float,
    source: BitSource,
    depth_cap: int = DEFAULT_DEPTH_CAP,
) -> SampleResult:
    """Epsilon-approximate sample from ``f`` on the line using the envelope CDF ``G``.

    The quadtree runs on ``u -> (f/g)(G_inv(u))`` over ``[0,1] x [0,C]``; an
    accepted projection ``[u1, u2]`` is finished by :func:`inversion_bisect`.
    """
    _check_args(epsilon, depth_cap)
    C = spec.C
    if not C > 0:
        raise ValidationError(f"ratio {spec.name!r} has zero supremum")
    tel = Telemetry()
    rect = _decision_phase(spec.tilde, C, source, depth_cap, tel)
    (u1, u2), = rect.projection()
    inner = inversion_bisect(spec.cdf, u1, u2, epsilon, source)
    tel.bisection_bits = inner.telemetry.bisection_bits
    return SampleResult(inner.value, epsilon, tel)


# --- the incorrect shortcut ------------------------------------------------


def naive_trial(density: DensitySpec, epsilon: float, source: BitSource, tel: Optional[Telemetry] = None):
    """One round of the naive loop: bisect first, then test ``U <= f(X_eps)/C``.

    Returns ``(x, accepted)``.
    """
    tel = tel if tel is not None else Telemetry()
    C = density.sup_global
    start = source.consumed
    x = bisect_uniform_box(density.support, epsilon, source)
    mid = source.consumed
    ratio = min(max(density.eval(x) / C, 0.0), 1.0)
    accepted = decide_leq(binary_digits(ratio), source)
    tel.bisection_bits += mid - start
    tel.decision_bits += source.consumed - mid
    return x, accepted


def naive_sample_broken(
    density: DensitySpec,
    epsilon: float,
    source: BitSource,
    max_iterations: int = NAIVE_LOOP_CAP,
) -> SampleResult:
    """DOCUMENTED INCORRECT. Bisection first, then accept with probability ``f(X_eps)/C``.

    The acceptance test only ever sees ``f`` on the finite grid of possible
    bisection outputs, so changing ``f`` on that grid changes the output law
    arbitrarily. Raises :class:`NaiveLoopForever` after ``max_iterations``.
    """
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    tel = Telemetry()
    for _ in range(max_iterations):
        x, accepted = naive_trial(density, epsilon, source, tel)
        if accepted:
            return SampleResult(x[0] if density.dimension == 1 else x, epsilon, tel)
        tel.restarts += 1
    raise NaiveLoopForever(max_iterations)


# --- densities that break the shortcut -------------------------------------


def grid_level(epsilon: float) -> int:
    """Bits per axis spent by bisection of [0, 1] at accuracy ``epsilon``."""
    return uniform_bits(1.0, epsilon)


def grid_points(epsilon: float) -> List[float]:
    """All values that bisection of [0, 1] at accuracy ``epsilon`` can return."""
    n = grid_level(epsilon)
    return [math.ldexp(2 * i + 1, -(n + 1)) for i in range(1 << n)]


def _grid_index(x: float, n: int) -> Optional[int]:
    scaled = math.ldexp(x, n + 1)
    if scaled == int(scaled) and int(scaled) % 2 == 1:
        return (int(scaled) - 1) // 2
    return None


def _grid_hit(lo: float, hi: float, n: int, stride: int) -> bool:
    """Whether ``[lo, hi]`` holds a grid point whose index is a multiple of ``stride``."""
    first = math.ceil((math.ldexp(lo, n + 1) - 1) / 2)
    last = math.floor((math.ldexp(hi, n + 1) - 1) / 2)
    first = max(first, 0)
    last = min(last, (1 << n) - 1)
    if first > last:
        return False
    first_hit = -(-first // stride) * stride
    return first_hit <= last


def grid_spiked_density(epsilon: float, stride: int = 1, height: float = 2.0) -> DensitySpec:
    """Uniform density raised to ``height`` on every ``stride``-th bisection grid point.

    The change touches finitely many points, so the integral and Riemann
    integrability are unaffected, yet every proposal landing on a spike is
    accepted by the naive loop.
    """
    if height < 1.0:
        raise DomainError("spike height must be at least the base density 1")
    n = grid_level(epsilon)

    def spiked(i):
        return i is not None and i % stride == 0

    def eval_fn(x):
        return height if spiked(_grid_index(x[0], n)) else 1.0

    def bounds_fn(rect):
        lo, hi = rect[0]
        if lo == hi:
            v = eval_fn((lo,))
            return v, v
        return 1.0, height if _grid_hit(lo, hi, n, stride) else 1.0

    spec = DensitySpec(f"grid-spiked:{epsilon}:{stride}", 1, eval_fn, bounds_fn)
    spec.is_spike = lambda x: spiked(_grid_index(x, n))
    return spec


def grid_zeroed_density(epsilon: float) -> DensitySpec:
    """Uniform density set to zero on the whole bisection grid."""
    n = grid_level(epsilon)

    def eval_fn(x):
        return 0.0 if _grid_index(x[0], n) is not None else 1.0

    def bounds_fn(rect):
        lo, hi = rect[0]
        if lo == hi:
            v = eval_fn((lo,))
            return v, v
        return (0.0 if _grid_hit(lo, hi, n, 1) else 1.0), 1.0

    return DensitySpec(f"grid-zeroed:{epsilon}", 1, eval_fn, bounds_fn)
