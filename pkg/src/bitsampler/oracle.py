"""Densities paired with a sup/inf rectangle oracle.

A rectangle is a sequence of closed ``(lo, hi)`` intervals, one per axis.
``bounds(rect)`` returns the exact infimum and supremum of the density over
that rectangle; a degenerate rectangle reduces to point evaluation.

Built-ins carry closed-form bounds (endpoint evaluation for monotone pieces,
vertex or critical-point evaluation otherwise). All values are 64-bit floats
and no tolerance is injected anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .bisection import CdfSpec
from .errors import DomainError, ValidationError

Rect = Sequence[Tuple[float, float]]


@dataclass(frozen=True)
class OracleBounds:
    inf_f: float
    sup_f: float

    def __iter__(self):
        yield self.inf_f
        yield self.sup_f


class DensitySpec:
    """A density on a box together with its sup/inf oracle.

    ``eval_fn`` takes a tuple of coordinates; ``bounds_fn`` takes a rectangle
    and returns ``(inf, sup)``. ``monotone_axis`` names an axis along which the
    density is monotone, if any.
    """

    def __init__(
        self,
        name: str,
        dimension: int,
        eval_fn: Callable[[Tuple[float, ...]], float],
        bounds_fn: Callable[[Rect], Tuple[float, float]],
        support: Optional[Rect] = None,
        monotone_axis: Optional[int] = None,
    ) -> None:
        if dimension < 1:
            raise DomainError("dimension must be positive")
        self.name = name
        self.dimension = dimension
        self.support = tuple(support) if support is not None else ((0.0, 1.0),) * dimension
        if len(self.support) != dimension:
            raise DomainError("support must have one interval per dimension")
        self._eval = eval_fn
        self._bounds = bounds_fn
        self.monotone_axis = monotone_axis

    def eval(self, x) -> float:
        if not isinstance(x, tuple):
            x = tuple(x) if isinstance(x, (list,)) else (float(x),)
        return self._eval(x)

    def _check_rect(self, rect: Rect) -> None:
        if len(rect) != self.dimension:
            raise DomainError(f"rectangle has {len(rect)} axes, density has {self.dimension}")
        for (lo, hi), (s_lo, s_hi) in zip(rect, self.support):
            if not (s_lo <= lo <= hi <= s_hi):
                raise DomainError(f"rectangle axis [{lo}, {hi}] not inside support [{s_lo}, {s_hi}]")

    def bounds(self, rect: Rect) -> OracleBounds:
        self._check_rect(rect)
        return OracleBounds(*self._bounds(rect))

    def raw_bounds(self, rect: Rect) -> Tuple[float, float]:
        """Unchecked oracle call used by the quadtree hot loop."""
        return self._bounds(rect)

    @cached_property
    def sup_global(self) -> float:
        c = self._bounds(self.support)[1]
        if not math.isfinite(c):
            raise ValidationError(f"density {self.name!r} is unbounded")
        return c

    @property
    def monotone(self) -> bool:
        return self.monotone_axis is not None

    def __repr__(self) -> str:
        return f"DensitySpec({self.name!r}, d={self.dimension})"


class RatioDensitySpec:
    """Target ``f`` with envelope ``g`` (CDF ``G``) and an oracle for ``f/g``.

    ``ratio_bounds(x1, x2)`` returns inf and sup of ``f/g`` over ``[x1, x2]``.
    ``target_cdf`` and ``target_pdf`` describe ``f`` itself; they are only used
    for verification (entropy and KS checks), never by the sampler.
    """

    def __init__(
        self,
        name: str,
        ratio_eval: Callable[[float], float],
        ratio_bounds: Callable[[float, float], Tuple[float, float]],
        cdf: CdfSpec,
        target_cdf: Optional[Callable[[float], float]] = None,
        target_pdf: Optional[Callable[[float], float]] = None,
        monotone: bool = False,
    ) -> None:
        self.name = name
        self.ratio_eval = ratio_eval
        self._ratio_bounds = ratio_bounds
        self.cdf = cdf
        self.target_cdf = target_cdf
        self.target_pdf = target_pdf
        self.monotone = monotone
        self.dimension = 1

    def ratio_bounds(self, x1: float, x2: float) -> OracleBounds:
        if not (self.cdf.a <= x1 <= x2 <= self.cdf.b):
            raise DomainError(f"[{x1}, {x2}] not inside envelope support")
        return OracleBounds(*self._ratio_bounds(x1, x2))

    @cached_property
    def C(self) -> float:
        c = self._ratio_bounds(self.cdf.a, self.cdf.b)[1]
        if not math.isfinite(c):
            raise ValidationError(f"f/g is unbounded for {self.name!r}")
        return c

    def tilde_eval(self, u: float) -> float:
        return self.ratio_eval(self.cdf.G_inv(u))

    def _tilde_raw(self, u1: float, u2: float) -> Tuple[float, float]:
        return self._ratio_bounds(self.cdf.G_inv(u1), self.cdf.G_inv(u2))

    @cached_property
    def tilde(self) -> DensitySpec:
        return self.tilde_density()

    def tilde_density(self) -> DensitySpec:
        """The transported ratio as a density on ``[0, 1]``."""
        return DensitySpec(
            f"tilde({self.name})",
            1,
            lambda u: self.tilde_eval(u[0]),
            lambda rect: self._tilde_raw(rect[0][0], rect[0][1]),
            monotone_axis=0 if self.monotone else None,
        )

    def __repr__(self) -> str:
        return f"RatioDensitySpec({self.name!r}, C={self.C})"


def tilde_bounds(spec: RatioDensitySpec, u1: float, u2: float) -> OracleBounds:
    """Bounds of the transported ratio over ``[u1, u2]`` via the x-space oracle."""
    if not 0.0 <= u1 < u2 <= 1.0:
        raise DomainError(f"need 0 <= u1 < u2 <= 1, got [{u1}, {u2}]")
    return OracleBounds(*spec._tilde_raw(u1, u2))


def bounds(density: DensitySpec, rect: Rect) -> OracleBounds:
    return density.bounds(rect)


# --- built-in densities -----------------------------------------------------


def _const_bounds(rect):
    return 1.0, 1.0


def uniform_density(d: int = 1) -> DensitySpec:
    return DensitySpec(
        "uniform" if d == 1 else f"uniform{d}d",
        d,
        lambda x: 1.0,
        _const_bounds,
        monotone_axis=0,
    )


def linear_density() -> DensitySpec:
    return DensitySpec(
        "linear",
        1,
        lambda x: 2.0 * x[0],
        lambda r: (2.0 * r[0][0], 2.0 * r[0][1]),
        monotone_axis=0,
    )


def quadratic_density() -> DensitySpec:
    return DensitySpec(
        "quadratic",
        1,
        lambda x: 3.0 * x[0] * x[0],
        lambda r: (3.0 * r[0][0] * r[0][0], 3.0 * r[0][1] * r[0][1]),
        monotone_axis=0,
    )


def _pyramid(x: float) -> float:
    return 2.0 - 4.0 * abs(x - 0.5)


def _pyramid_bounds(r):
    lo, hi = r[0]
    f_lo, f_hi = _pyramid(lo), _pyramid(hi)
    sup = 2.0 if lo <= 0.5 <= hi else max(f_lo, f_hi)
    return min(f_lo, f_hi), sup


def pyramid_density() -> DensitySpec:
    return DensitySpec("pyramid", 1, lambda x: _pyramid(x[0]), _pyramid_bounds)


def product_linear2d_density() -> DensitySpec:
    return DensitySpec(
        "product-linear2d",
        2,
        lambda x: 4.0 * x[0] * x[1],
        lambda r: (4.0 * r[0][0] * r[1][0], 4.0 * r[0][1] * r[1][1]),
        monotone_axis=0,
    )


def exp2_over_exp() -> RatioDensitySpec:
    """f(x) = 2 exp(-2x) with envelope g(x) = exp(-x) on [0, inf)."""
    cdf = CdfSpec(0.0, math.inf, lambda x: -math.expm1(-x), lambda u: -math.log1p(-u), name="exp")
    return RatioDensitySpec(
        "exp2-over-exp",
        lambda x: 2.0 * math.exp(-x),
        lambda x1, x2: (2.0 * math.exp(-x2), 2.0 * math.exp(-x1)),
        cdf,
        target_cdf=lambda x: -math.expm1(-2.0 * x),
        target_pdf=lambda x: 2.0 * math.exp(-2.0 * x),
        monotone=True,
    )


# --- Cantor-like pathology --------------------------------------------------

# Beyond this construction depth a point query is treated as lying in the set.
_CANTOR_POINT_DEPTH = 64


def _check_delta(delta: float) -> None:
    if not (0.0 <= delta < 1.0 / 3.0):
        raise DomainError(f"delta must lie in [0, 1/3), got {delta}")


def lambda_cantor(delta: float) -> float:
    """Lebesgue measure ``(1 - 3 delta) / (1 - 2 delta)`` of the Cantor-like set."""
    _check_delta(delta)
    d = Fraction(delta)
    return float((1 - 3 * d) / (1 - 2 * d))


class CantorSet:
    """The set left after removing middle open intervals of length ``delta**j`` at step j.

    Piece lengths per construction level are memoized; interval queries descend
    only as deep as needed to resolve the query exactly.
    """

    def __init__(self, delta: float) -> None:
        _check_delta(delta)
        self.delta = delta
        self._lengths: List[float] = [1.0]
        self._memo: Dict[Tuple[float, float], bool] = {}

    def piece_length(self, j: int) -> float:
        while len(self._lengths) <= j:
            k = len(self._lengths)
            self._lengths.append(0.5 * (self._lengths[-1] - self.delta**k))
        return self._lengths[j]

    def intervals(self, j: int) -> List[Tuple[float, float]]:
        """Explicit list of the 2**j closed pieces at construction level j."""
        pieces = [(0.0, 1.0)]
        for level in range(1, j + 1):
            c = self.piece_length(level)
            pieces = [p for lo, hi in pieces for p in ((lo, lo + c), (hi - c, hi))]
        return pieces

    def intersects(self, a: float, b: float) -> bool:
        """Whether the closed interval ``[a, b]`` meets the set."""
        key = (a, b)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._memo[key] = self._intersects(a, b)
        return hit

    def _intersects(self, a: float, b: float) -> bool:
        lo, hi, j = 0.0, 1.0, 0
        while True:
            if b < lo or a > hi:
                return False
            # piece endpoints belong to the set at every level
            if a <= lo or b >= hi:
                return True
            if j >= _CANTOR_POINT_DEPTH:
                return True
            j += 1
            c = self.piece_length(j)
            left_end, right_start = lo + c, hi - c
            if a <= left_end and b >= right_start:
                return True
            if a <= left_end:
                hi = left_end
            elif b >= right_start:
                lo = right_start
            else:
                return False


def cantor_density(delta: float) -> DensitySpec:
    """Indicator of the Cantor-like set, normalized to integrate to one."""
    _check_delta(delta)
    if delta == 0.0:
        spec = uniform_density(1)
        spec.name = "cantor:0"
        return spec
    cset = CantorSet(delta)
    height = 1.0 / lambda_cantor(delta)

    def eval_fn(x):
        return height if cset.intersects(x[0], x[0]) else 0.0

    def bounds_fn(rect):
        lo, hi = rect[0]
        if lo == hi:
            v = eval_fn((lo,))
            return v, v
        # the set contains no interval, so any nondegenerate interval meets its complement
        return 0.0, height if cset.intersects(lo, hi) else 0.0

    spec = DensitySpec(f"cantor:{delta}", 1, eval_fn, bounds_fn)
    spec.cantor_set = cset
    return spec


# --- registry ----------------------------------------------------------------

DENSITY_REGISTRY: Dict[str, Callable[[], object]] = {
    "uniform": lambda: uniform_density(1),
    "linear": linear_density,
    "quadratic": quadratic_density,
    "pyramid": pyramid_density,
    "uniform2d": lambda: uniform_density(2),
    "product-linear2d": product_linear2d_density,
    "exp2-over-exp": exp2_over_exp,
}


def get_density(name: str):
    """Look up a registry name; ``cantor:<delta>`` is parsed on the fly."""
    if name.startswith("cantor:"):
        try:
            delta = float(name.split(":", 1)[1])
        except ValueError:
            raise ValidationError(f"bad cantor parameter in {name!r}") from None
        try:
            return cantor_density(delta)
        except DomainError as exc:
            raise ValidationError(str(exc)) from None
    try:
        return DENSITY_REGISTRY[name]()
    except KeyError:
        known = ", ".join(sorted(DENSITY_REGISTRY) + ["cantor:<delta>"])
        raise ValidationError(f"unknown density {name!r}; choose from {known}") from None
