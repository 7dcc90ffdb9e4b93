"""Numeric verification: Riemann gaps, entropies, and empirical-vs-bound reports."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .bitstream import SeededBitSource
from .errors import DomainError, FeasibilityError, NonRiemannSuspected
from .oracle import DensitySpec, RatioDensitySpec, get_density
from .rejection import DEFAULT_DEPTH_CAP, sample_compact, sample_general

MAX_GRID_CELLS = 1 << 22
REPLICA_SIZE = 2048
QUAD_TOL = 1e-6


class NonConvergenceWarning(UserWarning):
    """The Riemann gap has not fallen below the tail tolerance."""


@dataclass(frozen=True)
class GridStats:
    k: int
    I_plus: float
    I_minus: float

    @property
    def gap(self) -> float:
        return self.I_plus - self.I_minus


@dataclass
class BoundReport:
    """One empirical mean checked against a theoretical value.

    For upper bounds ``satisfied`` means ``empirical_mean <= theoretical + 3*stderr``.
    Rows flagged ``lower=True`` (the universal lower bound) flip the test.
    """

    bound_name: str
    theoretical: float
    empirical_mean: float
    empirical_stderr: float
    satisfied: bool = field(init=False)
    lower: bool = False

    def __post_init__(self) -> None:
        slack = 3.0 * self.empirical_stderr
        if self.lower:
            self.satisfied = bool(self.empirical_mean >= self.theoretical - slack)
        else:
            self.satisfied = bool(self.empirical_mean <= self.theoretical + slack)


def log2_plus(x: float) -> float:
    return max(0.0, math.log2(x)) if x > 0 else 0.0


# --- Riemann sums ------------------------------------------------------------


def riemann_gap(density: DensitySpec, k: int) -> GridStats:
    """Upper and lower Riemann sums on the regular grid of ``2**(d*k)`` cells."""
    if k < 0:
        raise DomainError("k must be nonnegative")
    d = density.dimension
    cells = 1 << (d * k)
    if cells > MAX_GRID_CELLS:
        raise FeasibilityError(f"{cells} cells at k={k}, d={d} exceeds {MAX_GRID_CELLS}")
    edges = [(math.ldexp(i, -k), math.ldexp(i + 1, -k)) for i in range(1 << k)]
    sups, infs = [], []
    for rect in product(edges, repeat=d):
        lo, hi = density.raw_bounds(rect)
        infs.append(lo)
        sups.append(hi)
    measure = math.ldexp(1.0, -d * k)
    return GridStats(k, math.fsum(sups) * measure, math.fsum(infs) * measure)


def a_of_f(density: DensitySpec, k_max: int, tail_tol: float = 1e-3) -> float:
    """Partial sum of Riemann gaps for k = 0..k_max (a lower estimate of the full series).

    Emits :class:`NonConvergenceWarning` when the last gap exceeds ``tail_tol``.
    """
    gaps = [riemann_gap(density, k).gap for k in range(k_max + 1)]
    if gaps[-1] > tail_tol:
        warnings.warn(
            f"Riemann gap {gaps[-1]:.4g} at k={k_max} exceeds {tail_tol}; series may diverge",
            NonConvergenceWarning,
            stacklevel=2,
        )
    return math.fsum(gaps)


# --- entropies -----------------------------------------------------------------


def discretized_entropy(
    cdf: Callable[[float], float], epsilon: float, lo: float, hi: float
) -> float:
    """Entropy in bits of the masses ``F(I_j)`` over the grid ``I_j = [2 eps j, 2 eps (j+1))``."""
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if cdf(hi) - cdf(lo) < 1.0 - 1e-9:
        raise DomainError(f"range [{lo}, {hi}] truncates more than 1e-9 of the mass")
    width = 2.0 * epsilon
    j_lo = math.floor(lo / width)
    j_hi = math.ceil(hi / width)
    F = np.array([cdf(j * width) for j in range(j_lo, j_hi + 1)])
    mass = np.diff(F)
    mass = mass[mass > 0]
    return float(-np.sum(mass * np.log2(mass)))


def _neg_f_log2_f(v: float) -> float:
    return -v * math.log2(v) if v > 0 else 0.0


def differential_entropy(target: Union[DensitySpec, RatioDensitySpec]) -> float:
    """Differential entropy in bits, by adaptive quadrature."""
    if isinstance(target, RatioDensitySpec):
        if target.target_pdf is None:
            raise DomainError(f"{target.name!r} carries no target density")
        pdf = target.target_pdf
        val, _ = integrate.quad(
            lambda x: _neg_f_log2_f(pdf(x)), target.cdf.a, target.cdf.b, epsabs=QUAD_TOL, limit=200
        )
        return val
    if target.dimension == 1:
        (a, b), = target.support
        val, _ = integrate.quad(
            lambda x: _neg_f_log2_f(target.eval((x,))), a, b, epsabs=QUAD_TOL, points=[0.5], limit=200
        )
        return val
    if target.dimension == 2:
        (a1, b1), (a2, b2) = target.support
        val, _ = integrate.dblquad(
            lambda y, x: _neg_f_log2_f(target.eval((x, y))), a1, b1, a2, b2, epsabs=QUAD_TOL
        )
        return val
    raise DomainError("quadrature entropy supports d <= 2")


def ky_lower_bound(differential_entropy: float, d: int, epsilon: float) -> float:
    """Universal lower bound on expected bits for an epsilon-approximation."""
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    return differential_entropy + d * math.log2(1.0 / epsilon) - d


# --- experiments -------------------------------------------------------------


@dataclass
class ExperimentConfig:
    density: str
    epsilons: Sequence[float]
    n: int
    seed: int = 0
    depth_cap: int = DEFAULT_DEPTH_CAP
    jobs: int = 1
    k_max: Optional[int] = None


_FIELDS = ("decision_bits", "bisection_bits", "oracle_calls", "trials")


def _run_replica(args) -> Dict[str, list]:
    name, epsilon, n, seed, depth_cap = args
    target = get_density(name)
    sampler = sample_general if isinstance(target, RatioDensitySpec) else sample_compact
    source = SeededBitSource(seed % (1 << 64))
    out: Dict[str, list] = {f: [] for f in _FIELDS}
    out["failures"] = 0
    for _ in range(n):
        try:
            tel = sampler(target, epsilon, source, depth_cap).telemetry
        except NonRiemannSuspected:
            out["failures"] += 1
            continue
        out["decision_bits"].append(tel.decision_bits)
        out["bisection_bits"].append(tel.bisection_bits)
        out["oracle_calls"].append(tel.oracle_calls)
        out["trials"].append(tel.trials)
    return out


def collect_telemetry(
    name: str, epsilon: float, n: int, seed: int, depth_cap: int = DEFAULT_DEPTH_CAP, jobs: int = 1
) -> Dict[str, np.ndarray]:
    """Run ``n`` samples split into fixed replicas seeded ``seed + replica_index``.

    The replica split does not depend on ``jobs``, so results are identical
    for any degree of parallelism.
    """
    tasks = []
    for r, start in enumerate(range(0, n, REPLICA_SIZE)):
        tasks.append((name, epsilon, min(REPLICA_SIZE, n - start), seed + r, depth_cap))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_replica, tasks))
    else:
        parts = [_run_replica(t) for t in tasks]
    merged = {f: np.array([v for p in parts for v in p[f]], dtype=float) for f in _FIELDS}
    merged["failures"] = sum(p["failures"] for p in parts)
    merged["attempts"] = n
    return merged


def _mean_se(x: np.ndarray):
    if len(x) == 0:
        return math.nan, math.nan
    se = float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    return float(np.mean(x)), se


def _ratio_mean_se(num: np.ndarray, den: np.ndarray):
    r = float(num.sum() / den.sum())
    resid = num - r * den
    se = float(np.std(resid, ddof=1) / (den.mean() * math.sqrt(len(num)))) if len(num) > 1 else 0.0
    return r, se


def _default_k_max(d: int) -> int:
    return 14 if d == 1 else 9


def run_experiment(config: ExperimentConfig) -> List[BoundReport]:
    """Sample at every epsilon and compare telemetry with each applicable bound.

    Row names carry the epsilon as a suffix, e.g. ``bisection_phase@0.0009765625``.
    A density that trips the depth cap yields a failed ``halting`` row and no others.
    """
    target = get_density(config.density)
    general = isinstance(target, RatioDensitySpec)
    quad_density = target.tilde if general else target
    d = target.dimension
    C = target.C if general else target.sup_global
    k_max = config.k_max if config.k_max is not None else _default_k_max(quad_density.dimension)
    area = None
    entropy = None
    reports: List[BoundReport] = []
    for eps in config.epsilons:
        tag = f"@{eps!r}"
        data = collect_telemetry(config.density, eps, config.n, config.seed, config.depth_cap, config.jobs)
        fail_frac = data["failures"] / data["attempts"]
        reports.append(BoundReport("halting" + tag, 0.0, fail_frac, 0.0))
        if data["failures"]:
            continue
        if area is None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NonConvergenceWarning)
                area = a_of_f(quad_density, k_max)
            entropy = differential_entropy(target)
        dec, bis = data["decision_bits"], data["bisection_bits"]
        calls, trials = data["oracle_calls"], data["trials"]
        total = dec + bis
        lg = log2_plus(1.0 / eps)
        lg_half = log2_plus(1.0 / (2.0 * eps))

        m, se = _mean_se(bis)
        if general:
            F = target.target_cdf
            hi = -0.5 * math.log(1e-12)
            reports.append(
                BoundReport("entropy_bisection" + tag, 3.0 + discretized_entropy(F, eps, 0.0, hi), m, se)
            )
        else:
            reports.append(BoundReport("bisection_phase" + tag, 3.0 + d * lg, m, se))
            reports.append(BoundReport("bisection_phase_half" + tag, 3.0 + d * lg_half, m, se))

        r, rse = _ratio_mean_se(calls, trials)
        m_calls, se_calls = _mean_se(calls)
        m_tot, se_tot = _mean_se(total)
        if quad_density.monotone:
            reports.append(BoundReport("iterations_per_trial" + tag, 4.0, r, rse))
            reports.append(BoundReport("oracle_calls_monotone" + tag, 4.0 * C, m_calls, se_calls))
            reports.append(
                BoundReport("total_bits_monotone" + tag, 4.0 * C * (d + 1) + 3.0 + d * lg, m_tot, se_tot)
            )
        reports.append(BoundReport("oracle_calls_general" + tag, 4.0 * C + area, m_calls, se_calls))
        reports.append(
            BoundReport(
                "total_bits_general" + tag,
                4.0 * C * (d + 1) + (d + 1) * area + 3.0 + d * lg,
                m_tot,
                se_tot,
            )
        )
        if general:
            m_dec, se_dec = _mean_se(dec)
            reports.append(BoundReport("decision_bits_delta" + tag, 2.0 * (4.0 * C + area), m_dec, se_dec))
        reports.append(
            BoundReport("universal_lower_bound" + tag, ky_lower_bound(entropy, d, eps), m_tot, se_tot, lower=True)
        )
    return reports


def bits_slope(epsilons: Sequence[float], mean_bits: Sequence[float]) -> float:
    """Least-squares slope of mean bits against log2(1/epsilon)."""
    x = np.log2(1.0 / np.asarray(epsilons, dtype=float))
    slope, _ = np.polyfit(x, np.asarray(mean_bits, dtype=float), 1)
    return float(slope)
