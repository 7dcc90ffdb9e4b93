"""Rejection sampling in the random bit model with a sup/inf rectangle oracle."""

from .bisection import CdfSpec, SampleResult, Telemetry, bisect_cdf, bisect_uniform_box, inversion_bisect
from .bitstream import BitSource, CountingBitSource, ReplayBitSource, SeededBitSource
from .discrete import ProbVector, decide_leq, discrete_reject_sample, ky_sample
from .errors import (
    BitSamplerError,
    DomainError,
    EnvelopeError,
    NaiveLoopForever,
    NonRiemannSuspected,
    ReplayExhausted,
    ValidationError,
)
from .oracle import (
    DensitySpec,
    OracleBounds,
    RatioDensitySpec,
    cantor_density,
    get_density,
    lambda_cantor,
    tilde_bounds,
)
from .rejection import naive_sample_broken, quadtree_step, sample_compact, sample_general

__version__ = "0.1.0"
