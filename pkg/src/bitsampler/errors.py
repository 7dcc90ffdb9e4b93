"""Exception hierarchy shared by every sampler."""


class BitSamplerError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(BitSamplerError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class ValidationError(BitSamplerError, ValueError):
    """Malformed input: unnormalized vectors, violated rejection constants, bad names."""


class ReplayExhausted(BitSamplerError):
    """A replay source ran out of recorded bits."""


class EnvelopeError(BitSamplerError):
    """Evaluating an inverse CDF failed or produced a non-number."""


class ProbabilityZeroEvent(BitSamplerError):
    """A loop ran past a failsafe that a fair bit source exceeds with probability ~0."""


class NonRiemannSuspected(BitSamplerError):
    """The quadtree walk hit its depth cap without reaching a decision.

    For Riemann-integrable densities this happens with vanishing probability,
    so hitting the cap points to a density whose sup/inf gap does not shrink.
    """

    def __init__(self, depth_cap, restarts=0):
        super().__init__(f"no decision within depth cap {depth_cap} (after {restarts} restarts)")
        self.depth_cap = depth_cap
        self.restarts = restarts


class NaiveLoopForever(BitSamplerError):
    """The naive rejection loop exceeded its iteration cap."""

    def __init__(self, iterations):
        super().__init__(f"naive rejection loop did not accept within {iterations} iterations")
        self.iterations = iterations


class FeasibilityError(BitSamplerError):
    """A grid computation would need more cells than allowed."""
