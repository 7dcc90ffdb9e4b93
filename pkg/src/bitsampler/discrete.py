"""Discrete sampling in the random bit model.

* :func:`ky_sample` walks a Knuth-Yao discrete distribution generating (DDG)
  tree built from the binary expansions of the probabilities.
* :func:`decide_leq` decides ``U <= t`` for a lazily generated uniform ``U``
  by comparing bits until they first differ (two expected bits).
* :func:`discrete_reject_sample` is rejection from ``q`` to ``p`` built on
  the two primitives above.

Probabilities are held as exact :class:`fractions.Fraction` values. Float
input is truncated to 52 fractional bits; the truncated mass is given to the
last outcome so the vector stays exactly normalized.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import cached_property
from typing import Callable, Dict, List, Sequence, Union

from .bitstream import BitSource
from .errors import ProbabilityZeroEvent, ValidationError

Number = Union[int, float, Fraction]

FLOAT_BITS = 52
COMPARATOR_DEPTH_CAP = 128
DDG_DEPTH_CAP = 4096


def _is_exact(v) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


def binary_digit(t: Fraction, j: int) -> int:
    """The j-th bit (j >= 1) after the binary point of ``t`` in [0, 1]; 1 = 0.111..."""
    if t >= 1:
        return 1
    return (t.numerator << j) // t.denominator & 1


def binary_digits(t: Number) -> Callable[[int], int]:
    """Bit accessor for the binary expansion of ``t`` in [0, 1]."""
    t = Fraction(t)
    if not 0 <= t <= 1:
        raise ValidationError(f"threshold must lie in [0, 1], got {t}")
    return lambda j: binary_digit(t, j)


class ProbVector:
    """A finite probability vector with exact binary-expansion access."""

    def __init__(self, probs: Sequence[Number]) -> None:
        if len(probs) == 0:
            raise ValidationError("empty probability vector")
        if any(p < 0 or p > 1 for p in probs):
            raise ValidationError("probabilities must lie in [0, 1]")
        if all(_is_exact(p) for p in probs):
            values = [Fraction(p) for p in probs]
            if sum(values) != 1:
                raise ValidationError(f"probabilities sum to {sum(values)}, not 1")
            self.exact = True
        else:
            total = math.fsum(float(p) for p in probs)
            if abs(total - 1.0) > 2.0**-FLOAT_BITS * len(probs):
                raise ValidationError(f"probabilities sum to {total!r}, not 1")
            scale = 1 << FLOAT_BITS
            values = [Fraction(math.floor(Fraction(p) * scale), scale) for p in probs[:-1]]
            last = 1 - sum(values)
            if last < 0:
                raise ValidationError("probabilities exceed 1 after truncation")
            values.append(last)
            self.exact = False
        self.probs: List[Fraction] = values

    def __len__(self) -> int:
        return len(self.probs)

    def bit(self, i: int, j: int) -> int:
        return binary_digit(self.probs[i], j) if self.probs[i] < 1 else 0

    @property
    def dyadic(self) -> bool:
        return all(p.denominator & (p.denominator - 1) == 0 for p in self.probs)

    @cached_property
    def tree(self) -> "DdgTree":
        return DdgTree(self)

    def entropy(self) -> float:
        return -math.fsum(float(p) * math.log2(p) for p in self.probs if p > 0)

    def __repr__(self) -> str:
        return f"ProbVector({[str(p) for p in self.probs]})"


class DdgTree:
    """Leaf labels of the Knuth-Yao tree, one list per depth, built lazily.

    At depth j the outcomes with bit j set are listed in increasing index order.
    """

    def __init__(self, p: ProbVector) -> None:
        self.p = p
        self._levels: Dict[int, List[int]] = {}
        self.certain = next((i for i, v in enumerate(p.probs) if v == 1), None)

    def level(self, j: int) -> List[int]:
        leaves = self._levels.get(j)
        if leaves is None:
            leaves = self._levels[j] = [i for i in range(len(self.p)) if self.p.bit(i, j)]
        return leaves

    def max_depth(self) -> int:
        """Deepest level carrying a leaf (dyadic vectors only)."""
        if not self.p.dyadic:
            raise ValidationError("non-dyadic vectors have infinite DDG trees")
        return max((p.denominator.bit_length() - 1 for p in self.p.probs if p > 0), default=0)

    def kraft_sum(self) -> Fraction:
        if self.certain is not None:
            return Fraction(1)  # the root itself is the only leaf
        return sum(
            (Fraction(len(self.level(j)), 1 << j) for j in range(1, self.max_depth() + 1)),
            Fraction(0),
        )


def ddg_tree(p: ProbVector) -> DdgTree:
    return p.tree


def ky_sample(p: ProbVector, source: BitSource) -> int:
    """Outcome index with probability exactly ``p[i]``; E[bits] <= entropy + 2."""
    tree = ddg_tree(p)
    if tree.certain is not None:
        return tree.certain
    node = 0
    for j in range(1, DDG_DEPTH_CAP + 1):
        node = 2 * node + source.next_bit()
        leaves = tree.level(j)
        if node < len(leaves):
            return leaves[node]
        node -= len(leaves)
    raise ProbabilityZeroEvent(f"DDG walk exceeded depth {DDG_DEPTH_CAP}")


def decide_leq(threshold_bits: Callable[[int], int], source: BitSource) -> bool:
    """Decide ``U <= t`` for a fresh uniform ``U``, halting at the first differing bit."""
    for j in range(1, COMPARATOR_DEPTH_CAP + 1):
        u = source.next_bit()
        t = threshold_bits(j)
        if u != t:
            return u < t
    raise ProbabilityZeroEvent(f"comparator agreed on {COMPARATOR_DEPTH_CAP} bits")


class DiscreteRejection:
    """Rejection sampler from proposal ``q`` to target ``p`` with constant ``C``."""

    def __init__(self, p: ProbVector, q: ProbVector, C: Number) -> None:
        if len(p) != len(q):
            raise ValidationError("p and q must have the same length")
        C = Fraction(C)
        for i, (pi, qi) in enumerate(zip(p.probs, q.probs)):
            if pi > C * qi:
                raise ValidationError(f"p[{i}] = {pi} exceeds C * q[{i}] = {C * qi}")
        self.p, self.q, self.C = p, q, C
        # accept outcome i with probability p_i / (C q_i)
        self._thresholds = [
            binary_digits(pi / (C * qi)) if qi > 0 else None for pi, qi in zip(p.probs, q.probs)
        ]

    def sample(self, source: BitSource) -> int:
        while True:
            x = ky_sample(self.q, source)
            if decide_leq(self._thresholds[x], source):
                return x


def discrete_reject_sample(p: ProbVector, q: ProbVector, C: Number, source: BitSource) -> int:
    return DiscreteRejection(p, q, C).sample(source)
