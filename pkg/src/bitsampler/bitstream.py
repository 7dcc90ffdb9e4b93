"""Fair-bit sources with exact consumption accounting.

Every sampler in the package draws its randomness exclusively through a
:class:`BitSource`. The ``consumed`` counter is the cost measure: the number
of fair bits handed out since creation or the last :meth:`BitSource.reset`.

A source is single-consumer. Create one per worker; never share one between
concurrently running samplers.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, List, Optional

import numpy as np

from .errors import DomainError, ReplayExhausted

_U64_MAX = 2**64 - 1
_CHUNK_BYTES = 512


class BitSource:
    """Abstract supplier of i.i.d. fair bits."""

    def __init__(self) -> None:
        self.consumed = 0

    def _draw(self) -> int:
        raise NotImplementedError

    def next_bit(self) -> int:
        bit = self._draw()
        self.consumed += 1
        return bit

    def next_bits(self, k: int) -> List[int]:
        return [self.next_bit() for _ in range(k)]

    def bits_used(self) -> int:
        return self.consumed

    def reset(self) -> None:
        """Zero the counter without touching the underlying stream."""
        self.consumed = 0


class SeededBitSource(BitSource):
    """Pseudorandom bits from numpy's PCG64, seeded with a 64-bit integer."""

    def __init__(self, seed: int) -> None:
        super().__init__()
        seed = int(seed)
        if not 0 <= seed <= _U64_MAX:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self._rng = np.random.Generator(np.random.PCG64(seed))
        self._buf: List[int] = []
        self._pos = 0

    def _refill(self) -> None:
        raw = np.frombuffer(self._rng.bytes(_CHUNK_BYTES), dtype=np.uint8)
        self._buf = np.unpackbits(raw).tolist()
        self._pos = 0

    def _draw(self) -> int:
        if self._pos >= len(self._buf):
            self._refill()
        bit = self._buf[self._pos]
        self._pos += 1
        return bit


class ReplayBitSource(BitSource):
    """Replays a fixed list of bits, then raises :class:`ReplayExhausted`."""

    def __init__(self, bits: Iterable[int]) -> None:
        super().__init__()
        self.bits = [int(b) for b in bits]
        if any(b not in (0, 1) for b in self.bits):
            raise DomainError("replay bits must be 0 or 1")
        self._pos = 0

    def _draw(self) -> int:
        if self._pos >= len(self.bits):
            raise ReplayExhausted(f"replay trace exhausted after {len(self.bits)} bits")
        bit = self.bits[self._pos]
        self._pos += 1
        return bit

    @property
    def remaining(self) -> int:
        return len(self.bits) - self._pos


class CountingBitSource(BitSource):
    """Decorator that counts (and optionally records) bits taken from ``inner``."""

    def __init__(self, inner: BitSource, record: bool = False) -> None:
        super().__init__()
        self.inner = inner
        self.trace: Optional[List[int]] = [] if record else None

    def _draw(self) -> int:
        bit = self.inner.next_bit()
        if self.trace is not None:
            self.trace.append(bit)
        return bit


def parse_trace(text: str) -> List[int]:
    """Parse a replay trace: ``0``/``1`` characters, whitespace ignored."""
    bits = []
    for ch in text:
        if ch.isspace():
            continue
        if ch not in "01":
            raise DomainError(f"invalid character {ch!r} in bit trace")
        bits.append(int(ch))
    return bits


def load_trace(path) -> ReplayBitSource:
    return ReplayBitSource(parse_trace(Path(path).read_text()))


def next_bit(source: BitSource) -> int:
    return source.next_bit()


def bits_used(source: BitSource) -> int:
    return source.bits_used()
