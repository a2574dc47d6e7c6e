"""Deterministic, splittable random streams.

A :class:`Stream` is keyed by an integer path (seed, tag, indices...) and
offers two mechanisms:

* ``generator()`` returns a numpy ``Generator`` backed by the Philox
  counter-based bit generator, seeded from the path via ``SeedSequence``.
  Distinct paths give statistically independent streams, so per-trial and
  per-band substreams can be drawn in any order, on any number of workers,
  with identical results.
* ``uniforms_at(counters)`` is random access: the uniform at position ``i``
  of a splitmix64 sequence keyed by the path, without generating the
  positions in between.  Used where a draw must be a pure function of a
  structured address (one uniform per cell of a refinement tree), so that
  coupled resamplings at different retention probabilities see the same
  underlying variables.
"""

from __future__ import annotations

import numpy as np

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX_A = _U64(0xBF58476D1CE4E5B9)
_MIX_B = _U64(0x94D049BB133111EB)
_KEY0 = _U64(0xD1B54A32D192ED03)
_INV53 = 1.0 / float(1 << 53)


def _mix64(x):
    # splitmix64 finalizer; elementwise on uint64 arrays
    x = (x ^ (x >> _U64(30))) * _MIX_A
    x = (x ^ (x >> _U64(27))) * _MIX_B
    return x ^ (x >> _U64(31))


class Stream:
    """A splittable random stream identified by a tuple of integers."""

    __slots__ = ("words",)

    def __init__(self, *words: int):
        self.words = tuple(int(w) & 0xFFFFFFFFFFFFFFFF for w in words)

    def child(self, *words: int) -> "Stream":
        """Derive a substream by extending the path."""
        return Stream(*self.words, *words)

    def generator(self) -> np.random.Generator:
        """Philox generator seeded from the full path."""
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.words)))

    def _key(self) -> np.uint64:
        with np.errstate(over="ignore"):
            k = _KEY0
            for w in self.words:
                k = _mix64((k ^ _U64(w)) + _GOLDEN)
        return k

    def uniforms_at(self, counters) -> np.ndarray:
        """Uniforms in [0, 1) at the given counter positions of this stream.

        Pure function of (path, counter): calling twice, in any order or
        grouping, returns identical values.
        """
        c = np.asarray(counters, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = self._key() + (c + _U64(1)) * _GOLDEN
            v = _mix64(z)
        return (v >> _U64(11)).astype(np.float64) * _INV53

    def __repr__(self) -> str:
        return f"Stream{self.words}"
