"""Counter-based random streams.

Built on the Philox bit generator, so a stream is fully determined by
(seed, stream_id, counter) and independent streams can be derived without
sharing any mutable state. The counter indexes widely separated blocks of
the keyed sequence, which makes fan-out (e.g. one sub-stream per stochastic
forward pass) order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_M64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngStream:
    """Immutable handle for one reproducible draw sequence.

    ``generator()`` always returns a fresh generator positioned at the
    stream's counter, so repeated calls replay the same draws.
    """

    seed: int
    stream_id: int = 0
    counter: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _M64, self.stream_id & _M64], dtype=np.uint64)
        # counter occupies the second 64-bit word: adjacent counters are
        # separated by 2**64 blocks and never overlap in practice
        ctr = np.array([0, self.counter & _M64, 0, 0], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=ctr))

    def child(self, *ids: int) -> "RngStream":
        """Derive an independent stream keyed by the given indices."""
        sid = self.stream_id & _M64
        for i in ids:
            sid = _splitmix64(sid ^ _splitmix64(i & _M64))
        return RngStream(self.seed, sid, 0)

    def at(self, counter: int) -> "RngStream":
        """Same stream repositioned at an absolute counter value."""
        return RngStream(self.seed, self.stream_id, counter)
