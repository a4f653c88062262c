"""Reproducible random-number streams.

A stream is identified by ``(seed, stream_id)``.  Identical identifiers give
bit-identical draw sequences; distinct identifiers give streams that are
independent by construction (counter-based Philox keyed through
``SeedSequence``).  Substreams are derived with string or integer tags, so a
simulation can split its randomness into named components ("jumps", "gauss",
"kill") whose draws do not interfere -- this is what makes the jump skeleton
invariant under grid refinement.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np


def _tag_to_int(tag: int | str) -> int:
    if isinstance(tag, int):
        if tag < 0:
            raise ValueError(f"substream tag must be nonnegative, got {tag}")
        return tag
    # crc32 is stable across platforms and Python versions
    return zlib.crc32(tag.encode("utf-8"))


@dataclass(frozen=True)
class RngStream:
    """A named, reproducible source of randomness.

    ``generator()`` returns a fresh ``numpy.random.Generator`` positioned at
    the origin of the stream, so a consumer that needs randomness should call
    it once and draw sequentially.  A single RngStream must not be shared by
    concurrent consumers; hand each replica its own ``substream``.
    """

    seed: int
    stream_id: int = 0
    _path: tuple[int, ...] = field(default_factory=tuple)

    def substream(self, *tags: int | str) -> "RngStream":
        """Derive an independent child stream from string/integer tags."""
        extra = tuple(_tag_to_int(t) for t in tags)
        return RngStream(self.seed, self.stream_id, self._path + extra)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id, *self._path)
        )
        return np.random.Generator(np.random.Philox(seq))
