"""Reproducible counter-based random streams."""

from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

BLOCK_SIZE = 4096
"""Samples per block; Monte Carlo work is always split on these boundaries."""

_U64 = 1 << 64


@dataclass(frozen=True, slots=True)
class RandomStream:
    """A Philox stream keyed by `(seed, stream_index)`.

    Every block of a stream owns its own generator, keyed by
    `(seed, stream_index, block)`, so that variate `n` of a stream is a pure
    function of the key and `n` and never depends on which worker drew it.
    """

    seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        """Validate that both keys fit in 64 unsigned bits."""
        for name in ("seed", "stream_index"):
            value = getattr(self, name)
            if not 0 <= value < _U64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer")

    def generator(self, block: int = 0) -> np.random.Generator:
        """Return the generator for one block of this stream."""
        sequence = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_index, block)
        )
        return np.random.Generator(np.random.Philox(sequence))

    def normals(self, shape: tuple[int, ...], block: int = 0) -> NDArray[np.float64]:
        """Draw standard normals for one block."""
        return self.generator(block).standard_normal(shape)

    def substream(self, offset: int) -> RandomStream:
        """Return the stream `offset` positions further along the index axis."""
        return RandomStream(self.seed, (self.stream_index + offset) % _U64)


def iter_blocks(
    n_samples: int, block_size: int = BLOCK_SIZE
) -> Iterator[tuple[int, int]]:
    """Yield `(block, size)` pairs covering `n_samples` in fixed order."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    for block, start in enumerate(range(0, n_samples, block_size)):
        yield block, min(block_size, n_samples - start)
