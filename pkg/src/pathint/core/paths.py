"""Pinned paths, Brownian-bridge sampling and discrete ∫p dq rules."""

import math
from collections.abc import Iterator
from dataclasses import dataclass
from functools import cache

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pathint.core.numerics import TimeLattice
from pathint.core.streams import BLOCK_SIZE, RandomStream, iter_blocks


type FloatArray = NDArray[np.float64]


@dataclass(frozen=True, slots=True, eq=False)
class PathSample:
    """A configuration-space path on a lattice, endpoints included."""

    lattice: TimeLattice
    values: FloatArray
    diffusion: float

    def __post_init__(self) -> None:
        """Check that there is one value per lattice node."""
        if self.values.shape != (self.lattice.n + 2,):
            raise ValueError("PathSample needs one value per lattice node")


@dataclass(frozen=True, slots=True, eq=False)
class PhasePath:
    """A phase-space path; `points[:, 0]` is p and `points[:, 1]` is q."""

    lattice: TimeLattice
    points: FloatArray

    def __post_init__(self) -> None:
        """Check the point array shape."""
        if self.points.shape != (self.lattice.n + 2, 2):
            raise ValueError("PhasePath needs one (p, q) pair per lattice node")

    @property
    def p(self) -> FloatArray:
        """Momentum components."""
        return self.points[:, 0]

    @property
    def q(self) -> FloatArray:
        """Position components."""
        return self.points[:, 1]

    def reversed(self) -> PhasePath:
        """Return the same polygon traversed backwards."""
        return PhasePath(self.lattice, self.points[::-1].copy())


@cache
def _midpoint_schedule(n_nodes: int) -> tuple[tuple[int, int, int], ...]:
    """Return `(left, mid, right)` node triples in breadth-first midpoint order."""
    schedule: list[tuple[int, int, int]] = []
    pending = [(0, n_nodes - 1)]
    while pending:
        nxt: list[tuple[int, int]] = []
        for left, right in pending:
            if right - left < 2:
                continue
            mid = (left + right) // 2
            schedule.append((left, mid, right))
            nxt.extend([(left, mid), (mid, right)])
        pending = nxt
    return tuple(schedule)


def fill_bridges(
    nu: float,
    times: FloatArray,
    start: ArrayLike,
    end: ArrayLike,
    normals: FloatArray,
) -> FloatArray:
    """Build pinned Brownian bridges from standard normals.

    Interior nodes are filled by recursive midpoint refinement; each node is
    drawn from its exact conditional law given the two already-fixed nodes
    that bracket it.

    Args:
        nu (float): Diffusion constant.
        times (FloatArray): Node times, endpoints included.
        start (ArrayLike): Pin at `times[0]`, shape `(d,)`.
        end (ArrayLike): Pin at `times[-1]`, shape `(d,)`.
        normals (FloatArray): Standard normals of shape
            `(n_samples, len(times) - 2, d)`.

    Returns:
        FloatArray: Paths of shape `(n_samples, len(times), d)`.
    """
    start_arr = np.atleast_1d(np.asarray(start, dtype=float))
    end_arr = np.atleast_1d(np.asarray(end, dtype=float))
    n_samples = normals.shape[0]
    paths = np.empty((n_samples, times.size, start_arr.size))
    paths[:, 0] = start_arr
    paths[:, -1] = end_arr
    for k, (left, mid, right) in enumerate(_midpoint_schedule(times.size)):
        span = times[right] - times[left]
        w = (times[mid] - times[left]) / span
        variance = nu * (times[mid] - times[left]) * (times[right] - times[mid]) / span
        mean = (1.0 - w) * paths[:, left] + w * paths[:, right]
        paths[:, mid] = mean + math.sqrt(variance) * normals[:, k]
    return paths


def sample_brownian_bridge(
    nu: float,
    lattice: TimeLattice,
    x_start: float,
    x_end: float,
    stream: RandomStream,
) -> PathSample:
    """Draw one pinned Brownian path with diffusion `nu`.

    Args:
        nu (float): Diffusion constant (length^2 / time).
        lattice (TimeLattice): Time lattice; the pins sit at its endpoints.
        x_start (float): Value at `lattice.t_start`.
        x_end (float): Value at `lattice.t_end`.
        stream (RandomStream): Source of randomness.

    Returns:
        PathSample: The sampled path.

    Raises:
        ValueError: If `nu` is not positive.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    normals = stream.normals((1, lattice.n, 1))
    values = fill_bridges(nu, lattice.times(), [x_start], [x_end], normals)[0, :, 0]
    values[0], values[-1] = x_start, x_end
    return PathSample(lattice, values, nu)


def iter_bridge_blocks(
    nu: float,
    lattice: TimeLattice,
    start: ArrayLike,
    end: ArrayLike,
    n_samples: int,
    stream: RandomStream,
    *,
    block_size: int = BLOCK_SIZE,
) -> Iterator[FloatArray]:
    """Yield blocks of bridges of shape `(size, n + 2, d)` in block order.

    Raises:
        ValueError: If `nu` is not positive.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    times = lattice.times()
    dim = np.atleast_1d(np.asarray(start)).size
    for block, size in iter_blocks(n_samples, block_size):
        normals = stream.normals((size, lattice.n, dim), block)
        yield fill_bridges(nu, times, start, end, normals)


def stratonovich_p_dq(path: PhasePath) -> float:
    """Return the midpoint sum of ½(p_{l+1}+p_l)(q_{l+1}-q_l) along the path."""
    p, q = path.p, path.q
    return math.fsum(
        0.5 * (p[i + 1] + p[i]) * (q[i + 1] - q[i]) for i in range(p.size - 1)
    )


def left_point_p_dq(path: PhasePath) -> float:
    """Return the left-point sum of p_l (q_{l+1}-q_l) along the path."""
    p, q = path.p, path.q
    return math.fsum(p[i] * (q[i + 1] - q[i]) for i in range(p.size - 1))


def stratonovich_sums(p: FloatArray, q: FloatArray) -> FloatArray:
    """Vectorised midpoint rule over the last axis."""
    return np.sum(0.5 * (p[..., 1:] + p[..., :-1]) * np.diff(q, axis=-1), axis=-1)


def left_point_sums(p: FloatArray, q: FloatArray) -> FloatArray:
    """Vectorised left-point rule over the last axis."""
    return np.sum(p[..., :-1] * np.diff(q, axis=-1), axis=-1)
