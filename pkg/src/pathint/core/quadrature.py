"""Fixed quadrature rules on intervals, rectangles and disks."""

import math
from dataclasses import dataclass
from typing import Self

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike, NDArray

type FloatArray = NDArray[np.float64]


@dataclass(frozen=True, slots=True, eq=False)
class Quadrature:
    """Nodes and weights of a quadrature rule.

    `nodes` has shape `(n,)` for line rules and `(n, 2)` for planar rules,
    where planar nodes are `(p, q)` pairs.
    """

    nodes: FloatArray
    weights: FloatArray

    def __post_init__(self) -> None:
        """Check that nodes and weights line up."""
        if self.nodes.shape[0] != self.weights.shape[0]:
            raise ValueError("Quadrature nodes and weights differ in length")

    @classmethod
    def gauss_legendre(cls, a: float, b: float, order: int) -> Self:
        """Gauss-Legendre rule of the given order on `[a, b]`."""
        x, w = leggauss(order)
        half = 0.5 * (b - a)
        return cls(0.5 * (b + a) + half * x, half * w)

    @classmethod
    def panels(cls, a: float, b: float, width: float, order: int = 16) -> Self:
        """Composite Gauss-Legendre rule with panels no wider than `width`."""
        if not b > a:
            raise ValueError("Quadrature interval must have b > a")
        count = max(1, math.ceil((b - a) / width - 1e-12))
        edges = np.linspace(a, b, count + 1)
        x, w = leggauss(order)
        half = 0.5 * np.diff(edges)[:, np.newaxis]
        mids = 0.5 * (edges[1:] + edges[:-1])[:, np.newaxis]
        return cls((mids + half * x).ravel(), (half * w).ravel())

    @classmethod
    def trapezoid(cls, a: float, b: float, n_points: int) -> Self:
        """Trapezoid rule on `n_points` equally spaced nodes."""
        nodes = np.linspace(a, b, n_points)
        weights = np.full(n_points, (b - a) / (n_points - 1))
        weights[[0, -1]] *= 0.5
        return cls(nodes, weights)

    @classmethod
    def tensor(cls, p_rule: Quadrature, q_rule: Quadrature) -> Self:
        """Planar product rule with nodes `(p, q)`."""
        pp, qq = np.meshgrid(p_rule.nodes, q_rule.nodes, indexing="ij")
        ww = np.outer(p_rule.weights, q_rule.weights)
        return cls(np.column_stack([pp.ravel(), qq.ravel()]), ww.ravel())

    @classmethod
    def disk(
        cls,
        radius: float,
        n_radial: int,
        n_angular: int,
        *,
        center: tuple[float, float] = (0.0, 0.0),
    ) -> Self:
        """Polar rule on a disk: Gauss-Legendre in r, trapezoid in angle.

        Nodes are `(p, q) = center + (r sin t, r cos t)`.
        """
        r, wr = leggauss(n_radial)
        r = 0.5 * radius * (r + 1.0)
        wr = 0.5 * radius * wr * r
        theta = 2.0 * math.pi * np.arange(n_angular) / n_angular
        rr, tt = np.meshgrid(r, theta, indexing="ij")
        weights = np.outer(wr, np.full(n_angular, 2.0 * math.pi / n_angular))
        nodes = np.column_stack(
            [
                center[0] + (rr * np.sin(tt)).ravel(),
                center[1] + (rr * np.cos(tt)).ravel(),
            ]
        )
        return cls(nodes, weights.ravel())

    @property
    def size(self) -> int:
        """Number of nodes."""
        return self.weights.size

    def integrate(self, values: ArrayLike) -> complex | NDArray[np.complex128]:
        """Contract `values` (nodes along the first axis) with the weights."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))
