"""Polynomial phase-space symbols and the Weyl to anti-normal map."""

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from enum import StrEnum
from typing import Self

import numpy as np
from numpy.polynomial import polynomial as P
from numpy.typing import ArrayLike, NDArray

from pathint.core.errors import UnsupportedSymbol

type KineticFn = Callable[[NDArray[np.float64]], NDArray[np.float64]]


class Ordering(StrEnum):
    """Operator association of a symbol."""

    ANTINORMAL = "antinormal"
    WEYL = "weyl"


def _trim(coefficients: NDArray[np.float64]) -> NDArray[np.float64]:
    """Drop trailing all-zero rows and columns, keeping at least `1 x 1`."""
    rows = np.flatnonzero(np.any(coefficients != 0, axis=1))
    cols = np.flatnonzero(np.any(coefficients != 0, axis=0))
    n_rows = int(rows[-1]) + 1 if rows.size else 1
    n_cols = int(cols[-1]) + 1 if cols.size else 1
    return coefficients[:n_rows, :n_cols].copy()


@dataclass(frozen=True, slots=True, eq=False)
class HamiltonianSymbol:
    """Real polynomial `H(p, q) = sum c[i, j] p^i q^j`, optionally plus `K(p)`.

    `kinetic` holds a non-polynomial momentum-only term, such as the
    relativistic energy, that routes through momentum-space evaluation.
    """

    coefficients: NDArray[np.float64]
    ordering: Ordering = Ordering.ANTINORMAL
    kinetic: KineticFn | None = None
    name: str = ""

    def __post_init__(self) -> None:
        """Normalize coefficients to a trimmed real 2-D array."""
        array = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        if array.ndim != 2:
            raise ValueError("Symbol coefficients must be a 2-D array")
        if not np.all(np.isfinite(array)):
            raise ValueError("Symbol coefficients must be finite")
        object.__setattr__(self, "coefficients", _trim(array))

    @classmethod
    def from_terms(
        cls,
        terms: Mapping[tuple[int, int], float],
        *,
        ordering: Ordering = Ordering.ANTINORMAL,
        name: str = "",
    ) -> Self:
        """Build a symbol from `{(power_of_p, power_of_q): coefficient}`."""
        if not terms:
            return cls(np.zeros((1, 1)), ordering, name=name)
        n_p = max(i for i, _ in terms) + 1
        n_q = max(j for _, j in terms) + 1
        array = np.zeros((n_p, n_q))
        for (i, j), value in terms.items():
            if i < 0 or j < 0:
                raise ValueError("Monomial powers must be non-negative")
            array[i, j] += value
        return cls(array, ordering, name=name)

    @classmethod
    def constant(
        cls, value: float, *, ordering: Ordering = Ordering.ANTINORMAL
    ) -> Self:
        """The constant symbol."""
        return cls(np.array([[float(value)]]), ordering, name=f"{value:g}")

    @classmethod
    def free(
        cls, mass: float = 1.0, *, ordering: Ordering = Ordering.ANTINORMAL
    ) -> Self:
        """`p^2 / 2m`."""
        return cls.from_terms({(2, 0): 0.5 / mass}, ordering=ordering, name="free")

    @classmethod
    def oscillator(
        cls,
        omega: float = 1.0,
        mass: float = 1.0,
        *,
        ordering: Ordering = Ordering.ANTINORMAL,
    ) -> Self:
        """`p^2 / 2m + m omega^2 q^2 / 2`."""
        return cls.from_terms(
            {(2, 0): 0.5 / mass, (0, 2): 0.5 * mass * omega**2},
            ordering=ordering,
            name="oscillator",
        )

    @classmethod
    def relativistic(cls, mass: float = 1.0) -> Self:
        """`sqrt(p^2 + m^2)` carried as a momentum-only kinetic term."""
        m2 = float(mass) ** 2
        return cls(
            np.zeros((1, 1)),
            Ordering.ANTINORMAL,
            kinetic=lambda p: np.sqrt(p * p + m2),
            name=f"relativistic(m={mass:g})",
        )

    @property
    def degree(self) -> int:
        """Total polynomial degree (zero for the zero symbol)."""
        nz = np.argwhere(self.coefficients != 0)
        return int(nz.sum(axis=1).max()) if nz.size else 0

    @property
    def is_polynomial(self) -> bool:
        """True without a non-polynomial kinetic term."""
        return self.kinetic is None

    @property
    def is_zero(self) -> bool:
        """True for the zero symbol."""
        return self.is_polynomial and not np.any(self.coefficients)

    @property
    def is_quadratic(self) -> bool:
        """Polynomial of degree at most two."""
        return self.is_polynomial and self.degree <= 2

    @property
    def is_momentum_only(self) -> bool:
        """No dependence on q."""
        return self.coefficients.shape[1] == 1

    @property
    def is_position_only(self) -> bool:
        """No dependence on p."""
        return self.is_polynomial and self.coefficients.shape[0] == 1

    @property
    def is_separable(self) -> bool:
        """No mixed `p^i q^j` terms with both powers positive."""
        return not np.any(self.coefficients[1:, 1:])

    @property
    def tags(self) -> frozenset[str]:
        """Structure tags derived from the coefficients."""
        tags = set()
        if self.is_quadratic:
            tags.add("quadratic")
        if self.is_momentum_only:
            tags.add("momentum-only")
        if self.is_position_only:
            tags.add("position-only")
        if self.is_separable:
            tags.add("separable")
        return frozenset(tags)

    def term(self, i: int, j: int) -> float:
        """Coefficient of `p^i q^j`."""
        c = self.coefficients
        return float(c[i, j]) if i < c.shape[0] and j < c.shape[1] else 0.0

    def momentum_part(self) -> NDArray[np.float64]:
        """Coefficients of the pure-p terms, constant included."""
        return self.coefficients[:, 0].copy()

    def position_part(self) -> NDArray[np.float64]:
        """Coefficients of the pure-q terms, constant excluded."""
        part = self.coefficients[0, :].copy()
        part[0] = 0.0
        return part

    def __call__(self, p: ArrayLike, q: ArrayLike) -> NDArray:
        """Evaluate at (possibly complex) phase-space points."""
        p_arr = np.asarray(p)
        q_arr = np.asarray(q)
        value = P.polyval2d(p_arr, q_arr, self.coefficients)
        if self.kinetic is not None:
            value = value + self.kinetic(p_arr)
        return value

    def __add__(self, other: HamiltonianSymbol) -> HamiltonianSymbol:
        if not isinstance(other, HamiltonianSymbol):
            return NotImplemented
        if self.ordering is not other.ordering:
            raise ValueError("Cannot add symbols with different orderings")
        if self.kinetic is not None and other.kinetic is not None:
            raise UnsupportedSymbol("At most one kinetic term per symbol")
        a, b = self.coefficients, other.coefficients
        total = np.zeros((max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1])))
        total[: a.shape[0], : a.shape[1]] += a
        total[: b.shape[0], : b.shape[1]] += b
        return HamiltonianSymbol(
            total,
            self.ordering,
            kinetic=self.kinetic or other.kinetic,
            name=" + ".join(n for n in (self.name, other.name) if n),
        )

    def scaled(self, factor: float) -> HamiltonianSymbol:
        """Return `factor * H` (polynomial part only)."""
        if self.kinetic is not None:
            raise UnsupportedSymbol("Cannot scale a symbol with a kinetic term")
        return HamiltonianSymbol(
            self.coefficients * factor, self.ordering, name=self.name
        )

    def with_ordering(self, ordering: Ordering) -> HamiltonianSymbol:
        """Return the same coefficients under another ordering tag."""
        return HamiltonianSymbol(self.coefficients, ordering, self.kinetic, self.name)

    def laplacian(self) -> HamiltonianSymbol:
        """Return `(d^2/dp^2 + d^2/dq^2) H`.

        Raises:
            UnsupportedSymbol: For symbols with a kinetic term.
        """
        if self.kinetic is not None:
            raise UnsupportedSymbol("Laplacian needs a polynomial symbol")
        c = self.coefficients
        out = np.zeros_like(c)
        if c.shape[0] >= 3:
            out[: c.shape[0] - 2, :] += P.polyder(c, m=2, axis=0)
        if c.shape[1] >= 3:
            out[:, : c.shape[1] - 2] += P.polyder(c, m=2, axis=1)
        return HamiltonianSymbol(out, self.ordering, name=self.name)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HamiltonianSymbol):
            return NotImplemented
        return (
            self.ordering is other.ordering
            and self.kinetic is other.kinetic
            and self.coefficients.shape == other.coefficients.shape
            and bool(np.array_equal(self.coefficients, other.coefficients))
        )

    def __hash__(self) -> int:
        return hash((self.ordering, self.coefficients.tobytes(), id(self.kinetic)))

    def __repr__(self) -> str:
        terms = [
            f"{value:g}*p^{i}q^{j}"
            for (i, j), value in np.ndenumerate(self.coefficients)
            if value != 0
        ]
        body = " + ".join(terms) or "0"
        if self.kinetic is not None:
            body += f" + kinetic[{self.name}]"
        return f"HamiltonianSymbol({body}, {self.ordering})"


def antinormal_from_weyl(
    weyl: HamiltonianSymbol, hbar: float = 1.0
) -> HamiltonianSymbol:
    """Convert a Weyl symbol to the anti-normal symbol of the same operator.

    Applies `exp(-(hbar/4)(d^2/dp^2 + d^2/dq^2))` as a terminating series.

    Args:
        weyl (HamiltonianSymbol): Polynomial symbol tagged `weyl`.
        hbar (float): Reduced Planck constant.

    Returns:
        HamiltonianSymbol: The anti-normal symbol.

    Raises:
        ValueError: If the input is not tagged `weyl`.
        UnsupportedSymbol: If the input carries a kinetic term.
    """
    if weyl.ordering is not Ordering.WEYL:
        raise ValueError("antinormal_from_weyl expects a Weyl-ordered symbol")
    if weyl.kinetic is not None:
        raise UnsupportedSymbol("Only polynomial symbols have a terminating series")
    total = weyl.coefficients.copy()
    term = weyl
    k = 0
    while True:
        term = term.laplacian()
        k += 1
        if not np.any(term.coefficients):
            break
        factor = (-hbar / 4.0) ** k / math.factorial(k)
        c = term.coefficients
        total[: c.shape[0], : c.shape[1]] += factor * c
    return HamiltonianSymbol(total, Ordering.ANTINORMAL, name=weyl.name)
