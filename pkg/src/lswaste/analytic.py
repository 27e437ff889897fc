"""Closed-form wastage counts for flooding without levelling and sectoring.

Every expression is transcribed as published, idiosyncrasies included, and
evaluated exactly: Python ints for pure flooding and ``Fraction`` for
controlled-flooding expectations. Suspected typos are not corrected here;
``floodsim`` computes the structural counts they can be audited against.

Throughout, ``i`` is the broadcasting depth and only receptions at depth
``i + 1`` are considered necessary.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

Exact = Union[int, Fraction]


class DomainError(ValueError):
    """Raised when formula parameters fall outside their valid range."""


def exact(value) -> Exact:
    """Normalize to ``int`` when integral, ``Fraction`` otherwise."""
    value = Fraction(value)
    return value.numerator if value.denominator == 1 else value


@dataclass(frozen=True)
class EnergyModel:
    """Per-packet radio costs in millijoules."""

    e_t: int = 100
    e_r: int = 5

    def __post_init__(self):
        if self.e_t < 0 or self.e_r < 0:
            raise DomainError(f"energies must be nonnegative, got e_t={self.e_t}, e_r={self.e_r}")


DEFAULT_ENERGY = EnergyModel()


@dataclass(frozen=True)
class Pure:
    pass


@dataclass(frozen=True)
class Controlled:
    """Each receiver rebroadcasts independently with probability ``p``."""

    p: Fraction

    def __post_init__(self):
        if isinstance(self.p, float):
            raise TypeError("p must be an exact rational (int, Fraction or string), not float")
        p = Fraction(self.p)
        if not 0 <= p <= 1:
            raise DomainError(f"p must lie in [0, 1], got {p}")
        object.__setattr__(self, "p", p)


FloodMode = Union[Pure, Controlled]
PURE = Pure()


def parse_mode(text: str) -> FloodMode:
    """``pure`` or ``controlled:<p>`` with ``p`` like ``1/2`` or ``0.25``."""
    text = text.strip().lower()
    if text == "pure":
        return PURE
    name, sep, p = text.partition(":")
    if name == "controlled" and sep:
        try:
            return Controlled(Fraction(p))
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"bad probability in {text!r}") from exc
    raise DomainError(f"unknown flood mode {text!r}")


@dataclass(frozen=True)
class WastageReport:
    b_t: Exact
    b_r: Exact
    t_x: Exact
    r_x: Exact
    n_total: Exact
    e_total: Exact

    @classmethod
    def from_counts(cls, b_t, b_r, em: EnergyModel) -> "WastageReport":
        # the broadcaster's own transmission (+e_t) is charged as published
        t_x = em.e_t + em.e_t * b_t
        r_x = em.e_r * b_r
        return cls(exact(b_t), exact(b_r), exact(t_x), exact(r_x), exact(b_t + b_r), exact(t_x + r_x))

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in FIELDS}


FIELDS = ("b_t", "b_r", "t_x", "r_x", "n_total", "e_total")


def geometric_sum(base, lo: int, hi: int) -> Exact:
    """Sum of ``base**m`` for ``m`` in ``lo..hi``; zero for an empty range."""
    if hi < lo:
        return 0
    base = Fraction(base)
    if base == 1:
        return hi - lo + 1
    return exact((base ** (hi + 1) - base**lo) / (base - 1))


def _base(mode: FloodMode, branching: int) -> Exact:
    if isinstance(mode, Pure):
        return branching
    if isinstance(mode, Controlled):
        return exact(branching * mode.p)
    raise TypeError(f"not a flood mode: {mode!r}")


def _check_depths(d: int, i: int) -> None:
    if d < 0 or i < 0 or i > d:
        raise DomainError(f"need 0 <= i <= d, got i={i}, d={d}")


def linear(n: int, k: int, em: EnergyModel = DEFAULT_ENERGY) -> WastageReport:
    """Chain of ``n`` nodes (node 1 is the base station) with node ``k`` broadcasting."""
    if not 1 <= k <= n - 1:
        raise DomainError(f"need 1 <= k <= n-1, got k={k}, n={n}")
    return WastageReport.from_counts(n - k - 1, n - k, em)


def qary(q: int, d: int, i: int, mode: FloodMode = PURE, em: EnergyModel = DEFAULT_ENERGY) -> WastageReport:
    if q < 1:
        raise DomainError(f"branching factor must be >= 1, got {q}")
    _check_depths(d, i)
    base = _base(mode, q)
    # sum_{j=i+2..d} base^(j-i-1) == sum_{m=1..d-i-1} base^m
    b_t = q**i * geometric_sum(base, 1, d - i - 1)
    b_r = q**i * geometric_sum(base, 2, d - i)
    return WastageReport.from_counts(b_t, b_r, em)


def binary(d: int, i: int, mode: FloodMode = PURE, em: EnergyModel = DEFAULT_ENERGY) -> WastageReport:
    return qary(2, d, i, mode, em)


def nested(d: int, s: int, i: int, mode: FloodMode = PURE, em: EnergyModel = DEFAULT_ENERGY) -> WastageReport:
    """Nested tree, binary through depth ``s`` and ternary below.

    For ``i > s`` the multiplier is ``3**i`` as published (not the
    ``2**s * 3**(i-s)`` nodes actually present at depth ``i``), and the
    controlled reception sum keeps the printed exponent ``j - i - 1``.
    """
    if not 0 <= s <= d:
        raise DomainError(f"need 0 <= s <= d, got s={s}, d={d}")
    _check_depths(d, i)
    two, three = _base(mode, 2), _base(mode, 3)
    if i > s:
        b_t = 3**i * geometric_sum(three, 1, d - i - 1)
        if isinstance(mode, Pure):
            b_r = 3**i * geometric_sum(three, 2, d - i)
        else:
            b_r = 3**i * geometric_sum(three, 1, d - i - 1)
    else:
        head = 2**i * geometric_sum(two, 2, s - i)
        b_t = head + 2**s * geometric_sum(three, 0, d - s - 1)
        b_r = head + 2**s * geometric_sum(three, 1, d - s)
    return WastageReport.from_counts(b_t, b_r, em)
