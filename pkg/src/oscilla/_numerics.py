"""Error-free transformations and compensated reductions."""

from __future__ import annotations

import math

import numpy as np


def two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


class Neumaier:
    """Running compensated sum; ``value`` is the rounded total."""

    __slots__ = ("s", "c")

    def __init__(self, start: float = 0.0):
        self.s = float(start)
        self.c = 0.0

    def add(self, x: float) -> None:
        s, err = two_sum(self.s, float(x))
        self.s = s
        self.c += err

    @property
    def value(self) -> float:
        return self.s + self.c


def compensated_cumsum(values, start: float = 0.0, block: int = 256) -> np.ndarray:
    """Prefix sums of ``values`` offset by ``start``.

    Block totals are exactly rounded (``math.fsum``) and carried with a
    Neumaier accumulator; inside a block plain ``cumsum`` is used, whose error
    is bounded by ``block * eps * block_total`` and is negligible against the
    carried prefix.
    """
    v = np.ascontiguousarray(values, dtype=np.float64)
    out = np.empty_like(v)
    acc = Neumaier(start)
    for i in range(0, v.size, block):
        chunk = v[i : i + block]
        local = np.cumsum(chunk)
        out[i : i + block] = acc.s + (acc.c + local)
        acc.add(math.fsum(chunk))
    return out


def csum(values) -> complex:
    """Exactly rounded sum of a complex array (order independent)."""
    z = np.asarray(values, dtype=np.complex128).ravel()
    return complex(math.fsum(z.real), math.fsum(z.imag))


def fmt(x: float) -> str:
    """17 significant digits, '.' decimal: round-trips any float64."""
    return format(float(x), ".17g")
