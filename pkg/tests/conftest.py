"""Shared fixtures and independent oracles."""

import math
from fractions import Fraction

import numpy as np
import pytest

from oscilla import psi as ps
from oscilla import zeros as zm


def prime_power_base(n):
    """p if n = p^a for a prime p and a >= 1, else None (trial division)."""
    if n < 2:
        return None
    p = 2
    while p * p <= n:
        if n % p == 0:
            while n % p == 0:
                n //= p
            return p if n == 1 else None
        p += 1
    return n


def brute_psi_prefix(n):
    """psi(0..n) as exactly rounded sums of float log p, via Fractions."""
    out = [0.0, 0.0]
    acc = Fraction(0)
    for x in range(2, n + 1):
        p = prime_power_base(x)
        if p is not None:
            acc += Fraction(math.log(p))
        out.append(float(acc))
    return out


def naive_lambda(n):
    """(x, log p) for every prime power x <= n from a plain numpy sieve."""
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    xs, ws = [], []
    for p in np.flatnonzero(flags):
        p = int(p)
        q = p
        while q <= n:
            xs.append(q)
            ws.append(math.log(p))
            q *= p
    order = np.argsort(xs)
    return np.array(xs)[order], np.array(ws)[order]


@pytest.fixture(scope="session")
def psi_1e6():
    return ps.build_psi(10**6, threads=1)


@pytest.fixture(scope="session")
def bundled():
    return zm.bundled_zeros()


@pytest.fixture(scope="session")
def brute_1e5():
    return brute_psi_prefix(10**5)
