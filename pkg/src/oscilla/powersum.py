"""Normalized power sums and the Kolesnik-Straus lower bound.

For points z_1..z_n with |z_1| maximal and a window start m,

    max_{m < nu <= m+n} |sum_j z_j^nu| / |z_1|^nu  >=  (n / (4e(m+n)))^n.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._numerics import fmt
from .errors import CapacityError, PreconditionError

BOUND_TOL = 1e-9
MAX_SEARCH_N = 12
_LOG_OVERFLOW = 700.0
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class PowerSumInstance:
    points: np.ndarray
    m: int = 0

    def __post_init__(self):
        z = np.asarray(self.points, dtype=np.complex128).ravel()
        if z.size < 1:
            raise PreconditionError("need at least one point")
        if self.m < 0 or int(self.m) != self.m:
            raise PreconditionError(f"window start m must be a non-negative integer, got {self.m}")
        lead = int(np.argmax(np.abs(z)))
        if abs(z[lead]) == 0:
            raise PreconditionError("all points are zero")
        if lead:
            z = np.concatenate(([z[lead]], np.delete(z, lead)))
        z.setflags(write=False)
        object.__setattr__(self, "points", z)
        object.__setattr__(self, "m", int(self.m))

    @property
    def n(self) -> int:
        return int(self.points.size)


@dataclass(frozen=True)
class PowerSumResult:
    best_nu: int
    normalized_max: float
    bound: float
    satisfied: bool
    tol: float = BOUND_TOL

    @property
    def ratio(self) -> float:
        return self.normalized_max / self.bound


def _polar(points):
    z = np.asarray(points, dtype=np.complex128)
    nz = z != 0
    logmod = np.full(z.shape, -np.inf)
    logmod[nz] = np.log(np.abs(z[nz]))
    return logmod, np.angle(z)


def scaled_power_sum(points, nu: int) -> tuple[complex, float]:
    """sum_j z_j^nu as ``(mantissa, log_scale)`` with value mantissa * exp(log_scale).

    Moduli go through exp(nu log|z|) and phases through nu arg z reduced mod 2 pi.
    """
    if nu < 1:
        raise PreconditionError(f"nu must be >= 1, got {nu}")
    logmod, arg = _polar(points)
    scale = float(np.max(logmod))
    if not np.isfinite(scale):
        return 0j, 0.0
    lm = nu * (logmod - scale)
    ph = np.fmod(nu * arg, _TWO_PI)
    terms = np.exp(lm) * np.exp(1j * ph)
    return complex(np.sum(terms)), nu * scale


def power_sum(instance, nu: int) -> complex:
    points = instance.points if isinstance(instance, PowerSumInstance) else instance
    mant, log_scale = scaled_power_sum(points, nu)
    if log_scale > _LOG_OVERFLOW:
        raise CapacityError("power sum overflows float64; use scaled_power_sum")
    return mant * math.exp(log_scale)


def ks_lower_bound(n: int, m: int) -> float:
    """(n / (4e(m+n)))^n evaluated in log space."""
    if n < 1:
        raise PreconditionError(f"n must be >= 1, got {n}")
    if m < 0:
        raise PreconditionError(f"m must be >= 0, got {m}")
    return math.exp(n * (math.log(n) - math.log(4.0) - 1.0 - math.log(m + n)))


def _normalized_values(points, m: int, n: int) -> np.ndarray:
    logmod, arg = _polar(points)
    rel = logmod - logmod[0]
    nus = np.arange(m + 1, m + n + 1, dtype=np.float64)[:, None]
    terms = np.exp(nus * rel) * np.exp(1j * np.fmod(nus * arg, _TWO_PI))
    return np.abs(terms.sum(axis=1))


def normalized_max(instance: PowerSumInstance, tol: float = BOUND_TOL) -> PowerSumResult:
    vals = _normalized_values(instance.points, instance.m, instance.n)
    i = int(np.argmax(vals))
    bound = ks_lower_bound(instance.n, instance.m)
    best = float(vals[i])
    return PowerSumResult(instance.m + 1 + i, best, bound, best >= bound * (1 - tol), tol)


def random_instance(rng: np.random.Generator, n: int, m: int) -> PowerSumInstance:
    """n points uniform in the unit disk."""
    r = np.sqrt(rng.random(n))
    theta = rng.random(n) * _TWO_PI
    return PowerSumInstance(r * np.exp(1j * theta), m)


def verify_sweep(count: int, seed: int = 0, n_max: int = 8, m_max: int = 32) -> list[dict]:
    """Random instances with per-instance seeds ``seed + i``."""
    rows = []
    for i in range(count):
        s = seed + i
        rng = np.random.default_rng(s)
        n = int(rng.integers(1, n_max + 1))
        m = int(rng.integers(0, m_max + 1))
        res = normalized_max(random_instance(rng, n, m))
        rows.append(dict(n=n, m=m, seed=s, normalized_max=res.normalized_max, bound=res.bound, ratio=res.ratio))
    return rows


def write_sweep_csv(path, rows) -> None:
    cols = ["n", "m", "seed", "normalized_max", "bound", "ratio"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([r["n"], r["m"], r["seed"], fmt(r["normalized_max"]), fmt(r["bound"]), fmt(r["ratio"])])


# -- extremal search -----------------------------------------------------------

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def _objective(theta: np.ndarray, nus: np.ndarray) -> float:
    return float(np.max(np.abs(np.exp(1j * np.outer(nus, theta)).sum(axis=1))))


def _golden(f, a: float, b: float, iters: int = 30) -> tuple[float, float]:
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLD * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLD * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _descend(n: int, m: int, iterations: int, seed: int, grid: int = 48) -> tuple[float, np.ndarray]:
    rng = np.random.default_rng(seed)
    nus = np.arange(m + 1, m + n + 1, dtype=np.float64)
    theta = np.concatenate(([0.0], rng.random(n - 1) * _TWO_PI))
    best = _objective(theta, nus)
    offsets = np.linspace(-math.pi, math.pi, grid, endpoint=False)
    h = offsets[1] - offsets[0]
    for _ in range(iterations):
        improved = False
        for j in range(1, n):
            # theta_1 is pinned: a common rotation leaves the objective unchanged
            def f(t, j=j):
                trial = theta.copy()
                trial[j] = t
                return _objective(trial, nus)

            vals = [f(theta[j] + o) for o in offsets]
            k = int(np.argmin(vals))
            centre = theta[j] + offsets[k]
            t, v = _golden(f, centre - h, centre + h)
            if v < best - 1e-15:
                theta[j] = math.fmod(t, _TWO_PI)
                best = v
                improved = True
        if not improved:
            break
    return best, theta


def extremal_search(n: int, m: int = 0, restarts: int = 8, iterations: int = 50, seed: int = 0,
                    threads: int = 1) -> tuple[PowerSumInstance, float]:
    """Multi-start coordinate descent for unimodular points minimizing the normalized max.

    Restart r uses seed ``seed + r``; the best value wins, ties to the lowest seed.
    """
    if not 1 <= n <= MAX_SEARCH_N:
        raise PreconditionError(f"search supports 1 <= n <= {MAX_SEARCH_N}, got {n}")
    if n == 1:
        inst = PowerSumInstance([1.0 + 0j], m)
        return inst, normalized_max(inst).normalized_max
    seeds = [seed + r for r in range(max(restarts, 1))]
    run = lambda s: _descend(n, m, iterations, s)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, seeds))
    else:
        results = [run(s) for s in seeds]
    i = min(range(len(results)), key=lambda r: (results[r][0], seeds[r]))
    inst = PowerSumInstance(np.exp(1j * results[i][1]), m)
    return inst, normalized_max(inst).normalized_max


def parse_points(text: str) -> list[complex]:
    """``"re,im;re,im;..."`` -> complex list."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            re_, im_ = (float(v) for v in chunk.split(","))
        except ValueError:
            raise PreconditionError(f"bad point {chunk!r}; expected 're,im'") from None
        out.append(complex(re_, im_))
    return out

