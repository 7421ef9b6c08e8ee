"""Exact Chebyshev psi and the prime number theorem error term Delta(x) = psi(x) - x.

psi is assembled from prime-power jumps found by a segmented sieve. Within a
table, psi values at jumps are stored as compensated prefix sums so that
psi(10**9) ~ 1e9 keeps full precision despite terms of size log p.
"""

from __future__ import annotations

import csv
import math
import operator
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable

import numpy as np

from ._numerics import compensated_cumsum, fmt
from .errors import CapacityError, ParseError, PreconditionError, RangeError

DEFAULT_SEGMENT = 1 << 22

CACHE_MAGIC = b"PSICACHE"
CACHE_VERSION = 1
_HEADER = struct.Struct("<8sII")
_RECORD = np.dtype([("x", "<u8"), ("w", "<f8")])


@dataclass(frozen=True)
class PrimePowerJump:
    x: int
    weight: float


@dataclass(frozen=True)
class DeltaSample:
    x: float
    psi: float
    delta: float
    normalized: float


@dataclass(frozen=True, eq=False)
class PsiCheckpointTable:
    """Prime-power jumps in ``(lo, hi]`` together with psi(lo).

    ``cum[i]`` is psi at ``xs[i]`` (right-continuous convention).
    """

    lo: int
    hi: int
    xs: np.ndarray
    weights: np.ndarray
    psi_at_lo: float
    cum: np.ndarray

    def __post_init__(self):
        for arr in (self.xs, self.weights, self.cum):
            arr.setflags(write=False)

    @classmethod
    def from_jumps(cls, lo, hi, xs, weights, psi_at_lo=0.0) -> PsiCheckpointTable:
        xs = np.asarray(xs, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        cum = compensated_cumsum(weights, start=psi_at_lo)
        return cls(int(lo), int(hi), xs, weights, float(psi_at_lo), cum)

    @property
    def psi_at_hi(self) -> float:
        return float(self.cum[-1]) if self.cum.size else self.psi_at_lo

    @property
    def jumps(self) -> list[PrimePowerJump]:
        return [PrimePowerJump(int(x), float(w)) for x, w in zip(self.xs, self.weights)]

    def __len__(self):
        return int(self.xs.size)

    def _check(self, x, lower=None):
        lo = self.lo if lower is None else lower
        if np.any(np.asarray(x) < lo) or np.any(np.asarray(x) > self.hi):
            raise RangeError(f"x outside sieved range [{lo}, {self.hi}]")

    def _value_at_index(self, idx):
        idx = np.asarray(idx)
        return np.where(idx >= 0, self.cum[np.maximum(idx, 0)], self.psi_at_lo) if self.cum.size else np.full(
            idx.shape, self.psi_at_lo
        )

    def psi(self, x):
        """psi(x) for scalar or array ``x`` in ``[lo, hi]``."""
        self._check(x)
        idx = np.searchsorted(self.xs, x, side="right") - 1
        out = self._value_at_index(idx)
        return float(out) if np.ndim(out) == 0 else out

    def psi_left(self, x):
        """Left limit psi(x-); for ``x == lo`` only defined if lo is not a jump."""
        self._check(x)
        idx = np.searchsorted(self.xs, x, side="left") - 1
        out = self._value_at_index(idx)
        return float(out) if np.ndim(out) == 0 else out

    # the Delta-source protocol used by the smoothed explicit formula
    def pieces(self, t_lo: float, t_hi: float):
        """Split ``[t_lo, t_hi]`` (t = log x) at jumps; psi is constant per piece."""
        x_lo, x_hi = math.exp(t_lo), math.exp(t_hi)
        # exp/log round trips can land one ulp outside integer bounds
        if x_lo < self.lo * (1 - 1e-12) or x_hi > self.hi * (1 + 1e-12):
            raise RangeError(f"psi needed on [{x_lo:.6g}, {x_hi:.6g}], table covers [{self.lo}, {self.hi}]")
        i0 = int(np.searchsorted(self.xs, x_lo, side="right"))
        i1 = int(np.searchsorted(self.xs, x_hi, side="left"))
        inner = np.log(self.xs[i0:i1].astype(np.float64))
        edges = np.concatenate(([t_lo], inner, [t_hi]))
        first = self.cum[i0 - 1] if i0 > 0 else self.psi_at_lo
        consts = np.concatenate(([first], self.cum[i0:i1]))
        return edges, consts

    @staticmethod
    def delta(t, const):
        return const - np.exp(t)


@lru_cache(maxsize=8)
def small_primes(limit: int) -> np.ndarray:
    """All primes <= limit (plain Eratosthenes)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    out = np.flatnonzero(is_p).astype(np.int64)
    out.setflags(write=False)
    return out


def sieve_segment(lo: int, hi: int, psi_at_lo: float = 0.0, *, segment_size: int = DEFAULT_SEGMENT) -> PsiCheckpointTable:
    """All prime-power jumps in ``(lo, hi]`` with weights log p."""
    lo, hi = operator.index(lo), operator.index(hi)
    if not 1 <= lo < hi:
        raise PreconditionError(f"need 1 <= lo < hi, got lo={lo}, hi={hi}")
    if hi - lo > segment_size:
        raise CapacityError(f"segment of {hi - lo} integers exceeds segment size {segment_size}")
    base = small_primes(math.isqrt(hi))
    first = lo + 1
    mark = np.ones(hi - lo, dtype=bool)
    for p in base.tolist():
        start = max(p * p, -(-first // p) * p)
        if start <= hi:
            mark[start - first :: p] = False
    primes = np.flatnonzero(mark).astype(np.int64) + first

    pw_x, pw_p = [], []
    for p in base.tolist():
        q = p * p
        while q <= hi:
            if q > lo:
                pw_x.append(q)
                pw_p.append(p)
            q *= p
    xs = np.concatenate((primes, np.asarray(pw_x, dtype=np.int64)))
    ws = np.concatenate((np.log(primes.astype(np.float64)), np.log(np.asarray(pw_p, dtype=np.float64))))
    order = np.argsort(xs, kind="stable")
    return PsiCheckpointTable.from_jumps(lo, hi, xs[order], ws[order], psi_at_lo)


def merge_tables(tables: Iterable[PsiCheckpointTable]) -> PsiCheckpointTable:
    """Concatenate contiguous tables; psi is re-accumulated from the first psi_at_lo."""
    tables = list(tables)
    if not tables:
        raise PreconditionError("nothing to merge")
    for a, b in zip(tables, tables[1:]):
        if a.hi != b.lo:
            raise PreconditionError(f"tables not contiguous: {a.hi} != {b.lo}")
    xs = np.concatenate([t.xs for t in tables])
    ws = np.concatenate([t.weights for t in tables])
    return PsiCheckpointTable.from_jumps(tables[0].lo, tables[-1].hi, xs, ws, tables[0].psi_at_lo)


def build_psi(hi: int, *, segment_size: int = DEFAULT_SEGMENT, threads: int | None = None) -> PsiCheckpointTable:
    """Sieve ``[1, hi]`` segment by segment and merge in order."""
    hi = operator.index(hi)
    if hi < 2:
        return PsiCheckpointTable.from_jumps(1, max(hi, 1), [], [], 0.0)
    bounds = list(range(1, hi, segment_size)) + [hi]
    spans = list(zip(bounds, bounds[1:]))
    threads = threads or os.cpu_count() or 1
    if threads == 1 or len(spans) == 1:
        parts = [sieve_segment(a, b, segment_size=segment_size) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ab: sieve_segment(*ab, segment_size=segment_size), spans))
    return merge_tables(parts)


def _table(source) -> PsiCheckpointTable:
    if not isinstance(source, PsiCheckpointTable):
        raise PreconditionError("psi source must be a PsiCheckpointTable")
    return source


def psi_exact(x: float, table: PsiCheckpointTable) -> float:
    return _table(table).psi(x)


def delta(x: float, sigma0: float, table: PsiCheckpointTable) -> DeltaSample:
    if not 0 < sigma0 <= 1:
        raise PreconditionError(f"sigma0 must lie in (0, 1], got {sigma0}")
    p = psi_exact(x, table)
    d = p - x
    return DeltaSample(float(x), p, d, d / x**sigma0)


@dataclass(frozen=True)
class ExtremumRecord:
    """Result of a sup-scan of |Delta(x)| / x**sigma0.

    ``side`` is "right" for the value at x* and "left" for the limit x -> x*-.
    """

    x_star: float
    side: str
    sup: float
    delta_star: float
    max_normalized: float
    argmax: float
    min_normalized: float
    argmin: float
    candidates: int


def scan_extremes(table: PsiCheckpointTable, X: float, Y: float, sigma0: float, *, closed_right: bool = True) -> ExtremumRecord:
    """Supremum of |Delta(x)|/x^sigma0 over [X, Y] (or [X, Y) if not ``closed_right``).

    Between jumps (c - x)/x^sigma0 is strictly decreasing for c >= 0, so only
    endpoints and the two one-sided values at each jump need checking. Ties go
    to the largest x, left limit before right value.
    """
    if not 0 < sigma0 <= 1:
        raise PreconditionError(f"sigma0 must lie in (0, 1], got {sigma0}")
    if not 1 <= X <= Y:
        raise PreconditionError(f"need 1 <= X <= Y, got [{X}, {Y}]")
    table._check(np.array([X, Y]))
    xs = table.xs
    i0 = int(np.searchsorted(xs, X, side="right"))
    i1 = int(np.searchsorted(xs, Y, side="right" if closed_right else "left"))
    jx = xs[i0:i1].astype(np.float64)
    after = table.cum[i0:i1]
    before = np.concatenate(([table.cum[i0 - 1] if i0 > 0 else table.psi_at_lo], after[:-1])) if i1 > i0 else after

    cx = [np.array([X], dtype=np.float64)]
    cpsi = [np.array([table.psi(X)])]
    cside = [np.array([1], dtype=np.int8)]
    if jx.size:
        cx += [jx, jx]
        cpsi += [before, after]
        cside += [np.zeros(jx.size, np.int8), np.ones(jx.size, np.int8)]
    if Y > X:
        cx.append(np.array([Y], dtype=np.float64))
        if closed_right:
            cpsi.append(np.array([table.psi(Y)]))
            cside.append(np.array([1], dtype=np.int8))
        else:
            cpsi.append(np.array([table.psi_left(Y)]))
            cside.append(np.array([0], dtype=np.int8))
    x = np.concatenate(cx)
    p = np.concatenate(cpsi)
    side = np.concatenate(cside)
    order = np.lexsort((side, x))
    x, p, side = x[order], p[order], side[order]
    d = p - x
    norm = d / x**sigma0
    a = np.abs(norm)
    k = a.size - 1 - int(np.argmax(a[::-1]))
    kmax = a.size - 1 - int(np.argmax(norm[::-1]))
    kmin = a.size - 1 - int(np.argmin(norm[::-1]))
    return ExtremumRecord(
        x_star=float(x[k]),
        side="right" if side[k] else "left",
        sup=float(a[k]),
        delta_star=float(d[k]),
        max_normalized=float(norm[kmax]),
        argmax=float(x[kmax]),
        min_normalized=float(norm[kmin]),
        argmin=float(x[kmin]),
        candidates=int(a.size),
    )


def delta_stream(table: PsiCheckpointTable, xs, sigma0: float):
    xs = np.asarray(xs, dtype=np.float64)
    p = table.psi(xs)
    d = p - xs
    return xs, np.atleast_1d(p), d, d / xs**sigma0


def write_delta_csv(path, table: PsiCheckpointTable, xs, sigma0: float) -> None:
    x, p, d, n = delta_stream(table, xs, sigma0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "psi", "delta", "normalized"])
        for row in zip(x, np.atleast_1d(p), np.atleast_1d(d), np.atleast_1d(n)):
            w.writerow([fmt(v) for v in row])


def save_cache(path, table: PsiCheckpointTable) -> None:
    """Binary cache: 16-byte header then little-endian (u64 x, f64 weight) records.

    The header holds magic, version and the number of jump records; the range
    travels as two anchor records around the jumps, (lo, psi(lo)) first and
    (hi, psi(hi)) last.
    """
    rec = np.empty(len(table) + 2, dtype=_RECORD)
    rec[0] = (table.lo, table.psi_at_lo)
    rec["x"][1:-1] = table.xs
    rec["w"][1:-1] = table.weights
    rec[-1] = (table.hi, table.psi_at_hi)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, len(table)))
        fh.write(rec.tobytes())


def load_cache(path) -> PsiCheckpointTable:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ParseError("psi cache truncated")
    magic, version, count = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC:
        raise ParseError("not a psi cache (bad magic)")
    if version != CACHE_VERSION:
        raise ParseError(f"unsupported psi cache version {version}")
    body = raw[_HEADER.size :]
    if len(body) != (count + 2) * _RECORD.itemsize:
        raise ParseError("psi cache length does not match record count")
    rec = np.frombuffer(body, dtype=_RECORD)
    lo, psi_lo = int(rec["x"][0]), float(rec["w"][0])
    hi = int(rec["x"][-1])
    return PsiCheckpointTable.from_jumps(lo, hi, rec["x"][1:-1].astype(np.int64), rec["w"][1:-1].copy(), psi_lo)
