"""Gaussian-smoothed explicit formula, evaluated from the zeros and from Delta.

With K(a) = exp(-a^2 / 4k) / (2 sqrt(pi k)), the quantity

    U = (1/2 pi i) int_(2) H(s + i gamma0) exp(k s^2 + mu s) ds

is computed two ways:

* zero side:  U = sum_rho exp(k (rho - i gamma0)^2 + mu (rho - i gamma0)) + O(1)
* Delta side: U = int_0^inf Delta(e^t) e^{-i gamma0 t} ((mu - t)/(2k) - i gamma0) K(mu - t) dt

All values are reported in normalized units, i.e. multiplied by
exp(-sigma0 mu - sigma0^2 k), so that theorem-scale mu never overflows.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

import numpy as np

from ._numerics import csum, fmt
from .errors import (
    ConvergenceError,
    GuardError,
    HypothesisError,
    PreconditionError,
    RangeError,
)
from .zeros import ZeroSet, ZetaZero

MODES = ("exploration", "theorem")
DEFAULT_O1_ALLOWANCE = 5.0
DEFAULT_TAIL_TOL = 1e-12
GL_ORDER = 8
PIECE_TOL = 1e-9
MAX_REFINE = 6

_LOG_FLOAT_MAX = math.log(np.finfo(np.float64).max)


@dataclass(frozen=True)
class SmoothingParams:
    """(X, epsilon, sigma0, gamma0, k, mu); X is carried as log X so theorem-scale X fits."""

    log_x: float
    epsilon: float
    sigma0: float
    gamma0: float
    k: float
    mu: float
    k_overridden: bool = False
    mode: str = "exploration"

    @classmethod
    def build(cls, X: float | None = None, epsilon: float = 0.5, sigma0: float = 0.5, gamma0: float = 14.134725,
              *, log_x: float | None = None, k: float | None = None, mu: float | None = None,
              mu_fraction: float = 0.5, mode: str = "exploration") -> SmoothingParams:
        """Fill in k = epsilon^2 log X / 40 and mu at ``mu_fraction`` of the window unless given."""
        if log_x is None:
            if X is None or not X > 1:
                raise PreconditionError(f"X must exceed 1, got {X}")
            log_x = math.log(X)
        if not 0 < epsilon <= 1:
            raise PreconditionError(f"epsilon must lie in (0, 1], got {epsilon}")
        k_default = epsilon**2 * log_x / 40.0
        lo, hi = (1 + epsilon / 3) * log_x, (1 + 2 * epsilon / 3) * log_x
        if mu is None:
            mu = lo + mu_fraction * (hi - lo)
        return cls(log_x, epsilon, sigma0, gamma0, k_default if k is None else k, mu, k is not None, mode)

    def __post_init__(self):
        if not self.log_x > 0:
            raise PreconditionError("X must exceed 1")
        if not 0 < self.epsilon <= 1:
            raise PreconditionError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not 0.5 <= self.sigma0 < 1:
            raise PreconditionError(f"sigma0 must lie in [1/2, 1), got {self.sigma0}")
        if not self.gamma0 > 0:
            raise PreconditionError("gamma0 must be positive")
        if not self.k > 0:
            raise PreconditionError("k must be positive")
        if self.mode not in MODES:
            raise PreconditionError(f"mode must be one of {MODES}")
        lo, hi = self.mu_window
        if not lo * (1 - 1e-12) <= self.mu <= hi * (1 + 1e-12):
            raise PreconditionError(f"mu={self.mu} outside the window [{lo}, {hi}]")
        if self.mode == "theorem" and self.sigma0 < 0.5 + self.epsilon:
            raise HypothesisError(f"theorem mode needs sigma0 >= 1/2 + epsilon = {0.5 + self.epsilon}")

    @property
    def X(self) -> float:
        return math.exp(self.log_x) if self.log_x < _LOG_FLOAT_MAX else math.inf

    @property
    def mu_window(self) -> tuple[float, float]:
        return (1 + self.epsilon / 3) * self.log_x, (1 + 2 * self.epsilon / 3) * self.log_x

    @property
    def log_norm(self) -> float:
        """log of the normalization exp(sigma0 mu + sigma0^2 k)."""
        return self.sigma0 * self.mu + self.sigma0**2 * self.k

    def with_mu(self, mu: float) -> SmoothingParams:
        return replace(self, mu=mu)

    def mu_grid(self, points: int) -> list[float]:
        lo, hi = self.mu_window
        if points == 1:
            return [0.5 * (lo + hi)]
        return [lo + (hi - lo) * i / (points - 1) for i in range(points)]


class Side(str, Enum):
    ZERO_SIDE = "zero_side"
    DELTA_SIDE = "delta_side"


@dataclass(frozen=True)
class NormalizedU:
    value: complex
    error_budget: float
    side: Side
    details: dict = field(default_factory=dict, compare=False)


# -- kernel -------------------------------------------------------------------

def gaussian_kernel(y: float, k: float, mu: float) -> float:
    """exp(-(mu - log y)^2 / 4k) / (2 sqrt(pi k))."""
    a = mu - math.log(y)
    return math.exp(-a * a / (4 * k)) / (2 * math.sqrt(math.pi * k))


@dataclass(frozen=True)
class MellinCheck:
    quadrature: complex
    closed_form: float
    abs_diff: float
    T_line: float
    step: float


def kernel_mellin_check(y: float, k: float, mu: float, T_line: float | None = None,
                        step: float | None = None, tail_tol: float = 1e-12) -> MellinCheck:
    """Trapezoid quadrature of (1/2 pi) int e^{k s^2 + mu s} y^{-s} dt on s = 2 + it, |t| <= T_line.

    The integrand is a Gaussian in t, so the trapezoid rule converges
    geometrically once the step resolves the oscillation; the tail beyond
    T_line is guarded below ``tail_tol``.
    """
    if not (y > 0 and k > 0):
        raise PreconditionError("need y > 0 and k > 0")
    a = mu - math.log(y)
    log_amp = 4 * k + 2 * a  # |integrand| = exp(log_amp - k t^2)
    omega = 4 * k + a
    if T_line is None:
        T_line = math.sqrt(max(log_amp - math.log(tail_tol), 1.0) / k) + 1.0
    tail = math.exp(log_amp - k * T_line**2) / (2 * k * T_line) / math.pi
    if tail > tail_tol:
        raise GuardError(f"truncation T_line={T_line} leaves a tail of {tail:.3g} > {tail_tol}")
    if step is None:
        step = min(0.25, 2 * math.pi / (abs(omega) + math.sqrt(160 * k)))
    n = int(math.ceil(T_line / step))
    t = np.linspace(-n * step, n * step, 2 * n + 1)
    s = 2.0 + 1j * t
    vals = np.exp(k * s * s + a * s)
    quad = step * csum(vals) / (2 * math.pi)
    closed = gaussian_kernel(y, k, mu)
    return MellinCheck(quad, closed, abs(quad - closed), T_line, step)


# -- zero side ----------------------------------------------------------------

def term_exponent(sigma, gamma, params: SmoothingParams):
    """Real and imaginary parts of k(rho - i g0)^2 + mu(rho - i g0) - log_norm."""
    sigma = np.asarray(sigma, dtype=np.float64)
    d = np.asarray(gamma, dtype=np.float64) - params.gamma0
    k, mu, s0 = params.k, params.mu, params.sigma0
    re = k * (sigma * sigma - s0 * s0 - d * d) + mu * (sigma - s0)
    im = (2 * k * sigma + mu) * d
    return re, im


def normalized_terms(sigma, gamma, params: SmoothingParams) -> np.ndarray:
    re, im = term_exponent(sigma, gamma, params)
    return np.exp(re) * np.exp(1j * np.fmod(im, 2 * math.pi))


def truncation_height(k: float, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Gamma_cut with exp(-k Gamma_cut^2 / 2) = tail_tol."""
    return math.sqrt(2 * math.log(1 / tail_tol) / k)


def _zeros_per_unit(T: float) -> float:
    # generous majorant of N(T+1) - N(T) from the Riemann-von Mangoldt formula
    return math.log(max(T, 3.0)) + 6.0


def zero_tail_bound(params: SmoothingParams, gamma_cut: float, sigma_cap: float) -> float:
    """Normalized bound on zeros (and conjugates) beyond gamma0 + gamma_cut."""
    s0 = params.sigma0
    base = params.k * (sigma_cap**2 - s0**2) + params.mu * (sigma_cap - s0)
    total = 0.0
    n = 0
    while True:
        d = gamma_cut + n
        e = base - params.k * d * d
        term = _zeros_per_unit(params.gamma0 + d + 1) * math.exp(e) if e > -745 else 0.0
        total += term
        if term < 1e-300 or (n > 10 and term < 1e-20 * total):
            break
        n += 1
    return 2 * total


def u_from_zeros(zs: ZeroSet, params: SmoothingParams, *, o1_allowance: float = DEFAULT_O1_ALLOWANCE,
                 tail_tol: float = DEFAULT_TAIL_TOL, gamma_cut: float | None = None) -> NormalizedU:
    """Sum over stored zeros with gamma <= gamma0 + gamma_cut and their conjugates."""
    cut = truncation_height(params.k, tail_tol) if gamma_cut is None else gamma_cut
    zs.require_complete(params.gamma0 + cut, "zero-side sum")
    n = int(np.searchsorted(zs.gammas, params.gamma0 + cut, side="right"))
    s, g = zs.sigmas[:n], zs.gammas[:n]
    terms = np.concatenate((normalized_terms(s, g, params), normalized_terms(s, -g, params)))
    value = csum(terms)
    sigma_cap = max(params.sigma0, float(zs.sigmas.max()) if len(zs) else params.sigma0)
    tail = zero_tail_bound(params, cut, sigma_cap)
    o1 = o1_allowance * math.exp(-params.log_norm)
    return NormalizedU(value, o1 + tail, Side.ZERO_SIDE,
                       {"zeros_used": n, "gamma_cut": cut, "tail_bound": tail, "o1_budget": o1})


def zero_term_rows(zs: ZeroSet, params: SmoothingParams):
    """Per-zero (sigma, gamma, class, normalized_modulus, phase)."""
    re, im = term_exponent(zs.sigmas, zs.gammas, params)
    phase = np.angle(np.exp(1j * np.fmod(im, 2 * math.pi)))
    return [(z.sigma, z.gamma, f"Z{class_of(z.sigma, z.gamma, params)}", math.exp(r), p)
            for z, r, p in zip(zs.zeros, re, phase)]


# -- Delta side ---------------------------------------------------------------

class SyntheticDelta:
    """Delta(x) = f(x) for a smooth vectorized ``f``; no jumps.

    ``ZeroInducedDelta`` builds f from zeros via -2 Re(x^rho / rho).
    """

    lo = 1.0
    hi = math.inf

    def __init__(self, f: Callable[[np.ndarray], np.ndarray]):
        self.f = f

    def pieces(self, t_lo: float, t_hi: float):
        return np.array([t_lo, t_hi]), np.zeros(1)

    def delta(self, t, const):
        return self.f(np.exp(t))


class ZeroInducedDelta(SyntheticDelta):
    def __init__(self, zeros):
        rhos = np.array([complex(z.sigma, z.gamma) for z in zeros], dtype=np.complex128)
        self.rhos = rhos

        def f(x):
            logx = np.log(x)[..., None]
            return -2.0 * np.real(np.exp(rhos * logx) / rhos).sum(axis=-1)

        super().__init__(f)


def _gl_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _integrand(source, t, const, params: SmoothingParams):
    a = params.mu - t
    k = params.k
    log_kern = -a * a / (4 * k) - params.log_norm
    kern = np.exp(log_kern) / (2 * math.sqrt(math.pi * k))
    factor = a / (2 * k) - 1j * params.gamma0
    phase = np.exp(-1j * np.fmod(params.gamma0 * t, 2 * math.pi))
    return source.delta(t, const) * phase * factor * kern


def _gl_panels(source, lo, hi, const, params, x, w):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = mid[:, None] + half[:, None] * x[None, :]
    vals = _integrand(source, t, const[:, None], params)
    return (vals * w[None, :]).sum(axis=1) * half


def integrate_pieces(source, t_lo: float, t_hi: float, params: SmoothingParams, *, order: int = GL_ORDER,
                     tol: float = PIECE_TOL, max_refine: int = MAX_REFINE) -> tuple[complex, float, int]:
    """Piecewise Gauss-Legendre over [t_lo, t_hi] between jumps of the Delta source.

    Pieces wider than min(0.1 sqrt(k), 1/gamma0) are split first; each piece is
    then accepted when one bisection changes it by at most ``tol`` relative
    (plus a tiny absolute floor), otherwise it is bisected again.
    Returns (value, error estimate, number of panels).
    """
    if t_hi <= t_lo:
        return 0j, 0.0, 0
    edges, consts = source.pieces(t_lo, t_hi)
    lo, hi = edges[:-1], edges[1:]
    hmax = min(0.1 * math.sqrt(params.k), 1.0 / max(params.gamma0, 1.0))
    nsub = np.maximum(np.ceil((hi - lo) / hmax).astype(np.int64), 1)
    if np.any(nsub > 1):
        idx = np.repeat(np.arange(lo.size), nsub)
        j = np.arange(idx.size) - np.repeat(np.cumsum(nsub) - nsub, nsub)
        width = (hi - lo)[idx] / nsub[idx]
        lo, hi, consts = lo[idx] + j * width, lo[idx] + (j + 1) * width, consts[idx]
        hi = np.where(j == nsub[idx] - 1, edges[1:][idx], hi)
    x, w = _gl_nodes(order)
    accepted = []
    err_total = 0.0
    panels = 0
    coarse = _gl_panels(source, lo, hi, consts, params, x, w)
    for _ in range(max_refine + 1):
        mid = 0.5 * (lo + hi)
        left = _gl_panels(source, lo, mid, consts, params, x, w)
        right = _gl_panels(source, mid, hi, consts, params, x, w)
        fine = left + right
        diff = np.abs(fine - coarse)
        ok = diff <= tol * np.abs(fine) + 1e-18
        accepted.append(fine[ok])
        err_total += float(diff[ok].sum())
        panels += int(ok.sum())
        if ok.all():
            break
        bad = ~ok
        lo, mid, hi, consts = lo[bad], mid[bad], hi[bad], consts[bad]
        lo, hi = np.concatenate((lo, mid)), np.concatenate((mid, hi))
        consts = np.concatenate((consts, consts))
        coarse = np.concatenate((left[bad], right[bad]))
    else:
        raise ConvergenceError(f"{lo.size} quadrature pieces did not converge after {max_refine} refinements")
    return csum(np.concatenate(accepted)), err_total, panels


def lower_tail_stated_bound(params: SmoothingParams) -> float:
    """2 gamma0 X exp(-eps^2 log^2 X / 36k), the stated bound on |int_1^X|, as a log."""
    return math.log(2 * params.gamma0) + params.log_x - (params.epsilon * params.log_x) ** 2 / (36 * params.k)


def upper_tail_stated_bound(params: SmoothingParams) -> float:
    """log of 2 gamma0 int_{(1+eps) log X}^inf exp(t - 10/(3 eps) (t - mu)) dt."""
    c = 10.0 / (3.0 * params.epsilon)
    T = (1 + params.epsilon) * params.log_x
    return math.log(2 * params.gamma0) + c * params.mu - (c - 1) * T - math.log(c - 1)


def _log_half_erfc(z: float) -> float:
    if z < 5.0:
        return math.log(0.5 * math.erfc(z))
    # erfc(z) <= exp(-z^2) / (z sqrt(pi)) for z > 0
    return -z * z - math.log(2 * z * math.sqrt(math.pi))


def upper_tail_direct_bound(params: SmoothingParams) -> float:
    """Bound on the normalized contribution of t > (1+eps) log X using |Delta(x)| <= x.

    Uses int_T^inf e^t (gamma0 + (t - mu)/2k) K(mu - t) dt in closed form.
    """
    k, mu = params.k, params.mu
    T = (1 + params.epsilon) * params.log_x
    u0 = T - mu - 2 * k
    if u0 <= 0:
        raise PreconditionError("mu too close to the upper segment for the tail bound")
    z = u0 / (2 * math.sqrt(k))
    base = mu + k - params.log_norm
    a = math.log(params.gamma0 + 1) + _log_half_erfc(z)
    b = -z * z - math.log(2 * math.sqrt(math.pi * k))
    return math.exp(base + a) + math.exp(base + b)


SEGMENTS = ("lower_tail", "inner", "upper_tail")


def u_from_delta(source, params: SmoothingParams, segment: str = "all", *, order: int = GL_ORDER,
                 tol: float = PIECE_TOL) -> NormalizedU:
    """Delta-side U over ``segment`` in {"lower_tail", "inner", "upper_tail", "all"}.

    ``lower_tail`` is [1, X], ``inner`` is [X, X^(1+eps)], both integrated; the
    upper tail beyond X^(1+eps) is never integrated, only bounded, and that bound
    goes into the error budget.
    """
    if segment not in SEGMENTS + ("all",):
        raise PreconditionError(f"unknown segment {segment!r}")
    t_x = params.log_x
    t_top = (1 + params.epsilon) * params.log_x
    value = 0j
    budget = 0.0
    details: dict = {}
    if segment in ("lower_tail", "all"):
        if source.lo > 1:
            raise RangeError("lower tail needs psi from x = 1")
        v, e, p = integrate_pieces(source, 0.0, t_x, params, order=order, tol=tol)
        value += v
        budget += e
        details.update(lower_value=v, lower_panels=p)
    if segment in ("inner", "all"):
        v, e, p = integrate_pieces(source, t_x, t_top, params, order=order, tol=tol)
        value += v
        budget += e
        details.update(inner_value=v, inner_panels=p)
    if segment in ("upper_tail", "all"):
        stated = math.exp(upper_tail_stated_bound(params) - params.log_norm) / (2 * math.sqrt(math.pi * params.k))
        direct = upper_tail_direct_bound(params)
        budget += max(stated, direct)
        details.update(upper_stated=stated, upper_direct=direct)
    return NormalizedU(value, budget, Side.DELTA_SIDE, details)


def segment_report(source, params: SmoothingParams) -> list[tuple[str, complex, float]]:
    return [(seg, (u := u_from_delta(source, params, seg)).value, u.error_budget) for seg in SEGMENTS]


# -- classification -----------------------------------------------------------

@dataclass(frozen=True)
class ZeroClassification:
    z1: tuple[ZetaZero, ...]
    z2: tuple[ZetaZero, ...]
    z3: tuple[ZetaZero, ...]
    z4: tuple[ZetaZero, ...]
    params: SmoothingParams
    conjugates: tuple[ZetaZero, ...] = ()

    def classes(self) -> dict[int, tuple[ZetaZero, ...]]:
        return {1: self.z1, 2: self.z2, 3: self.z3, 4: self.z4}

    @property
    def z4_bound(self) -> float:
        """0.71 (eps/8) log gamma0, the square bound applied to Z4 for an exposed zero."""
        p = self.params
        return 0.71 * (p.epsilon / 8) * math.log(p.gamma0)


def class_of(sigma: float, gamma: float, params: SmoothingParams) -> int:
    d = abs(gamma - params.gamma0)
    e16 = params.epsilon / 16
    if d > math.log(params.gamma0):
        return 1
    if d >= e16:
        return 2
    return 4 if sigma >= params.sigma0 - e16 else 3


def classify_zeros(zs: ZeroSet, params: SmoothingParams) -> ZeroClassification:
    """Partition into Z1..Z4.

    Z2 is closed at both ends; at |gamma - gamma0| = eps/16 a zero is in Z2;
    at sigma = sigma0 - eps/16 it is in Z4. Conjugate zeros are carried along
    separately: they sit at distance gamma + gamma0 and count towards Z1 sums.
    """
    zs.require_complete(params.gamma0 + math.log(params.gamma0), "classification")
    buckets: dict[int, list] = {1: [], 2: [], 3: [], 4: []}
    for z in zs.zeros:
        buckets[class_of(z.sigma, z.gamma, params)].append(z)
    return ZeroClassification(*(tuple(buckets[i]) for i in (1, 2, 3, 4)), params=params, conjugates=zs.zeros)


@dataclass(frozen=True)
class ClassSum:
    class_id: int
    value: complex
    bound: float
    passed: bool
    count: int


def stated_class_bound(class_id: int, params: SmoothingParams) -> float:
    """Normalized upper bounds stated for the Z1, Z2, Z3 sums; Z4 has none (inf)."""
    e, lx, g0 = params.epsilon, params.log_x, params.gamma0
    if class_id == 1:
        return 2 * math.exp(-(e**4) / 3200 * lx)
    if class_id == 2:
        return 2 * math.log(g0) ** 2 * math.exp(-(e**4) / 11000 * lx)
    if class_id == 3:
        return math.log(g0) * math.exp(-e / 16 * lx)
    if class_id == 4:
        return math.inf
    raise PreconditionError(f"class id must be 1..4, got {class_id}")


def class_sum(classification: ZeroClassification, class_id: int, params: SmoothingParams | None = None) -> ClassSum:
    """Normalized sum over one class; Z1 also carries every conjugate term.

    ``params`` may differ from the classification's in mu only (used for mu grids).
    """
    p = classification.params if params is None else params
    members = classification.classes()[class_id] if class_id in (1, 2, 3, 4) else None
    if members is None:
        raise PreconditionError(f"class id must be 1..4, got {class_id}")
    s = np.array([z.sigma for z in members], dtype=np.float64)
    g = np.array([z.gamma for z in members], dtype=np.float64)
    terms = normalized_terms(s, g, p)
    if class_id == 1 and classification.conjugates:
        cs = np.array([z.sigma for z in classification.conjugates])
        cg = np.array([z.gamma for z in classification.conjugates])
        terms = np.concatenate((terms, normalized_terms(cs, -cg, p)))
    value = csum(terms)
    bound = stated_class_bound(class_id, p)
    return ClassSum(class_id, value, bound, abs(value) <= bound, len(members))


# -- CSV ----------------------------------------------------------------------

def write_terms_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma", "gamma", "class", "normalized_modulus", "phase"])
        for s, g, c, m, ph in rows:
            w.writerow([fmt(s), fmt(g), c, fmt(m), fmt(ph)])


def write_segments_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["segment", "value_re", "value_im", "error_budget"])
        for seg, v, b in rows:
            w.writerow([seg, fmt(v.real), fmt(v.imag), fmt(b)])
