"""Numeric audit of the oscillation argument, the oscillation hunt and historical bounds.

The audit evaluates every inequality of the argument for concrete parameters
and a concrete zero set, in normalized units (divided by
exp(sigma0 mu + sigma0^2 k)) unless an entry says otherwise. Entries comparing
astronomically large quantities (X against powers of gamma0) are compared as
logarithms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import smoothed as sm
from ._numerics import fmt
from .errors import DomainError, HypothesisError, PreconditionError
from .psi import PsiCheckpointTable, scan_extremes
from .zeros import ZeroSet

# (name, direction, formula anchor)
ENTRIES = (
    ("X_ge_gamma0_pow_12000_eps3", ">=", "log X >= 12000 eps^-3 log gamma0"),
    ("gamma0_gt_5.5_pow_inv_eps", ">", "gamma0 > 5.5^(1/eps)"),
    ("X_gt_gamma0_pow_10", ">", "log X > 10 log gamma0"),
    ("lower_tail_le_1", "<=", "|int_1^X| <= 1"),
    ("upper_tail_le_1", "<=", "|int_{X^(1+eps)}^inf| <= 1"),
    ("middle_integral_le_main_over_gamma0_eps", "<=", "|int_X^{X^(1+eps)}| / (2 sqrt(pi k)) <= e^(sigma0 mu + sigma0^2 k) / gamma0^eps"),
    ("Z1_sum_le_stated_bound", "<=", "|sum_Z1| <= 2 X^(-eps^4/3200)"),
    ("Z2_sum_le_stated_bound", "<=", "|sum_Z2| <= 2 log^2 gamma0 X^(-eps^4/11000)"),
    ("Z3_sum_le_stated_bound", "<=", "|sum_Z3| <= log gamma0 X^(-eps/16)"),
    ("non_Z4_sum_le_main_over_gamma0_eps", "<=", "|sum_{not Z4}| <= gamma0^-eps"),
    ("Z4_count_le_eps_over_11_log_gamma0", "<=", "|Z4| <= (eps/11) log gamma0"),
    ("powersum_factor_ge_gamma0_pow_neg_0.35eps", ">=", "(1/(4e(3/eps+3)))^|Z4| >= gamma0^(-0.35 eps)"),
    ("final_gamma0_eps_lt_3_gamma0_pow_0.35eps", "<", "gamma0^eps < 3 gamma0^(0.35 eps)"),
)
ENTRY_NAMES = tuple(e[0] for e in ENTRIES)
HYPOTHESIS_ENTRIES = ENTRY_NAMES[:3]

_OPS = {
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


@dataclass(frozen=True)
class AuditEntry:
    name: str
    direction: str
    lhs: float
    rhs: float
    passed: bool
    anchor: str


@dataclass
class AuditReport:
    entries: list[AuditEntry]
    mode: str
    observations: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def __getitem__(self, name: str) -> AuditEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def render(self) -> str:
        width = max(len(n) for n in ENTRY_NAMES)
        lines = [f"audit ({self.mode} mode)"]
        for e in self.entries:
            mark = "PASS" if e.passed else "FAIL"
            lines.append(f"  {mark}  {e.name:<{width}}  {e.lhs:.6g} {e.direction} {e.rhs:.6g}")
        if self.observations:
            lines.append("observations:")
            lines += [f"  {k} = {v:.6g}" for k, v in self.observations.items()]
        if self.notes:
            lines.append("notes:")
            lines += [f"  - {n}" for n in self.notes]
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["name", "direction", "lhs", "rhs", "pass", "anchor"])
            for e in self.entries:
                w.writerow([e.name, e.direction, fmt(e.lhs), fmt(e.rhs), "true" if e.passed else "false", e.anchor])


@dataclass(frozen=True)
class RelaxationChain:
    """log values of (1/(4e(3/eps+3)))^|Z4|, 45^(-(eps/11) log g0), 1.42^(-eps log g0), g0^(-0.35 eps)."""

    log_factor: float
    log_45: float
    log_142: float
    log_final: float

    @property
    def factor_ge_45(self) -> bool:
        return self.log_factor >= self.log_45

    @property
    def step_45_ge_final(self) -> bool:
        return self.log_45 >= self.log_final

    @property
    def holds(self) -> bool:
        return self.factor_ge_45 and self.step_45_ge_final

    @property
    def step_142_ge_final(self) -> bool:
        return self.log_142 >= self.log_final


def z4_count_cap(eps: float, gamma0: float) -> int:
    return math.floor(eps / 11 * math.log(gamma0))


def powersum_log_factor(eps: float, z4: int) -> float:
    return -z4 * math.log(4 * math.e * (3 / eps + 3))


def relaxation_chain(eps: float, gamma0: float, z4: int | None = None) -> RelaxationChain:
    if z4 is None:
        z4 = z4_count_cap(eps, gamma0)
    lg = math.log(gamma0)
    return RelaxationChain(
        powersum_log_factor(eps, z4),
        -(eps / 11) * lg * math.log(45),
        -eps * lg * math.log(1.42),
        -0.35 * eps * lg,
    )


def _window_mass(params: sm.SmoothingParams) -> float:
    """Mass of N(mu + 2 sigma0 k, 2k) on [log X, (1+eps) log X]."""
    c = params.mu + 2 * params.sigma0 * params.k
    s = math.sqrt(4 * params.k)
    a = (params.log_x - c) / s
    b = ((1 + params.epsilon) * params.log_x - c) / s
    return 0.5 * (math.erfc(a) - math.erfc(b))


def audit(params: sm.SmoothingParams, zs: ZeroSet, mu_grid: list[float] | None = None, *,
          psi: PsiCheckpointTable | None = None) -> AuditReport:
    """Evaluate every ledger entry for ``params`` and ``zs``.

    Class sums are maximized over ``mu_grid`` (default |Z4| + 1 equally spaced
    points across the mu window). In theorem mode the first three entries are
    hypotheses and a failure raises HypothesisError; in exploration mode every
    entry is only recorded.
    """
    p = params
    e, g0, lx = p.epsilon, p.gamma0, p.log_x
    lg = math.log(g0)
    cls = sm.classify_zeros(zs, p)
    z4 = len(cls.z4)
    if mu_grid is None:
        mu_grid = p.mu_grid(z4 + 1)
    grid = [p.with_mu(mu) for mu in mu_grid]
    if not grid:
        raise PreconditionError("empty mu grid")

    values: dict[str, tuple[float, float]] = {}
    values["X_ge_gamma0_pow_12000_eps3"] = (lx, 12000 / e**3 * lg)
    values["gamma0_gt_5.5_pow_inv_eps"] = (g0, 5.5 ** (1 / e))
    values["X_gt_gamma0_pow_10"] = (lx, 10 * lg)

    notes: list[str] = []
    obs: dict[str, float] = {}
    if psi is not None and psi.lo == 1 and p.X <= psi.hi:
        worst = 0.0
        for q in grid:
            u = sm.u_from_delta(psi, q, "lower_tail")
            worst = max(worst, abs(u.value) * math.exp(q.log_norm) * 2 * math.sqrt(math.pi * q.k))
        values["lower_tail_le_1"] = (worst, 1.0)
        notes.append("lower_tail_le_1: lhs integrated numerically from psi")
    else:
        worst = max(math.exp(min(sm.lower_tail_stated_bound(q), 700.0)) for q in grid)
        values["lower_tail_le_1"] = (worst, 1.0)
        notes.append("lower_tail_le_1: lhs is the stated intermediate bound 2 gamma0 X exp(-eps^2 log^2 X / 36k)")
    values["upper_tail_le_1"] = (max(math.exp(min(sm.upper_tail_stated_bound(q), 700.0)) for q in grid), 1.0)

    mid = max((g0 + 20 / e) / g0 ** (1 + e) * _window_mass(q) for q in grid)
    values["middle_integral_le_main_over_gamma0_eps"] = (mid, g0**-e)
    notes.append("middle integral: the Gaussian integral over the real line equals 2 sqrt(pi k) e^(sigma0 mu + sigma0^2 k) "
                 "times the window mass, so the stated chain loses a factor 2 in its last step; lhs keeps it")

    sums = {c: [sm.class_sum(cls, c, q) for q in grid] for c in (1, 2, 3, 4)}
    for c in (1, 2, 3):
        name = f"Z{c}_sum_le_stated_bound"
        values[name] = (max(abs(s.value) for s in sums[c]), sums[c][0].bound)
    non_z4 = max(abs(sums[1][i].value + sums[2][i].value + sums[3][i].value) for i in range(len(grid)))
    values["non_Z4_sum_le_main_over_gamma0_eps"] = (non_z4, g0**-e)
    values["Z4_count_le_eps_over_11_log_gamma0"] = (float(z4), e / 11 * lg)
    values["powersum_factor_ge_gamma0_pow_neg_0.35eps"] = (math.exp(powersum_log_factor(e, z4)), g0 ** (-0.35 * e))
    values["final_gamma0_eps_lt_3_gamma0_pow_0.35eps"] = (g0**e, 3 * g0 ** (0.35 * e))

    entries = []
    for name, direction, anchor in ENTRIES:
        lhs, rhs = values[name]
        entries.append(AuditEntry(name, direction, float(lhs), float(rhs), bool(_OPS[direction](lhs, rhs)), anchor))

    if p.mode == "theorem":
        failed = [x.name for x in entries if x.name in HYPOTHESIS_ENTRIES and not x.passed]
        if failed:
            raise HypothesisError(f"theorem hypotheses fail: {', '.join(failed)}")

    chain = relaxation_chain(e, g0, z4)
    obs["z4_count"] = float(z4)
    obs["z4_square_bound"] = cls.z4_bound
    obs["z4_sum_grid_max"] = max(abs(s.value) for s in sums[4])
    obs["z4_lower_factor"] = math.exp(chain.log_factor)
    obs["z4_lower_45"] = math.exp(chain.log_45)
    obs["z4_lower_142"] = math.exp(chain.log_142)
    obs["z4_lower_final"] = math.exp(chain.log_final)
    obs["z4_upper_3_over_gamma0_eps"] = 3 * g0**-e
    obs["mu_grid_points"] = float(len(grid))
    obs["z1_exponent_gap_sigma0k2_minus_sigma0sq_k"] = p.sigma0 * p.k**2 - p.sigma0**2 * p.k
    notes.append("Z1 bound: stated final exponent sigma0 mu + sigma0 k^2; normalized units use sigma0 mu + sigma0^2 k "
                 "(gap reported as z1_exponent_gap_sigma0k2_minus_sigma0sq_k)")
    return AuditReport(entries, p.mode, obs, notes)


# -- oscillation hunt -----------------------------------------------------------

@dataclass(frozen=True)
class OscillationClaim:
    X: float
    epsilon: float
    sigma0: float
    gamma0: float
    c2: float = 1.0

    def __post_init__(self):
        if not self.X >= 1:
            raise PreconditionError("X must be >= 1")
        if not 0 <= self.epsilon <= 1:
            raise PreconditionError("epsilon must lie in [0, 1]")
        if self.c2 < 0:
            raise PreconditionError("c2 must be non-negative")

    @property
    def interval(self) -> tuple[float, float]:
        hi = self.X ** (1 + self.epsilon)
        r = round(hi)
        if abs(hi - r) <= 1e-9 * hi:
            hi = float(r)
        return float(self.X), hi

    @property
    def normalized_threshold(self) -> float:
        """Threshold on |Delta(x)| / x^sigma0."""
        return self.c2 / self.gamma0 ** (1 + self.epsilon)

    def threshold(self, x: float) -> float:
        return self.normalized_threshold * x**self.sigma0


@dataclass(frozen=True)
class HuntResult:
    found: bool
    x_star: float
    side: str
    max_normalized: float
    threshold: float
    recheck: float
    rel_err: float


def psi_from_scratch(n: int) -> float:
    """psi(n) by a fresh bytearray sieve and exactly rounded summation."""
    n = int(n)
    if n < 2:
        return 0.0
    flags = bytearray([1]) * (n + 1)
    flags[0] = flags[1] = 0
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p :: p] = bytes(len(range(p * p, n + 1, p)))
    terms = []
    for p in range(2, n + 1):
        if flags[p]:
            lp = math.log(p)
            q = p
            while q <= n:
                terms.append(lp)
                q *= p
    return math.fsum(terms)


def oscillation_hunt(claim: OscillationClaim, table: PsiCheckpointTable) -> HuntResult:
    X, Y = claim.interval
    rec = scan_extremes(table, X, Y, claim.sigma0)
    found = rec.sup > claim.normalized_threshold
    x = rec.x_star
    if rec.side == "left":
        psi = psi_from_scratch(math.ceil(x) - 1)
    else:
        psi = psi_from_scratch(math.floor(x))
    recheck = abs(psi - x) / x**claim.sigma0
    rel = abs(recheck - rec.sup) / max(abs(recheck), 1e-300)
    return HuntResult(found, x, rec.side, rec.sup, claim.normalized_threshold, recheck, rel)


# -- historical bounds --------------------------------------------------------

@dataclass(frozen=True)
class HistoricalBounds:
    """Natural logs of the three lower bounds for |Delta| at x = X."""

    log_turan: float
    log_pintz: float
    log_main: float

    @property
    def values(self) -> tuple[float, float, float]:
        return tuple(math.exp(v) if v < 709 else math.inf for v in (self.log_turan, self.log_pintz, self.log_main))


def historical_bounds(X: float | None, sigma0: float, gamma0: float, epsilon: float, *, C2: float = 1.0,
                      c2: float = 1.0, log_x: float | None = None) -> HistoricalBounds:
    if log_x is None:
        if X is None or X <= 0:
            raise DomainError("X must be positive")
        log_x = math.log(X)
    if log_x <= math.exp(math.e):
        raise DomainError("iterated logarithms need X > e^(e^e)")
    l2 = math.log(log_x)
    l3 = math.log(l2)
    rho = math.hypot(sigma0, gamma0)
    turan = sigma0 * log_x - 10 * log_x / l2 * math.log(rho) - C2 * log_x * l3 / l2
    pintz = math.log(c2) + sigma0 * log_x - 50 * math.log(gamma0)
    main = math.log(c2) + sigma0 * log_x - (1 + epsilon) * math.log(gamma0)
    return HistoricalBounds(turan, pintz, main)


def relaxation_grid(n_eps: int = 50, n_gamma: int = 50) -> list[tuple[float, float, RelaxationChain]]:
    """The chain on eps in [0.05, 1] (linear) x gamma0 in [10, 1e6] (geometric)."""
    out = []
    for e in np.linspace(0.05, 1.0, n_eps):
        for g in np.geomspace(10.0, 1e6, n_gamma):
            out.append((float(e), float(g), relaxation_chain(float(e), float(g))))
    return out
