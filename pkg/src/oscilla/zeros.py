"""Sets of nontrivial zeta zeros: ingestion, counting, exposure and chain search.

Only zeros with gamma > 0 are stored; conjugates are implied. A ZeroSet knows
the height ``max_gamma_complete`` up to which it claims to hold every zero, and
refuses to answer questions that reach beyond it.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import HypothesisError, IncompletenessError, ParseError, PreconditionError, ValidationError

DEFAULT_T0 = 100.0
DEFAULT_C = 100.0
SQUARE_CONSTANT = 0.71


class Source(str, Enum):
    DATASET = "dataset"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True, order=False)
class ZetaZero:
    sigma: float
    gamma: float
    source: Source = Source.DATASET

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise ValidationError(f"sigma={self.sigma} outside (0, 1)")
        if not self.gamma > 0.0:
            raise ValidationError(f"gamma={self.gamma} must be positive")

    def same_point(self, other: ZetaZero) -> bool:
        return self.sigma == other.sigma and self.gamma == other.gamma


def _sort_key(z: ZetaZero):
    return (z.gamma, -z.sigma)


@dataclass(frozen=True, eq=False)
class ZeroSet:
    zeros: tuple[ZetaZero, ...]
    max_gamma_complete: float
    sigmas: np.ndarray = field(init=False, repr=False)
    gammas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        zs = tuple(self.zeros)
        if any(_sort_key(a) > _sort_key(b) for a, b in zip(zs, zs[1:])):
            raise ValidationError("zeros must be sorted by gamma ascending, ties by sigma descending")
        object.__setattr__(self, "zeros", zs)
        s = np.array([z.sigma for z in zs], dtype=np.float64)
        g = np.array([z.gamma for z in zs], dtype=np.float64)
        s.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "sigmas", s)
        object.__setattr__(self, "gammas", g)

    @classmethod
    def from_zeros(cls, zeros: Iterable[ZetaZero], max_gamma_complete: float) -> ZeroSet:
        return cls(tuple(sorted(zeros, key=_sort_key)), float(max_gamma_complete))

    def __len__(self):
        return len(self.zeros)

    def __iter__(self):
        return iter(self.zeros)

    def __eq__(self, other):
        if not isinstance(other, ZeroSet):
            return NotImplemented
        return self.zeros == other.zeros and self.max_gamma_complete == other.max_gamma_complete

    @property
    def source(self) -> Source:
        if any(z.source is Source.SYNTHETIC for z in self.zeros):
            return Source.SYNTHETIC
        return Source.DATASET

    def require_complete(self, height: float, what: str = "query") -> None:
        if height > self.max_gamma_complete:
            raise IncompletenessError(
                f"{what} needs zeros up to height {height:.6g}, set is complete only to {self.max_gamma_complete:.6g}"
            )

    def index_of(self, z: ZetaZero) -> int:
        i = bisect.bisect_left(self.gammas, z.gamma)
        while i < len(self.zeros) and self.zeros[i].gamma == z.gamma:
            if self.zeros[i].sigma == z.sigma:
                return i
            i += 1
        raise PreconditionError(f"zero {z.sigma}+{z.gamma}i is not in the set")


# -- text format ------------------------------------------------------------

def parse_zeros(text: str, *, fmt: str = "text", complete_to: float | None = None) -> ZeroSet:
    """Parse the zero file format.

    ``fmt="text"``: '#' comments, a mandatory ``#complete_to <h>`` directive,
    data lines ``gamma`` (sigma = 1/2) or ``sigma gamma`` in ascending gamma.
    ``fmt="odlyzko"``: bare ordinates, one per line, no directive; the
    completeness height must be passed as ``complete_to``.
    """
    if fmt not in ("text", "odlyzko"):
        raise PreconditionError(f"unknown zero file format {fmt!r}")
    height = complete_to
    source = Source.DATASET
    zeros = []
    last = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            directive = line[1:].split()
            if directive and directive[0] == "complete_to":
                if len(directive) != 2:
                    raise ParseError("malformed #complete_to directive", lineno)
                try:
                    height = float(directive[1])
                except ValueError:
                    raise ParseError(f"bad height {directive[1]!r}", lineno) from None
            elif directive and directive[0] == "source" and len(directive) == 2:
                try:
                    source = Source(directive[1])
                except ValueError:
                    raise ParseError(f"unknown source {directive[1]!r}", lineno) from None
            continue
        parts = line.split()
        if len(parts) not in (1, 2) or (fmt == "odlyzko" and len(parts) != 1):
            raise ParseError(f"expected 'gamma' or 'sigma gamma', got {line!r}", lineno)
        try:
            nums = [float(p) for p in parts]
        except ValueError:
            raise ParseError(f"not a number in {line!r}", lineno) from None
        sigma, gamma = (0.5, nums[0]) if len(nums) == 1 else nums
        try:
            z = ZetaZero(sigma, gamma, source)
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        if last is not None and _sort_key(z) < _sort_key(last):
            raise ValidationError(f"line {lineno}: gamma not ascending ({gamma} after {last.gamma})")
        zeros.append(z)
        last = z
    if height is None:
        raise ParseError("missing '#complete_to <height>' directive")
    return ZeroSet(tuple(zeros), height)


def load_zeros(path, fmt: str = "text", *, complete_to: float | None = None) -> ZeroSet:
    return parse_zeros(Path(path).read_text(), fmt=fmt, complete_to=complete_to)


def bundled_zeros() -> ZeroSet:
    """First 649 critical-line zeros (all with gamma <= 1000)."""
    text = resources.files("oscilla.data").joinpath("zeros_to_1000.txt").read_text()
    return parse_zeros(text)


def format_zeros(zs: ZeroSet) -> str:
    lines = [f"#complete_to {zs.max_gamma_complete!r}"]
    if zs.source is Source.SYNTHETIC:
        lines.append("#source synthetic")
    for z in zs.zeros:
        lines.append(repr(z.gamma) if z.sigma == 0.5 else f"{z.sigma!r} {z.gamma!r}")
    return "\n".join(lines) + "\n"


def save_zeros(path, zs: ZeroSet) -> None:
    Path(path).write_text(format_zeros(zs))


# -- counting ---------------------------------------------------------------

def count_zeros(zs: ZeroSet, T: float) -> int:
    """N(T): number of zeros with 0 < gamma <= T."""
    zs.require_complete(T, "N(T)")
    return bisect.bisect_right(zs.gammas, T)


@dataclass(frozen=True)
class RegionCount:
    count: int
    bound: float
    respected: bool


def density_bound(sigma: float, T: float, eps: float) -> float:
    return T ** ((12.0 / 5.0 + eps) * (1.0 - sigma))


def count_zeros_region(zs: ZeroSet, sigma_min: float, T: float, eps: float = 0.0) -> RegionCount:
    """N(sigma, T) with the density bound T^((12/5+eps)(1-sigma))."""
    zs.require_complete(T, "N(sigma, T)")
    n = bisect.bisect_right(zs.gammas, T)
    count = int(np.count_nonzero(zs.sigmas[:n] >= sigma_min))
    bound = density_bound(sigma_min, T, eps)
    return RegionCount(count, bound, count <= bound)


def square_count(zs: ZeroSet, sigma: float, delta: float, T: float) -> int:
    """Zeros in sigma - delta <= Re s <= sigma, |Im s - T| < delta/2."""
    zs.require_complete(T + delta / 2, "square count")
    g, s = zs.gammas, zs.sigmas
    mask = (np.abs(g - T) < delta / 2) & (s >= sigma - delta) & (s <= sigma)
    return int(np.count_nonzero(mask))


# -- exposure ---------------------------------------------------------------

@dataclass(frozen=True)
class ExposureQuery:
    sigma: float
    delta: float
    T: float
    t0: float = DEFAULT_T0

    def __post_init__(self):
        if not self.delta > 0:
            raise HypothesisError(f"delta must be positive, got {self.delta}")
        if not self.sigma > 0.5 + 2 * self.delta:
            raise HypothesisError(f"need sigma > 1/2 + 2 delta ({self.sigma} vs {0.5 + 2 * self.delta})")
        if not self.T > self.t0:
            raise HypothesisError(f"need T > T0 = {self.t0}, got {self.T}")


@dataclass(frozen=True)
class ExposureReport:
    exposed: bool
    blockers: tuple[ZetaZero, ...]
    window: float
    square_count: int | None = None
    square_bound: float | None = None

    @property
    def square_ok(self) -> bool | None:
        if self.square_count is None:
            return None
        return self.square_count <= self.square_bound


def _blockers(z: ZetaZero, zs: ZeroSet) -> tuple[ZetaZero, ...]:
    window = math.log(z.gamma)
    zs.require_complete(z.gamma + window, "exposure test")
    right = (np.abs(zs.gammas - z.gamma) < window) & (zs.sigmas > z.sigma)
    return tuple(zs.zeros[i] for i in np.flatnonzero(right))


def is_exposed(candidate: ZetaZero, zs: ZeroSet, delta: float | None = None, *, t0: float = DEFAULT_T0) -> ExposureReport:
    """No other zero with strictly larger real part within |gamma' - gamma| < log gamma.

    With ``delta`` the square count next to the candidate is reported against
    0.71 * delta * log gamma; the candidate itself lies in its own square.
    """
    zs.index_of(candidate)
    zs.require_complete(2 * candidate.gamma, "exposure test")
    window = math.log(candidate.gamma)
    blockers = _blockers(candidate, zs)
    sq = bound = None
    if delta is not None:
        ExposureQuery(candidate.sigma, delta, candidate.gamma, t0)
        sq = square_count(zs, candidate.sigma, delta, candidate.gamma)
        bound = SQUARE_CONSTANT * delta * math.log(candidate.gamma)
    return ExposureReport(not blockers, blockers, window, sq, bound)


class Conclusion(str, Enum):
    EXPOSED_FOUND = "exposed_found"
    DENSITY_VIOLATION = "density_violation"


@dataclass(frozen=True)
class ChainCertificate:
    links: tuple[ZetaZero, ...]
    conclusion: Conclusion
    gamma0: float

    @property
    def step(self) -> float:
        return math.log(2 * self.gamma0)

    def verify(self) -> bool:
        for a, b in zip(self.links, self.links[1:]):
            if b.sigma < a.sigma or abs(a.gamma - b.gamma) > self.step:
                return False
        if self.conclusion is Conclusion.DENSITY_VIOLATION:
            return self.links[-1].gamma >= 2 * self.gamma0
        return True


@dataclass(frozen=True)
class ExposedResult:
    zero: ZetaZero | None
    certificate: ChainCertificate
    hypotheses_met: bool
    region_count: int
    claimed_count: float
    density: float


def _hypothesis_floor(delta: float, C: float) -> float:
    return max(C, math.log(1.0 / delta) ** (2.0 / delta)) if delta < 1 else C


def find_exposed(rho0: ZetaZero, zs: ZeroSet, *, C: float = DEFAULT_C, eps: float = 0.0,
                 enforce_hypotheses: bool = True) -> ExposedResult:
    """Greedy climb from ``rho0`` to an exposed zero.

    From the current zero move, among zeros with sigma' >= sigma and
    |gamma' - gamma| <= log(2 gamma0), to the one of largest sigma' (ties:
    smallest gamma'). Stops at an exposed zero, or once the chain reaches
    height 2 gamma0, which certifies many zeros right of sigma0.
    """
    g0 = rho0.gamma
    zs.require_complete(2 * g0, "exposed-zero search")
    zs.index_of(rho0)
    d = rho0.sigma - 0.5
    if d <= 0:
        raise HypothesisError("rho0 must lie right of the critical line")
    try:
        floor = _hypothesis_floor(d, C)
    except OverflowError:
        floor = math.inf
    met = g0 > floor
    if enforce_hypotheses and not met:
        raise HypothesisError(f"need gamma0 > max(C, log^(2/delta)(1/delta)) = {floor:.6g}")

    step = math.log(2 * g0)
    links = [rho0]
    cur = rho0
    found = None
    while True:
        if cur.gamma >= 2 * g0:
            conclusion = Conclusion.DENSITY_VIOLATION
            break
        # blockers of cur all lie within log(cur.gamma) < step, so the climb is strict
        if not _blockers(cur, zs):
            conclusion = Conclusion.EXPOSED_FOUND
            found = cur
            break
        near = np.flatnonzero((np.abs(zs.gammas - cur.gamma) <= step) & (zs.sigmas >= cur.sigma))
        best = max((zs.zeros[i] for i in near if not zs.zeros[i].same_point(cur)),
                   key=lambda z: (z.sigma, -z.gamma))
        links.append(best)
        cur = best
    cert = ChainCertificate(tuple(links), conclusion, g0)
    rc = count_zeros_region(zs, rho0.sigma, 2 * g0, eps)
    return ExposedResult(found, cert, met, rc.count, 2 * g0 / step, rc.bound)


# -- synthetic sets ---------------------------------------------------------

def synth_zeroset(spec: str | Iterable[str]) -> ZeroSet:
    """Build a synthetic ZeroSet from rule lines.

    Verbs (one per line, '#' comments)::

        backbone <gap> <height> [<start>]   critical-line zeros start, start+gap, ... <= height
        plant <sigma> <gamma>               one zero
        staircase <sigma> <gamma> <dsigma> <dgamma> <until_gamma>
                                            zeros (sigma + j dsigma, gamma + j dgamma) while gamma < until
        complete_to <height>                completeness height (default: largest backbone
                                            height, else the largest gamma)
    """
    lines = spec.splitlines() if isinstance(spec, str) else list(spec)
    zeros: list[ZetaZero] = []
    height = None
    backbone_top = None
    S = Source.SYNTHETIC
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        verb, *args = line.split()
        try:
            nums = [float(a) for a in args]
        except ValueError:
            raise ParseError(f"bad number in {line!r}", lineno) from None
        try:
            if verb == "backbone" and len(nums) in (2, 3):
                gap, top = nums[0], nums[1]
                start = nums[2] if len(nums) == 3 else gap
                if gap <= 0 or start <= 0:
                    raise ValidationError("backbone gap and start must be positive")
                count = int(math.floor((top - start) / gap + 1e-9)) + 1
                zeros.extend(ZetaZero(0.5, start + j * gap, S) for j in range(max(count, 0)))
                backbone_top = top if backbone_top is None else max(backbone_top, top)
            elif verb == "plant" and len(nums) == 2:
                zeros.append(ZetaZero(nums[0], nums[1], S))
            elif verb == "staircase" and len(nums) == 5:
                s0, g0, ds, dg, until = nums
                if dg <= 0:
                    raise ValidationError("staircase needs a positive gamma step")
                j = 0
                while g0 + j * dg < until:
                    zeros.append(ZetaZero(s0 + j * ds, g0 + j * dg, S))
                    j += 1
            elif verb == "complete_to" and len(nums) == 1:
                height = nums[0]
            else:
                raise ParseError(f"unknown rule {line!r}", lineno)
        except ValidationError as exc:
            raise ValidationError(f"rule {lineno}: {exc}") from None
    if height is None:
        height = backbone_top if backbone_top is not None else max((z.gamma for z in zeros), default=0.0)
    return ZeroSet.from_zeros(zeros, height)


def with_planted(zs: ZeroSet, *zeros: ZetaZero) -> ZeroSet:
    return ZeroSet.from_zeros(list(zs.zeros) + list(zeros), zs.max_gamma_complete)
