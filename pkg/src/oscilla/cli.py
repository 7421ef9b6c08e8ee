"""Command-line driver: ``oscilla <subcommand> [options]``.

Every run writes ``run_config.ini`` to the output directory. ``oscilla rerun
DIR/run_config.ini`` repeats the run with the same resolved settings.

Exit codes: 0 success, 1 precondition or validation failure, 2 I/O or parse
failure, 3 incomplete zero data.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import os
import shlex
import sys
from pathlib import Path

import numpy as np

from . import audit as au
from . import powersum as pw
from . import psi as ps
from . import smoothed as sm
from . import zeros as zm
from ._numerics import fmt
from .errors import OscillaError, ParseError, PreconditionError, RangeError

CONFIG_ENV = "OSCILLA_CONFIG"
ECHO_NAME = "run_config.ini"

# dest -> (type, default)
COMMON = {
    "zeros": (str, "bundled"),
    "zeros_format": (str, "text"),
    "complete_to_check": (float, None),
    "x0": (float, 1e4),
    "epsilon": (float, 0.5),
    "sigma0": (float, 0.5),
    "gamma0": (float, 14.134725),
    "k": (float, None),
    "mu": (float, None),
    "mu_grid": (int, None),
    "mode": (str, "exploration"),
    "c2": (float, 1.0),
    "threads": (int, None),
    "seed": (int, 0),
    "out": (str, "."),
    "cache": (str, None),
}


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", help=f"INI key=value file (default: ${CONFIG_ENV})")
    g.add_argument("--zeros", help="zero table path or 'bundled'")
    g.add_argument("--zeros-format", choices=["text", "odlyzko"])
    g.add_argument("--complete-to-check", type=float, help="fail unless zeros are complete to this height")
    g.add_argument("--x0", type=float, help="X, start of the oscillation interval")
    g.add_argument("--epsilon", type=float)
    g.add_argument("--sigma0", type=float)
    g.add_argument("--gamma0", type=float)
    g.add_argument("--k", type=float, help="override the kernel width")
    g.add_argument("--mu", type=float, help="override the kernel centre")
    g.add_argument("--mu-grid", type=int, help="number of mu grid points")
    g.add_argument("--mode", choices=list(sm.MODES))
    g.add_argument("--c2", type=float)
    g.add_argument("--threads", type=int, help="worker threads (default: CPU count)")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="output directory")
    g.add_argument("--cache", help="psi cache file written by 'sieve'")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="oscilla", description="Oscillation of psi(x) - x and zeta zeros.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    p = add("sieve", "sieve psi on [lo, hi] and write a cache")
    p.add_argument("lo", type=int)
    p.add_argument("hi", type=int)

    p = add("delta-scan", "Delta samples at the integers of [X, Y] and the sup of |Delta|/x^sigma0")
    p.add_argument("X", type=float)
    p.add_argument("Y", type=float)
    p.add_argument("sigma", type=float)

    p = sub.add_parser("zeros", help="zero table utilities")
    zsub = p.add_subparsers(dest="zcmd", required=True)
    zsub.add_parser("validate", parents=[common])
    q = zsub.add_parser("count", parents=[common])
    q.add_argument("T", type=float)
    q = zsub.add_parser("region", parents=[common])
    q.add_argument("sigma_min", type=float)
    q.add_argument("T", type=float)

    p = add("exposed", "exposed-zero search from the zero at (sigma0, gamma0)")
    p.add_argument("g0", type=float, metavar="gamma0")
    p.add_argument("s0", type=float, metavar="sigma0")
    p.add_argument("--delta", type=float, help="square size for the count check")
    p.add_argument("--t0", type=float, default=zm.DEFAULT_T0)
    p.add_argument("--C", type=float, default=zm.DEFAULT_C)
    p.add_argument("--relaxed", action="store_true", help="report but do not enforce hypotheses")

    p = sub.add_parser("powersum", help="power-sum bound checks")
    psub = p.add_subparsers(dest="pcmd", required=True)
    q = psub.add_parser("verify", parents=[common])
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, default=0)
    q.add_argument("--points", required=True, help="'re,im;re,im;...'")
    q = psub.add_parser("search", parents=[common])
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, default=0)
    q.add_argument("--restarts", type=int, default=8)
    q.add_argument("--iterations", type=int, default=50)
    q = psub.add_parser("sweep", parents=[common])
    q.add_argument("--count", type=int, default=10000)
    q.add_argument("--n-max", type=int, default=8)
    q.add_argument("--m-max", type=int, default=32)

    p = add("kernel-check", "Mellin inversion of the Gaussian kernel")
    p.add_argument("--log-y", type=float, action="append", help="repeatable; default mu and mu +- 3 sqrt(k)")

    add("u-zeros", "zero side of the smoothed explicit formula")
    add("u-delta", "Delta side of the smoothed explicit formula")
    add("classify", "classify zeros into Z1..Z4")
    add("class-sums", "class sums over the mu grid")
    p = add("audit", "evaluate the inequality ledger")
    p.add_argument("--numeric-lower-tail", action="store_true", help="integrate the lower tail from psi")
    add("hunt", "scan [X, X^(1+eps)] for |Delta(x)| > c2 x^sigma0 / gamma0^(1+eps)")
    add("historical", "three historical lower bounds at x = X")
    return parser


def _load_config(path) -> dict[str, str]:
    text = Path(path).read_text()
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string("[run]\n" + text if not text.lstrip().startswith("[") else text)
    except configparser.Error as exc:
        raise ParseError(f"config {path}: {exc}") from None
    out = {}
    for section in cp.sections():
        for key, value in cp[section].items():
            out[key.replace("-", "_")] = value
    return out


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset common options from the config file, then from defaults."""
    path = args.config or os.environ.get(CONFIG_ENV)
    cfg = _load_config(path) if path else {}
    for key, (typ, default) in COMMON.items():
        if getattr(args, key, None) is not None:
            continue
        raw = cfg.get(key, "")
        if raw not in ("", "None"):
            try:
                value = typ(raw)
            except ValueError:
                raise ParseError(f"config key {key}: bad value {raw!r}") from None
        else:
            value = default
        setattr(args, key, value)
    if args.threads is None:
        args.threads = os.cpu_count() or 1
    args.command = cfg.get("command")
    return args


def write_echo(args: argparse.Namespace, argv: list[str]) -> Path:
    kept, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--config":
            skip = True
            continue
        if a.startswith("--config="):
            continue
        kept.append(a)
    lines = [f"command = {shlex.join(kept)}"]
    for key in COMMON:
        v = getattr(args, key)
        lines.append(f"{key} = {'' if v is None else v}")
    path = Path(args.out) / ECHO_NAME
    path.write_text("\n".join(lines) + "\n")
    return path


# -- helpers ------------------------------------------------------------------

def _zeros(args) -> zm.ZeroSet:
    zs = zm.bundled_zeros() if args.zeros == "bundled" else zm.load_zeros(args.zeros, args.zeros_format)
    if args.complete_to_check is not None:
        zs.require_complete(args.complete_to_check, "requested check")
    return zs


def _params(args) -> sm.SmoothingParams:
    return sm.SmoothingParams.build(args.x0, args.epsilon, args.sigma0, args.gamma0,
                                    k=args.k, mu=args.mu, mode=args.mode)


def _table(args, hi: int) -> ps.PsiCheckpointTable:
    if args.cache:
        t = ps.load_cache(args.cache)
        if t.hi < hi:
            raise RangeError(f"cache covers up to {t.hi}, need {hi}")
        return t
    return ps.build_psi(max(hi, 2), threads=args.threads)


def _top(args) -> int:
    lx = math.log(args.x0) * (1 + args.epsilon)
    hi = math.exp(lx)
    r = round(hi)
    return int(r) if abs(hi - r) <= 1e-9 * hi else math.ceil(hi)


def _csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def _b(flag) -> str:
    return "true" if flag else "false"


# -- subcommands --------------------------------------------------------------

def cmd_sieve(args, out: Path) -> None:
    full = ps.build_psi(args.hi, threads=args.threads)
    if args.lo < 1 or args.lo >= args.hi:
        raise PreconditionError("need 1 <= lo < hi")
    if args.lo > 1:
        keep = full.xs > args.lo
        full = ps.PsiCheckpointTable.from_jumps(args.lo, args.hi, full.xs[keep], full.weights[keep], full.psi(args.lo))
    path = Path(args.cache) if args.cache else out / "psi_cache.bin"
    ps.save_cache(path, full)
    print(f"jumps={len(full)} psi({args.hi})={fmt(full.psi_at_hi)} cache={path}")


def cmd_delta_scan(args, out: Path) -> None:
    if not 1 <= args.X <= args.Y:
        raise PreconditionError("need 1 <= X <= Y")
    table = _table(args, math.floor(args.Y))
    ints = np.arange(math.ceil(args.X), math.floor(args.Y) + 1, dtype=np.float64)
    xs = np.unique(np.concatenate(([args.X], ints, [args.Y])))
    ps.write_delta_csv(out / "delta_scan.csv", table, xs, args.sigma)
    rec = ps.scan_extremes(table, args.X, args.Y, args.sigma)
    print(f"sup={fmt(rec.sup)} x*={fmt(rec.x_star)} side={rec.side}")


def cmd_zeros(args, out: Path) -> None:
    zs = _zeros(args)
    if args.zcmd == "validate":
        _csv(out / "zeros_validate.csv", ["count", "max_gamma_complete", "source"],
             [[len(zs), float(zs.max_gamma_complete), zs.source.value]])
        print(f"ok: {len(zs)} zeros, complete to {fmt(zs.max_gamma_complete)}")
    elif args.zcmd == "count":
        n = zm.count_zeros(zs, args.T)
        _csv(out / "zeros_count.csv", ["T", "count"], [[args.T, n]])
        print(f"N({fmt(args.T)})={n}")
    else:
        rc = zm.count_zeros_region(zs, args.sigma_min, args.T, args.epsilon)
        _csv(out / "zeros_region.csv", ["sigma_min", "T", "epsilon", "count", "bound", "respected"],
             [[args.sigma_min, args.T, args.epsilon, rc.count, float(rc.bound), _b(rc.respected)]])
        print(f"count={rc.count} bound={fmt(rc.bound)} respected={_b(rc.respected)}")


def _locate(zs: zm.ZeroSet, sigma: float, gamma: float) -> zm.ZetaZero:
    i = int(np.argmin(np.abs(zs.gammas - gamma) + np.abs(zs.sigmas - sigma)))
    z = zs.zeros[i]
    if abs(z.gamma - gamma) > 1e-6 * max(1.0, gamma) or abs(z.sigma - sigma) > 1e-9:
        raise PreconditionError(f"no zero at ({sigma}, {gamma}) in the set")
    return z


def cmd_exposed(args, out: Path) -> None:
    zs = _zeros(args)
    rho = _locate(zs, args.s0, args.g0)
    res = zm.find_exposed(rho, zs, C=args.C, eps=args.epsilon, enforce_hypotheses=not args.relaxed)
    cert = res.certificate
    _csv(out / "exposed_chain.csv", ["link", "sigma", "gamma"],
         [[i, z.sigma, z.gamma] for i, z in enumerate(cert.links)])
    rows = [["conclusion", cert.conclusion.value], ["certificate_valid", _b(cert.verify())],
            ["hypotheses_met", _b(res.hypotheses_met)], ["region_count", res.region_count],
            ["claimed_count", float(res.claimed_count)], ["density_bound", float(res.density)]]
    if res.zero is not None:
        rep = zm.is_exposed(res.zero, zs, args.delta, t0=args.t0) if res.zero.gamma * 2 <= zs.max_gamma_complete else None
        rows += [["exposed_sigma", res.zero.sigma], ["exposed_gamma", res.zero.gamma]]
        if rep is not None and rep.square_count is not None:
            rows += [["square_count", rep.square_count], ["square_bound", float(rep.square_bound)]]
    _csv(out / "exposed.csv", ["key", "value"], rows)
    print(f"{cert.conclusion.value}: {len(cert.links)} links")


def cmd_powersum(args, out: Path) -> None:
    header = ["n", "m", "best_nu", "normalized_max", "bound", "satisfied", "ratio"]
    if args.pcmd == "verify":
        pts = pw.parse_points(args.points)
        if len(pts) != args.n:
            raise PreconditionError(f"--n {args.n} but {len(pts)} points given")
        r = pw.normalized_max(pw.PowerSumInstance(pts, args.m))
        _csv(out / "powersum_verify.csv", header,
             [[args.n, args.m, r.best_nu, r.normalized_max, r.bound, _b(r.satisfied), r.ratio]])
        print(f"normalized_max={fmt(r.normalized_max)} bound={fmt(r.bound)} satisfied={_b(r.satisfied)}")
    elif args.pcmd == "search":
        inst, best = pw.extremal_search(args.n, args.m, args.restarts, args.iterations, args.seed, args.threads)
        _csv(out / "powersum_search.csv", ["j", "re", "im"],
             [[j, float(z.real), float(z.imag)] for j, z in enumerate(inst.points)])
        print(f"normalized_max={fmt(best)} bound={fmt(pw.ks_lower_bound(args.n, args.m))}")
    else:
        rows = pw.verify_sweep(args.count, args.seed, args.n_max, args.m_max)
        pw.write_sweep_csv(out / "powersum_sweep.csv", rows)
        worst = min(r["ratio"] for r in rows)
        print(f"instances={len(rows)} min_ratio={fmt(worst)} all_satisfied={_b(worst >= 1 - pw.BOUND_TOL)}")


def cmd_kernel_check(args, out: Path) -> None:
    k = args.k if args.k is not None else _params(args).k
    mu = args.mu if args.mu is not None else _params(args).mu
    logs = args.log_y or [mu - 3 * math.sqrt(k), mu, mu + 3 * math.sqrt(k)]
    rows = []
    for ly in logs:
        c = sm.kernel_mellin_check(math.exp(ly), k, mu)
        rows.append([k, mu, ly, c.quadrature.real, c.quadrature.imag, c.closed_form, c.abs_diff])
    _csv(out / "kernel_check.csv", ["k", "mu", "log_y", "quad_re", "quad_im", "closed_form", "abs_diff"], rows)
    print(f"max_abs_diff={fmt(max(r[-1] for r in rows))}")


def _u_row(u: sm.NormalizedU):
    return [u.value.real, u.value.imag, abs(u.value), u.error_budget]


def cmd_u_zeros(args, out: Path) -> None:
    p = _params(args)
    zs = _zeros(args)
    u = sm.u_from_zeros(zs, p)
    _csv(out / "u_zeros.csv", ["value_re", "value_im", "abs", "error_budget", "zeros_used", "gamma_cut"],
         [_u_row(u) + [u.details["zeros_used"], float(u.details["gamma_cut"])]])
    sm.write_terms_csv(out / "zero_terms.csv", sm.zero_term_rows(zs, p))
    print(f"U_zeros={fmt(u.value.real)}{u.value.imag:+.17g}i budget={fmt(u.error_budget)}")


def cmd_u_delta(args, out: Path) -> None:
    p = _params(args)
    table = _table(args, _top(args))
    u = sm.u_from_delta(table, p)
    _csv(out / "u_delta.csv", ["value_re", "value_im", "abs", "error_budget"], [_u_row(u)])
    sm.write_segments_csv(out / "u_delta_segments.csv", sm.segment_report(table, p))
    print(f"U_delta={fmt(u.value.real)}{u.value.imag:+.17g}i budget={fmt(u.error_budget)}")


def cmd_classify(args, out: Path) -> None:
    p = _params(args)
    zs = _zeros(args)
    cls = sm.classify_zeros(zs, p)
    sm.write_terms_csv(out / "classes.csv", sm.zero_term_rows(zs, p))
    print(" ".join(f"Z{i}={len(m)}" for i, m in cls.classes().items()))


def cmd_class_sums(args, out: Path) -> None:
    p = _params(args)
    cls = sm.classify_zeros(_zeros(args), p)
    grid = p.mu_grid(args.mu_grid) if args.mu_grid else [p.mu]
    rows = []
    for mu in grid:
        q = p.with_mu(mu)
        for c in (1, 2, 3, 4):
            s = sm.class_sum(cls, c, q)
            rows.append([mu, f"Z{c}", s.count, s.value.real, s.value.imag, abs(s.value), s.bound, _b(s.passed)])
    _csv(out / "class_sums.csv", ["mu", "class", "count", "value_re", "value_im", "abs", "bound", "pass"], rows)
    print(f"rows={len(rows)}")


def cmd_audit(args, out: Path) -> None:
    p = _params(args)
    zs = _zeros(args)
    grid = p.mu_grid(args.mu_grid) if args.mu_grid else None
    table = _table(args, math.ceil(p.X)) if args.numeric_lower_tail else None
    rep = au.audit(p, zs, grid, psi=table)
    rep.write_csv(out / "audit.csv")
    text = rep.render()
    (out / "audit.txt").write_text(text)
    sys.stdout.write(text)


def cmd_hunt(args, out: Path) -> None:
    claim = au.OscillationClaim(args.x0, args.epsilon, args.sigma0, args.gamma0, args.c2)
    table = _table(args, math.floor(claim.interval[1]))
    r = au.oscillation_hunt(claim, table)
    _csv(out / "hunt.csv", ["found", "x_star", "side", "max_normalized", "threshold", "recheck", "rel_err"],
         [[_b(r.found), r.x_star, r.side, r.max_normalized, r.threshold, r.recheck, r.rel_err]])
    print(f"found={_b(r.found)} x*={fmt(r.x_star)} ({r.side}) max={fmt(r.max_normalized)} threshold={fmt(r.threshold)}")


def cmd_historical(args, out: Path) -> None:
    h = au.historical_bounds(args.x0, args.sigma0, args.gamma0, args.epsilon, c2=args.c2)
    names = ("turan", "pintz", "main")
    logs = (h.log_turan, h.log_pintz, h.log_main)
    _csv(out / "historical.csv", ["bound", "log_value", "value"],
         [[n, lv, v] for n, lv, v in zip(names, logs, h.values)])
    print(" ".join(f"{n}={fmt(v)}" for n, v in zip(names, h.values)))


COMMANDS = {
    "sieve": cmd_sieve, "delta-scan": cmd_delta_scan, "zeros": cmd_zeros, "exposed": cmd_exposed,
    "powersum": cmd_powersum, "kernel-check": cmd_kernel_check, "u-zeros": cmd_u_zeros,
    "u-delta": cmd_u_delta, "classify": cmd_classify, "class-sums": cmd_class_sums,
    "audit": cmd_audit, "hunt": cmd_hunt, "historical": cmd_historical,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:1] == ["rerun"]:
        if len(argv) != 2:
            print("usage: oscilla rerun RUN_CONFIG", file=sys.stderr)
            return 2
        try:
            command = _load_config(argv[1]).get("command")
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        if not command:
            print(f"error: {argv[1]} has no 'command' key", file=sys.stderr)
            return 2
        argv = shlex.split(command) + ["--config", argv[1]]
    args = build_parser().parse_args(argv)
    try:
        resolve(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_echo(args, argv)
        COMMANDS[args.cmd](args, out)
    except OscillaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
