import math

import numpy as np
import pytest

from oscilla import audit as au
from oscilla import psi as ps
from oscilla import smoothed as sm
from oscilla import zeros as zm
from oscilla.errors import DomainError, HypothesisError

from conftest import brute_psi_prefix

G0 = 14.134725
DESK = sm.SmoothingParams.build(1e4, 0.5, 0.5, G0)

EXPECTED_NAMES = [
    "X_ge_gamma0_pow_12000_eps3",
    "gamma0_gt_5.5_pow_inv_eps",
    "X_gt_gamma0_pow_10",
    "lower_tail_le_1",
    "upper_tail_le_1",
    "middle_integral_le_main_over_gamma0_eps",
    "Z1_sum_le_stated_bound",
    "Z2_sum_le_stated_bound",
    "Z3_sum_le_stated_bound",
    "non_Z4_sum_le_main_over_gamma0_eps",
    "Z4_count_le_eps_over_11_log_gamma0",
    "powersum_factor_ge_gamma0_pow_neg_0.35eps",
    "final_gamma0_eps_lt_3_gamma0_pow_0.35eps",
]

OPS = {"<=": lambda a, b: a <= b, "<": lambda a, b: a < b, ">=": lambda a, b: a >= b, ">": lambda a, b: a > b}


@pytest.fixture(scope="module")
def desk_report(bundled):
    return au.audit(DESK, bundled)


def test_ledger_complete(desk_report):
    assert desk_report.names == EXPECTED_NAMES


def test_pass_matches_direction(desk_report):
    for e in desk_report.entries:
        assert e.passed == OPS[e.direction](e.lhs, e.rhs), e.name


def test_gamma0_hypothesis_reported(desk_report):
    e = desk_report["gamma0_gt_5.5_pow_inv_eps"]
    assert e.rhs == pytest.approx(30.25) and e.lhs == G0 and not e.passed
    assert desk_report.mode == "exploration"


def test_default_grid_size(desk_report):
    assert desk_report.observations["mu_grid_points"] == desk_report.observations["z4_count"] + 1


def test_theorem_mode_enforces(bundled):
    p = sm.SmoothingParams.build(1e4, 0.25, 0.75, G0, mode="theorem")
    with pytest.raises(HypothesisError):
        au.audit(p, bundled)


def test_planted_exploration_and_determinism(tmp_path):
    zs = zm.synth_zeroset("backbone 0.9 1100 0.5\nplant 0.75 1000\n")
    p = sm.SmoothingParams.build(1e4, 0.25, 0.75, 1000.0)
    a = au.audit(p, zs)
    b = au.audit(p, zs)
    assert a.names == EXPECTED_NAMES
    assert a.observations["z4_count"] == 1
    a.write_csv(tmp_path / "a.csv")
    b.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert a.render() == b.render()
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header == "name,direction,lhs,rhs,pass,anchor"


def test_numeric_lower_tail(bundled, psi_1e6):
    r = au.audit(DESK, bundled, psi=psi_1e6)
    e = r["lower_tail_le_1"]
    assert e.passed and e.lhs < 1e-2


def test_middle_entry_uses_window_mass(desk_report):
    e = desk_report["middle_integral_le_main_over_gamma0_eps"]
    assert e.lhs <= (G0 + 40) / G0**1.5 + 1e-15
    assert e.rhs == pytest.approx(G0**-0.5)


def test_relaxation_45_step_always_below():
    for eps, g, chain in au.relaxation_grid():
        assert chain.step_45_ge_final, (eps, g)


def test_relaxation_first_step_counterexample():
    # 4e(3/eps+3) >= 4e*6 > 45, so the first step fails once |Z4| >= 1 and the
    # fractional part of (eps/11) log gamma0 is small
    chain = au.relaxation_chain(1.0, 152641.8)
    assert au.z4_count_cap(1.0, 152641.8) == 1
    assert math.exp(chain.log_factor) == pytest.approx(1 / (24 * math.e), rel=1e-12)
    assert not chain.factor_ge_45


def test_relaxation_holds_when_z4_empty():
    chain = au.relaxation_chain(0.5, 100.0)
    assert au.z4_count_cap(0.5, 100.0) == 0
    assert chain.holds


def test_psi_from_scratch_matches_brute():
    brute = brute_psi_prefix(3000)
    for n in (0, 1, 2, 10, 100, 1024, 2999, 3000):
        assert au.psi_from_scratch(n) == pytest.approx(brute[n], rel=1e-15, abs=0)


def test_hunt_desk(psi_1e6):
    claim = au.OscillationClaim(1e4, 0.5, 0.5, G0, 1e-3)
    assert claim.interval == (1e4, 1e6)
    r = au.oscillation_hunt(claim, psi_1e6)
    assert r.recheck == r.max_normalized
    assert r.found == (r.max_normalized > 1e-3 / G0**1.5)


def test_hunt_zero_threshold(psi_1e6):
    r = au.oscillation_hunt(au.OscillationClaim(5e4, 0.2, 0.5, G0, 0.0), psi_1e6)
    assert r.found and r.threshold == 0.0


def test_hunt_single_point(psi_1e6):
    claim = au.OscillationClaim(12345, 0.0, 0.5, G0, 1.0)
    r = au.oscillation_hunt(claim, psi_1e6)
    assert r.x_star == 12345
    assert r.max_normalized == abs(ps.delta(12345, 0.5, psi_1e6).normalized)


def test_claim_threshold_consistent():
    c = au.OscillationClaim(1e4, 0.5, 0.6, G0, 2.0)
    x = 31337.0
    assert c.threshold(x) / x**0.6 == pytest.approx(c.normalized_threshold, rel=1e-15)


def test_historical_ratio():
    h = au.historical_bounds(1e30, 0.6, 50.0, 0.3)
    assert h.log_main - h.log_pintz == pytest.approx((49 - 0.3) * math.log(50.0), rel=1e-12)


def test_historical_large_x():
    h = au.historical_bounds(None, 0.6, 1e4, 0.5, log_x=100 * math.log(10))
    logs = (h.log_turan, h.log_pintz, h.log_main)
    assert all(np.isfinite(logs))
    assert h.log_main >= h.log_pintz >= h.log_turan


def test_historical_domain():
    with pytest.raises(DomainError):
        au.historical_bounds(1e6, 0.6, 50.0, 0.3)
