import csv

import pytest

from oscilla import cli


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path), "--threads", "1"])


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_delta_scan_rows(tmp_path):
    assert run(tmp_path, "delta-scan", "2", "10", "0.5") == 0
    r = rows(tmp_path / "delta_scan.csv")
    assert [float(x["x"]) for x in r] == [float(v) for v in range(2, 11)]
    ten = r[-1]
    assert float(ten["delta"]) == pytest.approx(-2.16798, abs=1e-5)
    assert float(ten["normalized"]) == pytest.approx(-0.68558, abs=1e-5)
    assert (tmp_path / "run_config.ini").exists()


def test_powersum_verify(tmp_path):
    assert run(tmp_path, "powersum", "verify", "--n", "2", "--m", "0", "--points", "1,0;-1,0") == 0
    (r,) = rows(tmp_path / "powersum_verify.csv")
    assert float(r["normalized_max"]) == 2.0
    assert float(r["bound"]) == pytest.approx(0.008458, abs=1e-6)
    assert r["satisfied"] == "true"


def test_missing_zeros_file_exit_2(tmp_path):
    assert run(tmp_path, "zeros", "validate", "--zeros", str(tmp_path / "nope.txt")) == 2


def test_parse_error_exit_2(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("14.1\n")
    assert run(tmp_path, "zeros", "validate", "--zeros", str(bad)) == 2


def test_incomplete_exit_3(tmp_path):
    assert run(tmp_path, "zeros", "count", "5000") == 3
    assert run(tmp_path, "zeros", "validate", "--complete-to-check", "2000") == 3


def test_precondition_exit_1(tmp_path):
    assert run(tmp_path, "historical") == 1
    assert run(tmp_path, "u-zeros", "--mu", "1.0") == 1


def test_zeros_subcommands(tmp_path):
    assert run(tmp_path, "zeros", "count", "100") == 0
    assert rows(tmp_path / "zeros_count.csv")[0]["count"] == "29"
    assert run(tmp_path, "zeros", "region", "0.6", "100") == 0
    r = rows(tmp_path / "zeros_region.csv")[0]
    assert (r["count"], r["respected"]) == ("0", "true")


def test_exposed_subcommand(tmp_path):
    z = tmp_path / "z.txt"
    z.write_text("#complete_to 130\n#source synthetic\n" + "".join(f"{g}\n" for g in range(10, 50)) + "0.6 50\n" + "".join(f"{g}\n" for g in range(51, 131)))
    assert run(tmp_path, "exposed", "50", "0.6", "--zeros", str(z), "--relaxed") == 0
    kv = {r["key"]: r["value"] for r in rows(tmp_path / "exposed.csv")}
    assert kv["conclusion"] == "exposed_found" and kv["certificate_valid"] == "true"
    assert run(tmp_path, "exposed", "50", "0.6", "--zeros", str(z)) == 1


def test_smoothed_subcommands(tmp_path):
    for cmd in ("u-zeros", "u-delta", "classify", "class-sums", "kernel-check", "audit", "hunt"):
        assert run(tmp_path, cmd) == 0, cmd
    assert {r["class"] for r in rows(tmp_path / "class_sums.csv")} == {"Z1", "Z2", "Z3", "Z4"}
    assert max(float(r["abs_diff"]) for r in rows(tmp_path / "kernel_check.csv")) <= 1e-8
    uz = rows(tmp_path / "u_zeros.csv")[0]
    ud = rows(tmp_path / "u_delta.csv")[0]
    assert abs(float(uz["value_re"]) - float(ud["value_re"])) < 1e-6
    assert len(rows(tmp_path / "audit.csv")) == 13


def test_sieve_cache_then_scan(tmp_path):
    assert run(tmp_path, "sieve", "1", "1000") == 0
    cache = tmp_path / "psi_cache.bin"
    assert run(tmp_path, "delta-scan", "2", "10", "0.5", "--cache", str(cache)) == 0
    assert run(tmp_path, "delta-scan", "2", "2000", "0.5", "--cache", str(cache)) == 1


def test_powersum_search_and_sweep(tmp_path):
    assert run(tmp_path, "powersum", "search", "--n", "3", "--restarts", "2", "--iterations", "5") == 0
    assert len(rows(tmp_path / "powersum_search.csv")) == 3
    assert run(tmp_path, "powersum", "sweep", "--count", "50") == 0
    assert len(rows(tmp_path / "powersum_sweep.csv")) == 50


def test_config_file_and_override(tmp_path, monkeypatch):
    cfg = tmp_path / "c.ini"
    cfg.write_text("epsilon = 0.4\nsigma0 = 0.5\nx0 = 20000\n")
    assert cli.main(["u-zeros", "--config", str(cfg), "--out", str(tmp_path), "--x0", "10000"]) == 0
    echo = (tmp_path / "run_config.ini").read_text()
    assert "epsilon = 0.4" in echo and "x0 = 10000.0" in echo
    monkeypatch.setenv(cli.CONFIG_ENV, str(cfg))
    assert cli.main(["u-zeros", "--out", str(tmp_path)]) == 0
    assert "x0 = 20000.0" in (tmp_path / "run_config.ini").read_text()


def test_rerun_reproduces_bytes(tmp_path):
    a = tmp_path / "a"
    assert cli.main(["powersum", "sweep", "--count", "30", "--seed", "5", "--out", str(a)]) == 0
    first = {p.name: p.read_bytes() for p in a.iterdir()}
    assert cli.main(["rerun", str(a / "run_config.ini")]) == 0
    second = {p.name: p.read_bytes() for p in a.iterdir()}
    assert first == second


def test_rerun_missing_file(tmp_path):
    assert cli.main(["rerun", str(tmp_path / "none.ini")]) == 2
