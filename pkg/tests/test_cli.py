"""End-to-end CLI coverage: parsing, records, exit codes, determinism."""

import json

import numpy as np
import pytest

from causal_lab.cli import main

from helpers import random_grid_scenario

LATTICE = {"q_time": 2.0, "q_lo": [1.5], "q_hi": [4.5], "q_points": 13,
           "p_time": -1.0, "p_lo": [-4.0], "p_hi": [4.0], "p_points": 41,
           "cover_resolution": 0.05}


def _post(w):
    return [[0.9, w], [2.2, 1.0 - w]]


def abc_payload(a, b, c, **extra):
    payload = {
        "spacetime": {"dim": 1, "c": 1.0},
        "seed": 7,
        "measures": {
            "mu": {"time": 0.0, "atoms": [[0.0, 0.5], [1.5, 0.5]]},
            "nu0": {"time": 1.0, "atoms": _post(a)},
            "nu1": {"time": 1.0, "atoms": _post((b + c) / 2)},
            "nup": {"time": 1.0, "atoms": _post(b)},
            "num": {"time": 1.0, "atoms": _post(c)},
        },
        "measurement": {"K": [[[-0.25], [0.25]]], "p_plus": 0.5,
                        "mu": "mu", "nu0": "nu0", "nu1": "nu1",
                        "nu_plus": "nup", "nu_minus": "num"},
    }
    payload.update(extra)
    return payload


def write_scenario(tmp_path, payload, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_record(out):
    return json.loads(out)


def test_validate_clean_scenario(tmp_path, capsys):
    path = write_scenario(tmp_path, abc_payload(0.5, 1.0, 0.0))
    code, out, _ = run_cli(capsys, "validate", "--scenario", path)
    assert code == 0
    rec = parse_record(out)
    assert rec["command"] == "validate"
    assert rec["result"]["valid"] is True
    assert rec["result"]["violations"] == []
    assert rec["input_digest"].startswith("sha256:")
    assert set(rec["tolerances"]) == {"eps_causal", "eps_mass", "eps_flow"}


def test_validate_flags_broken_mixture(tmp_path, capsys):
    payload = abc_payload(0.2, 1.0, 0.0)
    payload["measures"]["nu1"] = {"time": 1.0, "atoms": _post(0.2)}
    path = write_scenario(tmp_path, payload)
    code, out, _ = run_cli(capsys, "validate", "--scenario", path, "--assert")
    assert code == 1
    rec = parse_record(out)
    assert rec["result"]["valid"] is False
    assert any("total probability" in v for v in rec["result"]["violations"])
    # without --assert the same failure reports but exits cleanly
    code, _, _ = run_cli(capsys, "validate", "--scenario", path)
    assert code == 0


def test_check_ce_violating_scenario(tmp_path, capsys):
    path = write_scenario(tmp_path, abc_payload(0.0, 1.0, 1.0))
    code, out, _ = run_cli(capsys, "check", "ce", "--scenario", path)
    assert code == 0
    rec = parse_record(out)
    assert rec["result"]["holds"] is False
    assert rec["result"]["deficit"] == pytest.approx(0.5)
    assert rec["result"]["worst_set"] is not None
    code, _, _ = run_cli(capsys, "check", "ce", "--scenario", path, "--assert")
    assert code == 1


def test_check_all_clean_scenario(tmp_path, capsys):
    path = write_scenario(tmp_path, abc_payload(0.5, 1.0, 0.0))
    code, out, _ = run_cli(capsys, "check", "all", "--scenario", path,
                           "--assert")
    assert code == 0
    rec = parse_record(out)
    res = rec["result"]
    assert all(res[k] is True for k in ("ce", "ns", "a1", "a2"))
    assert res["diagnostics"] == []
    assert res["ns_witness"] is None


def test_check_single_condition_record(tmp_path, capsys):
    path = write_scenario(tmp_path, abc_payload(0.0, 1.0, 1.0))
    code, out, _ = run_cli(capsys, "check", "ns", "--scenario", path)
    assert code == 0
    assert parse_record(out)["result"] == {"ns": False}


def test_check_methods_agree(tmp_path, capsys):
    path = write_scenario(tmp_path, abc_payload(0.0, 1.0, 1.0))
    records = {}
    for method in ("bruteforce", "maxflow"):
        code, out, _ = run_cli(capsys, "check", "ce", "--scenario", path,
                               "--method", method)
        assert code == 0
        records[method] = parse_record(out)
        assert records[method]["method"] == method
        assert records[method]["result"]["method"] == method
    bf, mf = records["bruteforce"], records["maxflow"]
    assert bf["result"]["holds"] == mf["result"]["holds"]
    assert bf["result"]["deficit"] == pytest.approx(mf["result"]["deficit"])


def test_check_exact_rational_deficit(tmp_path, capsys):
    path = write_scenario(tmp_path, abc_payload(0.0, 1.0, 1.0))
    code, out, _ = run_cli(capsys, "check", "ce", "--scenario", path,
                           "--exact-rational")
    assert code == 0
    rec = parse_record(out)
    assert rec["result"]["deficit"] == "1/2"


def test_truth_table_record(capsys):
    code, out, _ = run_cli(capsys, "truth-table", "--assert")
    assert code == 0
    rec = parse_record(out)
    rows = rec["result"]["rows"]
    assert len(rows) == 8
    assert rec["result"]["all_match"] is True
    assert all(r["matches"] for r in rows)
    assert "erratum" in rows[3]


def test_report_determinism(tmp_path, capsys):
    path = write_scenario(tmp_path, abc_payload(0.0, 1.0, 1.0))

    def snapshot():
        code, out, _ = run_cli(capsys, "check", "all", "--scenario", path)
        assert code == 0
        return "\n".join(l for l in out.splitlines()
                         if "wall_clock_s" not in l)

    assert snapshot() == snapshot()


def test_protocol_command(tmp_path, capsys):
    path = write_scenario(tmp_path, abc_payload(0.0, 1.0, 1.0),
                          name="sig.json")
    payload = abc_payload(0.0, 1.0, 1.0, protocol={"lattice": LATTICE})
    path = write_scenario(tmp_path, payload, name="sig.json")
    code, out, _ = run_cli(capsys, "protocol", "--scenario", path, "--assert")
    assert code == 0
    rec = parse_record(out)
    res = rec["result"]
    assert res["constructed"] is True
    assert res["problems"] == []
    assert res["protocol"]["k"] == 1
    assert res["protocol"]["channel_gap"] == pytest.approx(1.0)
    assert len(res["audit"]) == 4
    assert all(line.endswith("ok") for line in res["audit"])


def test_protocol_reports_no_gap(tmp_path, capsys):
    payload = abc_payload(1.0, 1.0, 1.0, protocol={"lattice": LATTICE})
    path = write_scenario(tmp_path, payload)
    code, out, _ = run_cli(capsys, "protocol", "--scenario", path)
    assert code == 0
    rec = parse_record(out)
    assert rec["result"]["constructed"] is False
    code, _, _ = run_cli(capsys, "protocol", "--scenario", path, "--assert")
    assert code == 1


def test_signal_sim_writes_csv(tmp_path, capsys):
    payload = abc_payload(0.0, 1.0, 1.0,
                          protocol={"lattice": LATTICE, "trials": 500,
                                    "block_sizes": [1, 3]})
    path = write_scenario(tmp_path, payload)
    outdir = tmp_path / "report"
    code, out, _ = run_cli(capsys, "signal-sim", "--scenario", path,
                           "--out", str(outdir))
    assert code == 0
    rec = parse_record(out)
    stats = rec["result"]["stats"]
    assert [s["block_size"] for s in stats] == [1, 3]
    assert all(s["error_rate"] == 0.0 for s in stats)  # perfect channel
    csv_text = (outdir / "signal_stats.csv").read_text()
    lines = csv_text.strip().splitlines()
    assert lines[0] == "block_size,error_rate,stderr"
    assert len(lines) == 3
    saved = json.loads((outdir / "signal-sim.json").read_text())
    assert saved["result"]["stats"] == stats


def test_signal_sim_seed_control(tmp_path, capsys):
    payload = abc_payload(0.2, 1.0, 0.6,
                          protocol={"lattice": LATTICE, "trials": 2000,
                                    "block_sizes": [1]})
    path = write_scenario(tmp_path, payload)

    def stats_for(seed):
        code, out, _ = run_cli(capsys, "signal-sim", "--scenario", path,
                               "--seed", str(seed))
        assert code == 0
        body, _, csv_part = out.partition("\n}\n")
        rec = json.loads(body + "\n}")
        assert csv_part.startswith("block_size,error_rate,stderr")
        return rec["result"]["stats"], rec["seed"]

    first, seed1 = stats_for(101)
    again, _ = stats_for(101)
    other, seed2 = stats_for(202)
    assert seed1 == 101 and seed2 == 202
    assert first == again
    assert first != other


def test_simulate_quantum_violation(tmp_path, capsys):
    payload = {
        "spacetime": {"dim": 1, "c": 1.0},
        "quantum": {"dynamics": "schrodinger", "m": 1.0, "lambda": 1.0,
                    "t": 1.0, "units": "natural",
                    "grid": {"origin": -24.0, "cell_size": 0.01171875,
                             "n": 4096},
                    "K": [[[-3.62], [3.62]]]},
    }
    path = write_scenario(tmp_path, payload)
    outdir = tmp_path / "qr"
    code, out, _ = run_cli(capsys, "simulate-quantum", "--scenario", path,
                           "--assert", "--out", str(outdir))
    assert code == 1
    rec = parse_record(out)
    res = rec["result"]
    assert res["ce"]["holds"] is False
    assert res["ce"]["deficit"] > 1e-5
    assert res["norm_final"] == pytest.approx(1.0, abs=1e-9)
    density = (outdir / "density.csv").read_text().splitlines()
    assert density[0] == "x,density"
    assert len(density) == 1 + 4096


def test_simulate_quantum_narrow_region_holds(tmp_path, capsys):
    payload = {
        "spacetime": {"dim": 1, "c": 1.0},
        "quantum": {"dynamics": "schrodinger", "m": 1.0, "lambda": 1.0,
                    "t": 1.0, "units": "natural",
                    "grid": {"origin": -32.0, "cell_size": 0.0625, "n": 1024},
                    "K": [[[-1.0], [1.0]]]},
    }
    path = write_scenario(tmp_path, payload)
    outdir = tmp_path / "qr"
    code, out, _ = run_cli(capsys, "simulate-quantum", "--scenario", path,
                           "--assert", "--out", str(outdir))
    assert code == 0
    rec = parse_record(out)
    assert rec["result"]["ce"]["holds"] is True


def test_scales_asymptote_and_finite_time(capsys):
    code, out, _ = run_cli(capsys, "scales", "--m", "1e-26",
                           "--lambda", "1e-6", "--t", "inf", "--units", "si")
    assert code == 0
    assert '"t": Infinity' in out
    rec = parse_record(out)
    res = rec["result"]
    assert res["ell_min"] == res["ell_min_asymptotic"]
    assert 2.7e4 < res["ell_min"] < 3.1e4

    code, out, _ = run_cli(capsys, "scales", "--m", "1e-26",
                           "--lambda", "1e-6", "--t", "10.0", "--units", "si")
    assert code == 0
    finite = parse_record(out)["result"]
    assert finite["ell_min"] > finite["ell_min_asymptotic"]


def test_grid_scenario_round_trip(tmp_path, capsys):
    rng = np.random.default_rng(31)
    sc, expected = random_grid_scenario(rng, "generic")

    def grid_json(m):
        return {"time": m.time,
                "grid": {"origin": list(m.grid_origin),
                         "cell_size": m.grid_cell,
                         "weights": m.grid_weights.reshape(-1).tolist()}}

    payload = {
        "spacetime": {"dim": sc.cs.dim, "c": sc.cs.c},
        "measures": {name: grid_json(getattr(sc, name))
                     for name in ("mu", "nu0", "nu1", "nu_plus", "nu_minus")},
        "measurement": {"K": sc.K.to_json(), "p_plus": sc.p_plus,
                        "mu": "mu", "nu0": "nu0", "nu1": "nu1",
                        "nu_plus": "nu_plus", "nu_minus": "nu_minus"},
    }
    path = write_scenario(tmp_path, payload)
    code, out, _ = run_cli(capsys, "validate", "--scenario", path)
    assert code == 0
    assert parse_record(out)["result"]["valid"] is True
    code, out, _ = run_cli(capsys, "check", "all", "--scenario", path)
    assert code == 0
    res = parse_record(out)["result"]
    for key, want in expected.items():
        assert res[key] is want, key


def test_exit_code_two_on_missing_file(tmp_path, capsys):
    code, out, err = run_cli(capsys, "validate", "--scenario",
                             str(tmp_path / "nope.json"))
    assert code == 2
    assert out == ""
    assert "error:" in err


def test_exit_code_two_on_malformed_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{ this is not json")
    code, _, err = run_cli(capsys, "validate", "--scenario", str(path))
    assert code == 2
    assert "not valid JSON" in err


def test_exit_code_two_on_schema_errors(tmp_path, capsys):
    payload = abc_payload(0.5, 1.0, 0.0)
    del payload["measurement"]["K"]
    path = write_scenario(tmp_path, payload)
    code, _, err = run_cli(capsys, "check", "ce", "--scenario", str(path))
    assert code == 2
    assert "missing 'K'" in err

    payload = abc_payload(0.5, 1.0, 0.0)
    payload["measurement"]["nu0"] = "ghost"
    path = write_scenario(tmp_path, payload)
    code, _, err = run_cli(capsys, "check", "ce", "--scenario", str(path))
    assert code == 2
    assert "unknown measure" in err

    payload = abc_payload(0.5, 1.0, 0.0)
    payload["measurement"]["K"] = [[[-0.25]]]  # box needs both corners
    path = write_scenario(tmp_path, payload)
    code, _, err = run_cli(capsys, "check", "ce", "--scenario", str(path))
    assert code == 2
    assert "bad region" in err


def test_exact_rational_rejects_grid_measures(tmp_path, capsys):
    payload = abc_payload(0.5, 1.0, 0.0)
    payload["measures"]["nu0"] = {
        "time": 1.0,
        "grid": {"origin": [-4.0], "cell_size": 0.5, "weights": [1.0] + [0.0] * 15},
    }
    path = write_scenario(tmp_path, payload)
    code, _, err = run_cli(capsys, "validate", "--scenario", path,
                           "--exact-rational")
    assert code == 2
    assert "exact-rational" in err


def test_thread_cap_env(tmp_path, capsys, monkeypatch):
    path = write_scenario(tmp_path, abc_payload(0.5, 1.0, 0.0))
    monkeypatch.setenv("CAUSAL_LAB_THREADS", "4")
    code, out, _ = run_cli(capsys, "validate", "--scenario", path)
    assert code == 0
    assert parse_record(out)["thread_cap"] == 4

    monkeypatch.setenv("CAUSAL_LAB_THREADS", "zero")
    code, _, err = run_cli(capsys, "validate", "--scenario", path)
    assert code == 2
    assert "CAUSAL_LAB_THREADS" in err

    monkeypatch.setenv("CAUSAL_LAB_THREADS", "0")
    code, _, _ = run_cli(capsys, "validate", "--scenario", path)
    assert code == 2

    monkeypatch.delenv("CAUSAL_LAB_THREADS")
    code, out, _ = run_cli(capsys, "validate", "--scenario", path)
    assert code == 0
    assert "thread_cap" not in parse_record(out)


def test_out_directory_written_atomically(tmp_path, capsys):
    path = write_scenario(tmp_path, abc_payload(0.0, 1.0, 1.0))
    outdir = tmp_path / "nested" / "deeper"
    code, out, _ = run_cli(capsys, "check", "ce", "--scenario", path,
                           "--out", str(outdir))
    assert code == 0
    saved = (outdir / "check.json").read_text()
    assert saved == out
    assert not [p for p in outdir.iterdir() if ".json." in p.name]
