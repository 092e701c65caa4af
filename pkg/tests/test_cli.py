import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from adiagrover.cli import (
    CSV_VERSION,
    RunRecord,
    fit_rows,
    main,
    parse_time_grid,
    read_config,
)
from adiagrover.errors import ConfigError


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


class TestTimeGrid:
    def test_single(self):
        assert parse_time_grid("30") == [30.0]

    def test_list(self):
        assert parse_time_grid("10,20,40") == [10.0, 20.0, 40.0]

    def test_geometric(self):
        grid = parse_time_grid("1:100:8")
        assert len(grid) == 17
        assert grid[0] == pytest.approx(1) and grid[-1] == pytest.approx(100)
        assert np.allclose(np.diff(np.log10(grid)), 1 / 8)

    @pytest.mark.parametrize("text", ["", "abc", "-1", "10:1:8", "1:10:0", "1:2", "nan"])
    def test_bad(self, text):
        with pytest.raises(ConfigError):
            parse_time_grid(text)


class TestConfig:
    def test_read(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("# comment\nmodel = aklt\ntotal-time=5 # trailing\n\n")
        assert read_config(str(p)) == {"model": "aklt", "total_time": "5"}

    def test_malformed(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("model aklt\n")
        with pytest.raises(ConfigError):
            read_config(str(p))

    def test_flags_win(self, tmp_path, capsys):
        p = tmp_path / "c.cfg"
        p.write_text("n = 3\noracle = ideal\niterations = 2\n")
        code, out, _ = run(["grover-run", "--config", str(p), "--n", "2", "--iterations", "1"], capsys)
        assert code == 0
        data = rows(out)
        assert data[-1]["n"] == "2" and data[-1]["oracle"] == "ideal"
        assert float(data[-1]["fidelity"]) == pytest.approx(1.0, abs=1e-12)

    def test_unknown_key(self, tmp_path, capsys):
        p = tmp_path / "c.cfg"
        p.write_text("colour = blue\n")
        assert run(["grover-run", "--config", str(p)], capsys)[0] == 1

    def test_bad_choice_in_config(self, tmp_path, capsys):
        p = tmp_path / "c.cfg"
        p.write_text("oracle = magic\n")
        assert run(["grover-run", "--config", str(p)], capsys)[0] == 1

    def test_missing_file(self, capsys):
        assert run(["grover-run", "--config", "/nonexistent.cfg"], capsys)[0] == 1


class TestExitCodes:
    def test_unknown_flag(self, capsys):
        assert run(["oracle-infidelity", "--bogus"], capsys)[0] == 1

    def test_bad_schedule(self, capsys):
        assert run(["oracle-infidelity", "--schedule", "cubic", "--total-time", "1"], capsys)[0] == 1

    def test_misplaced_c0(self, capsys):
        assert run(["oracle-infidelity", "--model", "ising", "--c0", "-0.4", "--total-time", "1"], capsys)[0] == 1

    def test_bad_c0(self, capsys):
        code, _, err = run(["oracle-infidelity", "--model", "aklt", "--c0", "-2", "--total-time", "1"], capsys)
        assert code == 1 and "gap" in err

    def test_numerical_failure(self, capsys):
        code, _, err = run(["grover-run", "--n", "2", "--oracle", "spin1", "--diffusion", "spin1",
                            "--schedule", "linear", "--total-time", "0.05", "--steps", "100"], capsys)
        assert code == 2 and "non-adiabatic" in err

    def test_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "adiagrover", "grover-run", "--n", "2", "--oracle", "ideal"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.startswith(CSV_VERSION)


class TestOracleInfidelity:
    def test_csv_and_fits(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        code, _, _ = run(["oracle-infidelity", "--schedule", "tanh", "--total-time", "3:12:4",
                          "--out", str(out)], capsys)
        assert code == 0
        text = out.read_text()
        assert text.splitlines()[0] == CSV_VERSION
        assert "units" in text.splitlines()[1]
        data = rows(text)
        assert len(data) == 3  # log10(4) * 4 points per decade rounds to 2 intervals
        for col in ["experiment", "model", "schedule", "total_time", "steps", "infidelity", "norm_drift"]:
            assert col in data[0]
        assert all(r["flag"] == "ok" for r in data)
        assert [float(r["infidelity"]) for r in data] == sorted((float(r["infidelity"]) for r in data), reverse=True)
        fits = json.loads((tmp_path / "sweep.fits.json").read_text())
        tanh = fits["fits"]["tanh"]
        assert tanh["preferred"] == "exponential"
        assert set(tanh) >= {"exponential", "powerlaw", "eta_fit"}

    def test_breakdown_rows_flagged(self, capsys):
        code, out, err = run(["oracle-infidelity", "--schedule", "linear", "--total-time", "0.2,10,20,40"], capsys)
        assert code == 0
        data = rows(out)
        assert data[0]["flag"] == "breakdown"
        fits = json.loads(err)["fits"]["linear"]
        assert fits["n_points"] == 3
        assert fits["excluded"] == [{"total_time": 0.2, "flag": "breakdown"}]

    def test_floor_rows_flagged(self):
        records = [RunRecord("x", {"schedule": "tanh", "total_time": t, "flag": f}, {"infidelity": y})
                   for t, y, f in [(1, 1e-2, "ok"), (2, 1e-4, "ok"), (3, 1e-6, "ok"), (9, 1e-25, "floor")]]
        fits = fit_rows(records, 2.0)["tanh"]
        assert fits["n_points"] == 3
        assert fits["exponential"]["rate"] == pytest.approx(2 * math.log(10))
        assert fits["eta_fit"] == pytest.approx(math.log(10))

    def test_too_few_points(self):
        records = [RunRecord("x", {"schedule": "tanh", "total_time": 1.0, "flag": "ok"}, {"infidelity": 0.1})]
        assert "error" in fit_rows(records, 1.0)["tanh"]

    @pytest.mark.parametrize("model,kind,total", [("ising", "tanh", 4.0), ("aklt", "linear", 30.0)])
    def test_step_convergence(self, model, kind, total, capsys):
        # doubling M at fixed T moves the infidelity by < 5%
        base = ["oracle-infidelity", "--model", model, "--schedule", kind, "--total-time", str(total)]
        _, out1, _ = run(base, capsys)
        steps = int(rows(out1)[0]["steps"])
        _, out2, _ = run(base + ["--steps", str(2 * steps)], capsys)
        a, b = float(rows(out1)[0]["infidelity"]), float(rows(out2)[0]["infidelity"])
        assert abs(a - b) / b < 0.05

    def test_sampled_p1(self, capsys):
        code, out, _ = run(["oracle-infidelity", "--oracle", "p1", "--sampled", "--seed", "4",
                            "--schedule", "tanh", "--total-time", "4"], capsys)
        assert code == 0
        assert float(rows(out)[0]["infidelity"]) < 1e-3

    def test_ideal_rejected(self, capsys):
        assert run(["oracle-infidelity", "--oracle", "ideal", "--total-time", "1"], capsys)[0] == 1


class TestGroverRun:
    def test_n2_ideal_hits_one(self, capsys):
        code, out, _ = run(["grover-run", "--n", "2", "--oracle", "ideal", "--seeds", "1,2"], capsys)
        assert code == 0
        data = rows(out)
        finals = [r for r in data if r["kind"] == "final"]
        assert len(finals) == 2
        for r in finals:
            assert float(r["fidelity"]) == pytest.approx(1.0, abs=1e-12)
        assert [r["kind"] for r in data[:4]] == ["initial", "oracle", "diffusion", "final"]

    def test_same_seed_same_bytes(self, tmp_path, capsys):
        args = ["grover-run", "--n", "3", "--oracle", "p1", "--total-time", "3", "--seeds", "5,6"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(args + ["--out", str(a)], capsys)[0] == 0
        assert run(args + ["--out", str(b), "--threads", "2"], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_success_rate_column(self, capsys):
        _, out, _ = run(["grover-run", "--n", "2", "--oracle", "p1", "--total-time", "3", "--seed", "9"], capsys)
        final = rows(out)[-1]
        oracle_rows = [r for r in rows(out) if r["kind"] == "oracle"]
        applied = sum(int(r["applied"]) for r in oracle_rows)
        assert float(final["success_rate"]) == pytest.approx(applied / len(oracle_rows))


class TestSectorPhase:
    def test_large_t(self, capsys):
        code, out, _ = run(["sector-phase", "--total-time", "50"], capsys)
        assert code == 0
        res = json.loads(out)
        assert len(res["results"]) == 2
        for r in res["results"]:
            assert not r["breakdown"] and r["deviation_from_pi"] < 1e-3
        assert res["schedule_spread"]["50.0"] < 1e-2

    def test_small_t_flags(self, capsys):
        code, out, _ = run(["sector-phase", "--schedule", "linear", "--total-time", "0.1"], capsys)
        assert code == 0
        r = json.loads(out)["results"][0]
        assert r["breakdown"] and r["phase_plus"] is None and "non-adiabatic" in r["message"]

    @pytest.mark.parametrize("text", ["1", "1,2", "-1,1", "a,b"])
    def test_bad_energies(self, text, capsys):
        assert run(["sector-phase", "--energies", text], capsys)[0] == 1


class TestOverlapEstimate:
    def test_uniform(self, capsys):
        code, out, _ = run(["overlap-estimate", "--n", "4"], capsys)
        res = json.loads(out)
        assert code == 0
        assert res["gamma_hat"] == pytest.approx(0.25, rel=0.02)
        assert res["samples"][0] == [0, 1.0]

    def test_random(self, capsys):
        res = json.loads(run(["overlap-estimate", "--initial", "random", "--seed", "8"], capsys)[1])
        assert res["gamma_hat"] == pytest.approx(res["gamma_direct"], rel=0.05)

    def test_file(self, tmp_path, capsys):
        amps = np.zeros(16, dtype=complex)
        amps[[0, 15]] = [0.8, 0.6j]
        path = tmp_path / "init.npy"
        np.save(path, amps)
        res = json.loads(run(["overlap-estimate", "--initial", str(path)], capsys)[1])
        assert res["gamma_direct"] == pytest.approx(0.6)
        assert res["gamma_hat"] == pytest.approx(0.6, rel=0.05)

    def test_sampled(self, capsys):
        res = json.loads(run(["overlap-estimate", "--sampled", "--seed", "2"], capsys)[1])
        assert res["shots"] == 1000
        assert res["gamma_hat"] == pytest.approx(0.25, rel=0.10)

    def test_wrong_size_file(self, tmp_path, capsys):
        path = tmp_path / "init.txt"
        path.write_text("1\n0\n")
        assert run(["overlap-estimate", "--initial", str(path)], capsys)[0] == 1

    def test_no_overlap(self, tmp_path, capsys):
        path = tmp_path / "init.txt"
        path.write_text("\n".join(["1"] + ["0"] * 15))
        assert run(["overlap-estimate", "--initial", str(path)], capsys)[0] == 1

    def test_aklt(self, capsys):
        res = json.loads(run(["overlap-estimate", "--model", "aklt", "--initial", "random"], capsys)[1])
        assert res["gamma_hat"] == pytest.approx(res["gamma_direct"], rel=0.05)


class TestRunRecord:
    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            RunRecord("x", {}, {"infidelity": float("nan")})

    def test_missing_column(self):
        with pytest.raises(KeyError):
            RunRecord("x", {"a": 1}, {}).row(["a", "b"])
