import csv
import io
import json

import pytest

from unimodal import cli


def run_json(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    assert code == 0, err
    return json.loads(out)


def run_error(capsys, *argv):
    code = cli.run(list(argv))
    _, err = capsys.readouterr()
    return code, json.loads(err)


class TestCommands:
    def test_summability(self, capsys):
        d = run_json(capsys, "summability", "--t", "1", "--alpha", "2", "--kmax", "30", "--format", "json")
        assert d["partial_sums"][29] == pytest.approx(1 - 2.0 ** -30, abs=1e-9)
        assert d["verdict"] == "ConvergentLooking"

    def test_classify_periodic(self, capsys):
        d = run_json(capsys, "classify", "--t", "0.6")
        assert d["class"] == "P"
        assert d["multiplier"] == pytest.approx(-0.4, abs=1e-12)

    def test_cascade(self, capsys):
        d = run_json(capsys, "cascade", "--t", "0.95")
        assert d["q"][:2] == [3, 3]
        assert all(d["nice"])
        assert d["termination"] == "ReturnTimeCap"

    def test_branches(self, capsys):
        d = run_json(capsys, "branches", "--t", "0.95", "--level", "1")
        assert [b["return_time"] for b in d["branches"]] == [2, 3, 2]
        assert d["disjoint"]

    def test_telemann(self, capsys):
        d = run_json(capsys, "telemann", "--t", "0.95", "--k", "500", "--injectivity")
        assert len(d["k_list"]) == d["m"] + 1
        assert d["residual"] < 1e-8
        assert d["injectivity"]["collisions"] == []

    def test_lyapunov(self, capsys):
        d = run_json(capsys, "lyapunov", "--t", "0.6", "--iters", "100000")
        assert d["lyapunov"] == pytest.approx(-0.916290731874155, abs=1e-6)

    def test_density(self, capsys):
        d = run_json(capsys, "density", "--t", "1", "--iters", "100000", "--bins", "20")
        assert sum(d["masses"]) == pytest.approx(1.0)

    def test_mane(self, capsys):
        d = run_json(capsys, "mane", "--t", "1", "--u", "0.5", "--samples", "2000")
        assert d["lambda_hat"] >= 1.5

    def test_audit(self, capsys):
        d = run_json(capsys, "audit-prop31", "--t", "0.95", "--n", "3", "--samples", "200")
        assert d["growth_confirmed"]

    def test_output_file(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert cli.run(["lyapunov", "--t", "1", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["lyapunov"] == pytest.approx(0.6931, abs=1e-2)

    def test_repeatable(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            cli.run(["audit-prop31", "--t", "0.95", "--samples", "200", "--seed", "7", "--out", str(path)])
        assert a.read_bytes() == b.read_bytes()

    def test_custom_map_file(self, tmp_path, capsys):
        path = tmp_path / "map.json"
        path.write_text(json.dumps({"kind": "custom", "coefficients": [1.0, 0.0, -2.0]}))
        d = run_json(capsys, "summability", "--map", str(path), "--kmax", "30")
        assert d["partial_sum"] == pytest.approx(1 - 2.0 ** -30, abs=1e-9)


class TestConfig:
    def test_config_supplies_flags(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"t": 1.0, "kmax": 20}))
        d = run_json(capsys, "summability", "--config", str(cfg))
        assert len(d["partial_sums"]) == 20

    def test_command_line_wins(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"t": 1.0, "kmax": 20}))
        d = run_json(capsys, "summability", "--config", str(cfg), "--kmax", "12")
        assert len(d["partial_sums"]) == 12

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"colour": "red"}))
        code, err = run_error(capsys, "summability", "--config", str(cfg), "--t", "1")
        assert code == 2


class TestErrors:
    def test_domain(self, capsys):
        code, err = run_error(capsys, "classify", "--t", "1.5")
        assert code == 2
        assert err["exit_code"] == 2 and err["error"] == "DomainError"

    def test_bad_flag(self, capsys):
        code, err = run_error(capsys, "classify", "--t", "0.9", "--bogus")
        assert code == 2

    def test_missing_command(self, capsys):
        code, _ = run_error(capsys)
        assert code == 2

    def test_not_nice(self, capsys):
        code, err = run_error(capsys, "cascade", "--t", "0.95", "--u1", "0.3")
        assert code == 2 and err["error"] == "NotNicePoint"

    def test_too_shallow(self, capsys):
        code, err = run_error(capsys, "telemann", "--t", "0.95", "--depth", "2", "--k", "500")
        assert code == 3 and err["error"] == "CascadeTooShallow"

    def test_csv_only_for_sweep(self, capsys):
        code, _ = run_error(capsys, "lyapunov", "--t", "1", "--format", "csv")
        assert code == 2


class TestSweep:
    def test_rows_sorted_with_header(self, capsys):
        code = cli.run(["sweep", "--t-min", "0.55", "--t-max", "1.0", "--grid", "4",
                        "--iterates", "2000", "--kmax", "1000", "--lyapunov-iters", "10000"])
        out, _ = capsys.readouterr()
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["t", "class", "n_central_returns", "depth_reached", "sigma_last",
                           "scaling_sum", "summability_partial", "lyapunov", "seed"]
        ts = [float(r[0]) for r in rows[1:]]
        assert len(ts) == 4 and ts == sorted(ts)

    def test_jobs_identical(self, tmp_path):
        outs = []
        for jobs in ("1", "3"):
            path = tmp_path / f"s{jobs}.csv"
            argv = ["sweep", "--grid", "5", "--jobs", jobs, "--iterates", "2000",
                    "--kmax", "1000", "--lyapunov-iters", "10000", "--out", str(path)]
            assert cli.run(argv) == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_bad_range(self, capsys):
        code, _ = run_error(capsys, "sweep", "--t-min", "0.9", "--t-max", "0.5")
        assert code == 2
