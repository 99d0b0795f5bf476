import csv
import io

import pytest

from rpcoding.cli import build_parser, run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["--help"])
    assert exc.value.code == 0
    assert "simulate" in capsys.readouterr().out


@pytest.mark.parametrize("command", ["prob", "variance", "optw", "table", "estimate", "simulate", "sweep", "encode", "figure"])
def test_subcommand_help_lists_flags(capsys, command):
    with pytest.raises(SystemExit) as exc:
        run([command, "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices[command]
    for action in sub._actions:
        for flag in action.option_strings:
            assert flag in out


def test_prob_sign(capsys):
    code, out, _ = call(capsys, "prob", "--scheme", "sign", "--rho", "0.5")
    assert code == 0
    (row,) = rows(out)
    assert row["p"] == "0.6666666667"
    assert row["w"] == ""


def test_prob_grid(capsys):
    _, out, _ = call(capsys, "prob", "--scheme", "uniform", "--w", "1", "2", "--rho", "0", "0.5", "1")
    table = rows(out)
    assert len(table) == 6
    assert float(table[0]["p"]) == pytest.approx(0.2708922931, abs=1e-10)
    assert table[2]["p"] == "1" and table[2]["dp_drho"] == ""


def test_variance(capsys):
    _, out, _ = call(capsys, "variance", "--scheme", "sign", "--rho", "0", "1")
    a, b = rows(out)
    assert float(a["v"]) == pytest.approx(2.467401100, abs=1e-9)
    assert b["near_singular"] == "1"


def test_optw_offset(capsys):
    code, out, _ = call(capsys, "optw", "--scheme", "offset", "--rho", "0")
    assert code == 0
    (row,) = rows(out)
    assert float(row["w_star"]) == pytest.approx(2.3301, abs=1e-3)
    assert float(row["v_star"]) == pytest.approx(7.6797, abs=1e-3)
    assert row["at_boundary"] == "0"


def test_estimate(capsys):
    _, out, _ = call(capsys, "estimate", "--scheme", "sign", "--matches", "2", "--k", "3")
    assert float(rows(out)[0]["rho_hat"]) == pytest.approx(0.5, abs=1e-3)


def test_table_to_file(capsys, tmp_path):
    path = tmp_path / "t.csv"
    code, out, _ = call(capsys, "table", "--scheme", "twobit", "--w", "0.75", "--resolution", "0.01", "--out", str(path))
    assert code == 0 and out == ""
    table = rows(path.read_text())
    assert len(table) == 100 and table[0]["rho"] == "0"


def test_simulate_reproducible(capsys):
    argv = ["simulate", "--scheme", "offset", "--w", "2", "--rho", "0.5", "--n", "50000", "--seed", "3"]
    _, a, _ = call(capsys, *argv)
    _, b, _ = call(capsys, *argv, "--workers", "2")
    assert a == b
    assert rows(a)[0]["n_or_k"] == "50000"


def test_simulate_estimator_mode(capsys):
    _, out, _ = call(capsys, "simulate", "--scheme", "sign", "--rho", "0", "--k", "50", "--m", "500")
    row = rows(out)[0]
    assert row["empirical_kvar"] != "" and float(row["theory_v"]) == pytest.approx(2.4674011, abs=1e-6)


def test_sweep(capsys):
    _, out, _ = call(capsys, "sweep", "--schemes", "sign", "uniform", "--rho", "0", "0.5", "--w", "1", "--n", "2000")
    assert [r["scheme"] for r in rows(out)] == ["sign", "sign", "uniform", "uniform"]


def test_encode_deterministic(capsys, tmp_path):
    src = tmp_path / "in.txt"
    src.write_text("1 1:0.5 3:0.5\n-1 2:1.5 4:-2\n0\n")
    outs = []
    for name in ("a.txt", "b.txt"):
        dst = tmp_path / name
        code, summary, _ = call(
            capsys, "encode", "--scheme", "twobit", "--w", "0.75", "--k", "256", "--seed", "7", str(src), str(dst)
        )
        assert code == 0
        outs.append(dst.read_bytes())
    assert outs[0] == outs[1]
    row = rows(summary)[0]
    assert row == {"examples": "2", "skipped": "1", "k": "256", "dim": "1024"}
    for line in outs[0].decode().splitlines():
        assert len(line.split()) == 257


def test_figure(capsys):
    _, out, _ = call(capsys, "figure", "f2")
    table = rows(out)
    best = min(table, key=lambda r: float(r["v_offset_scaled"]))
    assert float(best["w_over_sqrt_d"]) == pytest.approx(1.65, abs=0.05)


class TestErrors:
    def test_missing_width(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["prob", "--scheme", "uniform", "--rho", "0.5"])
        assert exc.value.code == 2
        assert "--w is required" in capsys.readouterr().err

    def test_rho_out_of_range(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["prob", "--scheme", "sign", "--rho", "1.5"])
        assert exc.value.code == 2

    def test_unknown_figure(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["figure", "f11"])
        assert exc.value.code == 2

    def test_bad_input_file(self, capsys, tmp_path):
        src = tmp_path / "bad.txt"
        src.write_text("1 3:1 2:1\n")
        code, _, err = call(capsys, "encode", "--scheme", "sign", "--k", "4", str(src), str(tmp_path / "o.txt"))
        assert code == 1
        assert err.startswith("rpcoding encode: error: line 1")

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = call(capsys, "encode", "--scheme", "sign", "--k", "4", str(tmp_path / "nope"), "o.txt")
        assert code == 1 and "error" in err

    def test_bad_count(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["estimate", "--scheme", "sign", "--matches", "5", "--k", "3"])
        assert exc.value.code == 2
