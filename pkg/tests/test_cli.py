import json

import pytest

from cyclicity.cli import main, parse_eps_grid


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_focus_exit_zero(capsys):
    code, out, _ = _run(capsys, "analyze", "--preset", "ejfd")
    assert code == 0
    rep = json.loads(out)
    assert rep["status"] == "ok"
    assert rep["verdict"]["kind"] == "focus"
    assert rep["chart"]["d"] == 3


def test_center_like_exits_two(capsys):
    code, out, _ = _run(capsys, "analyze", "--preset", "ex5",
                        "--param", "nu2=3/10", "--grid", "12")
    assert code == 2
    rep = json.loads(out)
    assert rep["status"] == "abstained"
    assert rep["verdict"]["kind"] == "center_like"


def test_parse_error_is_structured(tmp_path, capsys):
    f = tmp_path / "bad.txt"
    f.write_text("x' = y +; y' = -x")
    code, out, err = _run(capsys, "analyze", str(f))
    assert code == 1
    rep = json.loads(out)
    assert rep["status"] == "error" and rep["error"]["kind"] == "parse"
    assert "error" in err


def test_not_monodromic(tmp_path, capsys):
    f = tmp_path / "saddle.txt"
    f.write_text("x' = x; y' = -y")
    code, out, _ = _run(capsys, "analyze", str(f))
    assert code == 1
    assert json.loads(out)["error"]["kind"] in ("classification", "not_monodromic")


def test_usage_errors_exit_one(capsys):
    assert _run(capsys, "analyze")[0] == 1
    assert _run(capsys, "frobnicate")[0] == 1
    code, out, _ = _run(capsys, "bifurcate", "--preset", "ex3", "--eps", "")
    assert code == 1
    assert json.loads(out)["error"]["kind"] == "usage"


def test_json_output_is_byte_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["analyze", "--preset", "ejbh", "--grid", "10", "--json", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    summary = capsys.readouterr().out
    assert summary.startswith("focus")


def test_analyze_csv(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert main(["analyze", "--preset", "ejbh", "--grid", "8", "--csv", str(out),
                 "--json", str(tmp_path / "r.json")]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "r0,Pi,dPi,d"
    assert len(lines) == 1 + 16


def test_bifurcate_preset(tmp_path, capsys):
    js = tmp_path / "s.json"
    code, out, _ = _run(capsys, "bifurcate", "--preset", "ex3",
                        "--eps", "0.01,0.001", "--json", str(js))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "eps,cycle_count,radius_1"
    assert [l.split(",")[1] for l in lines[1:]] == ["1", "1"]
    rep = json.loads(js.read_text())
    assert rep["family"]["tag"] == "preset-ex3"
    assert rep["continuous"] is True
    assert rep["rows"][0]["cycles"][0]["partner_ok"] is True


def test_bifurcate_family_error(capsys):
    code, out, _ = _run(capsys, "bifurcate", "--preset", "ex5", "--family", "degp1",
                        "--eps", "0.01")
    assert code == 1
    assert json.loads(out)["error"]["kind"] in ("family", "chart")


def test_eps_grid_syntax():
    assert parse_eps_grid("0.1, 0.01") == [0.1, 0.01]
    g = parse_eps_grid("geom:1e-2:1e-4:3")
    assert g == pytest.approx([1e-2, 1e-3, 1e-4])
    assert parse_eps_grid("  ") == []


def test_selftest_classical(capsys):
    code, out, _ = _run(capsys, "selftest", "--classical")
    assert code == 0
    assert out.count("[PASS]") == 3
