import pytest

from gridroute.cli import main


def _gen(tmp_path, *extra):
    out = tmp_path / "trace.txt"
    assert main(["gen-trace", "--n", "16", "--B", "3", "--c", "3", "--count", "25", "--seed", "2",
                 "--out", str(out), *extra]) == 0
    return out


def test_simulate_round_trip(tmp_path, capsys):
    trace = _gen(tmp_path)
    events = tmp_path / "events.log"
    out = tmp_path / "out.txt"
    code = main(["simulate", "--algo", "det", "--trace", str(trace), "--n", "16", "--B", "3", "--c", "3",
                 "--out", str(out), "--events", str(events)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("#") and len(lines) == 26
    assert "delivered=" in capsys.readouterr().err
    assert events.read_text().strip()


def test_oracle_command(tmp_path):
    trace = tmp_path / "t.txt"
    trace.write_text("0 1 3 0 inf\n1 2 4 1 inf\n")
    out = tmp_path / "o.txt"
    assert main(["oracle", "--trace", str(trace), "--n", "4", "--B", "0", "--c", "1", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "opt 1"


def test_bench_command(tmp_path):
    cfg = tmp_path / "bench.cfg"
    cfg.write_text("algos = det ntg\nseeds = 0..2\ntraces = 2\nn = 16\nB = 3\nc = 3\n")
    out = tmp_path / "rows.csv"
    assert main(["bench", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 13


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--algo", "warp"])
    assert exc.value.code == 1
    assert main(["simulate", "--algo", "det", "--trace", str(tmp_path / "missing"), "--n", "16", "--B", "3",
                 "--c", "3"]) == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1 x 0\n")
    assert main(["oracle", "--trace", str(bad), "--n", "4", "--B", "0", "--c", "1"]) == 1
    trace = _gen(tmp_path)
    # B = 1 is outside the deterministic router's range
    assert main(["simulate", "--algo", "det", "--trace", str(trace), "--n", "16", "--B", "1", "--c", "1"]) == 1


def test_violation_exit_code(tmp_path, monkeypatch):
    import gridroute.cli as cli
    from gridroute.sim import ReplayResult, Violation

    trace = _gen(tmp_path)
    real = cli.replay

    def broken(*args, **kwargs):
        res = real(*args, **kwargs)
        return ReplayResult(res.metrics, [Violation(0, (1,), "injected fault")], res.outcomes)

    monkeypatch.setattr(cli, "replay", broken)
    assert main(["simulate", "--algo", "ntg", "--trace", str(trace), "--n", "16", "--B", "3", "--c", "3",
                 "--out", str(tmp_path / "o")]) == 2
