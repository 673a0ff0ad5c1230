import pytest

from revlattice.cli import dispatch
from revlattice.config import ConfigError, config_hash, load_config


def run(capsys, *argv):
    code = dispatch(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_body_check(capsys):
    code, out, _ = run(capsys, "body", "check")
    assert code == 0
    assert "min_abs_curvature_expr=1.0" in out
    assert "accepted=true" in out


def test_body_check_rejects(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('[body]\nkind = "fourier"\ncoeffs = [1.0, 0.9]\n')
    code, out, err = run(capsys, "body", "check", "--config", str(cfg))
    assert code != 0
    assert "accepted=false" in out
    assert "theta=" in err


def test_count(capsys):
    code, out, _ = run(capsys, "count", "--t", "1")
    assert code == 0 and out.strip() == "7"


def test_scan_step_zero(capsys):
    code, _, err = run(capsys, "scan", "--t-min", "1", "--t-max", "5", "--step", "0")
    assert code != 0 and "step" in err


def test_unknown_subcommand(capsys):
    assert dispatch(["frobnicate"]) != 0


def test_scan_csv_header_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path, workers in ((a, "1"), (b, "2")):
        code, _, _ = run(capsys, "scan", "--t-min", "1", "--t-max", "40", "--step", "0.5",
                         "--workers", workers, "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith("# revlattice ")
    assert lines[1].startswith("# config_sha256 ")
    assert lines[2].startswith("# config {")
    assert lines[3] == "# columns t,count,volume_term,discrepancy,normalized"
    assert lines[4] == "t,count,volume_term,discrepancy,normalized"
    assert lines[5].startswith("1.0,7,")
    assert lines[-2].startswith("# running_min ")


def test_scan_t_list(tmp_path, capsys):
    tl = tmp_path / "ts.txt"
    tl.write_text("# dilations\n1\n2, 3\n")
    code, out, _ = run(capsys, "scan", "--t-list", str(tl))
    assert code == 0
    rows = [l for l in out.splitlines() if l and not l.startswith("#")]
    assert [r.split(",")[1] for r in rows[1:]] == ["7", "19", "27"]


def test_arith_subcommands(tmp_path, capsys):
    out_csv = tmp_path / "t.csv"
    code, _, _ = run(capsys, "arith", "table", "--limit", "30", "--out", str(out_csv))
    assert code == 0
    rows = [l for l in out_csv.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "n,r,r3,omega,in_A1,spf"
    assert rows[1 + 25].startswith("25,12,")
    code, out, _ = run(capsys, "arith", "s-lambda", "--lambda", "50", "100")
    assert code == 0 and "lambda,K,card,predicted,ratio" in out


def test_spectrum_and_borel(capsys):
    code, out, _ = run(capsys, "spectrum", "--t", "10", "--coeff", "curvature")
    assert code == 0 and "ell,m3,lambda,g,f" in out
    code, out, _ = run(capsys, "borel", "--t", "10")
    assert code == 0 and "t,X,k,borel,predicted" in out


def test_link(capsys):
    code, out, _ = run(capsys, "link", "--t-min", "10", "--t-max", "14", "--n", "3")
    assert code == 0 and "# pearson " in out
    code, _, _ = run(capsys, "link", "--t-min", "10", "--t-max", "14", "--n", "1")
    assert code == 2


def test_lemma_search_suite(capsys):
    code, out, _ = run(capsys, "lemma", "search", "--seed", "5")
    assert code == 0
    assert "seed=5" in out and "met=50" in out
    assert "# seed 5" in out


def test_lemma_search_instance(tmp_path, capsys):
    cfg = tmp_path / "i.toml"
    cfg.write_text("[lemma]\nT = 2.0\n[lemma.instance]\nf = [1.0]\nlam = [1.0]\n"
                   "Lambda = 1.0\nM = [0]\n")
    code, out, _ = run(capsys, "lemma", "search", "--config", str(cfg))
    assert code == 0
    assert "met=true" in out and "t,sum" in out


def test_lemma_pipeline(tmp_path, capsys):
    scan = tmp_path / "scan.csv"
    code, out, _ = run(capsys, "lemma", "pipeline", "--T", "1e4", "--beta", "1.4142135623730951",
                       "--L", "3", "--c0", "1.0", "--budget", "4096", "--out", str(scan))
    assert code == 0
    assert "star_holds=true" in out and "double_star_holds=true" in out
    assert scan.read_text().count("\n") > 4096


def test_config_env_and_unknown_keys(tmp_path, monkeypatch):
    cfg = tmp_path / "c.toml"
    cfg.write_text('[body]\nkind = "spheroid"\na = 2\n')
    monkeypatch.setenv("REVLATTICE_CONFIG", str(cfg))
    loaded = load_config()
    assert loaded["body"]["a"] == 2.0 and loaded["body"]["kind"] == "spheroid"
    bad = tmp_path / "bad.toml"
    bad.write_text("[body]\ncolour = 1\n")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    bad.write_text("[nope]\n")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    bad.write_text("not toml = = 1")
    with pytest.raises(ConfigError):
        load_config(str(bad))


def test_hash_ignores_workers():
    a = load_config(None, {"run": {"workers": 1}})
    b = load_config(None, {"run": {"workers": 7}})
    c = load_config(None, {"lemma": {"L": 4}})
    assert config_hash(a) == config_hash(b) != config_hash(c)
