import shutil
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from ancmm.cli import build_parser, main, read_config
from ancmm.data_io import load_matrix, matrix_to_csv
from ancmm.exceptions import ConfigError

from conftest import STAR, random_positive_symmetric


@pytest.fixture
def wine_csv(tmp_path):
    with resources.as_file(resources.files("ancmm.datasets") / "wine.csv") as src:
        return shutil.copy(src, tmp_path / "wine.csv")


@pytest.fixture(autouse=True)
def _cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def matrix_file(tmp_path, name, A):
    p = tmp_path / name
    p.write_text(matrix_to_csv(A))
    return str(p)


def output_files(tmp_path, prefix):
    return {p.name: p.read_bytes() for p in sorted(tmp_path.glob(prefix + "*"))}


def test_cluster_wine(wine_csv, capsys):
    assert main(["cluster", "--input", str(wine_csv), "--clusters", "3", "--method", "ancmm"]) == 0
    out = capsys.readouterr().out
    assert "ACC=" in out and "NMI=" in out and "PUR=" in out
    assert "components=3" in out


def test_cluster_missing_clusters(wine_csv, capsys):
    assert main(["cluster", "--input", str(wine_csv)]) == 1
    err = capsys.readouterr().err
    assert "usage:" in err and "--clusters" in err


def test_cluster_needs_a_source(capsys):
    assert main(["cluster", "--clusters", "3"]) == 1


@pytest.mark.parametrize("method", ["kmeans", "sc", "can", "ancmm"])
def test_cluster_deterministic(tmp_path, wine_csv, method, capsys):
    args = ["cluster", "--input", str(wine_csv), "--clusters", "3", "--method", method,
            "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = output_files(tmp_path, "a."), output_files(tmp_path, "b.")
    assert a and [n[1:] for n in a] == [n[1:] for n in b]
    assert list(a.values()) == list(b.values())


def test_cluster_nonconvergence_exit_2(tmp_path, wine_csv, capsys):
    code = main(["cluster", "--input", str(wine_csv), "--clusters", "3", "--max-outer", "2",
                 "--out", str(tmp_path / "r")])
    assert code == 2
    assert (tmp_path / "r.record.json").exists()


def test_help_documents_every_flag(capsys):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    for name, sp in sub.items():
        assert main([name, "--help"]) == 0
        text = capsys.readouterr().out
        for action in sp._actions:
            for flag in action.option_strings:
                assert flag in text
            assert action.help, f"{name}: {action.dest} undocumented"


def test_normalize_star(tmp_path, capsys):
    assert main(["normalize", "--matrix", matrix_file(tmp_path, "star.csv", STAR)]) == 2
    assert "no total support" in capsys.readouterr().err


def test_normalize_algos_agree(tmp_path, rng, capsys):
    path = matrix_file(tmp_path, "s.csv", random_positive_symmetric(rng, 12))
    assert main(["normalize", "--matrix", path, "--algo", "marcus", "--out", "m.csv"]) == 0
    assert main(["normalize", "--matrix", path, "--algo", "degree", "--out", "d.csv"]) == 0
    assert np.max(np.abs(load_matrix("m.csv") - load_matrix("d.csv"))) <= 1e-6


def test_normalize_identity(tmp_path, capsys):
    path = matrix_file(tmp_path, "i.csv", np.eye(4))
    assert main(["normalize", "--matrix", path]) == 0
    out = capsys.readouterr().out
    assert "iterations=0" in out or "iterations=1" in out
    np.testing.assert_array_equal(load_matrix(tmp_path / "i.marcus.csv"), np.eye(4))


def test_normalize_non_square(tmp_path, capsys):
    assert main(["normalize", "--matrix", matrix_file(tmp_path, "r.csv", np.ones((2, 3)))]) == 1


def _value(out, key):
    for token in out.split():
        if token.startswith(key + "="):
            return float(token.split("=", 1)[1].rstrip("s"))
    raise AssertionError(f"{key} missing from {out!r}")


def test_compare_ot_omega1(tmp_path, rng, capsys):
    path = matrix_file(tmp_path, "s.csv", random_positive_symmetric(rng, 50))
    assert main(["compare-ot", "--matrix", path]) == 0
    out = capsys.readouterr().out
    assert _value(out, "max_abs_diff") <= 1e-6
    assert "marcus:" in out and "ot:" in out


def test_compare_ot_omega2_reports(tmp_path, rng, capsys):
    path = matrix_file(tmp_path, "s.csv", random_positive_symmetric(rng, 10))
    assert main(["compare-ot", "--matrix", path, "--omega", "2"]) == 0
    assert _value(capsys.readouterr().out, "max_abs_diff") > 1e-6


def test_compare_ot_bad_omega(tmp_path, capsys):
    assert main(["compare-ot", "--matrix", matrix_file(tmp_path, "i.csv", np.eye(3)),
                 "--omega", "0"]) == 1


def _table(tmp_path):
    rows = (tmp_path / "toy.table.csv").read_text().splitlines()
    header = rows[0].split(",")
    return {r.split(",")[0]: dict(zip(header, r.split(","))) for r in rows[1:]}


def test_toy_defaults(tmp_path, capsys):
    assert main(["toy"]) == 0
    table = _table(tmp_path)
    assert float(table["ancmm"]["ACC"]) >= 0.95
    assert table["ancmm"]["components"] == "2"
    assert set(table) == {"ancmm", "can"}
    for name in ("toy.ancmm.edges.csv", "toy.can.edges.csv", "toy.points.csv"):
        assert (tmp_path / name).exists()


def test_toy_noise_free(tmp_path, capsys):
    assert main(["toy", "--noise", "0"]) == 0
    assert float(_table(tmp_path)["ancmm"]["ACC"]) == 1.0


def test_toy_odd_n(capsys):
    assert main(["toy", "--n", "201"]) == 1


def test_bench(tmp_path, capsys):
    assert main(["bench", "--sizes", "100,200", "--repeats", "2", "--out", "b.csv"]) == 0
    lines = (tmp_path / "b.csv").read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    assert sorted((r["algo"], r["n"]) for r in rows) == [
        ("degree", "100"), ("degree", "200"), ("marcus", "100"), ("marcus", "200")]
    for r in rows:
        if r["algo"] == "degree":
            assert float(r["mul_ratio"]) == 2.0
        assert float(r["sec_per_iter_std"]) >= 0


def test_bench_bad_sizes(capsys):
    assert main(["bench", "--sizes", "10,x"]) == 1


def test_config_file(tmp_path, wine_csv, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# wine run\ninput = {wine_csv}\nclusters=3\nmethod = kmeans\nout=from_cfg\n")
    assert main(["cluster", "--config", str(cfg)]) == 0
    assert (tmp_path / "from_cfg.labels.csv").exists()
    # flags override the file
    assert main(["cluster", "--config", str(cfg), "--out", "from_flag"]) == 0
    assert (tmp_path / "from_flag.labels.csv").exists()


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("clusters 3\n")
    with pytest.raises(ConfigError, match="bad.cfg:1"):
        read_config(bad)
    assert main(["cluster", "--config", str(bad)]) == 1
    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("colour=blue\n")
    assert main(["toy", "--config", str(unknown)]) == 1
    badval = tmp_path / "badval.cfg"
    badval.write_text("n=many\n")
    assert main(["toy", "--config", str(badval)]) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ancmm", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "cluster" in res.stdout
