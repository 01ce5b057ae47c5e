import json
import os

import numpy as np
import pytest

from rwn.cli import main
from rwn.dataset import load_csv, write_csv
from rwn.synth import body_like, gaussian_dataset

from conftest import numeric_dataset, random_mixed_dataset


@pytest.fixture
def small_csv(tmp_path):
    d = random_mixed_dataset(np.random.default_rng(1), n=25, p_num=2, p_cat=1, missing=0.05)
    path = tmp_path / "w.csv"
    write_csv(d, path)
    return str(path)


def run(argv):
    return main([str(a) for a in argv])


def test_perturb_happy_path(tmp_path, small_csv):
    out = tmp_path / "wp.csv"
    code = run(["perturb", "--in", small_csv, "--out", out,
                "--eps", 0.5, "--k", 5, "--q", 1, "--seed", 42])
    assert code == 0
    assert out.exists()
    manifest_path = tmp_path / "wp.manifest.json"
    assert manifest_path.exists()
    manifest = json.loads(manifest_path.read_text())
    assert manifest["config"]["q"] == 1.0
    assert manifest["n"] == 25
    assert manifest["distance_evaluations"] == 25 * 24 // 2
    assert manifest["input_sha256"]
    released = load_csv(out)
    assert released.n == 25


def test_perturb_replay_is_byte_identical(tmp_path, small_csv):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["--in", small_csv, "--eps", 0.4, "--k", 3, "--q", 0.7, "--seed", 9]
    assert run(["perturb", *args, "--out", a]) == 0
    assert run(["perturb", *args, "--out", b]) == 0
    assert a.read_bytes() == b.read_bytes()
    ma = json.loads((tmp_path / "a.manifest.json").read_text())
    mb = json.loads((tmp_path / "b.manifest.json").read_text())
    assert ma["output_sha256"] == mb["output_sha256"]


def test_perturb_invalid_q_exits_2(tmp_path, small_csv, capsys):
    code = run(["perturb", "--in", small_csv, "--out", tmp_path / "x.csv", "--q", 1.5])
    assert code == 2
    assert "q" in capsys.readouterr().err


def test_perturb_pair_sample_oversample_exits_2(tmp_path):
    d = numeric_dataset(np.arange(5.0).reshape(-1, 1))
    path = tmp_path / "tiny.csv"
    write_csv(d, path)
    code = run(["perturb", "--in", path, "--out", tmp_path / "x.csv",
                "--backend", "pair_sample", "--m", 10, "--q", 1])
    assert code == 2


def test_perturb_bad_data_exits_3(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n3\n")
    code = run(["perturb", "--in", path, "--out", tmp_path / "x.csv", "--q", 0.5])
    assert code == 3


def test_perturb_unwritable_output_exits_1(tmp_path, small_csv):
    code = run(["perturb", "--in", small_csv, "--out", tmp_path / "nope" / "x.csv", "--q", 0.5])
    assert code == 1


def test_perturb_missing_input_exits_1(tmp_path):
    code = run(["perturb", "--in", tmp_path / "absent.csv", "--out", tmp_path / "x.csv", "--q", 0.5])
    assert code == 1


def test_config_file_with_flag_override(tmp_path, small_csv):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"eps": 0.4, "k": 3, "q": 0.2, "seed": 5}))
    out1, out2, out3 = tmp_path / "1.csv", tmp_path / "2.csv", tmp_path / "3.csv"
    assert run(["perturb", "--in", small_csv, "--out", out1, "--config", cfg_path]) == 0
    # flag overrides the file's q
    assert run(["perturb", "--in", small_csv, "--out", out2, "--config", cfg_path, "--q", 0.2]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert run(["perturb", "--in", small_csv, "--out", out3, "--config", cfg_path, "--seed", 6]) == 0
    assert out1.read_bytes() != out3.read_bytes()


def test_manifest_config_replays(tmp_path, small_csv):
    out1 = tmp_path / "one.csv"
    assert run(["perturb", "--in", small_csv, "--out", out1,
                "--eps", 0.3, "--k", 2, "--q", 0.9, "--seed", 17]) == 0
    manifest = json.loads((tmp_path / "one.manifest.json").read_text())
    cfg_path = tmp_path / "replay.json"
    cfg_path.write_text(json.dumps(manifest["config"]))
    out2 = tmp_path / "two.csv"
    assert run(["perturb", "--in", small_csv, "--out", out2, "--config", cfg_path]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_env_seed_fallback(tmp_path, small_csv, monkeypatch):
    out1, out2, out3 = tmp_path / "1.csv", tmp_path / "2.csv", tmp_path / "3.csv"
    monkeypatch.setenv("RWN_SEED", "77")
    assert run(["perturb", "--in", small_csv, "--out", out1, "--q", 0.8, "--k", 2]) == 0
    assert run(["perturb", "--in", small_csv, "--out", out2, "--q", 0.8, "--k", 2]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert json.loads((tmp_path / "1.manifest.json").read_text())["config"]["seed"] == 77
    # explicit flag beats the environment
    assert run(["perturb", "--in", small_csv, "--out", out3, "--q", 0.8, "--k", 2, "--seed", 78]) == 0
    assert json.loads((tmp_path / "3.manifest.json").read_text())["config"]["seed"] == 78


def test_workers_do_not_change_bytes(tmp_path, small_csv):
    outs = []
    for w in (1, 2, 8):
        out = tmp_path / f"w{w}.csv"
        assert run(["perturb", "--in", small_csv, "--out", out,
                    "--eps", 0.5, "--k", 3, "--q", 1, "--seed", 3, "--workers", w]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


# -- evaluate -----------------------------------------------------------------


def test_evaluate_identity(tmp_path):
    d = body_like(seed=3, n=60)
    a = tmp_path / "a.csv"
    write_csv(d, a)
    report_path = tmp_path / "report.json"
    code = run(["evaluate", "--original", a, "--perturbed", a, "--out", report_path])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["privacy"]["identical_row_fraction"] == 1.0
    assert report["correlation"]["mean_abs_delta"] == 0.0
    assert report["pca"] is not None


def test_evaluate_with_regression_and_tables(tmp_path):
    d = body_like(seed=4, n=80)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(d, a)
    assert run(["perturb", "--in", a, "--out", b, "--eps", 0.25, "--k", 5, "--q", 1, "--seed", 1]) == 0
    report_path = tmp_path / "report.json"
    tables = tmp_path / "tables"
    code = run(["evaluate", "--original", a, "--perturbed", b, "--out", report_path,
                "--regress", "siri~bmi,neck,chest,abdomen,hip", "--tables", tables])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["regression"]["coef_names"][0] == "intercept"
    assert len(report["regression"]["original"]["coef"]) == 6
    for fname in (
        "correlation_original.csv",
        "correlation_released.csv",
        "cooks_distance.csv",
        "min_distance_quartiles.csv",
        "pca_proportions.csv",
    ):
        assert (tables / fname).exists()


def test_evaluate_missing_flag_exits_2(tmp_path):
    code = run(["evaluate", "--original", tmp_path / "a.csv", "--out", tmp_path / "r.json"])
    assert code == 2


def test_evaluate_schema_mismatch_exits_3(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("x,y\n1,2\n3,4\n")
    b.write_text("x,z\n1,2\n3,4\n")
    code = run(["evaluate", "--original", a, "--perturbed", b, "--out", tmp_path / "r.json"])
    assert code == 3


def test_evaluate_bad_regress_syntax_exits_2(tmp_path):
    a = tmp_path / "a.csv"
    a.write_text("x,y\n1,2\n3,4\n")
    code = run(["evaluate", "--original", a, "--perturbed", a,
                "--out", tmp_path / "r.json", "--regress", "nonsense"])
    assert code == 2


# -- diagnose -------------------------------------------------------------------


def test_diagnose_sweep_writes_one_table_per_eps(tmp_path, small_csv):
    outdir = tmp_path / "diag"
    code = run(["diagnose", "--in", small_csv, "--eps", "0.5,1.0,2.0", "--k", 3, "--out", outdir])
    assert code == 0
    files = sorted(os.listdir(outdir))
    assert files == ["profile_eps_0.5.csv", "profile_eps_1.csv", "profile_eps_2.csv"]
    lines = (outdir / "profile_eps_0.5.csv").read_text().splitlines()
    assert lines[0] == "record_index,min_distance,neighborhood_size"
    assert len(lines) == 26


def test_diagnose_single_record_exits_3(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("x\n1\n")
    code = run(["diagnose", "--in", path, "--eps", "0.5", "--k", 0, "--out", tmp_path / "d"])
    assert code == 3


def test_diagnose_duplicates_show_zero_min_distance(tmp_path):
    path = tmp_path / "dup.csv"
    path.write_text("x,y\n1,2\n1,2\n5,6\n8,9\n")
    outdir = tmp_path / "diag"
    assert run(["diagnose", "--in", path, "--eps", "0.5", "--k", 1, "--out", outdir]) == 0
    rows = (outdir / "profile_eps_0.5.csv").read_text().splitlines()[1:]
    mins = [float(r.split(",")[1]) for r in rows]
    assert mins[0] == 0.0 and mins[1] == 0.0


def test_diagnose_bad_eps_exits_2(tmp_path, small_csv):
    assert run(["diagnose", "--in", small_csv, "--eps", "abc", "--k", 1, "--out", tmp_path / "d"]) == 2
    assert run(["diagnose", "--in", small_csv, "--eps", "-1", "--k", 1, "--out", tmp_path / "d"]) == 2


# -- bench ----------------------------------------------------------------------


def test_bench_exact_counter_scaling(tmp_path):
    out = tmp_path / "bench.csv"
    code = run(["bench", "--sizes", "100,200", "--backends", "exact", "--out", out, "--seed", 1])
    assert code == 0
    rows = out.read_text().splitlines()
    header = rows[0].split(",")
    data = [dict(zip(header, r.split(","))) for r in rows[1:]]
    assert int(data[0]["distance_evaluations"]) == 100 * 99 // 2
    assert int(data[1]["distance_evaluations"]) == 200 * 199 // 2


def test_bench_all_backends(tmp_path):
    out = tmp_path / "bench.csv"
    code = run(["bench", "--sizes", "120", "--backends", "exact,pool,pair_sample,partitioned",
                "--m", 10, "--u", 4, "--out", out, "--seed", 2])
    assert code == 0
    rows = out.read_text().splitlines()[1:]
    by_backend = {r.split(",")[1]: r.split(",") for r in rows}
    assert int(by_backend["exact"][2]) == 120 * 119 // 2
    assert int(by_backend["pool"][2]) <= 120 * 10
    assert int(by_backend["pair_sample"][2]) == 120 * 10 // 2
    parts = [int(x) for x in by_backend["partitioned"][4].split(";")]
    assert sum(parts) == int(by_backend["partitioned"][2])
    assert len(parts) == 4


def test_bench_rejects_unknown_backend(tmp_path):
    assert run(["bench", "--sizes", "50", "--backends", "quantum"]) == 2


def test_version_flag():
    assert run(["--version"]) == 0
