"""End-to-end CLI behavior: determinism, formats, config, exit codes."""

import json

import numpy as np
import pytest

from loggas.cli import (EXIT_OK, EXIT_USAGE, load_config,
                        parse_test_function, read_spectra_csv, run)
from loggas.errors import ConfigError


def test_sample_deterministic_bytes(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    argv = ["sample", "--n", "4", "--beta", "2", "--reps", "10",
            "--seed", "7"]
    assert run(argv + ["--out", str(a)]) == EXIT_OK
    assert run(argv + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_sample_csv_roundtrip_and_header(tmp_path):
    out = tmp_path / "s.csv"
    assert run(["sample", "--n", "3", "--beta", "1", "--reps", "5",
                "--seed", "3", "--out", str(out)]) == EXIT_OK
    text = out.read_text()
    assert "# seed=3" in text and "# n=3" in text
    header, arr = read_spectra_csv(str(out))
    assert header == ["x1", "x2", "x3"] and arr.shape == (5, 3)
    # rows are ordered configurations
    assert np.all(arr[:, :-1] >= arr[:, 1:])


def test_sample_json_format(tmp_path):
    out = tmp_path / "s.json"
    assert run(["sample", "--n", "2", "--beta", "2", "--reps", "3",
                "--seed", "1", "--format", "json", "--out", str(out)]) \
        == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["schema"] == "loggas/spectra/1"
    assert len(doc["draws"]) == 3 and len(doc["draws"][0]) == 2


def test_manifest_written_and_reproducible(tmp_path):
    out = tmp_path / "s.csv"
    argv = ["sample", "--n", "2", "--beta", "2", "--reps", "4", "--seed",
            "9", "--out", str(out)]
    assert run(argv) == EXIT_OK
    manifest = json.loads((tmp_path / "s.csv.manifest.json").read_text())
    assert manifest["schema"] == "loggas/manifest/1"
    assert manifest["params"]["seed"] == 9
    assert manifest["kernel_lane"] in ("compiled", "python")
    digest = manifest["outputs"][0]["sha256"]
    # re-running the recorded argv reproduces the same payload digest
    assert run(manifest["argv"]) == EXIT_OK
    manifest2 = json.loads((tmp_path / "s.csv.manifest.json").read_text())
    assert manifest2["outputs"][0]["sha256"] == digest


def test_threads_do_not_change_bytes(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    base = ["sample", "--n", "4", "--beta", "2", "--reps", "64", "--seed",
            "5"]
    assert run(base + ["--threads", "1", "--out", str(a)]) == EXIT_OK
    assert run(base + ["--threads", "4", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_config_precedence_and_provenance(tmp_path):
    cfg = tmp_path / "cfg"
    cfg.write_text("beta = 2\nreps = 6\n# comment\n\nn = 3\n")
    out = tmp_path / "o.csv"
    assert run(["sample", "--config", str(cfg), "--beta", "4",
                "--out", str(out)]) == EXIT_OK
    manifest = json.loads((tmp_path / "o.csv.manifest.json").read_text())
    assert manifest["params"]["beta"] == 4.0
    assert manifest["provenance"] == {
        **manifest["provenance"], "beta": "flag", "reps": "config",
        "n": "config", "seed": "default"}
    _, arr = read_spectra_csv(str(out))
    assert arr.shape == (6, 3)


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "cfg"
    cfg.write_text("betta = 2\n")
    code = run(["sample", "--config", str(cfg), "--n", "2", "--beta", "2",
                "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_USAGE


def test_config_malformed_line_number(tmp_path):
    cfg = tmp_path / "cfg"
    cfg.write_text("n = 2\nnot a pair\n")
    with pytest.raises(ConfigError) as err:
        load_config(str(cfg))
    assert err.value.line == 2


def test_config_type_mismatch_line_number(tmp_path):
    cfg = tmp_path / "cfg"
    cfg.write_text("reps = many\n")
    code = run(["sample", "--config", str(cfg), "--n", "2", "--beta", "2",
                "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_USAGE


def test_empty_config_all_defaults(tmp_path):
    cfg = tmp_path / "cfg"
    cfg.write_text("")
    out = tmp_path / "o.csv"
    assert run(["sample", "--config", str(cfg), "--n", "2", "--beta", "1",
                "--out", str(out)]) == EXIT_OK
    _, arr = read_spectra_csv(str(out))
    assert arr.shape == (1, 2)  # reps default 1


def test_domain_error_exit_code(tmp_path):
    assert run(["sample", "--n", "0", "--beta", "2",
                "--out", str(tmp_path / "x.csv")]) == EXIT_USAGE
    assert run(["sample", "--n", "2", "--beta", "-1",
                "--out", str(tmp_path / "x.csv")]) == EXIT_USAGE


def test_verify_poincare_equality_json(tmp_path, capsys):
    code = run(["verify", "poincare", "--fn", "linear:1,1,1,1", "--n", "4",
                "--beta", "2", "--reps", "100000", "--seed", "2"])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["verdict"] == "equality_within_error"
    assert 0.99 < doc["ratio"] < 1.01


def test_verify_strict_and_violation_codes(tmp_path):
    out = tmp_path / "v.json"
    code = run(["verify", "poincare", "--fn", "max", "--n", "4", "--beta",
                "2", "--reps", "20000", "--seed", "3", "--out", str(out)])
    assert code == EXIT_OK
    assert json.loads(out.read_text())["verdict"] == "strict_inequality"


def test_verify_tails_csv_two_columns(tmp_path):
    out = tmp_path / "t.csv"
    code = run(["verify", "tails", "--fn", "max", "--n", "8", "--beta", "2",
                "--reps", "20000", "--seed", "4", "--r-grid", "0.2,0.4,0.6",
                "--format", "csv", "--out", str(out)])
    assert code == EXIT_OK
    lines = [l for l in out.read_text().splitlines() if l and not
             l.startswith("#")]
    assert lines[0] == "r,empirical"
    assert all(len(l.split(",")) == 2 for l in lines[1:])


def test_verify_factorization(tmp_path):
    out = tmp_path / "f.json"
    code = run(["verify", "factorization", "--n", "4", "--beta", "1",
                "--reps", "20000", "--seed", "5", "--out", str(out)])
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    assert abs(doc["var_diag"]["mean"] - 0.25) < 0.01


def test_verify_herbst(tmp_path):
    out = tmp_path / "h.json"
    code = run(["verify", "herbst", "--fn", "linstat:identity", "--n", "8",
                "--beta", "2", "--reps", "20000", "--seed", "6",
                "--lambda-grid", "0.5,1.0", "--out", str(out)])
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["verdict"] == "satisfied" and len(doc["rows"]) == 2


def test_lassalle_eigenvalues_json(capsys):
    code = run(["lassalle", "--n", "3", "--beta", "2", "--max-degree", "2"])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    eigs = sorted(e["eigenvalue"] for e in doc["eigenfunctions"])
    assert eigs == [-6, -6, -3, 0]
    by_label = {tuple(e["partition"]): e for e in doc["eigenfunctions"]}
    # the dominant weight-2 eigenfunction is the centered second power sum
    assert by_label[(2,)]["coefficients"] == {"": "-3", "2": "1"}


def test_lassalle_symbolic(capsys):
    code = run(["lassalle", "--n", "2", "--symbolic", "--max-degree", "2"])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["beta"] == "symbolic"
    by_label = {tuple(e["partition"]): e for e in doc["eigenfunctions"]}
    assert "beta" in by_label[(2,)]["coefficients"][""]


def test_lassalle_poly_roundtrip_into_verify(tmp_path):
    # lassalle output is directly consumable as a verify test function
    out = tmp_path / "l.json"
    assert run(["lassalle", "--n", "3", "--beta", "2", "--max-degree", "2",
                "--json-out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    entry = next(e for e in doc["eigenfunctions"]
                 if e["partition"] == [1])
    poly_file = tmp_path / "p.json"
    poly_file.write_text(json.dumps(
        {"n_vars": 3, "coeffs": entry["coefficients"]}))
    vout = tmp_path / "v.json"
    code = run(["verify", "poincare", "--fn", f"poly:{poly_file}", "--n",
                "3", "--beta", "2", "--reps", "50000", "--seed", "8",
                "--out", str(vout)])
    assert code == EXIT_OK
    vdoc = json.loads(vout.read_text())
    # the coordinate sum is the equality direction
    assert vdoc["verdict"] == "equality_within_error"


def test_dou_couple_two_column_csv(tmp_path):
    out = tmp_path / "c.csv"
    code = run(["dou", "couple", "--n", "4", "--beta", "2", "--dt", "1e-3",
                "--t-end", "0.2", "--reps", "5", "--seed", "5",
                "--out", str(out)])
    assert code == EXIT_OK
    lines = [l for l in out.read_text().splitlines()
             if l and not l.startswith("#")]
    assert lines[0] == "t,distance"
    dists = [float(l.split(",")[1]) for l in lines[1:]]
    assert dists[-1] < dists[0]  # contraction visible


def test_dou_couple_file_initial_condition(tmp_path):
    f0 = tmp_path / "x0.csv"
    f0.write_text("1.0,0.2,-0.2,-1.0\n")
    out = tmp_path / "c.csv"
    code = run(["dou", "couple", "--n", "4", "--beta", "2", "--dt", "1e-3",
                "--t-end", "0.1", "--reps", "2", "--seed", "5",
                "--x0", f"file:{f0}", "--y0", "equispaced[-2,2]",
                "--out", str(out)])
    assert code == EXIT_OK


def test_dou_simulate_csv(tmp_path):
    out = tmp_path / "d.csv"
    code = run(["dou", "simulate", "--n", "3", "--beta", "2", "--dt", "1e-3",
                "--t-end", "0.05", "--reps", "2", "--seed", "4",
                "--record-every", "10", "--x0", "equispaced[-1,1]",
                "--out", str(out)])
    assert code == EXIT_OK
    lines = [l for l in out.read_text().splitlines()
             if l and not l.startswith("#")]
    assert lines[0] == "path,t,x1,x2,x3"


def test_spectrum_stats_report(tmp_path):
    s = tmp_path / "s.csv"
    assert run(["sample", "--n", "200", "--beta", "2", "--reps", "1",
                "--seed", "3", "--out", str(s)]) == EXIT_OK
    out = tmp_path / "r.json"
    assert run(["spectrum-stats", "--in", str(s), "--beta", "2",
                "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["ks_vs_semicircle"] < 0.06
    assert doc["w2_vs_semicircle"] < 0.1
    assert abs(doc["largest_atom"]["max"] - 2.0) < 0.2


def test_parse_test_function_errors():
    from loggas.errors import DomainError

    with pytest.raises(DomainError):
        parse_test_function("linear:1,2", 4)
    with pytest.raises(DomainError):
        parse_test_function("nope", 2)
    with pytest.raises(DomainError):
        parse_test_function("linstat:stieltjes_re:0.0:-1.0", 2)


def test_missing_file_exit_code(tmp_path):
    assert run(["spectrum-stats", "--in", str(tmp_path / "none.csv"),
                "--beta", "2"]) == EXIT_USAGE
