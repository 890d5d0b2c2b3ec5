import os
import shutil

import numpy as np
import pytest

from mbcal.cli import (
    ingest_csv,
    load_config,
    main,
    read_partition_file,
    run_pipeline,
    write_dataset_csv,
)
from mbcal.domain import DATASET_HEADER
from mbcal.synthbench import SynthConfig, generate_dataset


# ----------------------------------------------------------------- config


def write_config(path, dataset, out_dir, **overrides):
    base = {
        "dataset_path": str(dataset),
        "out_dir": str(out_dir),
        "calibration_ids": ",".join(str(i) for i in range(1, 9)),
        "theta_design_size": "20",
        "gp_restarts": "2",
        "n_samples": "600",
        "n_burn": "200",
        "chains": "2",
        "screen_points": "10",
        "n_propagate": "50",
        "thin": "5",
    }
    base.update({k: str(v) for k, v in overrides.items()})
    with open(path, "w") as fh:
        fh.write("# test config\n")
        for k, v in base.items():
            fh.write(f"{k} = {v}\n")
    return path


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "cases.csv"
    cases = generate_dataset(SynthConfig(n_cases=30, seed=11))
    write_dataset_csv(cases, path)
    return path


def test_load_config_defaults(tmp_path, dataset):
    cfg_path = write_config(tmp_path / "c.cfg", dataset, tmp_path / "out")
    cfg = load_config(cfg_path)
    assert cfg.prior.lo == 0.05 and cfg.prior.hi == 5.0
    assert cfg.run_screen is True and cfg.run_sobol is False
    assert cfg.calibration_ids == list(range(1, 9))
    assert [m.value for m in cfg.modes] == ["with_discrepancy", "no_discrepancy"]


def test_load_config_unknown_key(tmp_path, dataset):
    path = write_config(tmp_path / "c.cfg", dataset, tmp_path / "out")
    with open(path, "a") as fh:
        fh.write("bogus_key = 1\n")
    with pytest.raises(ValueError, match="unknown config key"):
        load_config(path)


def test_load_config_missing_required(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("out_dir = /tmp/x\ncalibration_ids = 1,2\n")
    with pytest.raises(ValueError, match="dataset_path"):
        load_config(path)


def test_load_config_missing_ids(tmp_path, dataset):
    path = tmp_path / "c.cfg"
    path.write_text(f"dataset_path = {dataset}\nout_dir = {tmp_path / 'out'}\n")
    with pytest.raises(ValueError, match="calibration_ids"):
        load_config(path)


def test_load_config_both_id_sources(tmp_path, dataset):
    part = tmp_path / "part.txt"
    part.write_text("calibration = 1,2,3\n")
    path = write_config(tmp_path / "c.cfg", dataset, tmp_path / "out",
                        partition_file=part)
    with pytest.raises(ValueError, match="not both"):
        load_config(path)


def test_load_config_partition_file(tmp_path, dataset):
    part = tmp_path / "part.txt"
    part.write_text("# ids\ncalibration = 3, 5, 7\n")
    path = tmp_path / "c.cfg"
    path.write_text(
        f"dataset_path = {dataset}\nout_dir = {tmp_path / 'out'}\n"
        f"partition_file = {part}\n"
    )
    cfg = load_config(path)
    assert cfg.calibration_ids == [3, 5, 7]


def test_read_partition_file_bad_key(tmp_path):
    part = tmp_path / "part.txt"
    part.write_text("validation = 1,2\n")
    with pytest.raises(ValueError, match="unexpected key"):
        read_partition_file(part)


def test_load_config_validation(tmp_path, dataset):
    for key, val, msg in [
        ("n_samples", "-5", "positive"),
        ("n_burn", "600", "n_burn"),
        ("run_screen", "maybe", "boolean"),
        ("modes", "bogus_mode", "bogus_mode"),
    ]:
        path = write_config(tmp_path / "c.cfg", dataset, tmp_path / "out",
                            **{key: val})
        with pytest.raises(ValueError, match=msg):
            load_config(path)


def test_load_config_missing_dataset(tmp_path, dataset):
    path = write_config(tmp_path / "c.cfg", tmp_path / "nope.csv",
                        tmp_path / "out")
    with pytest.raises(ValueError, match="not found"):
        load_config(path)


def test_config_hash_excludes_out_dir(tmp_path, dataset):
    a = load_config(write_config(tmp_path / "a.cfg", dataset, tmp_path / "out1"))
    b = load_config(write_config(tmp_path / "b.cfg", dataset, tmp_path / "out2"))
    c = load_config(write_config(tmp_path / "c.cfg", dataset, tmp_path / "out1",
                                 seed=99))
    assert a.hash() == b.hash()
    assert a.hash() != c.hash()


def test_seed_override_changes_hash(tmp_path, dataset):
    path = write_config(tmp_path / "c.cfg", dataset, tmp_path / "out")
    assert load_config(path).hash() != load_config(path, seed_override=5).hash()


# ---------------------------------------------------------------- ingest


def test_ingest_roundtrip(tmp_path, dataset):
    cases = ingest_csv(dataset)
    assert len(cases) == 30
    out = tmp_path / "again.csv"
    write_dataset_csv(cases, out)
    assert out.read_text() == open(dataset).read()


def test_ingest_bad_header_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(DATASET_HEADER.replace(",sigma_exp", "") + "\n")
    with pytest.raises(ValueError, match="missing column.*sigma_exp"):
        ingest_csv(path)


def test_ingest_bad_header_extra_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(DATASET_HEADER + ",extra\n")
    with pytest.raises(ValueError, match="unexpected column.*extra"):
        ingest_csv(path)


def test_ingest_wrong_field_count(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(DATASET_HEADER + "\n1,0.5,0.5\n")
    with pytest.raises(ValueError, match="line 2: expected 9 fields"):
        ingest_csv(path)


def test_ingest_unparseable_value(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(DATASET_HEADER + "\n1,0.5,0.5,0.5,0.5,0.1,0.2,abc,0.01\n")
    with pytest.raises(ValueError, match="line 2: unparseable value"):
        ingest_csv(path)


def test_ingest_duplicate_case_id(tmp_path):
    path = tmp_path / "bad.csv"
    row = "0.5,0.5,0.5,0.5,0.1,0.2,0.3,0.01"
    path.write_text(DATASET_HEADER + f"\n1,{row}\n1,{row}\n")
    with pytest.raises(ValueError, match="line 3: duplicate case_id 1"):
        ingest_csv(path)


def test_ingest_out_of_range_value(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(DATASET_HEADER + "\n1,1.5,0.5,0.5,0.5,0.1,0.2,0.3,0.01\n")
    with pytest.raises(ValueError, match="line 2.*out of \\[0,1\\]"):
        ingest_csv(path)


def test_ingest_nonpositive_sigma(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(DATASET_HEADER + "\n1,0.5,0.5,0.5,0.5,0.1,0.2,0.3,0\n")
    with pytest.raises(ValueError, match="nonpositive measurement sigma"):
        ingest_csv(path)


def test_ingest_skips_comment_lines(tmp_path, dataset):
    text = open(dataset).read()
    path = tmp_path / "commented.csv"
    path.write_text("# preamble\n" + text)
    assert ingest_csv(path) == ingest_csv(dataset)


def test_ingest_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ValueError, match="empty file"):
        ingest_csv(path)


# -------------------------------------------------------------- synth-gen


def test_synth_gen_cli(tmp_path):
    out = tmp_path / "gen.csv"
    rc = main(["synth-gen", "--out", str(out), "--n-cases", "20", "--seed", "3"])
    assert rc == 0
    cases = ingest_csv(out)
    assert len(cases) == 20
    sidecar = str(out) + ".truth.txt"
    assert os.path.exists(sidecar)
    assert "theta_true" in open(sidecar).read()
    # the sidecar must never affect ingestion
    os.remove(sidecar)
    assert len(ingest_csv(out)) == 20


def test_synth_gen_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["synth-gen", "--out", str(a), "--n-cases", "15", "--seed", "7"])
    main(["synth-gen", "--out", str(b), "--n-cases", "15", "--seed", "7"])
    assert a.read_text() == b.read_text()


# --------------------------------------------------------------- pipeline


@pytest.fixture(scope="module")
def small_run(tmp_path_factory, dataset):
    tmp = tmp_path_factory.mktemp("run")
    out = tmp / "out"
    cfg_path = write_config(tmp / "run.cfg", dataset, out)
    rc = run_pipeline(cfg_path)
    return rc, cfg_path, out


def test_pipeline_artifacts_exist(small_run):
    rc, _, out = small_run
    assert rc in (0, 2)
    assert (out / "manifest.txt").exists()
    assert (out / "screening.csv").exists()
    assert (out / "gp_cc.json").exists()
    assert (out / "scatter_prior.csv").exists()
    for mode in ("with_discrepancy", "no_discrepancy"):
        d = out / mode
        for name in ("chain_1.csv", "chain_2.csv", "posterior_summary.csv",
                     "posterior_correlation.csv", "diagnostics.txt",
                     "validation_report.csv", "rmse_summary.txt",
                     "posterior_pairs.csv", "posterior_marginals.csv",
                     "validation_errors.csv"):
            assert (d / name).exists(), name
    assert (out / "with_discrepancy" / "gp_md.json").exists()
    assert not (out / "no_discrepancy" / "gp_md.json").exists()


def test_pipeline_artifacts_carry_hash(small_run):
    _, cfg_path, out = small_run
    cfg_hash = load_config(cfg_path).hash()
    for name in ("screening.csv", "scatter_prior.csv", "manifest.txt"):
        first = open(out / name).readline().strip()
        assert first == f"# config_hash={cfg_hash}"


def test_pipeline_headers(small_run):
    _, _, out = small_run
    expected = {
        "screening.csv": "parameter,output,variance,selected",
        "scatter_prior.csv": "case_id,location,y_exp,y_prior",
        "with_discrepancy/posterior_summary.csv":
            "parameter,mean,std,p2.5,p50,p97.5",
        "with_discrepancy/validation_report.csv":
            "case_id,location,y_exp,y_prior,y_post_mean,y_post_std,"
            "p2.5,p97.5,covered",
        "with_discrepancy/posterior_pairs.csv":
            "chain,step,P1008,P1012,P1022,P1028",
        "with_discrepancy/posterior_marginals.csv":
            "parameter,bin_lo,bin_hi,count",
        "with_discrepancy/validation_errors.csv":
            "case_id,location,error_prior,error_posterior",
    }
    for name, header in expected.items():
        lines = open(out / name).read().splitlines()
        assert lines[1] == header, name


def test_pipeline_pairs_row_count(small_run):
    _, cfg_path, out = small_run
    cfg = load_config(cfg_path)
    per_chain = (cfg.n_samples - cfg.n_burn) // cfg.thin
    lines = open(out / "with_discrepancy" / "posterior_pairs.csv").read().splitlines()
    assert len(lines) == 2 + cfg.chains * per_chain


def test_pipeline_screening_selects_active_only(small_run):
    _, _, out = small_run
    lines = open(out / "screening.csv").read().splitlines()[2:]
    selected = {ln.split(",")[0] for ln in lines if ln.split(",")[3] == "1"}
    assert selected == {"P1008", "P1012", "P1022", "P1028"}


def test_pipeline_resume_and_determinism(small_run, tmp_path, dataset):
    _, cfg_path, out = small_run
    before = open(out / "with_discrepancy" / "posterior_summary.csv").read()
    # resume: identical config re-run must reuse chains and reproduce summaries
    rc = run_pipeline(cfg_path)
    assert rc in (0, 2)
    after = open(out / "with_discrepancy" / "posterior_summary.csv").read()
    assert before == after


def test_pipeline_resume_refused_on_config_change(small_run, tmp_path, dataset):
    _, _, out = small_run
    out2 = tmp_path / "copy"
    shutil.copytree(out, out2)
    cfg_path = write_config(tmp_path / "changed.cfg", dataset, out2, seed=42)
    with pytest.raises(RuntimeError, match="resume refused"):
        run_pipeline(cfg_path)


def test_pipeline_fresh_out_dir_replays(small_run, tmp_path, dataset):
    # same config hash, new out_dir: byte-identical chains
    _, cfg_path, out = small_run
    out2 = tmp_path / "fresh"
    cfg2 = write_config(tmp_path / "fresh.cfg", dataset, out2)
    rc = run_pipeline(cfg2)
    assert rc in (0, 2)
    for mode in ("with_discrepancy", "no_discrepancy"):
        a = open(out / mode / "chain_1.csv").read()
        b = open(out2 / mode / "chain_1.csv").read()
        assert a == b


def test_pipeline_single_stage_screen(tmp_path, dataset):
    out = tmp_path / "out"
    cfg_path = write_config(tmp_path / "c.cfg", dataset, out)
    rc = run_pipeline(cfg_path, stages={"screen"})
    assert rc == 0
    assert (out / "screening.csv").exists()
    assert not (out / "gp_cc.json").exists()


def test_pipeline_sobol_stage(tmp_path, dataset):
    out = tmp_path / "out"
    cfg_path = write_config(tmp_path / "c.cfg", dataset, out,
                            run_sobol="true", sobol_n_base="64")
    rc = run_pipeline(cfg_path, stages={"sobol"})
    assert rc == 0
    lines = open(out / "sobol.csv").read().splitlines()
    assert lines[1] == "parameter,output,first_order,total"
    assert len(lines) == 2 + 4 * 3


def test_pipeline_stage_error_names_stage(tmp_path, dataset):
    out = tmp_path / "out"
    # calibration ids missing from the dataset -> partition stage failure
    cfg_path = write_config(tmp_path / "c.cfg", dataset, out,
                            calibration_ids="900,901,902")
    with pytest.raises(RuntimeError, match="stage 'partition' failed"):
        run_pipeline(cfg_path)


def test_main_reports_errors(tmp_path, capsys):
    rc = main(["run", "--config", str(tmp_path / "missing.cfg")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_main_rejects_bad_threads(tmp_path, dataset):
    cfg_path = write_config(tmp_path / "c.cfg", dataset, tmp_path / "out")
    rc = main(["run", "--config", str(cfg_path), "--threads", "0"])
    assert rc == 1
