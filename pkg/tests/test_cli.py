import json

from jeffreys_mala.cli import build_parser, main


def test_parser_subcommands_exist():
    parser = build_parser()
    for argv in (
        ["sample", "--model", "coin"],
        ["experiment", "coin"],
        ["experiment", "sv"],
        ["experiment", "weibull"],
        ["validate", "--quick"],
    ):
        assert parser.parse_args(argv).command == argv[0]


def test_experiment_coin_writes_artifacts(tmp_path):
    out = tmp_path / "coin"
    code = main([
        "experiment", "coin", "-o", str(out),
        "--iters", "300", "--realizations", "2", "--seed", "7",
    ])
    assert code == 0
    samples = sorted(out.glob("samples_*.csv"))
    assert len(samples) == 2
    header, first = samples[0].read_text().splitlines()[:2]
    assert header == "phi"
    assert 2.0 <= float(first) <= 3.0
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["config"]["seed"] == 7
    assert "config_hash" in meta and len(meta["realizations"]) == 2
    assert (out / "reference.csv").exists()
    for real in meta["realizations"]:
        assert {"acceptance_rate", "ess", "tv_distance", "seed"} <= set(real)


def test_sample_subcommand_generic_model(tmp_path):
    out = tmp_path / "gen"
    code = main([
        "sample", "--model", "weibull", "-o", str(out),
        "--iters", "50", "--fim-draws", "64", "--seed", "3",
    ])
    assert code == 0
    rows = (out / "samples_00.csv").read_text().splitlines()
    assert rows[0] == "eta,gamma"
    assert len(rows) == 51


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("JEFFREYS_MALA_OUTPUT", str(tmp_path / "envout"))
    code = main(["experiment", "coin", "--iters", "60", "--realizations", "1"])
    assert code == 0
    assert (tmp_path / "envout" / "samples_00.csv").exists()


def test_config_error_exit_code(tmp_path):
    assert main([
        "experiment", "coin", "-o", str(tmp_path), "--tau", "-0.5", "--iters", "50",
    ]) == 2


def test_sample_requires_box_for_oracle_model(tmp_path):
    assert main(["sample", "--model", "lgss", "-o", str(tmp_path), "--iters", "10"]) == 2


def test_estimation_failure_exit_code(tmp_path):
    # a single-replicate estimate of a 3-parameter information matrix is
    # rank one, so the potential is singular at the starting point
    code = main([
        "sample", "--model", "lgss", "-o", str(tmp_path),
        "--lower", "0.2", "0.1", "0.1", "--upper", "0.9", "1.0", "1.0",
        "--iters", "10", "--t-len", "20", "--particles", "32",
        "--chain-mc-runs", "1", "--delta", "0.001",
    ])
    assert code == 3


def test_validate_quick_passes_within_a_minute():
    import time

    t0 = time.perf_counter()
    code = main(["validate", "--quick", "--seed", "0"])
    elapsed = time.perf_counter() - t0
    assert code == 0
    assert elapsed < 60.0


def test_metadata_records_open_defaults(tmp_path):
    out = tmp_path / "meta"
    main(["experiment", "coin", "-o", str(out), "--iters", "60", "--realizations", "1"])
    cfg = json.loads((out / "metadata.json").read_text())["config"]
    for key in ("mc_runs", "chain_mc_runs", "n_obs", "k_neighbors", "bins", "thin"):
        assert key in cfg
