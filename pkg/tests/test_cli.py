"""End-to-end checks of the command-line pipeline."""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import pytest

from appauth.cli import (
    EXIT_DATA,
    EXIT_OK,
    EXIT_USAGE,
    ExperimentConfig,
    apply_overrides,
    build_parser,
    load_config,
    main,
)
from appauth.evaluation import read_scores_csv
from appauth.models import METHOD_TAGS

TINY = {
    "synthetic": {
        "n_users": 3,
        "days": 6,
        "overlap": 0.5,
        "apps_per_user": 8,
        "session_rate": 6.0,
        "session_length": 300.0,
        "dwell": 60.0,
        "concentration": 0.5,
        "context_spread": 1.0,
        "seed": 7,
    },
    "periods": [30],
    "n_values": [5],
    "methods": list(METHOD_TAGS),
    "n_states": 3,
    "max_iter": 4,
    "seed": 7,
    "stride": 7,
    "segment": 40,
    "min_train": 50,
    "min_test": 30,
    "jobs": 2,
}

USERS = ["user00", "user01", "user02"]


def write_config(root: Path, **extra) -> Path:
    payload = dict(TINY, **extra)
    path = root / "config.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory) -> tuple[Path, Path]:
    root = tmp_path_factory.mktemp("cli")
    out = root / "run"
    cfg = write_config(root, out=str(out))
    for command in ["synth", "ingest", "train", "eval", "stats", "intrude"]:
        assert main([command, "--config", str(cfg)]) == EXIT_OK, command
    code = main(
        [
            "score",
            "--config",
            str(cfg),
            "--model",
            str(out / "models" / "user00.mshmm.npz"),
            "--sequence",
            str(out / "test_period30.csv"),
        ]
    )
    assert code == EXIT_OK
    return out, cfg


def test_pipeline_writes_expected_artifacts(pipeline):
    out, _ = pipeline
    expected = [
        "events.csv",
        "train_period30.csv",
        "test_period30.csv",
        "ingest_report.json",
        "metrics.csv",
        "similarity_app.csv",
        "similarity_obs.csv",
        "unknown_stats.csv",
        "top_apps.csv",
        "intrusion_curve.csv",
        "latency.csv",
        "scores.csv",
        "manifest.json",
    ]
    for method in METHOD_TAGS:
        expected += [f"eer_grid_{method}.csv", f"scores_{method}.csv", f"roc_{method}.csv"]
    for name in expected:
        assert (out / name).is_file(), name
    models = sorted(p.name for p in (out / "models").iterdir())
    assert models == sorted(f"{u}.{m}.npz" for u in USERS for m in METHOD_TAGS)


def test_ingest_report_lists_eligible_users(pipeline):
    out, _ = pipeline
    report = json.loads((out / "ingest_report.json").read_text(encoding="utf-8"))
    assert list(report["periods"]) == ["30"]
    entry = report["periods"]["30"]
    assert entry["eligible_users"] == USERS
    for user in USERS:
        assert entry["train_symbols"][user] >= TINY["min_train"]
        assert entry["test_symbols"][user] >= TINY["min_test"]


def test_manifest_has_config_hash_and_no_timestamps(pipeline):
    out, cfg = pipeline
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert set(manifest) == {"command", "config", "config_hash", "versions"}
    assert manifest["command"] == "score"  # last command the fixture ran
    config = ExperimentConfig.from_json(json.loads(Path(cfg).read_text(encoding="utf-8")))
    assert manifest["config_hash"] == config.config_hash()
    assert manifest["config"] == config.to_json()
    assert set(manifest["versions"]) == {"python", "numpy", "appauth"}


def test_metrics_csv_header_and_rows(pipeline):
    out, _ = pipeline
    lines = (out / "metrics.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "method,n,period,threshold,eer,sensitivity,specificity,accuracy,f1"
    assert len(lines) == 1 + len(METHOD_TAGS)  # one n, one period
    for line in lines[1:]:
        fields = line.split(",")
        assert fields[0] in METHOD_TAGS
        assert int(fields[1]) == 5 and int(fields[2]) == 30
        for value in fields[3:]:
            float(value)


def test_eer_grid_shape(pipeline):
    out, _ = pipeline
    lines = (out / "eer_grid_mshmm.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "n,period_30"
    assert len(lines) == 2
    n, eer = lines[1].split(",")
    assert int(n) == 5
    assert 0.0 <= float(eer) <= 100.0


def test_score_output_covers_genuine_and_impostor_windows(pipeline):
    out, _ = pipeline
    records = read_scores_csv(out / "scores.csv")
    assert records
    assert {r.model_owner for r in records} == {"user00"}
    owners = {r.window_owner for r in records}
    assert "user00" in owners and len(owners) == len(USERS)


def test_latency_csv_rows_cover_all_pairs(pipeline):
    out, _ = pipeline
    lines = (out / "latency.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "model_owner,intruder,n,latency_windows,detected"
    assert len(lines) == 1 + len(USERS) * (len(USERS) - 1)  # one n value
    for line in lines[1:]:
        owner, intruder, n, latency, detected = line.split(",")
        assert owner != intruder
        assert int(n) == 5
        assert detected in {"0", "1"}
        assert (latency == "") == (detected == "0")


def test_intrusion_curve_window_indices(pipeline):
    out, _ = pipeline
    lines = (out / "intrusion_curve.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "n,window_index,mean_score"
    rows = [line.split(",") for line in lines[1:]]
    indices = [int(r[1]) for r in rows]
    # Splicing two segment-length halves yields 2*segment - n + 1 windows.
    assert indices == list(range(4, 2 * TINY["segment"]))


def test_eval_rerun_is_byte_identical(pipeline, tmp_path):
    out, _ = pipeline
    cfg = write_config(tmp_path, out=str(tmp_path / "run2"))
    assert main(["eval", "--config", str(cfg)]) == EXIT_OK
    for name in ["metrics.csv", "eer_grid_mshmm.csv", "scores_bin-unk.csv", "roc_med.csv"]:
        assert (tmp_path / "run2" / name).read_bytes() == (out / name).read_bytes()


def test_usage_errors_exit_1(capsys):
    for argv in [["synth", "--method", "bogus"], [], ["score", "--config", "x.json"]]:
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == EXIT_USAGE
        assert "error" in capsys.readouterr().err


def test_missing_event_log_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, out=str(tmp_path / "o"), data=str(tmp_path / "absent.csv"))
    assert main(["ingest", "--config", str(cfg)]) == EXIT_DATA
    assert "data error" in capsys.readouterr().err


def test_malformed_sequence_file_exits_2(pipeline, tmp_path, capsys):
    out, cfg = pipeline
    bad = tmp_path / "bad.csv"
    bad.write_text("who,when,what\nuser00,0,psi\n", encoding="utf-8")
    code = main(
        [
            "score",
            "--config",
            str(cfg),
            "--out",
            str(tmp_path / "o"),
            "--model",
            str(out / "models" / "user00.mc.npz"),
            "--sequence",
            str(bad),
        ]
    )
    assert code == EXIT_DATA
    assert "data error" in capsys.readouterr().err


def test_train_with_no_eligible_users_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, out=str(tmp_path / "o"), min_train=10**6)
    assert main(["train", "--config", str(cfg)]) == EXIT_DATA
    assert "no eligible users" in capsys.readouterr().err


def test_config_json_round_trip():
    config = ExperimentConfig.from_json(TINY)
    assert ExperimentConfig.from_json(config.to_json()) == config
    assert config.config_hash() == ExperimentConfig.from_json(config.to_json()).config_hash()
    assert load_config(None) == ExperimentConfig()


def test_config_rejects_unknown_keys_and_bad_values():
    with pytest.raises(ValueError, match="unknown config keys"):
        ExperimentConfig.from_json({"not_a_field": 1})
    with pytest.raises(ValueError, match="train_fraction"):
        ExperimentConfig(train_fraction=1.5)
    with pytest.raises(ValueError, match="unknown method"):
        ExperimentConfig(methods=("mshmm", "nope"))
    with pytest.raises(ValueError):
        ExperimentConfig(periods=())


def test_config_hash_tracks_content():
    base = ExperimentConfig()
    assert base.config_hash() != replace(base, seed=1).config_hash()
    assert base.config_hash() == ExperimentConfig().config_hash()


def test_apply_overrides_from_argv():
    args = build_parser().parse_args(
        ["train", "--method", "mc", "--n", "40", "--period", "10",
         "--seed", "9", "--out", "elsewhere", "--jobs", "3"]
    )
    config = apply_overrides(ExperimentConfig(), args)
    assert config.methods == ("mc",)
    assert config.n_values == (40,)
    assert config.periods == (10,)
    assert config.seed == 9 and config.synthetic.seed == 9
    assert config.out == "elsewhere"
    assert config.jobs == 3
    plain = ExperimentConfig()
    assert apply_overrides(plain, build_parser().parse_args(["train"])) is plain
