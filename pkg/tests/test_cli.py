"""Command-line interface: flags, config files, outputs, determinism."""

from __future__ import annotations

import json

import pytest

from morphevo.cli import build_parser, main
from morphevo.experiments import DEFAULT_BASE_SEED

TINY_EXP1 = [
    "--repeats",
    "2",
    "--generations",
    "4",
    "--pop-size",
    "12",
    "--genome-len",
    "6",
    "--levels",
    "5",
]


def _manifest(out_dir) -> dict:
    return json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))


def _data_files(out_dir) -> dict[str, bytes]:
    return {
        p.name: p.read_bytes()
        for p in sorted(out_dir.iterdir())
        if p.name != "manifest.json"
    }


# ---------------------------------------------------------------------------
# Parser and option resolution.


def test_parser_has_all_subcommands():
    parser = build_parser()
    text = parser.format_help()
    for sub in ("exp1", "exp2", "exp3", "exp4", "sweep", "run", "selftest"):
        assert sub in text


def test_invalid_flag_value_exits_with_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["exp1", "--mutation-prob", "1.5"])
    assert exc.value.code == 2
    assert "mutation-prob" in capsys.readouterr().err


def test_unknown_subcommand_exits_with_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main([])


def test_exp1_defaults_recorded_in_manifest(tmp_path):
    out = tmp_path / "out"
    assert main(["exp1", *TINY_EXP1, "--out-dir", str(out)]) == 0
    manifest = _manifest(out)
    assert manifest["base_seed"] == DEFAULT_BASE_SEED
    assert manifest["repeats"] == 2
    cfg = manifest["variants"][0]["config"]
    assert cfg["mutation_prob"] == 0.6
    assert cfg["selection_frac"] == 0.1
    assert cfg["init_mode"] == "uniform"
    assert [v["label"] for v in manifest["variants"]] == ["hardwired", "level_5"]
    assert sorted(manifest["outputs"]) == manifest["outputs"]


def test_config_file_between_defaults_and_flags(tmp_path):
    cfg = tmp_path / "opts.cfg"
    cfg.write_text(
        "generations = 3\n"
        "pop-size = 14   # inline comment\n"
        "\n"
        "seed=5\n",
        encoding="utf-8",
    )
    out = tmp_path / "out"
    code = main(
        ["exp1", "--config", str(cfg), "--generations", "6", "--repeats", "1",
         "--genome-len", "6", "--levels", "5", "--out-dir", str(out)]
    )
    assert code == 0
    manifest = _manifest(out)
    variant_cfg = manifest["variants"][0]["config"]
    assert variant_cfg["max_generations"] == 6  # flag beats file
    assert variant_cfg["pop_size"] == 14  # file beats default
    assert manifest["base_seed"] == 5


def test_config_file_unknown_key_is_an_error(tmp_path, capsys):
    cfg = tmp_path / "opts.cfg"
    cfg.write_text("bogus = 3\n", encoding="utf-8")
    assert main(["exp1", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "error:" in err and "unknown option" in err


def test_config_file_bad_value_is_an_error(tmp_path, capsys):
    cfg = tmp_path / "opts.cfg"
    cfg.write_text("generations = many\n", encoding="utf-8")
    assert main(["exp1", "--config", str(cfg)]) == 2
    assert "generations" in capsys.readouterr().err


def test_missing_config_file_is_an_error(tmp_path, capsys):
    assert main(["exp1", "--config", str(tmp_path / "nope.cfg")]) == 2
    assert "error:" in capsys.readouterr().err


def test_default_out_dir_is_runs_subcommand(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = main(["run", "--repeats", "1", "--generations", "2", "--pop-size", "6",
                 "--genome-len", "4"])
    assert code == 0
    assert (tmp_path / "runs" / "run" / "manifest.json").exists()


# ---------------------------------------------------------------------------
# Output inventories per subcommand.


def test_exp1_writes_expected_files(tmp_path):
    out = tmp_path / "out"
    assert main(["exp1", *TINY_EXP1, "--out-dir", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == [
        "ci.csv",
        "curves.csv",
        "curves.ndjson",
        "manifest.json",
        "thresholds.csv",
        "ttests.csv",
    ]
    assert sorted(_manifest(out)["outputs"]) == [n for n in names if n != "manifest.json"]


def test_format_flag_limits_curve_files(tmp_path):
    out = tmp_path / "csv_only"
    assert main(["exp1", *TINY_EXP1, "--out-dir", str(out), "--format", "csv"]) == 0
    names = {p.name for p in out.iterdir()}
    assert "curves.csv" in names and "curves.ndjson" not in names

    out2 = tmp_path / "ndjson_only"
    assert main(["exp1", *TINY_EXP1, "--out-dir", str(out2), "--format", "ndjson"]) == 0
    names2 = {p.name for p in out2.iterdir()}
    assert "curves.ndjson" in names2 and "curves.csv" not in names2


def test_exp2_writes_domination_tables(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(
        ["exp2", "--repeats", "2", "--generations", "3", "--pop-size", "20",
         "--genome-len", "6", "--levels", "8", "--fractions", "0.3",
         "--out-dir", str(out)]
    )
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"domination.csv", "domination_repeats.csv", "manifest.json"} <= names
    stdout = capsys.readouterr().out
    assert "mix_30pct" in stdout


def test_exp3_writes_competency_summaries(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(
        ["exp3", "--repeats", "1", "--generations", "10", "--pop-size", "10",
         "--genome-len", "6", "--out-dir", str(out)]
    )
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"correlation_bins.csv", "gene_changes.csv", "stable_competency.csv"} <= names
    assert "stable competency per repeat" in capsys.readouterr().out


def test_exp4_writes_trend(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(
        ["exp4", "--repeats", "1", "--generations", "10", "--pop-size", "10",
         "--genome-len", "6", "--out-dir", str(out)]
    )
    assert code == 0
    assert (out / "trend.csv").exists()
    stdout = capsys.readouterr().out
    assert "(gen 10)" in stdout  # probe generation tracks short horizons


def test_sweep_writes_summaries_only(tmp_path):
    out = tmp_path / "out"
    code = main(
        ["sweep", "--grid", "2x2", "--repeats", "1", "--generations", "10",
         "--pop-size", "10", "--genome-len", "6", "--out-dir", str(out)]
    )
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == [
        "manifest.json",
        "sweep_correlations.csv",
        "sweep_points.csv",
        "sweep_repeats.csv",
    ]
    manifest = _manifest(out)
    assert len(manifest["run_seeds"]) == 4


def test_run_subcommand_competency_modes(tmp_path):
    base = ["--repeats", "1", "--generations", "3", "--pop-size", "8", "--genome-len", "5"]
    for extra, tag in (
        ([], "hardwired"),
        (["--competency", "fixed", "--level", "4"], "fixed"),
        (["--competency", "evolvable", "--comp-init", "1,5", "--comp-mutate", "1,20"], "evolvable"),
    ):
        out = tmp_path / tag
        assert main(["run", *base, *extra, "--out-dir", str(out)]) == 0
        comp = _manifest(out)["variants"][0]["config"]["competency"]
        if tag == "hardwired":
            assert comp is None
        else:
            assert comp["mode"] == tag


def test_run_rejects_bad_level(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--competency", "fixed", "--level", "0"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# Determinism contracts.


def test_rerun_is_byte_identical_except_timestamp(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert main(["exp1", *TINY_EXP1, "--out-dir", str(out)]) == 0
    assert _data_files(out_a) == _data_files(out_b)
    ma, mb = _manifest(out_a), _manifest(out_b)
    for m in (ma, mb):
        m.pop("created_utc")
        m.pop("argv")  # differs in --out-dir
    assert ma == mb


def test_jobs_flag_does_not_change_outputs(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["exp1", *TINY_EXP1, "--out-dir", str(out_a), "--jobs", "1"]) == 0
    assert main(["exp1", *TINY_EXP1, "--out-dir", str(out_b), "--jobs", "2"]) == 0
    assert _data_files(out_a) == _data_files(out_b)


def test_selftest_passes():
    assert main(["selftest"]) == 0
