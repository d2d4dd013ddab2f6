"""CSV/NDJSON serialization: pinned schemas, formatting, and manifests."""

from __future__ import annotations

import csv
import json
import math

import pytest

from morphevo import output
from morphevo.evolution import EvolutionConfig, EvolvableCompetency, FixedCompetency
from morphevo.experiments import (
    DominationRow,
    ExperimentSpec,
    Variant,
    run_exp4,
    exp4_spec,
    run_experiment,
    run_sweep,
    sweep_spec,
    threshold_table,
    ttest_comparisons,
)
from morphevo.output import CURVE_COLUMNS
from morphevo.seeding import SEED_FORMULA


@pytest.fixture(scope="module")
def tiny_result():
    base = EvolutionConfig(pop_size=10, genome_len=6, max_generations=4)
    comp = EvolutionConfig(
        pop_size=10,
        genome_len=6,
        max_generations=4,
        competency=FixedCompetency(3),
        competent_fraction=0.5,
    )
    spec = ExperimentSpec(
        "tinyout", 7, 2, (Variant("plain", base), Variant("mixed", comp))
    )
    return run_experiment(spec)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_curve_columns_pinned():
    assert CURVE_COLUMNS == (
        "experiment",
        "variant",
        "repeat",
        "generation",
        "best_pheno",
        "best_geno",
        "mean_pheno",
        "mean_geno",
        "best_competency",
        "comp_min",
        "comp_max",
        "competent_prevalence",
        "hardwired_prevalence",
        "corr_geno_pheno",
    )


def test_curves_csv_layout(tmp_path, tiny_result):
    path = tmp_path / "curves.csv"
    output.write_curves_csv(path, tiny_result)
    rows = _read_csv(path)
    assert rows[0] == list(CURVE_COLUMNS)
    assert len(rows) == 1 + 2 * 2 * 5  # variants x repeats x generations
    first = rows[1]
    assert first[:4] == ["tinyout", "plain", "0", "0"]
    record = tiny_result.run("plain", 0).records[0]
    assert first[4] == format(record.best_pheno, ".12g")
    # A hardwired variant has no competency stats: empty cells, not NaN.
    assert first[8] == "" and first[9] == "" and first[10] == ""
    mixed = next(r for r in rows[1:] if r[1] == "mixed")
    # best_competency may be empty when the top individual is hardwired,
    # but the population-level budget range is always present here.
    assert mixed[9] != "" and mixed[10] != ""
    raw = path.read_bytes()
    assert b"\r" not in raw  # newline pinned to \n
    assert b"nan" not in raw.lower()


def test_curves_ndjson_layout(tmp_path, tiny_result):
    path = tmp_path / "curves.ndjson"
    output.write_curves_ndjson(path, tiny_result)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2 * 2 * 5
    objs = [json.loads(line) for line in lines]
    expected_keys = set(CURVE_COLUMNS) | {"best_pheno_raw", "mean_pheno_raw", "locus_changes"}
    for obj in objs:
        assert set(obj) == expected_keys
        assert isinstance(obj["locus_changes"], list)
        assert len(obj["locus_changes"]) == 7  # genome_len + competency slot
    record = tiny_result.run("plain", 1).records[2]
    match = next(o for o in objs if o["variant"] == "plain" and o["repeat"] == 1 and o["generation"] == 2)
    assert match["best_pheno_raw"] == record.best_pheno_raw
    assert match["locus_changes"] == list(record.locus_changes)


def test_threshold_and_ttest_csv(tmp_path, tiny_result):
    table = threshold_table(tiny_result)
    path = tmp_path / "thresholds.csv"
    output.write_threshold_csv(path, table)
    rows = _read_csv(path)
    assert rows[0] == ["variant", "ge_0.65", "ge_0.75", "ge_0.8", "ge_0.9", "ge_0.97", "ge_1"]
    assert {r[0] for r in rows[1:]} == {"plain", "mixed"}

    comparisons = ttest_comparisons(tiny_result, "plain", ["mixed"], generations=(1, 3))
    tpath = tmp_path / "ttests.csv"
    output.write_ttest_csv(tpath, comparisons)
    trows = _read_csv(tpath)
    assert trows[0][:5] == ["generation", "variant_a", "variant_b", "t_statistic", "p_value"]
    assert len(trows) == 3
    assert trows[1][1:3] == ["plain", "mixed"]
    assert trows[1][7] in ("student_pooled", "welch")
    assert trows[1][8] in ("0", "1")


def test_ci_csv(tmp_path, tiny_result):
    path = tmp_path / "ci.csv"
    output.write_ci_csv(path, tiny_result)
    rows = _read_csv(path)
    assert rows[0] == ["variant", "series", "generation", "mean", "lower", "upper"]
    assert len(rows) == 1 + 2 * 2 * 5  # variants x fields x generations
    for row in rows[1:]:
        mean, lower, upper = (float(c) for c in row[3:])
        assert lower <= mean <= upper


def test_domination_grid_csv_marks_no_takeover(tmp_path):
    rows = [
        DominationRow("a", 10, 0.1, (1, 2), 1.5, 1.0),
        DominationRow("b", 10, 0.3, (0, 0), 0.0, 1.0),
        DominationRow("c", 95, 0.1, (None, None), None, 0.0),
        DominationRow("d", 95, 0.3, (None, 4), None, 0.5),
    ]
    path = tmp_path / "domination.csv"
    output.write_domination_grid_csv(path, rows)
    grid = _read_csv(path)
    assert grid[0] == ["level", "mix_10pct", "mix_30pct"]
    assert grid[1] == ["10", "1.5", "0"]
    assert grid[2] == ["95", "x", "x"]

    rpath = tmp_path / "domination_repeats.csv"
    output.write_domination_repeats_csv(rpath, rows)
    rrows = _read_csv(rpath)
    assert rrows[0] == ["variant", "level", "mix_fraction", "repeat", "generation"]
    by_key = {(r[0], r[3]): r[4] for r in rrows[1:]}
    assert by_key[("c", "0")] == ""  # never dominated -> empty cell
    assert by_key[("d", "1")] == "4"


def test_corr_bins_gene_changes_stable_csv(tmp_path, tiny_result):
    from morphevo.experiments import CorrBin, correlation_bins

    bins = (
        CorrBin(start=0, stop=10, mean_corr=0.5, n_values=20, n_undefined=3),
        CorrBin(start=10, stop=20, mean_corr=math.nan, n_values=20, n_undefined=20),
    )
    path = tmp_path / "bins.csv"
    output.write_corr_bins_csv(path, "v", bins)
    rows = _read_csv(path)
    assert rows[0] == ["variant", "gen_start", "gen_stop", "mean_corr", "n_values", "n_undefined"]
    assert rows[1] == ["v", "0", "10", "0.5", "20", "3"]
    assert rows[2][3] == ""  # NaN bin mean serialized as empty

    gpath = tmp_path / "gene_changes.csv"
    output.write_gene_changes_csv(gpath, tiny_result, "plain")
    grows = _read_csv(gpath)
    assert grows[0] == ["variant", "generation", "competency_changes_mean", "structural_changes_mean"]
    assert len(grows) == 1 + 5

    spath = tmp_path / "stable.csv"
    output.write_stable_csv(spath, "v", [12.0, 400.5])
    srows = _read_csv(spath)
    assert srows[1] == ["v", "0", "12"]
    assert srows[2] == ["v", "1", "400.5"]

    real_bins = correlation_bins(tiny_result, "mixed", bin_size=2)
    output.write_corr_bins_csv(tmp_path / "real_bins.csv", "mixed", real_bins)


def test_exp4_trend_csv(tmp_path):
    spec = exp4_spec(repeats=2, generations=30, pop_size=12, genome_len=6)
    report = run_exp4(spec, bin_size=10)
    path = tmp_path / "trend.csv"
    output.write_exp4_trend_csv(path, report)
    rows = _read_csv(path)
    assert rows[0] == [
        "probe_generation",
        "geno_at_probe",
        "geno_final",
        "geno_gain",
        "late_slope",
        "comp_median_early",
        "comp_median_late",
    ]
    assert rows[1][0] == "30"
    assert float(rows[1][3]) == pytest.approx(report.geno_final - report.geno_at_probe)


def test_sweep_csvs(tmp_path):
    spec = sweep_spec(
        grid=((0.3, 0.6), (0.2, 0.5)), repeats=2, generations=10, pop_size=10, genome_len=6
    )
    result = run_sweep(spec)
    output.write_sweep_points_csv(tmp_path / "points.csv", result)
    output.write_sweep_repeats_csv(tmp_path / "repeats.csv", result)
    output.write_sweep_correlations_csv(tmp_path / "corr.csv", result)
    points = _read_csv(tmp_path / "points.csv")
    assert points[0] == ["mutation_prob", "selection_frac", "stable_mean"]
    assert len(points) == 5
    repeats = _read_csv(tmp_path / "repeats.csv")
    assert len(repeats) == 1 + 4 * 2
    corr = _read_csv(tmp_path / "corr.csv")
    assert corr[0] == ["parameter", "corr_with_stable_competency"]
    assert [corr[1][0], corr[2][0]] == ["mutation_prob", "selection_frac"]


def test_float_formatting_is_12_significant_digits(tmp_path, tiny_result):
    path = tmp_path / "curves.csv"
    output.write_curves_csv(path, tiny_result)
    rows = _read_csv(path)
    record = tiny_result.run("mixed", 0).records[0]
    row = next(r for r in rows[1:] if r[1] == "mixed" and r[2] == "0" and r[3] == "0")
    assert row[4] == format(record.best_pheno, ".12g")
    assert row[11] == format(record.competent_prevalence, ".12g")


# ---------------------------------------------------------------------------
# Manifests.


def test_config_to_dict_round_trips_modes():
    assert output.config_to_dict(EvolutionConfig())["competency"] is None
    fixed = output.config_to_dict(
        EvolutionConfig(competency=FixedCompetency(7), competent_fraction=1.0)
    )
    assert fixed["competency"] == {"mode": "fixed", "value": 7}
    evolvable = output.config_to_dict(
        EvolutionConfig(competency=EvolvableCompetency(), competent_fraction=1.0)
    )
    assert evolvable["competency"] == {
        "mode": "evolvable",
        "init_range": [1, 15],
        "mutate_range": [1, 500],
    }
    assert fixed["init_mode"] == "uniform"


def test_build_manifest_contents(tmp_path, tiny_result):
    manifest = output.build_manifest(
        tiny_result.spec, jobs=3, argv=["exp1", "--seed", "7"], outputs=["curves.csv"]
    )
    assert manifest["experiment"] == "tinyout"
    assert manifest["base_seed"] == 7
    assert manifest["jobs"] == 3
    assert manifest["seed_formula"] == SEED_FORMULA
    assert manifest["argv"] == ["exp1", "--seed", "7"]
    assert len(manifest["variants"]) == 2
    for vi, variant in enumerate(manifest["variants"]):
        assert variant["run_seeds"] == [tiny_result.spec.run_seed(vi, r) for r in range(2)]
    path = tmp_path / "manifest.json"
    output.write_manifest(path, manifest)
    assert json.loads(path.read_text(encoding="utf-8")) == manifest


def test_build_sweep_manifest_contents():
    spec = sweep_spec(grid=((0.3,), (0.2, 0.5)), repeats=2, generations=5)
    result = run_sweep(spec)
    manifest = output.build_sweep_manifest(result, jobs=1, argv=None)
    assert manifest["experiment"] == "sweep"
    assert manifest["grid"] == {"mutation_probs": [0.3], "selection_fracs": [0.2, 0.5]}
    assert len(manifest["run_seeds"]) == 4
    assert manifest["run_seeds"][0]["point"] == 0


def test_identical_results_serialize_to_identical_bytes(tmp_path, tiny_result):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    output.write_curves_csv(a, tiny_result)
    output.write_curves_csv(b, tiny_result)
    assert a.read_bytes() == b.read_bytes()
