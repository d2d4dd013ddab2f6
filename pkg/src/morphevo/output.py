"""File output: per-generation curves, summary tables, run manifests.

All files are UTF-8 with ``\\n`` line endings, floats rendered with
``%.12g``, and rows emitted in a canonical order (variants in spec
order, repeats ascending, generations ascending), so re-running an
experiment with the same manifest reproduces every CSV/NDJSON byte for
byte.  The manifest's ``created_utc`` timestamp is the one intentionally
non-reproducible field.

Undefined values (competency stats of hardwired populations, the
genotype-phenotype correlation when fitness is constant) are written as
empty CSV cells and JSON ``null``.
"""

from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .evolution import (
    EvolutionConfig,
    EvolvableCompetency,
    FixedCompetency,
    RunResult,
)
from .experiments import (
    CorrBin,
    DominationRow,
    Exp4Report,
    ExperimentResult,
    ExperimentSpec,
    SweepResult,
    ThresholdTable,
    TTestComparison,
    mean_locus_change_curves,
)
from .seeding import SEED_FORMULA, derive_seed
from .stats import ci95

__all__ = [
    "CURVE_COLUMNS",
    "write_curves_csv",
    "write_curves_ndjson",
    "write_threshold_csv",
    "write_ttest_csv",
    "write_ci_csv",
    "write_domination_grid_csv",
    "write_domination_repeats_csv",
    "write_corr_bins_csv",
    "write_gene_changes_csv",
    "write_stable_csv",
    "write_exp4_trend_csv",
    "write_sweep_points_csv",
    "write_sweep_repeats_csv",
    "write_sweep_correlations_csv",
    "config_to_dict",
    "build_manifest",
    "build_sweep_manifest",
    "write_manifest",
]

# Pinned curve schema; changing it is a format break for downstream
# analysis code.
CURVE_COLUMNS = (
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


def _fmt(value) -> str:
    """Canonical CSV cell: %.12g floats, plain ints, empty for undefined."""
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return format(value, ".12g")
    return str(value)


def _writer(handle):
    return csv.writer(handle, lineterminator="\n")


def _curve_cells(experiment: str, variant: str, repeat: int, record) -> list:
    corr = record.corr_geno_pheno
    return [
        experiment,
        variant,
        repeat,
        record.generation,
        record.best_pheno,
        record.best_geno,
        record.mean_pheno,
        record.mean_geno,
        record.best_competency,
        record.comp_min,
        record.comp_max,
        record.competent_prevalence,
        record.hardwired_prevalence,
        None if math.isnan(corr) else corr,
    ]


def _iter_runs(result: ExperimentResult):
    for variant in result.spec.variants:
        for repeat in range(result.spec.repeats):
            yield variant.label, repeat, result.runs[(variant.label, repeat)]


def write_curves_csv(path: Path, result: ExperimentResult) -> None:
    """Per-generation telemetry, one row per (variant, repeat, generation)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for label, repeat, run in _iter_runs(result):
            for record in run.records:
                writer.writerow(
                    _fmt(c) for c in _curve_cells(result.spec.name, label, repeat, record)
                )


def write_curves_ndjson(path: Path, result: ExperimentResult) -> None:
    """Curve rows as NDJSON, with extra per-record detail.

    Adds the raw (unpenalized) fitness twins and the cumulative per-locus
    mutation counters, which do not fit the flat CSV schema.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for label, repeat, run in _iter_runs(result):
            for record in run.records:
                cells = _curve_cells(result.spec.name, label, repeat, record)
                obj = dict(zip(CURVE_COLUMNS, cells))
                obj["best_pheno_raw"] = record.best_pheno_raw
                obj["mean_pheno_raw"] = record.mean_pheno_raw
                obj["locus_changes"] = list(record.locus_changes)
                fh.write(json.dumps(obj, allow_nan=False, separators=(",", ":")))
                fh.write("\n")


def write_threshold_csv(path: Path, table: ThresholdTable) -> None:
    """Median milestone-crossing generations, one row per variant."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(["variant"] + [f"ge_{_fmt(t)}" for t in table.thresholds])
        for label, cells in table.rows.items():
            writer.writerow([label] + [_fmt(c) for c in cells])


def write_ttest_csv(path: Path, ttests: Sequence[TTestComparison]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(
            [
                "generation",
                "variant_a",
                "variant_b",
                "t_statistic",
                "p_value",
                "df",
                "variance_ratio",
                "method",
                "degenerate",
            ]
        )
        for cmp in ttests:
            rep = cmp.report
            writer.writerow(
                [
                    cmp.generation,
                    cmp.variant_a,
                    cmp.variant_b,
                    _fmt(rep.t_statistic),
                    _fmt(rep.p_value),
                    _fmt(rep.df),
                    _fmt(rep.variance_ratio),
                    rep.method.value,
                    int(rep.degenerate),
                ]
            )


def write_ci_csv(
    path: Path,
    result: ExperimentResult,
    fields: Sequence[str] = ("best_pheno", "mean_pheno"),
) -> None:
    """Mean curves with normal-approximation 95% bands across repeats."""
    from .experiments import repeats_matrix

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(["variant", "series", "generation", "mean", "lower", "upper"])
        for variant in result.spec.variants:
            for field_name in fields:
                matrix = repeats_matrix(result, variant.label, field_name)
                mean, lower, upper = ci95(matrix)
                for gen in range(mean.size):
                    writer.writerow(
                        [
                            variant.label,
                            field_name,
                            gen,
                            _fmt(float(mean[gen])),
                            _fmt(float(lower[gen])),
                            _fmt(float(upper[gen])),
                        ]
                    )


def write_domination_grid_csv(path: Path, rows: Sequence[DominationRow]) -> None:
    """Level x initial-share grid of median takeover generations.

    Cells with no takeover in most repeats are written as ``x``.
    """
    levels = sorted({r.level for r in rows})
    fractions = sorted({r.fraction for r in rows})
    by_key = {(r.level, r.fraction): r for r in rows}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(["level"] + [f"mix_{f * 100:g}pct" for f in fractions])
        for level in levels:
            cells = []
            for frac in fractions:
                row = by_key.get((level, frac))
                if row is None or row.median_generation is None:
                    cells.append("x")
                else:
                    cells.append(_fmt(row.median_generation))
            writer.writerow([level] + cells)


def write_domination_repeats_csv(path: Path, rows: Sequence[DominationRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(["variant", "level", "mix_fraction", "repeat", "generation"])
        for row in rows:
            for repeat, gen in enumerate(row.per_repeat):
                writer.writerow(
                    [row.label, row.level, _fmt(row.fraction), repeat, _fmt(gen)]
                )


def write_corr_bins_csv(path: Path, label: str, bins: Sequence[CorrBin]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(
            ["variant", "gen_start", "gen_stop", "mean_corr", "n_values", "n_undefined"]
        )
        for b in bins:
            mean = None if math.isnan(b.mean_corr) else b.mean_corr
            writer.writerow(
                [label, b.start, b.stop, _fmt(mean), b.n_values, b.n_undefined]
            )


def write_gene_changes_csv(path: Path, result: ExperimentResult, label: str) -> None:
    """Mean cumulative mutation counts: competency gene vs structural loci."""
    comp_curve, struct_curve = mean_locus_change_curves(result, label)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(
            ["variant", "generation", "competency_changes_mean", "structural_changes_mean"]
        )
        for gen in range(comp_curve.size):
            writer.writerow(
                [label, gen, _fmt(float(comp_curve[gen])), _fmt(float(struct_curve[gen]))]
            )


def write_stable_csv(path: Path, label: str, stable_values: Sequence[float]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(["variant", "repeat", "stable_competency"])
        for repeat, value in enumerate(stable_values):
            writer.writerow([label, repeat, _fmt(float(value))])


def write_exp4_trend_csv(path: Path, report: Exp4Report) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(
            [
                "probe_generation",
                "geno_at_probe",
                "geno_final",
                "geno_gain",
                "late_slope",
                "comp_median_early",
                "comp_median_late",
            ]
        )
        writer.writerow(
            [
                report.probe_generation,
                _fmt(report.geno_at_probe),
                _fmt(report.geno_final),
                _fmt(report.geno_final - report.geno_at_probe),
                _fmt(report.late_slope),
                _fmt(report.comp_median_early),
                _fmt(report.comp_median_late),
            ]
        )


def write_sweep_points_csv(path: Path, result: SweepResult) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(["mutation_prob", "selection_frac", "stable_mean"])
        for p in result.points:
            writer.writerow(
                [_fmt(p.mutation_prob), _fmt(p.selection_frac), _fmt(p.stable_mean)]
            )


def write_sweep_repeats_csv(path: Path, result: SweepResult) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(["mutation_prob", "selection_frac", "repeat", "stable_competency"])
        for p in result.points:
            for repeat, value in enumerate(p.stable_values):
                writer.writerow(
                    [_fmt(p.mutation_prob), _fmt(p.selection_frac), repeat, _fmt(value)]
                )


def write_sweep_correlations_csv(path: Path, result: SweepResult) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(["parameter", "corr_with_stable_competency"])
        writer.writerow(["mutation_prob", _fmt(result.corr_mutation_stable)])
        writer.writerow(["selection_frac", _fmt(result.corr_selection_stable)])


# ---------------------------------------------------------------------------
# Manifests.


def config_to_dict(config: EvolutionConfig) -> dict:
    comp = config.competency
    if comp is None:
        comp_obj = None
    elif isinstance(comp, FixedCompetency):
        comp_obj = {"mode": "fixed", "value": comp.value}
    elif isinstance(comp, EvolvableCompetency):
        comp_obj = {
            "mode": "evolvable",
            "init_range": list(comp.init_range),
            "mutate_range": list(comp.mutate_range),
        }
    else:  # pragma: no cover - exhaustive over CompetencyMode
        raise TypeError(f"unknown competency mode {comp!r}")
    return {
        "pop_size": config.pop_size,
        "genome_len": config.genome_len,
        "max_generations": config.max_generations,
        "mutation_prob": config.mutation_prob,
        "selection_frac": config.selection_frac,
        "competency": comp_obj,
        "competent_fraction": config.competent_fraction,
        "x_max": config.x_max,
        "penalty_weight": config.penalty_weight,
        "init_mode": config.init_mode.value,
        "stop_at_max_fitness": config.stop_at_max_fitness,
        "seed": config.seed,
    }


def _manifest_header(jobs: int, argv: Sequence[str] | None) -> dict:
    return {
        "format_version": 1,
        "package": "morphevo",
        "package_version": __version__,
        # The only field that varies between otherwise identical reruns.
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "seed_formula": SEED_FORMULA,
        "jobs": jobs,
        "argv": list(argv) if argv is not None else [],
    }


def build_manifest(
    spec: ExperimentSpec,
    jobs: int = 1,
    argv: Sequence[str] | None = None,
    outputs: Sequence[str] = (),
) -> dict:
    """Reproducibility record for a variants-x-repeats experiment."""
    manifest = _manifest_header(jobs, argv)
    manifest.update(
        {
            "experiment": spec.name,
            "base_seed": spec.base_seed,
            "repeats": spec.repeats,
            "variants": [
                {
                    "label": v.label,
                    "config": config_to_dict(v.config),
                    "run_seeds": [spec.run_seed(vi, r) for r in range(spec.repeats)],
                }
                for vi, v in enumerate(spec.variants)
            ],
            "outputs": list(outputs),
        }
    )
    return manifest


def build_sweep_manifest(
    result: SweepResult,
    jobs: int = 1,
    argv: Sequence[str] | None = None,
    outputs: Sequence[str] = (),
) -> dict:
    spec = result.spec
    manifest = _manifest_header(jobs, argv)
    manifest.update(
        {
            "experiment": "sweep",
            "base_seed": spec.base_seed,
            "repeats": spec.repeats,
            "grid": {
                "mutation_probs": list(spec.mutation_probs),
                "selection_fracs": list(spec.selection_fracs),
            },
            "base_config": config_to_dict(spec.base_config),
            "run_seeds": [
                {
                    "point": pi,
                    "repeat": r,
                    "seed": derive_seed(spec.base_seed, pi * spec.repeats + r),
                }
                for pi in range(len(spec.points()))
                for r in range(spec.repeats)
            ],
            "outputs": list(outputs),
        }
    )
    return manifest


def write_manifest(path: Path, manifest: Mapping) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(manifest, fh, indent=2, allow_nan=False)
        fh.write("\n")
