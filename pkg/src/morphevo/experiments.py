"""Experiment definitions, multi-run execution, and summary analyses.

An experiment is a set of named variants (configs differing in one
knob), each run for a number of independent repeats.  Run seeds are
derived from the experiment's base seed and the run's flat index (see
:mod:`morphevo.seeding`), and results are keyed by ``(variant, repeat)``
-- worker scheduling therefore cannot change any output.

The stock experiments:

* exp1: hardwired evolution vs fixed competency levels; summarized by a
  threshold-crossing table and cross-variant t tests at early
  generations.
* exp2: mixed populations (hardwired + one fixed competency level at a
  given initial share); summarized by when, if ever, competent embryos
  take over the population.
* exp3: evolvable competency with no cost; summarized by the
  genotype-phenotype fitness correlation over time, the plateau of the
  winning swap budget, and mutation-count bookkeeping per locus.
* exp4: evolvable competency with a linear fitness cost, long horizon;
  summarized by the late recovery of genotypic fitness and the retreat
  of the budget gene.
* sweep: exp3-style runs over a grid of (mutation_prob,
  selection_frac); summarized by the per-point stabilized budget and its
  correlation with each axis.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .evolution import (
    EvolutionConfig,
    EvolvableCompetency,
    FixedCompetency,
    RunResult,
    run_evolution,
)
from .genome import InitMode
from .seeding import derive_seed
from .stats import pearson, t_test, threshold_crossings, TTestReport

__all__ = [
    "Variant",
    "ExperimentSpec",
    "ExperimentResult",
    "ThresholdTable",
    "TTestComparison",
    "DominationRow",
    "CorrBin",
    "Exp1Report",
    "Exp2Report",
    "Exp3Report",
    "Exp4Report",
    "SweepSpec",
    "SweepPoint",
    "SweepResult",
    "DEFAULT_BASE_SEED",
    "FITNESS_THRESHOLDS",
    "exp1_spec",
    "exp2_spec",
    "exp3_spec",
    "exp4_spec",
    "run_experiment",
    "run_exp1",
    "run_exp2",
    "run_exp3",
    "run_exp4",
    "threshold_table",
    "ttest_comparisons",
    "domination_generation",
    "domination_rows",
    "correlation_bins",
    "mean_locus_change_curves",
    "stable_competency",
    "repeats_matrix",
    "default_sweep_grid",
    "sweep_spec",
    "run_sweep",
]

DEFAULT_BASE_SEED = 1000003

# Best-fitness milestones reported by the threshold table.
FITNESS_THRESHOLDS = (0.65, 0.75, 0.8, 0.9, 0.97, 1.0)


@dataclass(frozen=True)
class Variant:
    """One named configuration inside an experiment."""

    label: str
    config: EvolutionConfig


@dataclass(frozen=True)
class ExperimentSpec:
    """A reproducible batch: variants x repeats under one base seed."""

    name: str
    base_seed: int
    repeats: int
    variants: tuple[Variant, ...]

    def __post_init__(self) -> None:
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        labels = [v.label for v in self.variants]
        if len(set(labels)) != len(labels):
            raise ValueError("variant labels must be unique")
        if not self.variants:
            raise ValueError("experiment needs at least one variant")

    def run_seed(self, variant_index: int, repeat: int) -> int:
        """Seed of one run; flat index is variant-major, repeat-minor."""
        return derive_seed(self.base_seed, variant_index * self.repeats + repeat)


@dataclass(frozen=True)
class ExperimentResult:
    """All runs of an experiment, keyed by (variant label, repeat)."""

    spec: ExperimentSpec
    runs: Mapping[tuple[str, int], RunResult]

    def run(self, label: str, repeat: int) -> RunResult:
        return self.runs[(label, repeat)]

    def variant_runs(self, label: str) -> list[RunResult]:
        return [self.runs[(label, r)] for r in range(self.spec.repeats)]


def _resolved_configs(spec: ExperimentSpec) -> dict[tuple[str, int], EvolutionConfig]:
    """Config per run with its derived seed baked in, in canonical order."""
    out: dict[tuple[str, int], EvolutionConfig] = {}
    for vi, variant in enumerate(spec.variants):
        for r in range(spec.repeats):
            out[(variant.label, r)] = replace(variant.config, seed=spec.run_seed(vi, r))
    return out


def _run_many(
    configs: Mapping[tuple, EvolutionConfig], jobs: int
) -> dict[tuple, RunResult]:
    """Execute runs, optionally across processes.

    Output order follows the input mapping regardless of completion
    order, so parallel and serial execution are indistinguishable
    downstream.
    """
    if jobs <= 1:
        return {key: run_evolution(cfg) for key, cfg in configs.items()}
    done: dict[tuple, RunResult] = {}
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = {pool.submit(run_evolution, cfg): key for key, cfg in configs.items()}
        for fut in as_completed(futures):
            done[futures[fut]] = fut.result()
    return {key: done[key] for key in configs}


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    """Run every (variant, repeat) of an experiment."""
    return ExperimentResult(spec=spec, runs=_run_many(_resolved_configs(spec), jobs))


# ---------------------------------------------------------------------------
# Spec builders for the stock experiments.


def _base_config(
    pop_size: int,
    genome_len: int,
    generations: int,
    mutation_prob: float,
    selection_frac: float,
    init_mode: InitMode,
    stop_at_max: bool,
) -> EvolutionConfig:
    return EvolutionConfig(
        pop_size=pop_size,
        genome_len=genome_len,
        max_generations=generations,
        mutation_prob=mutation_prob,
        selection_frac=selection_frac,
        init_mode=init_mode,
        stop_at_max_fitness=stop_at_max,
    )


def exp1_spec(
    repeats: int = 20,
    generations: int = 250,
    base_seed: int = DEFAULT_BASE_SEED,
    levels: Sequence[int] = (20, 100, 400),
    pop_size: int = 100,
    genome_len: int = 50,
    mutation_prob: float = 0.6,
    selection_frac: float = 0.1,
    init_mode: InitMode = InitMode.UNIFORM,
    stop_at_max: bool = False,
) -> ExperimentSpec:
    """Hardwired evolution vs fully competent populations at fixed budgets."""
    base = _base_config(
        pop_size, genome_len, generations, mutation_prob, selection_frac, init_mode, stop_at_max
    )
    variants = [Variant("hardwired", base)]
    for level in levels:
        variants.append(
            Variant(
                f"level_{level}",
                replace(base, competency=FixedCompetency(level), competent_fraction=1.0),
            )
        )
    return ExperimentSpec("exp1", base_seed, repeats, tuple(variants))


def exp2_spec(
    repeats: int = 20,
    generations: int = 30,
    base_seed: int = DEFAULT_BASE_SEED,
    levels: Sequence[int] = (10, 25, 40, 75, 95),
    fractions: Sequence[float] = (0.025, 0.10, 0.20, 0.30),
    pop_size: int = 200,
    genome_len: int = 50,
    mutation_prob: float = 0.6,
    selection_frac: float = 0.1,
    init_mode: InitMode = InitMode.UNIFORM,
) -> ExperimentSpec:
    """Competition: a competent minority seeded into a hardwired majority."""
    base = _base_config(
        pop_size, genome_len, generations, mutation_prob, selection_frac, init_mode, False
    )
    variants = []
    for level in levels:
        for frac in fractions:
            variants.append(
                Variant(
                    f"level_{level}_mix_{frac * 100:g}pct",
                    replace(
                        base,
                        competency=FixedCompetency(level),
                        competent_fraction=frac,
                    ),
                )
            )
    return ExperimentSpec("exp2", base_seed, repeats, tuple(variants))


def exp3_spec(
    repeats: int = 10,
    generations: int = 1000,
    base_seed: int = DEFAULT_BASE_SEED,
    init_range: tuple[int, int] = (1, 15),
    mutate_range: tuple[int, int] = (1, 500),
    pop_size: int = 100,
    genome_len: int = 50,
    mutation_prob: float = 0.6,
    selection_frac: float = 0.1,
    init_mode: InitMode = InitMode.UNIFORM,
) -> ExperimentSpec:
    """Evolvable, cost-free competency in a fully competent population."""
    base = _base_config(
        pop_size, genome_len, generations, mutation_prob, selection_frac, init_mode, False
    )
    cfg = replace(
        base,
        competency=EvolvableCompetency(init_range=init_range, mutate_range=mutate_range),
        competent_fraction=1.0,
    )
    return ExperimentSpec("exp3", base_seed, repeats, (Variant("evolvable", cfg),))


def exp4_spec(
    repeats: int = 5,
    generations: int = 3000,
    base_seed: int = DEFAULT_BASE_SEED,
    penalty_weight: float = 1e-4,
    init_range: tuple[int, int] = (1, 15),
    mutate_range: tuple[int, int] = (1, 500),
    pop_size: int = 100,
    genome_len: int = 50,
    mutation_prob: float = 0.6,
    selection_frac: float = 0.1,
    init_mode: InitMode = InitMode.UNIFORM,
) -> ExperimentSpec:
    """Evolvable competency with a linear fitness cost on the budget."""
    spec3 = exp3_spec(
        repeats,
        generations,
        base_seed,
        init_range,
        mutate_range,
        pop_size,
        genome_len,
        mutation_prob,
        selection_frac,
        init_mode,
    )
    cfg = replace(spec3.variants[0].config, penalty_weight=penalty_weight)
    return ExperimentSpec("exp4", base_seed, repeats, (Variant("penalized", cfg),))


# ---------------------------------------------------------------------------
# Summaries.


def repeats_matrix(result: ExperimentResult, label: str, field_name: str) -> np.ndarray:
    """(repeats, generations) matrix of one record field for one variant.

    Requires all repeats to have the same horizon (no early stop).
    """
    series = [run.series(field_name) for run in result.variant_runs(label)]
    lengths = {s.size for s in series}
    if len(lengths) != 1:
        raise ValueError(f"ragged horizons for variant {label!r}: {sorted(lengths)}")
    return np.stack(series)


@dataclass(frozen=True)
class ThresholdTable:
    """Median first generation at which best fitness reaches each milestone.

    Per-repeat crossings that never happen are capped at the run's
    horizon before taking the median, so cells are always numeric; a cell
    equal to the horizon means "not reached within the run" for at least
    half the repeats.
    """

    thresholds: tuple[float, ...]
    rows: Mapping[str, tuple[float, ...]]
    per_repeat: Mapping[str, tuple[tuple[int | None, ...], ...]]
    horizon: int


def threshold_table(
    result: ExperimentResult, thresholds: Sequence[float] = FITNESS_THRESHOLDS
) -> ThresholdTable:
    """Tabulate best-raw-fitness milestone crossings per variant."""
    rows: dict[str, tuple[float, ...]] = {}
    per_repeat: dict[str, tuple[tuple[int | None, ...], ...]] = {}
    horizon = 0
    for variant in result.spec.variants:
        crossings: list[tuple[int | None, ...]] = []
        for run in result.variant_runs(variant.label):
            series = run.series("best_pheno_raw")
            horizon = max(horizon, series.size - 1)
            crossings.append(tuple(threshold_crossings(series, list(thresholds))))
        per_repeat[variant.label] = tuple(crossings)
        medians = []
        for ti in range(len(thresholds)):
            capped = [
                float(c[ti]) if c[ti] is not None else float(horizon) for c in crossings
            ]
            medians.append(float(np.median(capped)))
        rows[variant.label] = tuple(medians)
    return ThresholdTable(tuple(thresholds), rows, per_repeat, horizon)


@dataclass(frozen=True)
class TTestComparison:
    """Cross-variant comparison of best fitness at one generation."""

    generation: int
    variant_a: str
    variant_b: str
    report: TTestReport


def ttest_comparisons(
    result: ExperimentResult,
    baseline: str,
    others: Sequence[str],
    generations: Sequence[int] = (2, 10, 20),
) -> tuple[TTestComparison, ...]:
    """t tests of baseline vs each other variant at chosen generations.

    Samples are the per-repeat best raw phenotypic fitnesses at the
    generation in question.
    """
    base_matrix = repeats_matrix(result, baseline, "best_pheno_raw")
    out = []
    for other in others:
        other_matrix = repeats_matrix(result, other, "best_pheno_raw")
        for gen in generations:
            if gen >= base_matrix.shape[1] or gen >= other_matrix.shape[1]:
                raise ValueError(f"generation {gen} beyond horizon")
            out.append(
                TTestComparison(
                    generation=gen,
                    variant_a=baseline,
                    variant_b=other,
                    report=t_test(base_matrix[:, gen], other_matrix[:, gen]),
                )
            )
    return tuple(out)


def domination_generation(run: RunResult) -> int | None:
    """First generation where competent individuals take over for good.

    Takeover means the competent share strictly exceeds the hardwired share
    and never drops below it again for the rest of the recorded horizon
    (later ties are allowed; a later deficit cancels the candidate).

    Args:
        run: A finished run whose records carry both prevalence series.

    Returns:
        The takeover generation, or None when no lasting takeover happens.
    """
    competent = run.series("competent_prevalence")
    hardwired = run.series("hardwired_prevalence")
    candidate: int | None = None
    for g in range(competent.size):
        if competent[g] > hardwired[g]:
            if candidate is None:
                candidate = g
        elif competent[g] < hardwired[g]:
            candidate = None
    return candidate


@dataclass(frozen=True)
class DominationRow:
    """Takeover summary for one (level, initial fraction) variant."""

    label: str
    level: int
    fraction: float
    per_repeat: tuple[int | None, ...]
    median_generation: float | None  # None when most repeats never dominate
    dominated_share: float


def domination_rows(result: ExperimentResult) -> tuple[DominationRow, ...]:
    """Takeover summaries for every variant of a competition experiment."""
    rows = []
    for variant in result.spec.variants:
        comp = variant.config.competency
        if not isinstance(comp, FixedCompetency):
            raise ValueError("domination table expects fixed-competency variants")
        gens = tuple(domination_generation(run) for run in result.variant_runs(variant.label))
        finite = [g for g in gens if g is not None]
        as_float = [float(g) if g is not None else math.inf for g in gens]
        median = float(np.median(as_float))
        rows.append(
            DominationRow(
                label=variant.label,
                level=comp.value,
                fraction=variant.config.competent_fraction,
                per_repeat=gens,
                median_generation=None if math.isinf(median) else median,
                dominated_share=len(finite) / len(gens),
            )
        )
    return tuple(rows)


@dataclass(frozen=True)
class CorrBin:
    """Mean genotype-phenotype fitness correlation over a generation window."""

    start: int
    stop: int  # exclusive
    mean_corr: float  # NaN when every value in the window was undefined
    n_values: int
    n_undefined: int


def correlation_bins(
    result: ExperimentResult, label: str, bin_size: int = 10
) -> tuple[CorrBin, ...]:
    """Bin the per-generation correlation series across repeats.

    Undefined correlations (constant fitness on one side, recorded as
    NaN) are excluded from the bin means and counted in
    ``n_undefined``.
    """
    if bin_size < 1:
        raise ValueError("bin_size must be >= 1")
    matrix = repeats_matrix(result, label, "corr_geno_pheno")
    horizon = matrix.shape[1]
    bins = []
    for start in range(0, horizon, bin_size):
        stop = min(start + bin_size, horizon)
        window = matrix[:, start:stop]
        defined = window[np.isfinite(window)]
        mean = float(defined.mean()) if defined.size else math.nan
        bins.append(
            CorrBin(
                start=start,
                stop=stop,
                mean_corr=mean,
                n_values=int(window.size),
                n_undefined=int(window.size - defined.size),
            )
        )
    return tuple(bins)


def mean_locus_change_curves(
    result: ExperimentResult, label: str
) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative mutation-count curves averaged over repeats.

    Returns:
        ``(competency_curve, structural_curve)``: per generation, the
        mean (over repeats) cumulative count of value-changing mutations
        of the competency gene, and the same quantity averaged over all
        structural loci.
    """
    runs = result.variant_runs(label)
    comp_rows = []
    struct_rows = []
    for run in runs:
        counts = np.array([r.locus_changes for r in run.records], dtype=np.float64)
        comp_rows.append(counts[:, -1])
        struct_rows.append(counts[:, :-1].mean(axis=1))
    return np.stack(comp_rows).mean(axis=0), np.stack(struct_rows).mean(axis=0)


def stable_competency(run: RunResult, tail_frac: float = 0.2) -> float:
    """Stabilized swap budget: median best competency over the final stretch.

    The window is the last ``round(tail_frac * len(records))`` records
    (at least one).
    """
    if not 0.0 < tail_frac <= 1.0:
        raise ValueError("tail_frac must be in (0, 1]")
    series = run.series("best_competency")
    window = max(1, int(round(tail_frac * series.size)))
    tail = series[-window:]
    if not np.all(np.isfinite(tail)):
        raise ValueError("best competency undefined in tail; not an evolvable-competency run?")
    return float(np.median(tail))


# ---------------------------------------------------------------------------
# Stock experiment reports.


@dataclass(frozen=True)
class Exp1Report:
    result: ExperimentResult
    thresholds: ThresholdTable
    ttests: tuple[TTestComparison, ...]


@dataclass(frozen=True)
class Exp2Report:
    result: ExperimentResult
    domination: tuple[DominationRow, ...]


@dataclass(frozen=True)
class GeneChangeRow:
    """Final cumulative mutation counts for one repeat."""

    repeat: int
    competency_changes: int
    structural_mean: float


@dataclass(frozen=True)
class Exp3Report:
    result: ExperimentResult
    corr_bins: tuple[CorrBin, ...]
    stable_values: tuple[float, ...]  # one per repeat
    gene_changes: tuple[GeneChangeRow, ...]


@dataclass(frozen=True)
class Exp4Report:
    result: ExperimentResult
    corr_bins: tuple[CorrBin, ...]
    probe_generation: int  # min(100, horizon); the early reference point
    geno_at_probe: float
    geno_final: float
    late_slope: float  # least-squares slope of mean best geno, final 1000 gens
    comp_median_early: float  # pooled best competency, generations 100..600
    comp_median_late: float  # pooled best competency, final 500 generations


def run_exp1(
    spec: ExperimentSpec,
    jobs: int = 1,
    ttest_generations: Sequence[int] = (2, 10, 20),
) -> Exp1Report:
    result = run_experiment(spec, jobs)
    others = [v.label for v in spec.variants if v.label != "hardwired"]
    gens = [g for g in ttest_generations if g <= spec.variants[0].config.max_generations]
    # Early-stopped runs have ragged horizons; the crossing table still
    # works per-run but aligned cross-variant samples do not.  A t test
    # additionally needs at least two repeats per side.
    ragged = any(run.stopped_early for run in result.runs.values())
    ttests = (
        ttest_comparisons(result, "hardwired", others, gens)
        if others and gens and not ragged and spec.repeats >= 2
        else ()
    )
    return Exp1Report(result=result, thresholds=threshold_table(result), ttests=ttests)


def run_exp2(spec: ExperimentSpec, jobs: int = 1) -> Exp2Report:
    result = run_experiment(spec, jobs)
    return Exp2Report(result=result, domination=domination_rows(result))


def run_exp3(spec: ExperimentSpec, jobs: int = 1, bin_size: int = 10) -> Exp3Report:
    result = run_experiment(spec, jobs)
    label = spec.variants[0].label
    stable = tuple(stable_competency(run) for run in result.variant_runs(label))
    changes = []
    for repeat, run in enumerate(result.variant_runs(label)):
        final = run.records[-1].locus_changes
        changes.append(
            GeneChangeRow(
                repeat=repeat,
                competency_changes=final[-1],
                structural_mean=float(np.mean(final[:-1])),
            )
        )
    return Exp3Report(
        result=result,
        corr_bins=correlation_bins(result, label, bin_size),
        stable_values=stable,
        gene_changes=tuple(changes),
    )


def run_exp4(spec: ExperimentSpec, jobs: int = 1, bin_size: int = 50) -> Exp4Report:
    result = run_experiment(spec, jobs)
    label = spec.variants[0].label
    geno = repeats_matrix(result, label, "best_geno").mean(axis=0)
    comp = repeats_matrix(result, label, "best_competency")
    horizon = geno.size - 1
    # Windows shrink gracefully on short desk-scale horizons.
    probe = min(100, horizon)
    early_lo, early_hi = min(100, horizon), min(600, horizon)
    late_window = min(500, geno.size)
    slope_window = min(1000, geno.size)
    xs = np.arange(slope_window, dtype=np.float64)
    slope = float(np.polyfit(xs, geno[-slope_window:], 1)[0])
    early = comp[:, early_lo : early_hi + 1]
    return Exp4Report(
        result=result,
        corr_bins=correlation_bins(result, label, bin_size),
        probe_generation=probe,
        geno_at_probe=float(geno[probe]),
        geno_final=float(geno[-1]),
        late_slope=slope,
        comp_median_early=float(np.median(early)),
        comp_median_late=float(np.median(comp[:, -late_window:])),
    )


# ---------------------------------------------------------------------------
# Parameter sweep.


@dataclass(frozen=True)
class SweepSpec:
    """Grid of (mutation_prob, selection_frac) points over a base config."""

    base_seed: int
    repeats: int
    mutation_probs: tuple[float, ...]
    selection_fracs: tuple[float, ...]
    base_config: EvolutionConfig

    def points(self) -> list[tuple[float, float]]:
        """Row-major grid order: mutation prob outer, selection frac inner."""
        return [(mp, sf) for mp in self.mutation_probs for sf in self.selection_fracs]


@dataclass(frozen=True)
class SweepPoint:
    mutation_prob: float
    selection_frac: float
    stable_values: tuple[float, ...]
    stable_mean: float


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    points: tuple[SweepPoint, ...]
    corr_mutation_stable: float
    corr_selection_stable: float


def default_sweep_grid(
    n_mutation: int = 12, n_selection: int = 11, low: float = 0.2, high: float = 0.8
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Evenly spaced grid axes over the swept interval."""
    return (
        tuple(float(v) for v in np.linspace(low, high, n_mutation)),
        tuple(float(v) for v in np.linspace(low, high, n_selection)),
    )


def sweep_spec(
    grid: tuple[tuple[float, ...], tuple[float, ...]] | None = None,
    repeats: int = 5,
    generations: int = 1000,
    base_seed: int = DEFAULT_BASE_SEED,
    pop_size: int = 100,
    genome_len: int = 50,
    init_mode: InitMode = InitMode.UNIFORM,
) -> SweepSpec:
    """Sweep over exp3-style evolvable-competency runs."""
    if grid is None:
        grid = default_sweep_grid()
    base = exp3_spec(
        repeats=repeats,
        generations=generations,
        base_seed=base_seed,
        pop_size=pop_size,
        genome_len=genome_len,
        init_mode=init_mode,
    ).variants[0].config
    return SweepSpec(
        base_seed=base_seed,
        repeats=repeats,
        mutation_probs=grid[0],
        selection_fracs=grid[1],
        base_config=base,
    )


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Run the grid and correlate each axis with the stabilized budget.

    Each correlation treats the per-point mean stabilized competency as
    one observation (one pair per grid point).
    """
    configs: dict[tuple, EvolutionConfig] = {}
    for pi, (mp, sf) in enumerate(spec.points()):
        for r in range(spec.repeats):
            configs[(pi, r)] = replace(
                spec.base_config,
                mutation_prob=mp,
                selection_frac=sf,
                seed=derive_seed(spec.base_seed, pi * spec.repeats + r),
            )
    runs = _run_many(configs, jobs)
    points = []
    for pi, (mp, sf) in enumerate(spec.points()):
        values = tuple(stable_competency(runs[(pi, r)]) for r in range(spec.repeats))
        points.append(
            SweepPoint(
                mutation_prob=mp,
                selection_frac=sf,
                stable_values=values,
                stable_mean=float(np.mean(values)),
            )
        )
    stable = np.array([p.stable_mean for p in points])
    mps = np.array([p.mutation_prob for p in points])
    sfs = np.array([p.selection_frac for p in points])
    return SweepResult(
        spec=spec,
        points=tuple(points),
        corr_mutation_stable=pearson(mps, stable),
        corr_selection_stable=pearson(sfs, stable),
    )
