"""Command-line entry point.

Subcommands map one-to-one onto the stock experiments plus a free-form
``run``, a parameter ``sweep``, and a quick ``selftest``.  Every option
can also be supplied through ``--config FILE`` where the file holds flat
``key = value`` lines (keys match the long flag names); explicit flags
override file values, which override built-in defaults.

Outputs land in ``--out-dir`` (default ``runs/<subcommand>``):
``manifest.json`` plus per-generation curves (``curves.csv`` /
``curves.ndjson`` per ``--format``) and the experiment's summary tables.
The sweep writes only summaries -- per-generation curves for a full grid
would dwarf everything useful in them.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, Sequence

from .evolution import EvolutionConfig, EvolvableCompetency, FixedCompetency
from .experiments import (
    DEFAULT_BASE_SEED,
    ExperimentSpec,
    Variant,
    default_sweep_grid,
    exp1_spec,
    exp2_spec,
    exp3_spec,
    exp4_spec,
    run_exp1,
    run_exp2,
    run_exp3,
    run_exp4,
    run_experiment,
    run_sweep,
    sweep_spec,
)
from .genome import InitMode
from . import output

__all__ = ["main", "build_parser"]


# ---------------------------------------------------------------------------
# Option plumbing: converters shared by flags and config-file values.


def _int_in(lo: int | None = None, hi: int | None = None) -> Callable[[str], int]:
    def convert(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise ValueError(f"expected an integer, got {text!r}") from None
        if lo is not None and value < lo:
            raise ValueError(f"must be >= {lo}, got {value}")
        if hi is not None and value > hi:
            raise ValueError(f"must be <= {hi}, got {value}")
        return value

    return convert


def _float_in(lo: float, hi: float, lo_open: bool = False) -> Callable[[str], float]:
    def convert(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise ValueError(f"expected a number, got {text!r}") from None
        if value < lo or value > hi or (lo_open and value == lo):
            span = f"({lo}, {hi}]" if lo_open else f"[{lo}, {hi}]"
            raise ValueError(f"must be in {span}, got {value}")
        return value

    return convert


def _choice(*allowed: str) -> Callable[[str], str]:
    def convert(text: str) -> str:
        if text not in allowed:
            raise ValueError(f"must be one of {', '.join(allowed)}; got {text!r}")
        return text

    return convert


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ValueError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise ValueError("expected at least one integer")
    return values


def _float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise ValueError("expected at least one number")
    return values


def _grid(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"expected ROWSxCOLS like 12x11, got {text!r}")
    rows, cols = (_int_in(1)(p) for p in parts)
    return rows, cols


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int_pair(text: str) -> tuple[int, int]:
    values = _int_list(text)
    if len(values) != 2:
        raise ValueError(f"expected LO,HI, got {text!r}")
    return values[0], values[1]


# name -> (converter, help); the single source of truth for both the
# argparse flags and the config-file keys.
_OPTIONS: dict[str, tuple[Callable[[str], object], str]] = {
    "repeats": (_int_in(1), "independent repeats per variant"),
    "generations": (_int_in(1), "generations per run"),
    "seed": (_int_in(0), "base seed; per-run seeds are derived from it"),
    "jobs": (_int_in(1), "worker processes (outputs are identical for any value)"),
    "out_dir": (str, "output directory"),
    "format": (_choice("csv", "ndjson", "both"), "curve file format"),
    "init_mode": (_choice("uniform", "permutation"), "founder genome sampling"),
    "stop_at_max": (_bool, "stop a run once best fitness reaches 1.0"),
    "pop_size": (_int_in(2), "population size"),
    "genome_len": (_int_in(2), "genes per embryo"),
    "mutation_prob": (_float_in(0.0, 1.0), "per-individual mutation probability"),
    "selection_frac": (_float_in(0.0, 1.0, lo_open=True), "surviving fraction"),
    "levels": (_int_list, "fixed competency levels, comma-separated"),
    "fractions": (_float_list, "initial competent fractions, comma-separated"),
    "penalty_weight": (_float_in(0.0, float("inf")), "fitness cost per unit competency share"),
    "grid": (_grid, "sweep grid as N_MUTATIONxN_SELECTION, e.g. 12x11"),
    "competency": (_choice("hardwired", "fixed", "evolvable"), "competency mode"),
    "level": (_int_in(1), "swap budget for fixed competency"),
    "competent_fraction": (_float_in(0.0, 1.0, lo_open=True), "competent share of founders"),
    "comp_init": (_int_pair, "evolvable budget founder range LO,HI"),
    "comp_mutate": (_int_pair, "evolvable budget mutation range LO,HI"),
    "x_max": (_int_in(1), "largest representable swap budget"),
}

_COMMON = ("repeats", "generations", "seed", "jobs", "out_dir", "format", "init_mode")
_GA = ("pop_size", "genome_len", "mutation_prob", "selection_frac")

_SUBCOMMAND_OPTIONS: dict[str, tuple[str, ...]] = {
    "exp1": _COMMON + _GA + ("levels", "stop_at_max"),
    "exp2": _COMMON + _GA + ("levels", "fractions"),
    "exp3": _COMMON + _GA + ("comp_init", "comp_mutate"),
    "exp4": _COMMON + _GA + ("comp_init", "comp_mutate", "penalty_weight"),
    "sweep": _COMMON + ("pop_size", "genome_len", "grid"),
    "run": _COMMON
    + _GA
    + (
        "stop_at_max",
        "competency",
        "level",
        "competent_fraction",
        "comp_init",
        "comp_mutate",
        "penalty_weight",
        "x_max",
    ),
}

_DEFAULTS: dict[str, dict] = {
    "exp1": {"repeats": 20, "generations": 250, "levels": (20, 100, 400)},
    "exp2": {
        "repeats": 20,
        "generations": 30,
        "pop_size": 200,
        "levels": (10, 25, 40, 75, 95),
        "fractions": (0.025, 0.10, 0.20, 0.30),
    },
    "exp3": {"repeats": 10, "generations": 1000},
    "exp4": {"repeats": 5, "generations": 3000, "penalty_weight": 1e-4},
    "sweep": {"repeats": 5, "generations": 1000, "grid": (12, 11)},
    "run": {
        "repeats": 1,
        "generations": 250,
        "competency": "hardwired",
        "level": 100,
        "competent_fraction": 1.0,
        "penalty_weight": 0.0,
        "x_max": 500,
    },
}

_SHARED_DEFAULTS = {
    "seed": DEFAULT_BASE_SEED,
    "jobs": 1,
    "format": "both",
    "init_mode": "uniform",
    "stop_at_max": False,
    "pop_size": 100,
    "genome_len": 50,
    "mutation_prob": 0.6,
    "selection_frac": 0.1,
    "comp_init": (1, 15),
    "comp_mutate": (1, 500),
}


def _argparse_type(name: str, convert: Callable[[str], object]):
    def wrapped(text: str):
        try:
            return convert(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"{name.replace('_', '-')}: {exc}") from None

    return wrapped


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphevo",
        description="Evolution experiments with swap-budgeted development.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    summaries = {
        "exp1": "hardwired vs fixed competency levels",
        "exp2": "competent minority vs hardwired majority",
        "exp3": "evolvable, cost-free competency",
        "exp4": "evolvable competency with a fitness cost",
        "sweep": "mutation-prob x selection-frac grid of evolvable runs",
        "run": "one custom configuration",
    }
    for command, option_names in _SUBCOMMAND_OPTIONS.items():
        sub = subparsers.add_parser(command, help=summaries[command])
        sub.add_argument("--config", metavar="FILE", help="key = value option file")
        for name in option_names:
            convert, help_text = _OPTIONS[name]
            flag = "--" + name.replace("_", "-")
            if name == "stop_at_max":
                sub.add_argument(flag, action="store_const", const=True, help=help_text)
            else:
                sub.add_argument(
                    flag, type=_argparse_type(name, convert), help=help_text
                )
    subparsers.add_parser("selftest", help="quick invariant battery")
    return parser


def _parse_config_file(path: str, allowed: Sequence[str]) -> dict:
    """Read flat ``key = value`` lines, applying the same converters as flags."""
    resolved = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        if key not in allowed:
            raise ValueError(f"{path}:{lineno}: unknown option {key!r} for this subcommand")
        convert = _OPTIONS[key][0]
        try:
            resolved[key] = convert(value.strip())
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {key}: {exc}") from None
    return resolved


def _resolve_options(args: argparse.Namespace, command: str) -> dict:
    """Defaults, overlaid by the config file, overlaid by explicit flags."""
    names = _SUBCOMMAND_OPTIONS[command]
    opts = {name: _SHARED_DEFAULTS.get(name) for name in names}
    opts.update(_DEFAULTS[command])
    if args.config:
        opts.update(_parse_config_file(args.config, names))
    for name in names:
        value = getattr(args, name)
        if value is not None:
            opts[name] = value
    if opts.get("out_dir") is None:
        opts["out_dir"] = str(Path("runs") / command)
    return opts


# ---------------------------------------------------------------------------
# Subcommand bodies.


def _write_curves(out_dir: Path, fmt: str, result, written: list[str]) -> None:
    if fmt in ("csv", "both"):
        output.write_curves_csv(out_dir / "curves.csv", result)
        written.append("curves.csv")
    if fmt in ("ndjson", "both"):
        output.write_curves_ndjson(out_dir / "curves.ndjson", result)
        written.append("curves.ndjson")


def _finish(out_dir: Path, manifest: dict, written: list[str], echo) -> None:
    manifest["outputs"] = sorted(written)
    output.write_manifest(out_dir / "manifest.json", manifest)
    echo(f"wrote {len(written) + 1} files to {out_dir}")


def _print_thresholds(table, echo) -> None:
    header = "variant".ljust(22) + "".join(f"ge_{t:g}".rjust(9) for t in table.thresholds)
    echo(header)
    for label, cells in table.rows.items():
        echo(label.ljust(22) + "".join(f"{c:g}".rjust(9) for c in cells))


def _cmd_exp1(opts: dict, argv: Sequence[str], echo) -> int:
    spec = exp1_spec(
        repeats=opts["repeats"],
        generations=opts["generations"],
        base_seed=opts["seed"],
        levels=opts["levels"],
        pop_size=opts["pop_size"],
        genome_len=opts["genome_len"],
        mutation_prob=opts["mutation_prob"],
        selection_frac=opts["selection_frac"],
        init_mode=InitMode(opts["init_mode"]),
        stop_at_max=opts["stop_at_max"],
    )
    report = run_exp1(spec, jobs=opts["jobs"])
    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    _write_curves(out_dir, opts["format"], report.result, written)
    output.write_threshold_csv(out_dir / "thresholds.csv", report.thresholds)
    written.append("thresholds.csv")
    if report.ttests:
        output.write_ttest_csv(out_dir / "ttests.csv", report.ttests)
        written.append("ttests.csv")
        if not any(r.stopped_early for r in report.result.runs.values()):
            output.write_ci_csv(out_dir / "ci.csv", report.result)
            written.append("ci.csv")
    _print_thresholds(report.thresholds, echo)
    for cmp in report.ttests:
        rep = cmp.report
        echo(
            f"gen {cmp.generation}: {cmp.variant_a} vs {cmp.variant_b}: "
            f"t={rep.t_statistic:.4g} p={rep.p_value:.3g} ({rep.method.value})"
        )
    _finish(out_dir, output.build_manifest(spec, opts["jobs"], argv), written, echo)
    return 0


def _cmd_exp2(opts: dict, argv: Sequence[str], echo) -> int:
    spec = exp2_spec(
        repeats=opts["repeats"],
        generations=opts["generations"],
        base_seed=opts["seed"],
        levels=opts["levels"],
        fractions=opts["fractions"],
        pop_size=opts["pop_size"],
        genome_len=opts["genome_len"],
        mutation_prob=opts["mutation_prob"],
        selection_frac=opts["selection_frac"],
        init_mode=InitMode(opts["init_mode"]),
    )
    report = run_exp2(spec, jobs=opts["jobs"])
    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    _write_curves(out_dir, opts["format"], report.result, written)
    output.write_domination_grid_csv(out_dir / "domination.csv", report.domination)
    output.write_domination_repeats_csv(
        out_dir / "domination_repeats.csv", report.domination
    )
    written += ["domination.csv", "domination_repeats.csv"]
    fractions = sorted({r.fraction for r in report.domination})
    echo("level".ljust(8) + "".join(f"mix_{f * 100:g}pct".rjust(14) for f in fractions))
    by_key = {(r.level, r.fraction): r for r in report.domination}
    for level in sorted({r.level for r in report.domination}):
        cells = []
        for frac in fractions:
            row = by_key[(level, frac)]
            cells.append("x" if row.median_generation is None else f"{row.median_generation:g}")
        echo(str(level).ljust(8) + "".join(c.rjust(14) for c in cells))
    _finish(out_dir, output.build_manifest(spec, opts["jobs"], argv), written, echo)
    return 0


def _cmd_exp3(opts: dict, argv: Sequence[str], echo) -> int:
    spec = exp3_spec(
        repeats=opts["repeats"],
        generations=opts["generations"],
        base_seed=opts["seed"],
        init_range=opts["comp_init"],
        mutate_range=opts["comp_mutate"],
        pop_size=opts["pop_size"],
        genome_len=opts["genome_len"],
        mutation_prob=opts["mutation_prob"],
        selection_frac=opts["selection_frac"],
        init_mode=InitMode(opts["init_mode"]),
    )
    report = run_exp3(spec, jobs=opts["jobs"])
    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    label = spec.variants[0].label
    _write_curves(out_dir, opts["format"], report.result, written)
    output.write_corr_bins_csv(out_dir / "correlation_bins.csv", label, report.corr_bins)
    output.write_gene_changes_csv(out_dir / "gene_changes.csv", report.result, label)
    output.write_stable_csv(out_dir / "stable_competency.csv", label, report.stable_values)
    written += ["correlation_bins.csv", "gene_changes.csv", "stable_competency.csv"]
    stable = ", ".join(f"{v:g}" for v in report.stable_values)
    echo(f"stable competency per repeat: {stable}")
    _finish(out_dir, output.build_manifest(spec, opts["jobs"], argv), written, echo)
    return 0


def _cmd_exp4(opts: dict, argv: Sequence[str], echo) -> int:
    spec = exp4_spec(
        repeats=opts["repeats"],
        generations=opts["generations"],
        base_seed=opts["seed"],
        penalty_weight=opts["penalty_weight"],
        init_range=opts["comp_init"],
        mutate_range=opts["comp_mutate"],
        pop_size=opts["pop_size"],
        genome_len=opts["genome_len"],
        mutation_prob=opts["mutation_prob"],
        selection_frac=opts["selection_frac"],
        init_mode=InitMode(opts["init_mode"]),
    )
    report = run_exp4(spec, jobs=opts["jobs"])
    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    label = spec.variants[0].label
    _write_curves(out_dir, opts["format"], report.result, written)
    output.write_corr_bins_csv(out_dir / "correlation_bins.csv", label, report.corr_bins)
    output.write_exp4_trend_csv(out_dir / "trend.csv", report)
    written += ["correlation_bins.csv", "trend.csv"]
    echo(
        f"best geno fitness: {report.geno_at_probe:.4f} (gen {report.probe_generation}) -> "
        f"{report.geno_final:.4f} (final); late slope {report.late_slope:.3g}/gen"
    )
    echo(
        f"best competency median: {report.comp_median_early:g} (early window) -> "
        f"{report.comp_median_late:g} (late window)"
    )
    _finish(out_dir, output.build_manifest(spec, opts["jobs"], argv), written, echo)
    return 0


def _cmd_sweep(opts: dict, argv: Sequence[str], echo) -> int:
    n_mut, n_sel = opts["grid"]
    spec = sweep_spec(
        grid=default_sweep_grid(n_mut, n_sel),
        repeats=opts["repeats"],
        generations=opts["generations"],
        base_seed=opts["seed"],
        pop_size=opts["pop_size"],
        genome_len=opts["genome_len"],
        init_mode=InitMode(opts["init_mode"]),
    )
    result = run_sweep(spec, jobs=opts["jobs"])
    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    output.write_sweep_points_csv(out_dir / "sweep_points.csv", result)
    output.write_sweep_repeats_csv(out_dir / "sweep_repeats.csv", result)
    output.write_sweep_correlations_csv(out_dir / "sweep_correlations.csv", result)
    written = ["sweep_points.csv", "sweep_repeats.csv", "sweep_correlations.csv"]
    echo(f"corr(mutation_prob, stable competency) = {result.corr_mutation_stable:+.3f}")
    echo(f"corr(selection_frac, stable competency) = {result.corr_selection_stable:+.3f}")
    manifest = output.build_sweep_manifest(result, opts["jobs"], argv)
    _finish(out_dir, manifest, written, echo)
    return 0


def _run_config_from_opts(opts: dict) -> EvolutionConfig:
    mode = opts["competency"]
    if mode == "hardwired":
        competency = None
    elif mode == "fixed":
        competency = FixedCompetency(opts["level"])
    else:
        lo_hi = opts["comp_init"]
        competency = EvolvableCompetency(
            init_range=(lo_hi[0], lo_hi[1]),
            mutate_range=(opts["comp_mutate"][0], opts["comp_mutate"][1]),
        )
    return EvolutionConfig(
        pop_size=opts["pop_size"],
        genome_len=opts["genome_len"],
        max_generations=opts["generations"],
        mutation_prob=opts["mutation_prob"],
        selection_frac=opts["selection_frac"],
        competency=competency,
        competent_fraction=opts["competent_fraction"],
        x_max=opts["x_max"],
        penalty_weight=opts["penalty_weight"],
        init_mode=InitMode(opts["init_mode"]),
        stop_at_max_fitness=opts["stop_at_max"],
    )


def _cmd_run(opts: dict, argv: Sequence[str], echo) -> int:
    config = _run_config_from_opts(opts)
    spec = ExperimentSpec(
        name="run",
        base_seed=opts["seed"],
        repeats=opts["repeats"],
        variants=(Variant("run", config),),
    )
    result = run_experiment(spec, jobs=opts["jobs"])
    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    _write_curves(out_dir, opts["format"], result, written)
    last = result.run("run", 0).records[-1]
    echo(
        f"repeat 0 final generation {last.generation}: best fitness {last.best_pheno:.6g} "
        f"(geno {last.best_geno:.6g})"
    )
    _finish(out_dir, output.build_manifest(spec, opts["jobs"], argv), written, echo)
    return 0


_COMMANDS = {
    "exp1": _cmd_exp1,
    "exp2": _cmd_exp2,
    "exp3": _cmd_exp3,
    "exp4": _cmd_exp4,
    "sweep": _cmd_sweep,
    "run": _cmd_run,
}


def main(argv: Sequence[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "selftest":
        from .selftest import run_selftest

        return 0 if run_selftest() else 1
    try:
        opts = _resolve_options(args, args.command)
        return _COMMANDS[args.command](opts, argv, print)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
