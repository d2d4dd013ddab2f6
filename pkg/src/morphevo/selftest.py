"""Fast end-to-end sanity battery behind ``morphevo selftest``.

Each check is small enough to run in a second or two and covers one
contract the rest of the package leans on.  The pytest suite covers the
same ground (and much more) with proper oracles; this exists for quick
verification of an installed environment.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import _kernels
from .development import develop
from .evolution import (
    EvolutionConfig,
    EvolvableCompetency,
    FixedCompetency,
    PenaltyRule,
    assess,
    repopulate,
    run_evolution,
    select,
    initial_population,
)
from .genome import Kind, fitness, inversion_count, non_inversion_count, pair_count
from .stats import pearson, regularized_incomplete_beta, t_test

__all__ = ["run_selftest"]


def _brute_nic(genes) -> int:
    return sum(
        1
        for i in range(len(genes))
        for j in range(i + 1, len(genes))
        if genes[i] < genes[j]
    )


def _brute_inversions(genes) -> int:
    return sum(
        1
        for i in range(len(genes))
        for j in range(i + 1, len(genes))
        if genes[i] > genes[j]
    )


def _check_fitness() -> None:
    for perm in itertools.permutations(range(1, 5)):
        fv = fitness(np.array(perm))
        assert fv.nic == _brute_nic(perm)  # distinct values: the counts coincide
        assert math.isclose(fv.f, 9.0 ** (fv.nic / pair_count(4) - 1.0))
    assert fitness(np.arange(1, 9)).f == 1.0
    assert fitness(np.array([1, 2, 2, 3])).f == 1.0  # sorted with duplicates
    assert fitness(np.arange(8, 0, -1)).f == 1.0 / 9.0
    rng = np.random.default_rng(7)
    for _ in range(50):
        arr = rng.integers(1, 5, size=8)
        assert non_inversion_count(arr) == _brute_nic(arr.tolist())
        assert inversion_count(arr) == _brute_inversions(arr.tolist())
        assert fitness(arr).nic == pair_count(8) - _brute_inversions(arr.tolist())


def _check_development() -> None:
    for perm in itertools.permutations(range(1, 5)):
        inv = _brute_inversions(perm)
        for budget in range(9):
            out = develop(np.array(perm), budget)
            assert out.swaps_used == min(budget, inv)
            assert _brute_inversions(out.developed_genes.tolist()) == inv - out.swaps_used
            assert sorted(out.developed_genes.tolist()) == sorted(perm)
        assert develop(np.array(perm), pair_count(4)).developed_genes.tolist() == [1, 2, 3, 4]
    # Equal neighbors are never swapped.
    out = develop(np.array([2, 2, 1]), 10)
    assert out.developed_genes.tolist() == [1, 2, 2] and out.swaps_used == 2


def _check_kernels() -> None:
    rng = np.random.default_rng(11)
    genes = rng.integers(1, 21, size=(40, 20)).astype(np.int64)
    budgets = rng.integers(0, 60, size=40)
    developed, swaps = _kernels.develop_batch(genes, budgets)
    invs = _kernels.inversion_counts(genes)
    for row in range(genes.shape[0]):
        ref = develop(genes[row], int(budgets[row]))
        assert np.array_equal(developed[row], ref.developed_genes)
        assert int(swaps[row]) == ref.swaps_used
        assert int(invs[row]) == inversion_count(genes[row])


def _check_stats() -> None:
    rng = np.random.default_rng(13)
    for _ in range(200):
        a = rng.normal(rng.uniform(-2, 2), rng.uniform(0.5, 3), size=int(rng.integers(3, 30)))
        b = rng.normal(rng.uniform(-2, 2), rng.uniform(0.5, 3), size=int(rng.integers(3, 30)))
        rep = t_test(a, b)
        flipped = t_test(b, a)
        assert math.isclose(rep.t_statistic, -flipped.t_statistic, rel_tol=1e-12)
        assert math.isclose(rep.p_value, flipped.p_value, rel_tol=1e-12)
        assert 0.0 <= rep.p_value <= 1.0
        r = pearson(a[:3], b[:3])
        assert math.isnan(r) or -1.0 <= r <= 1.0
    for x in (0.1, 0.25, 0.5, 0.75, 0.9):
        assert math.isclose(regularized_incomplete_beta(1.0, 1.0, x), x, rel_tol=1e-12)
        total = regularized_incomplete_beta(3.0, 5.0, x) + regularized_incomplete_beta(
            5.0, 3.0, 1.0 - x
        )
        assert math.isclose(total, 1.0, rel_tol=1e-12)
    assert t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]).p_value == 1.0


def _check_engine() -> None:
    cfg = EvolutionConfig(
        pop_size=30,
        genome_len=10,
        max_generations=25,
        competency=FixedCompetency(5),
        competent_fraction=0.5,
        seed=99,
    )
    rng = np.random.default_rng(5)
    pop = initial_population(cfg, rng)
    assessed = assess(pop, PenaltyRule())
    survivors = select(assessed, cfg.selection_frac)
    refilled = repopulate(survivors, cfg.pop_size, rng)
    assert len(refilled) == cfg.pop_size
    assert refilled[: len(survivors)] == survivors
    for emb in refilled:
        assert emb.genes.min() >= 1 and emb.genes.max() <= cfg.genome_len
    run = run_evolution(cfg)
    assert len(run.records) == cfg.max_generations + 1
    prevalences = run.series("competent_prevalence")
    assert np.all((prevalences >= 0.0) & (prevalences <= 1.0))


def _check_determinism() -> None:
    cfg = EvolutionConfig(
        pop_size=20,
        genome_len=10,
        max_generations=30,
        competency=EvolvableCompetency(),
        seed=12345,
    )
    # Compare reprs: NaN correlation entries defeat == but print stably.
    first = [repr(r) for r in run_evolution(cfg).records]
    second = [repr(r) for r in run_evolution(cfg).records]
    assert first == second
    other = EvolutionConfig(
        pop_size=20,
        genome_len=10,
        max_generations=30,
        competency=EvolvableCompetency(),
        seed=54321,
    )
    assert [repr(r) for r in run_evolution(other).records] != first


_CHECKS = (
    ("fitness scoring vs brute force", _check_fitness),
    ("development algebra", _check_development),
    ("batch kernels vs reference", _check_kernels),
    ("statistics helpers", _check_stats),
    ("engine invariants", _check_engine),
    ("run determinism", _check_determinism),
)


def run_selftest(echo=print) -> bool:
    """Run every check, print one PASS/FAIL line each, return overall ok."""
    ok = True
    for name, check in _CHECKS:
        try:
            check()
        except Exception as exc:  # noqa: BLE001 - report and continue
            echo(f"FAIL {name}: {exc!r}")
            ok = False
        else:
            echo(f"PASS {name}")
    return ok
