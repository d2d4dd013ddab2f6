"""Generational evolution engine.

One generation applies, in order: assess (develop competent embryos and
score everyone), select (truncation on penalized phenotypic fitness),
repopulate (survivors stay, single-point crossover fills the rest), and
mutate.  Selection sees phenotypes; reproduction copies genotypes, so
nothing acquired during development is written back into the genome.

Determinism: a run is fully determined by its config (including the
seed).  All randomness flows through one ``numpy.random.Generator`` and
every stochastic step draws a fixed number of variates regardless of
outcomes, so seeds stay aligned across runs that share a prefix of
decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import _kernels
from .genome import Embryo, InitMode, Kind, new_embryo, pair_count
from .stats import pearson

__all__ = [
    "FixedCompetency",
    "EvolvableCompetency",
    "CompetencyMode",
    "PenaltyRule",
    "EvolutionConfig",
    "Assessment",
    "GenerationRecord",
    "EvolutionState",
    "RunResult",
    "selected_count",
    "initial_population",
    "assess",
    "select",
    "crossover_pair",
    "repopulate",
    "mutate",
    "step_generation",
    "run_evolution",
]


@dataclass(frozen=True)
class FixedCompetency:
    """All competent embryos share one constant swap budget."""

    value: int


@dataclass(frozen=True)
class EvolvableCompetency:
    """The swap budget is itself a heritable, mutable gene.

    New embryos draw their budget uniformly from ``init_range``; mutation
    redraws it uniformly from ``mutate_range`` (typically much wider, so
    evolution can explore budgets far beyond the founders').
    """

    init_range: tuple[int, int] = (1, 15)
    mutate_range: tuple[int, int] = (1, 500)


# None means a hardwired-only population.
CompetencyMode = Union[FixedCompetency, EvolvableCompetency, None]


@dataclass(frozen=True)
class PenaltyRule:
    """Linear cost of competency deducted from phenotypic fitness.

    Selection ranks on ``pf - weight * x / x_max`` where ``x`` is the
    embryo's swap budget; hardwired embryos pay nothing.  ``weight = 0``
    disables the penalty.
    """

    weight: float = 0.0
    x_max: int = 500

    def apply(self, phenotypic_f: np.ndarray, budgets: np.ndarray) -> np.ndarray:
        return phenotypic_f - self.weight * budgets / self.x_max


@dataclass(frozen=True)
class EvolutionConfig:
    """Everything that determines a run.

    Attributes:
        pop_size: number of embryos (constant across generations).
        genome_len: genes per embryo; values live in [1, genome_len].
        max_generations: horizon; a completed run records generations
            0..max_generations inclusive.
        mutation_prob: per-individual chance of one structural point
            mutation per generation (and, in evolvable mode, independent
            per-individual chance of a competency mutation).
        selection_frac: surviving fraction; ceil(frac * pop_size) with a
            tiny epsilon guard so exact products are not bumped up by
            float error.
        competency: None (all hardwired), FixedCompetency, or
            EvolvableCompetency.
        competent_fraction: fraction of the initial population that is
            competent; used only when ``competency`` is not None.
        x_max: largest representable swap budget (penalty normalizer and
            validation bound).
        penalty_weight: weight of the competency penalty at selection.
        init_mode: how founder genomes are sampled.
        stop_at_max_fitness: stop as soon as a generation's best raw
            phenotypic fitness reaches 1.0.
        seed: 64-bit seed for the run's generator.
    """

    pop_size: int = 100
    genome_len: int = 50
    max_generations: int = 250
    mutation_prob: float = 0.6
    selection_frac: float = 0.1
    competency: CompetencyMode = None
    competent_fraction: float = 1.0
    x_max: int = 500
    penalty_weight: float = 0.0
    init_mode: InitMode = InitMode.UNIFORM
    stop_at_max_fitness: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.pop_size < 2:
            raise ValueError(f"pop_size must be >= 2, got {self.pop_size}")
        if self.genome_len < 2:
            raise ValueError(f"genome_len must be >= 2, got {self.genome_len}")
        if self.max_generations < 0:
            raise ValueError(f"max_generations must be >= 0, got {self.max_generations}")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError(f"mutation_prob must be in [0, 1], got {self.mutation_prob}")
        if not 0.0 < self.selection_frac <= 1.0:
            raise ValueError(f"selection_frac must be in (0, 1], got {self.selection_frac}")
        if self.x_max < 1:
            raise ValueError(f"x_max must be >= 1, got {self.x_max}")
        if self.penalty_weight < 0.0:
            raise ValueError(f"penalty_weight must be >= 0, got {self.penalty_weight}")
        if not 0 <= self.seed < (1 << 64):
            raise ValueError("seed must be in [0, 2^64)")
        comp = self.competency
        if comp is not None:
            if not 0.0 < self.competent_fraction <= 1.0:
                raise ValueError(
                    f"competent_fraction must be in (0, 1], got {self.competent_fraction}"
                )
            if self.n_competent < 1:
                raise ValueError("competent_fraction yields zero competent embryos")
        if isinstance(comp, FixedCompetency):
            if not 1 <= comp.value <= self.x_max:
                raise ValueError(
                    f"fixed competency must be in [1, {self.x_max}], got {comp.value}"
                )
        elif isinstance(comp, EvolvableCompetency):
            ilo, ihi = comp.init_range
            mlo, mhi = comp.mutate_range
            if not (1 <= ilo <= ihi <= mhi <= self.x_max):
                raise ValueError(
                    "evolvable competency needs 1 <= init_lo <= init_hi <= mutate_hi <= x_max, "
                    f"got init={comp.init_range} mutate={comp.mutate_range} x_max={self.x_max}"
                )
            if mlo < 1 or mlo > mhi:
                raise ValueError(f"bad competency mutate_range {comp.mutate_range}")

    @property
    def n_competent(self) -> int:
        """Size of the competent block in the initial population."""
        if self.competency is None:
            return 0
        return int(round(self.competent_fraction * self.pop_size))

    def penalty_rule(self) -> PenaltyRule:
        return PenaltyRule(weight=self.penalty_weight, x_max=self.x_max)


@dataclass(frozen=True)
class Assessment:
    """Scores for one embryo in one generation.

    ``genotypic_f`` is the fitness of the genome as inherited,
    ``phenotypic_f`` the fitness after development, and ``penalized_f``
    the selection criterion (phenotypic minus the competency penalty).
    """

    embryo: Embryo
    genotypic_f: float
    phenotypic_f: float
    penalized_f: float
    developed_genes: np.ndarray
    swaps_used: int


@dataclass(frozen=True)
class GenerationRecord:
    """Telemetry for one generation, taken at assessment (pre-selection).

    ``best_*`` fields describe the individual that tops the selection
    ranking (ties broken toward the lowest index).  ``best_pheno`` and
    ``mean_pheno`` are penalized values -- identical to the raw ones when
    the penalty weight is zero -- while the ``*_raw`` twins are always
    unpenalized.  ``locus_changes`` is the cumulative count of applied,
    value-changing mutations per structural locus plus (last entry) the
    competency gene.
    """

    generation: int
    best_pheno: float
    best_geno: float
    mean_pheno: float
    mean_geno: float
    best_pheno_raw: float
    mean_pheno_raw: float
    best_competency: int | None
    comp_min: int | None
    comp_max: int | None
    competent_prevalence: float
    hardwired_prevalence: float
    corr_geno_pheno: float
    locus_changes: tuple[int, ...]


@dataclass(frozen=True)
class EvolutionState:
    """Population plus bookkeeping between generations."""

    population: tuple[Embryo, ...]
    generation: int
    locus_changes: np.ndarray  # cumulative, length genome_len + 1


@dataclass(frozen=True)
class RunResult:
    """Records of a completed run (generation 0 .. horizon or early stop)."""

    config: EvolutionConfig
    records: tuple[GenerationRecord, ...]
    stopped_early: bool = False

    def series(self, field_name: str) -> np.ndarray:
        """Per-generation values of one record field as a float array.

        ``None`` entries (competency stats in hardwired populations)
        become NaN.
        """
        vals = [getattr(r, field_name) for r in self.records]
        return np.array([math.nan if v is None else v for v in vals], dtype=np.float64)


def selected_count(selection_frac: float, pop_size: int) -> int:
    """Survivor count: ceil(frac * pop) guarded against float overshoot.

    ``0.1 * 100`` is ``10.000000000000002`` in binary floating point; the
    epsilon keeps exact products from rounding up to an extra survivor.
    """
    return max(1, math.ceil(selection_frac * pop_size - 1e-9))


def initial_population(config: EvolutionConfig, rng: np.random.Generator) -> tuple[Embryo, ...]:
    """Sample the founder population.

    Layout is hardwired block first, then competent block.  In evolvable
    mode each competent founder's budget is drawn before its genes so the
    draw order is stable regardless of genome length.
    """
    n_comp = config.n_competent
    n_hard = config.pop_size - n_comp
    comp = config.competency
    embryos: list[Embryo] = []
    for i in range(config.pop_size):
        if i < n_hard:
            embryos.append(
                new_embryo(config.genome_len, Kind.HARDWIRED, None, config.init_mode, rng)
            )
            continue
        if isinstance(comp, FixedCompetency):
            budget = comp.value
        else:
            lo, hi = comp.init_range
            budget = int(rng.integers(lo, hi + 1))
        embryos.append(
            new_embryo(
                config.genome_len,
                Kind.COMPETENT,
                budget,
                config.init_mode,
                rng,
                x_max=config.x_max,
            )
        )
    return tuple(embryos)


def _population_matrix(population: Sequence[Embryo]) -> tuple[np.ndarray, np.ndarray]:
    """Stack genomes into a (pop, n) matrix with per-row swap budgets."""
    genes = np.stack([e.genes for e in population])
    budgets = np.array(
        [e.competency if e.kind is Kind.COMPETENT else 0 for e in population],
        dtype=np.int64,
    )
    return genes, budgets


def assess(population: Sequence[Embryo], penalty: PenaltyRule) -> list[Assessment]:
    """Develop and score a population.

    Hardwired embryos are scored on their genotype; competent embryos are
    first developed with their swap budget.  Phenotypic scores come from
    the exact swap accounting ``inv_out = inv_in - swaps_used`` (each
    swap repairs exactly one strictly descending pair and touches no
    other pair).

    Returns:
        One :class:`Assessment` per embryo, in population order.
    """
    if len(population) == 0:
        raise ValueError("population must be non-empty")
    genes, budgets = _population_matrix(population)
    total = pair_count(genes.shape[1])
    geno_nic = total - _kernels.inversion_counts(genes)
    if budgets.any():
        developed, swaps = _kernels.develop_batch(genes, budgets)
    else:
        developed, swaps = genes, np.zeros(len(population), dtype=np.int64)
    developed.setflags(write=False)
    pheno_nic = geno_nic + swaps
    geno_f = 9.0 ** (geno_nic / total - 1.0)
    pheno_f = 9.0 ** (pheno_nic / total - 1.0)
    penalized = penalty.apply(pheno_f, budgets)
    return [
        Assessment(
            embryo=population[i],
            genotypic_f=float(geno_f[i]),
            phenotypic_f=float(pheno_f[i]),
            penalized_f=float(penalized[i]),
            developed_genes=developed[i],
            swaps_used=int(swaps[i]),
        )
        for i in range(len(population))
    ]


def select(assessed: Sequence[Assessment], selection_frac: float) -> list[Embryo]:
    """Truncation selection on penalized phenotypic fitness.

    Keeps the top ``ceil(frac * pop)`` embryos.  Ranking ties are broken
    by population index, lowest first -- with many embryos at maximal
    fitness this freezes the survivor set, which is the intended
    behavior, not an accident.
    """
    penalized = np.array([a.penalized_f for a in assessed], dtype=np.float64)
    k = selected_count(selection_frac, len(assessed))
    order = np.argsort(-penalized, kind="stable")[:k]
    return [assessed[int(i)].embryo for i in order]


def crossover_pair(
    parent_a: Embryo, parent_b: Embryo, rng: np.random.Generator
) -> tuple[Embryo, Embryo]:
    """Single-point crossover between two same-kind parents.

    The cut point is uniform on ``[1, n - 1]`` so both children mix
    material from both parents.  Child one takes the head of parent a and
    the tail of parent b (and, being tail material, parent b's competency
    gene); child two is the mirror image.
    """
    if parent_a.n != parent_b.n:
        raise ValueError("parents must share genome length")
    if parent_a.kind is not parent_b.kind:
        raise ValueError("parents must share kind; cross-kind mating is not defined")
    n = parent_a.n
    cut = int(rng.integers(1, n))
    genes_a = np.concatenate([parent_a.genes[:cut], parent_b.genes[cut:]])
    genes_b = np.concatenate([parent_b.genes[:cut], parent_a.genes[cut:]])
    kind = parent_a.kind
    child_a = Embryo(genes=genes_a, kind=kind, competency=parent_b.competency)
    child_b = Embryo(genes=genes_b, kind=kind, competency=parent_a.competency)
    return child_a, child_b


def repopulate(
    selected: Sequence[Embryo], target_size: int, rng: np.random.Generator
) -> list[Embryo]:
    """Refill the population from the survivors.

    Survivors are carried over unchanged at the front.  The remaining
    slots are filled with crossover children bred within each kind
    (competent with competent, hardwired with hardwired); in mixed
    populations the child slots are split proportionally to each kind's
    share of the survivors, integer part first, with any leftover slot
    going to the larger group (competent on a tie).  A one-survivor group
    reproduces by cloning.  Competent children precede hardwired children
    in the output.
    """
    if len(selected) == 0:
        raise ValueError("selected must be non-empty")
    if target_size < len(selected):
        raise ValueError("target_size smaller than the survivor count")
    competent = [e for e in selected if e.kind is Kind.COMPETENT]
    hardwired = [e for e in selected if e.kind is Kind.HARDWIRED]
    slots = target_size - len(selected)
    if competent and hardwired:
        comp_slots = slots * len(competent) // len(selected)
        hard_slots = slots * len(hardwired) // len(selected)
        leftover = slots - comp_slots - hard_slots
        if leftover:
            if len(hardwired) > len(competent):
                hard_slots += leftover
            else:
                comp_slots += leftover
    elif competent:
        comp_slots, hard_slots = slots, 0
    else:
        comp_slots, hard_slots = 0, slots

    def breed(group: list[Embryo], count: int) -> list[Embryo]:
        if count == 0:
            return []
        if len(group) == 1:
            return [group[0]] * count
        children: list[Embryo] = []
        while len(children) < count:
            i, j = rng.choice(len(group), size=2, replace=False)
            child_a, child_b = crossover_pair(group[int(i)], group[int(j)], rng)
            children.append(child_a)
            if len(children) < count:
                children.append(child_b)
        return children

    return list(selected) + breed(competent, comp_slots) + breed(hardwired, hard_slots)


def mutate(
    population: Sequence[Embryo],
    config: EvolutionConfig,
    rng: np.random.Generator,
    locus_changes: np.ndarray | None = None,
) -> list[Embryo]:
    """Point-mutate a population.

    Each embryo independently mutates with probability
    ``config.mutation_prob``: one uniformly chosen structural locus is
    redrawn uniformly from ``[1, genome_len]``.  In evolvable-competency
    mode each competent embryo additionally mutates its budget gene with
    the same per-individual probability, redrawn from ``mutate_range``.

    All random variates are drawn up front for every embryo (hit or
    miss), so the stream position after this call depends only on the
    population size.

    Args:
        locus_changes: optional int64 array of length ``genome_len + 1``;
            when given, entry ``i`` is incremented for every applied
            mutation at structural locus ``i`` that actually changed the
            value, and the last entry likewise for the competency gene.
            Redraws that land on the current value count as no change.
    """
    size = len(population)
    n = config.genome_len
    hit = rng.random(size) < config.mutation_prob
    loci = rng.integers(0, n, size=size)
    values = rng.integers(1, n + 1, size=size)
    evolvable = isinstance(config.competency, EvolvableCompetency)
    if evolvable:
        comp_hit = rng.random(size) < config.mutation_prob
        lo, hi = config.competency.mutate_range
        comp_values = rng.integers(lo, hi + 1, size=size)
    out: list[Embryo] = []
    for i, emb in enumerate(population):
        genes = emb.genes
        budget = emb.competency
        changed = False
        if hit[i]:
            locus = int(loci[i])
            value = int(values[i])
            if genes[locus] != value:
                genes = genes.copy()
                genes[locus] = value
                changed = True
                if locus_changes is not None:
                    locus_changes[locus] += 1
        if evolvable and emb.kind is Kind.COMPETENT and comp_hit[i]:
            new_budget = int(comp_values[i])
            if new_budget != budget:
                budget = new_budget
                changed = True
                if locus_changes is not None:
                    locus_changes[n] += 1
        out.append(Embryo(genes=genes, kind=emb.kind, competency=budget) if changed else emb)
    return out


def _make_record(
    generation: int,
    assessed: Sequence[Assessment],
    locus_changes: np.ndarray,
) -> GenerationRecord:
    penalized = np.array([a.penalized_f for a in assessed])
    raw = np.array([a.phenotypic_f for a in assessed])
    geno = np.array([a.genotypic_f for a in assessed])
    best = int(np.argmax(penalized))  # first maximum: index tie-break
    budgets = [a.embryo.competency for a in assessed if a.embryo.kind is Kind.COMPETENT]
    n_comp = len(budgets)
    return GenerationRecord(
        generation=generation,
        best_pheno=float(penalized[best]),
        best_geno=float(geno[best]),
        mean_pheno=float(penalized.mean()),
        mean_geno=float(geno.mean()),
        best_pheno_raw=float(raw[best]),
        mean_pheno_raw=float(raw.mean()),
        best_competency=assessed[best].embryo.competency,
        comp_min=min(budgets) if budgets else None,
        comp_max=max(budgets) if budgets else None,
        competent_prevalence=n_comp / len(assessed),
        hardwired_prevalence=(len(assessed) - n_comp) / len(assessed),
        corr_geno_pheno=pearson(geno, raw),
        locus_changes=tuple(int(v) for v in locus_changes),
    )


def step_generation(
    state: EvolutionState, config: EvolutionConfig, rng: np.random.Generator
) -> tuple[EvolutionState, GenerationRecord]:
    """Advance one generation.

    The returned record describes ``state``'s population as assessed
    (before selection); its mutation counters are those accumulated while
    producing that population.
    """
    assessed = assess(state.population, config.penalty_rule())
    record = _make_record(state.generation, assessed, state.locus_changes)
    survivors = select(assessed, config.selection_frac)
    refilled = repopulate(survivors, config.pop_size, rng)
    counters = state.locus_changes.copy()
    next_pop = mutate(refilled, config, rng, counters)
    next_state = EvolutionState(
        population=tuple(next_pop),
        generation=state.generation + 1,
        locus_changes=counters,
    )
    return next_state, record


def run_evolution(config: EvolutionConfig) -> RunResult:
    """Run a full evolutionary trajectory.

    Returns:
        A :class:`RunResult` whose records cover generations
        ``0..max_generations`` inclusive, or fewer if
        ``stop_at_max_fitness`` triggers (the stopping generation's
        record is the last one).
    """
    rng = np.random.default_rng(config.seed)
    state = EvolutionState(
        population=initial_population(config, rng),
        generation=0,
        locus_changes=np.zeros(config.genome_len + 1, dtype=np.int64),
    )
    records: list[GenerationRecord] = []
    for _ in range(config.max_generations):
        state, record = step_generation(state, config, rng)
        records.append(record)
        if config.stop_at_max_fitness and record.best_pheno_raw >= 1.0:
            return RunResult(config=config, records=tuple(records), stopped_early=True)
    final_assessed = assess(state.population, config.penalty_rule())
    records.append(_make_record(state.generation, final_assessed, state.locus_changes))
    return RunResult(config=config, records=tuple(records))
