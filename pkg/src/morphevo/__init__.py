"""Evolution of 1-D integer genomes with a swap-budgeted developmental step.

Embryos are fixed-length integer arrays whose fitness rewards ascending
order.  "Competent" embryos may partially sort themselves before being
judged -- a restricted bubble sort capped by a per-embryo swap budget --
while "hardwired" embryos are judged as inherited.  A generational GA
(truncation selection, single-point crossover, point mutation) evolves
populations of either kind; the budget itself can be a fixed constant or
an evolvable gene, optionally taxed at selection time.

Public surface: the genome/development primitives, the evolution engine,
the statistics helpers, and the stock experiment harness.  See the
``morphevo`` command-line tool for running experiments to disk.
"""

__version__ = "0.1.0"

from .genome import (
    Embryo,
    FitnessValue,
    InitMode,
    Kind,
    fitness,
    fitness_from_nic,
    inversion_count,
    new_embryo,
    non_inversion_count,
    pair_count,
)
from .development import DevelopmentOutcome, develop, develop_embryo
from .evolution import (
    Assessment,
    CompetencyMode,
    EvolutionConfig,
    EvolutionState,
    EvolvableCompetency,
    FixedCompetency,
    GenerationRecord,
    PenaltyRule,
    RunResult,
    assess,
    crossover_pair,
    initial_population,
    mutate,
    repopulate,
    run_evolution,
    select,
    selected_count,
    step_generation,
)
from .stats import (
    TTestMethod,
    TTestReport,
    ci95,
    pearson,
    regularized_incomplete_beta,
    t_test,
    threshold_crossings,
)
from .seeding import derive_seed
from .experiments import (
    ExperimentResult,
    ExperimentSpec,
    SweepResult,
    SweepSpec,
    Variant,
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
