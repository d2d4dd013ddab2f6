"""Developmental step: budget-limited adjacent-swap sorting.

A competent embryo improves its phenotype before assessment by running a
restricted bubble sort over its genes.  The sort makes repeated
ascending-index passes; whenever a neighbor pair is strictly descending
(``left > right``) it is swapped and one unit of the swap budget is spent.
Development halts the moment the budget is exhausted -- even mid-pass --
or when a full pass completes without any swap (the array is sorted).

Equal neighbors are never swapped, so development is stable and the
number of swaps spent equals ``min(budget, inversion_count)`` exactly:
every swap repairs exactly one strictly descending pair and creates
none.  A sufficient budget therefore yields a non-decreasing array in
exactly ``inversion_count`` swaps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .genome import Embryo, Kind

__all__ = ["DevelopmentOutcome", "develop", "develop_embryo"]


@dataclass(frozen=True)
class DevelopmentOutcome:
    """Result of developing one genome.

    Attributes:
        developed_genes: the rearranged genome (frozen int64 array).  A
            permutation of the input; the input itself is not modified.
        swaps_used: number of adjacent swaps performed, ``<= budget``.
    """

    developed_genes: np.ndarray
    swaps_used: int

    def __post_init__(self) -> None:
        genes = np.asarray(self.developed_genes, dtype=np.int64)
        genes.setflags(write=False)
        object.__setattr__(self, "developed_genes", genes)


def develop(genes: np.ndarray, budget: int) -> DevelopmentOutcome:
    """Run the restricted bubble sort on a genome.

    This is the reference implementation: a direct, readable loop.  The
    evolution engine uses a compiled batch kernel with identical
    semantics (see :mod:`morphevo._kernels`); the two are checked against
    each other in the test suite.

    Args:
        genes: 1-D integer array, length >= 2.  Not modified.
        budget: maximum number of adjacent swaps (>= 0).  A budget of 0
            returns the genome unchanged.

    Returns:
        :class:`DevelopmentOutcome` with the developed genome and the
        number of swaps actually spent.
    """
    if budget < 0:
        raise ValueError(f"swap budget must be >= 0, got {budget}")
    a = np.asarray(genes, dtype=np.int64)
    if a.ndim != 1 or a.size < 2:
        raise ValueError("genes must be a 1-D array of length >= 2")
    work = a.copy()
    out = work  # alias; kept separate names for clarity below
    remaining = int(budget)
    swaps_used = 0
    n = work.size
    while remaining > 0:
        swapped_this_pass = False
        for i in range(n - 1):
            if work[i] > work[i + 1]:
                work[i], work[i + 1] = work[i + 1], work[i]
                swaps_used += 1
                remaining -= 1
                swapped_this_pass = True
                if remaining == 0:
                    break
        if not swapped_this_pass:
            break
    return DevelopmentOutcome(developed_genes=out, swaps_used=swaps_used)


def develop_embryo(embryo: Embryo) -> DevelopmentOutcome:
    """Develop an embryo according to its kind.

    Hardwired embryos pass through unchanged with zero swaps; competent
    embryos develop with their competency gene as the swap budget.
    """
    if embryo.kind is Kind.HARDWIRED:
        return DevelopmentOutcome(developed_genes=embryo.genes.copy(), swaps_used=0)
    return develop(embryo.genes, int(embryo.competency))
