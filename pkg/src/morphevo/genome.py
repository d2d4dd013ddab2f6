"""Genotype representation and fitness scoring.

An embryo is a fixed-length 1-D array of integer gene values drawn from
``[1, n]`` where ``n`` is the genome length.  Fitness rewards ascending
order: it is an exponential ramp over the fraction of index pairs
``(i, j), i < j`` that do not require a swap, i.e. pairs that are not
strictly descending.  Equal-valued pairs need no swap (development never
swaps equal neighbors), so they count toward sortedness; a non-decreasing
array scores exactly ``1.0`` even when it contains duplicates.  The
strictly-ascending pair count is also exposed (:func:`non_inversion_count`)
-- for distinct values the two counts coincide.

The ramp is ``f = 9 ** (nic_norm - 1)`` with ``nic_norm`` the non-inverted
pair fraction, so fitness spans ``[1/9, 1]``: a fully descending array
scores ``1/9`` and a sorted one scores exactly ``1.0``.  The exponent form
``9 ** (x - 1)`` (rather than ``exp(x * ln 9) / 9``) is deliberate: IEEE
``pow`` returns exactly ``1.0`` at ``x = 1``, which downstream threshold
logic relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Kind",
    "InitMode",
    "Embryo",
    "FitnessValue",
    "pair_count",
    "new_embryo",
    "non_inversion_count",
    "inversion_count",
    "fitness",
    "fitness_from_nic",
]

# Lower bound of the fitness range: a fully descending array has every
# pair inverted and scores 9**(0 - 1).
MIN_FITNESS = 1.0 / 9.0


class Kind(Enum):
    """Developmental capability of an embryo.

    Hardwired embryos are assessed on their genotype as-is.  Competent
    embryos get to rearrange themselves (within a swap budget) before
    assessment; see :mod:`morphevo.development`.
    """

    HARDWIRED = "hardwired"
    COMPETENT = "competent"


class InitMode(Enum):
    """How fresh genomes are sampled.

    ``UNIFORM`` draws each gene independently from ``[1, n]`` (duplicates
    likely).  ``PERMUTATION`` draws a random permutation of ``1..n``
    (all values distinct).
    """

    UNIFORM = "uniform"
    PERMUTATION = "permutation"


@dataclass(frozen=True)
class Embryo:
    """An individual: integer genome plus developmental kind.

    Attributes:
        genes: 1-D int64 array, length >= 2.  Frozen (read-only) on
            construction; pass a copy if you need to keep a writable
            reference to the same buffer.
        kind: whether the embryo may develop before assessment.
        competency: swap budget for development.  Required (>= 1) for
            competent embryos, must be ``None`` for hardwired ones.
    """

    genes: np.ndarray
    kind: Kind
    competency: int | None = None

    def __post_init__(self) -> None:
        genes = np.asarray(self.genes, dtype=np.int64)
        if genes.ndim != 1 or genes.size < 2:
            raise ValueError("genes must be a 1-D array of length >= 2")
        genes.setflags(write=False)
        object.__setattr__(self, "genes", genes)
        if self.kind is Kind.COMPETENT:
            if self.competency is None or self.competency < 1:
                raise ValueError("competent embryo requires competency >= 1")
        elif self.competency is not None:
            raise ValueError("hardwired embryo must not carry a competency gene")

    @property
    def n(self) -> int:
        """Genome length."""
        return int(self.genes.size)


@dataclass(frozen=True)
class FitnessValue:
    """Fitness of one genome.

    Attributes:
        nic: count of index pairs needing no swap, i.e.
            ``C(n, 2) - inversion_count``.  Equals the strictly ascending
            pair count whenever all values are distinct.
        nic_norm: ``nic / C(n, 2)``, in ``[0, 1]``.
        f: scaled fitness ``9 ** (nic_norm - 1)``, in ``[1/9, 1]``.
    """

    nic: int
    nic_norm: float
    f: float


def pair_count(n: int) -> int:
    """Number of index pairs ``C(n, 2)`` in a genome of length ``n``."""
    return n * (n - 1) // 2


def new_embryo(
    n: int,
    kind: Kind,
    competency: int | None = None,
    init_mode: InitMode = InitMode.UNIFORM,
    rng: np.random.Generator | None = None,
    x_max: int = 500,
) -> Embryo:
    """Sample a fresh embryo with random genes.

    Args:
        n: genome length (>= 2).  Gene values are drawn from ``[1, n]``.
        kind: developmental kind of the new embryo.
        competency: swap budget; required for competent embryos and must
            lie in ``[1, x_max]``.
        init_mode: uniform-with-replacement or random-permutation genes.
        rng: source of randomness.
        x_max: upper bound accepted for the competency gene.

    Returns:
        A new :class:`Embryo` with frozen genes.
    """
    if n < 2:
        raise ValueError(f"genome length must be >= 2, got {n}")
    if rng is None:
        raise ValueError("rng is required")
    if kind is Kind.COMPETENT:
        if competency is None or not (1 <= competency <= x_max):
            raise ValueError(
                f"competent embryo needs competency in [1, {x_max}], got {competency}"
            )
    if init_mode is InitMode.PERMUTATION:
        genes = rng.permutation(np.arange(1, n + 1, dtype=np.int64))
    else:
        genes = rng.integers(1, n + 1, size=n, dtype=np.int64)
    return Embryo(genes=genes, kind=kind, competency=competency)


def _check_genes(genes: np.ndarray) -> np.ndarray:
    a = np.asarray(genes)
    if a.ndim != 1 or a.size < 2:
        raise ValueError("genes must be a 1-D array of length >= 2")
    return a


def non_inversion_count(genes: np.ndarray) -> int:
    """Count index pairs ``i < j`` with ``genes[i] < genes[j]`` (strict).

    Equal-valued pairs contribute to neither this count nor
    :func:`inversion_count`, so for genomes with duplicates
    ``non_inversion_count + inversion_count < C(n, 2)``.  Note that
    :func:`fitness` normalizes over pairs *not requiring* a swap, which
    additionally includes equal pairs.
    """
    a = _check_genes(genes)
    less = a[:, None] < a[None, :]
    return int(np.triu(less, k=1).sum())


def inversion_count(genes: np.ndarray) -> int:
    """Count index pairs ``i < j`` with ``genes[i] > genes[j]`` (strict).

    Exactly the number of adjacent swaps a full bubble sort performs on
    the array; the developmental swap budget is spent against this count.
    """
    a = _check_genes(genes)
    greater = a[:, None] > a[None, :]
    return int(np.triu(greater, k=1).sum())


def fitness_from_nic(nic: int, n: int) -> float:
    """Scaled fitness for a given no-swap-needed pair count at length n."""
    return float(9.0 ** (nic / pair_count(n) - 1.0))


def fitness(genes: np.ndarray) -> FitnessValue:
    """Score a genome.

    The numerator counts pairs that need no swap
    (``C(n, 2) - inversion_count``): a pair is "out of order" only when
    strictly descending, since development cannot -- and need not --
    reorder equal values.  Sorted arrays therefore score exactly 1.0
    whether or not they contain duplicates, and each developmental swap
    raises fitness strictly.

    Returns:
        A :class:`FitnessValue` with the pair count, its normalized
        fraction, and the scaled fitness ``9 ** (nic_norm - 1)``.
    """
    a = _check_genes(genes)
    total = pair_count(int(a.size))
    nic = total - inversion_count(a)
    nic_norm = nic / total
    return FitnessValue(nic=nic, nic_norm=nic_norm, f=float(9.0 ** (nic_norm - 1.0)))
