"""Compiled batch kernels for the evolution engine's hot path.

Semantics are defined by the pure-Python reference implementations in
:mod:`morphevo.genome` and :mod:`morphevo.development`; these kernels
exist only so whole-population assessment stays cheap at experiment
scale.  ``cache=True`` persists the compiled artifacts next to this file,
so the JIT cost is paid once per machine.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["develop_batch", "inversion_counts"]


@njit(cache=True)
def develop_batch(genes: np.ndarray, budgets: np.ndarray):  # pragma: no cover - thin JIT shim
    """Develop every row of a population matrix.

    Args:
        genes: (pop, n) int64 matrix, one genome per row.  Not modified.
        budgets: (pop,) int64 swap budgets; 0 means pass-through.

    Returns:
        (developed, swaps): the developed (pop, n) matrix and the (pop,)
        count of swaps spent per row.
    """
    pop, n = genes.shape
    out = genes.copy()
    swaps = np.zeros(pop, dtype=np.int64)
    for r in range(pop):
        remaining = budgets[r]
        used = 0
        while remaining > 0:
            swapped = False
            for i in range(n - 1):
                if out[r, i] > out[r, i + 1]:
                    tmp = out[r, i]
                    out[r, i] = out[r, i + 1]
                    out[r, i + 1] = tmp
                    used += 1
                    remaining -= 1
                    swapped = True
                    if remaining == 0:
                        break
            if not swapped:
                break
        swaps[r] = used
    return out, swaps


@njit(cache=True)
def inversion_counts(genes: np.ndarray) -> np.ndarray:  # pragma: no cover - thin JIT shim
    """Count strictly descending index pairs per row of a (pop, n) matrix."""
    pop, n = genes.shape
    counts = np.zeros(pop, dtype=np.int64)
    for r in range(pop):
        c = 0
        for i in range(n - 1):
            gi = genes[r, i]
            for j in range(i + 1, n):
                if gi > genes[r, j]:
                    c += 1
        counts[r] = c
    return counts
