"""Subtree-kernel evaluation and Gram matrix assembly.

The kernel between two trees is the weighted sum, over their shared subtree
isomorphism classes, of the product of occurrence counts.  Two evaluation
paths exist:

* :func:`kernel_brute` enumerates subtree signatures explicitly.  It is the
  ground-truth oracle: slow, but independent of the compressed path, and it
  preserves exact arithmetic (integers, fractions) end to end.
* :func:`kernel_dag` evaluates on an annotated forest DAG, touching only the
  vertices shared by the two members.

Weight tables are plain arrays indexed by DAG vertex, so recomputing a Gram
matrix under new weights costs no structural work: build the annotation
once, then reweight at will (see :class:`GramComputer`).
"""

from __future__ import annotations

import csv
from typing import IO, Callable, Optional, Sequence

import numpy as np

from .annotate import AnnotatedDag
from .trees import Tree, TreeMode, subtree_signatures

__all__ = [
    "GramComputer",
    "export_gram_csv",
    "gram",
    "kernel_brute",
    "kernel_dag",
    "min_eig_and_norm",
]

WeightFn = Callable[[Tree], float]


def kernel_brute(
    t1: Tree,
    t2: Tree,
    mode: TreeMode,
    weight: WeightFn,
    kappa: Optional[Callable[[int, int], float]] = None,
) -> float:
    """Sum over shared subtree classes of ``weight * kappa(count1, count2)``.

    ``weight`` must be isomorphism-invariant: it receives one representative
    subtree per class.  ``kappa`` defaults to the product, the standard
    choice.  Arithmetic follows the operand types (ints and fractions stay
    exact).
    """
    sigs1 = subtree_signatures(t1, mode)
    sigs2 = subtree_signatures(t2, mode)
    counts1: dict[str, int] = {}
    rep1: dict[str, int] = {}
    for v, s in enumerate(sigs1):
        counts1[s] = counts1.get(s, 0) + 1
        rep1.setdefault(s, v)
    counts2: dict[str, int] = {}
    for s in sigs2:
        counts2[s] = counts2.get(s, 0) + 1
    total = 0
    for s in sorted(set(counts1) & set(counts2)):
        n1, n2 = counts1[s], counts2[s]
        w = weight(t1.subtree(rep1[s]))
        total += w * (kappa(n1, n2) if kappa is not None else n1 * n2)
    return total


def kernel_dag(
    annotated: AnnotatedDag,
    weights: np.ndarray,
    i: int,
    j: int,
    kappa: Optional[Callable[[int, int], float]] = None,
) -> float:
    """Kernel between members ``i`` and ``j`` from the annotated DAG.

    Visits exactly the vertices shared by the two members.  The pair is
    normalized to ``i <= j`` so the summation order, hence the result, is
    identical under argument swap.
    """
    _check_weights(annotated, weights)
    if i > j:
        i, j = j, i
    shared = annotated.matching(i, j)
    if len(shared) == 0:
        return 0.0
    pi = annotated.frequencies_on(i, shared)
    pj = annotated.frequencies_on(j, shared)
    if kappa is None:
        return float(np.dot(weights[shared] * pi, pj))
    return float(
        sum(w * kappa(int(a), int(b)) for w, a, b in zip(weights[shared], pi, pj))
    )


def gram(
    annotated: AnnotatedDag,
    weights: np.ndarray,
    rows: Sequence[int],
    cols: Sequence[int],
) -> np.ndarray:
    """Entrywise kernel matrix; symmetric (upper triangle mirrored) when rows
    and cols coincide."""
    return GramComputer(annotated, weights).gram(rows, cols)


class GramComputer:
    """Reusable kernel evaluator: one annotation, many weightings.

    ``reweight`` swaps the weight table without touching the annotation;
    ``visited_vertices`` counts matched DAG vertices across kernel calls
    (work accounting for the shared-vertices bound).
    """

    def __init__(self, annotated: AnnotatedDag, weights: np.ndarray):
        self.annotated = annotated
        self.weights = _check_weights(annotated, weights)
        self.visited_vertices = 0

    def reweight(self, weights: np.ndarray) -> None:
        self.weights = _check_weights(self.annotated, weights)

    def value(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        shared = self.annotated.matching(i, j)
        self.visited_vertices += len(shared)
        if len(shared) == 0:
            return 0.0
        pi = self.annotated.frequencies_on(i, shared)
        pj = self.annotated.frequencies_on(j, shared)
        return float(np.dot(self.weights[shared] * pi, pj))

    def gram(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        rows = list(rows)
        cols = list(cols)
        out = np.zeros((len(rows), len(cols)))
        if rows == cols:
            for a in range(len(rows)):
                for b in range(a, len(cols)):
                    out[a, b] = self.value(rows[a], cols[b])
                    out[b, a] = out[a, b]
        else:
            for a, i in enumerate(rows):
                for b, j in enumerate(cols):
                    out[a, b] = self.value(i, j)
        return out


def _check_weights(annotated: AnnotatedDag, weights: np.ndarray) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(annotated.dag),):
        raise ValueError(
            f"weight table has length {weights.shape}, expected {len(annotated.dag)}"
        )
    return weights


def min_eig_and_norm(matrix: np.ndarray) -> tuple[float, float]:
    """Smallest eigenvalue and spectral norm of a symmetric matrix."""
    eigs = np.linalg.eigvalsh(matrix)
    return float(eigs[0]), float(max(abs(eigs[0]), abs(eigs[-1])))


def export_gram_csv(
    matrix: np.ndarray, rows: Sequence[int], cols: Sequence[int], out: IO[str]
) -> None:
    """CSV with a header row of column member indices; first column is the
    row member index."""
    writer = csv.writer(out)
    writer.writerow([""] + [str(c) for c in cols])
    for a, r in enumerate(rows):
        writer.writerow([str(r)] + [repr(float(x)) for x in matrix[a]])
