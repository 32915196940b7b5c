"""Annotation of a forest DAG with the data needed for kernel evaluation.

Three annotations are computed on the recompressed DAG of a dataset, each in
a single traversal:

* origins -- for every vertex, the set of dataset members whose tree contains
  the subtree this vertex represents;
* frequency vectors -- for every vertex, how many times that subtree occurs
  in each member (sparse, keyed by member index);
* matching map -- for every member pair (i, j), the vertices whose origin
  contains both, i.e. exactly the subtree classes shared by trees i and j.

The artificial root represents no subtree and is excluded everywhere.
Member indices are 0-based.  The finished :class:`AnnotatedDag` is immutable,
so Gram computations can share it freely and reweighting costs nothing.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .dag import Dag

__all__ = ["AnnotatedDag", "FULL_MATCHING_DEFAULT_LIMIT"]

# Above this many members the all-pairs matching map is not materialized up
# front; pairs are intersected on demand (and memoized).
FULL_MATCHING_DEFAULT_LIMIT = 512


class AnnotatedDag:
    """Forest DAG plus origins, frequencies and the matching map."""

    __slots__ = (
        "dag",
        "n_members",
        "origins",
        "_occ",
        "_cnt",
        "_matching",
        "build_traversals",
    )

    def __init__(self, dag: Dag, full_matching: Optional[bool] = None):
        if not dag.is_forest:
            raise ValueError("annotation requires a forest DAG with an artificial root")
        self.dag = dag
        self.n_members = dag.n_members
        self.build_traversals = 0
        self._compute_origins()
        self._compute_frequencies()
        self._matching: Optional[dict[tuple[int, int], np.ndarray]] = None
        if full_matching is None:
            full_matching = self.n_members <= FULL_MATCHING_DEFAULT_LIMIT
        if full_matching:
            self._build_full_matching()

    # -- annotation passes ------------------------------------------------------

    def _compute_origins(self) -> None:
        # Top-down by decreasing height; vertex ids are height-sorted, so a
        # reversed id scan visits every parent before its children.
        dag = self.dag
        root = dag.root
        sets: list[set[int]] = [set() for _ in range(len(dag))]
        for i, r in enumerate(dag.member_roots or ()):
            sets[r].add(i)
        for v in range(len(dag) - 1, -1, -1):
            if v == root:
                continue
            ov = sets[v]
            for c, _ in dag.aggregated_children(v):
                sets[c] |= ov
        self.origins: tuple[frozenset[int], ...] = tuple(
            frozenset() if v == root else frozenset(sets[v]) for v in range(len(dag))
        )
        self.build_traversals += 1

    def _compute_frequencies(self) -> None:
        # freq[v][i] = occurrences of the subtree of v inside tree i.  Seeded
        # with 1 at each member root, then pushed down: a child reached by an
        # edge of multiplicity L inherits L times the parent's counts.
        dag = self.dag
        root = dag.root
        freq: list[dict[int, int]] = [{} for _ in range(len(dag))]
        for i, r in enumerate(dag.member_roots or ()):
            freq[r][i] = freq[r].get(i, 0) + 1
        for v in range(len(dag) - 1, -1, -1):
            if v == root:
                continue
            fv = freq[v]
            if not fv:
                continue
            for c, mult in dag.aggregated_children(v):
                fc = freq[c]
                for i, count in fv.items():
                    fc[i] = fc.get(i, 0) + mult * count
        occ_lists: list[list[int]] = [[] for _ in range(self.n_members)]
        cnt_lists: list[list[int]] = [[] for _ in range(self.n_members)]
        for v in range(len(dag)):
            if v == root:
                continue
            for i in sorted(freq[v]):
                occ_lists[i].append(v)
                cnt_lists[i].append(freq[v][i])
        self._occ = [np.asarray(o, dtype=np.int64) for o in occ_lists]
        self._cnt = [np.asarray(c, dtype=np.float64) for c in cnt_lists]
        self.build_traversals += 1

    def _build_full_matching(self) -> None:
        # One traversal: each vertex contributes itself to every origin pair.
        pairs: dict[tuple[int, int], list[int]] = {}
        root = self.dag.root
        for v in range(len(self.dag)):
            if v == root:
                continue
            members = sorted(self.origins[v])
            for a, i in enumerate(members):
                for j in members[a:]:
                    pairs.setdefault((i, j), []).append(v)
        self._matching = {
            key: np.asarray(vs, dtype=np.int64) for key, vs in pairs.items()
        }
        self.build_traversals += 1

    # -- queries -----------------------------------------------------------------

    def subdag_size(self, i: int) -> int:
        """Number of DAG vertices of member ``i`` (#D_i)."""
        return len(self._occ[i])

    def frequency(self, v: int, i: int) -> int:
        """Occurrences of the subtree of vertex ``v`` inside tree ``i``."""
        occ = self._occ[i]
        k = int(np.searchsorted(occ, v))
        if k < len(occ) and occ[k] == v:
            return int(self._cnt[i][k])
        return 0

    def member_vertices(self, i: int) -> np.ndarray:
        """Sorted DAG vertices of member ``i`` (equals matching(i, i))."""
        return self._occ[i]

    def matching(self, i: int, j: int) -> np.ndarray:
        """Sorted DAG vertices whose origin contains both ``i`` and ``j``."""
        if not (0 <= i < self.n_members and 0 <= j < self.n_members):
            raise IndexError("member index out of range")
        if i > j:
            i, j = j, i
        if i == j:
            return self._occ[i]
        if self._matching is not None:
            return self._matching.get((i, j), _EMPTY_IDS)
        return np.intersect1d(self._occ[i], self._occ[j], assume_unique=True)

    def frequencies_on(self, i: int, vertices: np.ndarray) -> np.ndarray:
        """Frequency of member ``i`` restricted to the given vertex ids, which
        must all belong to member ``i``."""
        pos = np.searchsorted(self._occ[i], vertices)
        return self._cnt[i][pos]


_EMPTY_IDS = np.asarray([], dtype=np.int64)
