"""Random and exhaustive tree generation for benchmarks and tests."""

from __future__ import annotations

import random
from functools import lru_cache
from typing import Iterator, Optional, Sequence

from .trees import Tree

__all__ = [
    "all_ordered_shapes",
    "random_tree",
    "random_tree_of_height",
]


def random_tree(
    rng: random.Random,
    n_vertices: int,
    labels: Optional[Sequence[str]] = None,
    max_children: Optional[int] = None,
) -> Tree:
    """A random recursive tree: vertex ``v`` attaches to a uniform earlier vertex.

    ``labels`` draws every vertex label uniformly from the alphabet; ``None``
    leaves the tree unlabeled.  ``max_children`` caps the branching factor by
    resampling the parent.
    """
    if n_vertices < 1:
        raise ValueError("need at least one vertex")
    parents: list[Optional[int]] = [None]
    counts = [0]
    for v in range(1, n_vertices):
        p = rng.randrange(v)
        if max_children is not None:
            while counts[p] >= max_children:
                p = rng.randrange(v)
        parents.append(p)
        counts[p] += 1
        counts.append(0)
    labs = [rng.choice(labels) for _ in range(n_vertices)] if labels else None
    return Tree.from_parents(parents, labs)


def random_tree_of_height(
    rng: random.Random,
    height: int,
    extra_vertices: int = 0,
    labels: Optional[Sequence[str]] = None,
) -> Tree:
    """A random tree of exactly the given height.

    Starts from a root-to-leaf spine of ``height`` edges, then attaches
    ``extra_vertices`` more, each to a uniform vertex of depth < ``height``
    so the height stays exact.
    """
    if height < 0:
        raise ValueError("height must be >= 0")
    parents: list[Optional[int]] = [None]
    depths = [0]
    for d in range(1, height + 1):
        parents.append(d - 1)
        depths.append(d)
    for _ in range(extra_vertices):
        eligible = [v for v in range(len(parents)) if depths[v] < height]
        p = rng.choice(eligible)
        parents.append(p)
        depths.append(depths[p] + 1)
    labs = [rng.choice(labels) for _ in range(len(parents))] if labels else None
    return Tree.from_parents(parents, labs)


@lru_cache(maxsize=None)
def _shape_codes(n: int) -> tuple[tuple, ...]:
    # Every ordered shape with n vertices as nested child tuples.
    if n == 1:
        return ((),)
    shapes: list[tuple] = []
    for sizes in _compositions(n - 1):
        pools = [_shape_codes(s) for s in sizes]
        for combo in _product(pools):
            shapes.append(tuple(combo))
    return tuple(shapes)


def _compositions(total: int) -> Iterator[tuple[int, ...]]:
    # Ordered sequences of positive integers summing to total.
    if total == 0:
        yield ()
        return
    for first in range(1, total + 1):
        for rest in _compositions(total - first):
            yield (first,) + rest


def _product(pools):
    if not pools:
        yield ()
        return
    for head in pools[0]:
        for rest in _product(pools[1:]):
            yield (head,) + rest


def _code_to_tree(code: tuple) -> Tree:
    parents: list[Optional[int]] = []

    def emit(node: tuple, parent: Optional[int]) -> None:
        v = len(parents)
        parents.append(parent)
        for child in node:
            emit(child, v)

    emit(code, None)
    return Tree.from_parents(parents)


def all_ordered_shapes(max_vertices: int, min_vertices: int = 1) -> Iterator[Tree]:
    """Every ordered unlabeled tree with ``min_vertices``..``max_vertices``
    vertices, exactly once (Catalan-many per size)."""
    for n in range(min_vertices, max_vertices + 1):
        for code in _shape_codes(n):
            yield _code_to_tree(code)
