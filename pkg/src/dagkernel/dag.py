"""Lossless DAG compression of trees and forests.

A tree is compressed by merging vertices whose subtrees are isomorphic
(hash-consing): the result is a directed acyclic graph with one vertex per
subtree isomorphism class.  In ordered mode the outgoing edges of a vertex
form an ordered list (repetitions allowed); in unordered mode they form a
set of (child, multiplicity) pairs.  Compression is invertible: `expand`
rebuilds a tree isomorphic to the input.

Forests are compressed jointly: every member DAG is placed under an
artificial root, and `recompress` merges equal-structure vertices bottom-up,
height by height, stopping at the first height where nothing merges.  The
artificial root records which child is which dataset member (`member_roots`),
which downstream annotation relies on.

Vertex ids of a compacted DAG are sorted by (height, discovery), so every
edge goes from a higher id to a strictly lower one and the unique maximal id
is the root.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .trees import Tree, TreeMode

__all__ = [
    "Dag",
    "RecompressTrace",
    "add_to_forest",
    "build_superdag",
    "expand",
    "format_dag",
    "recompress",
    "recompress_traced",
    "reduce_forest",
    "reduce_tree",
]

# Children encodings: ordered mode stores a tuple of child ids (order and
# repetitions significant); unordered mode stores a tuple of (child, mult)
# pairs with distinct children, sorted by child id.
OrderedChildren = tuple[int, ...]
UnorderedChildren = tuple[tuple[int, int], ...]


class Dag:
    """Immutable compressed DAG; see module docstring for the encoding."""

    __slots__ = ("mode", "_heights", "_labels", "_children", "_roots", "_member_roots")

    def __init__(
        self,
        mode: TreeMode,
        heights: Sequence[int],
        labels: Sequence[Optional[str]],
        children: Sequence[tuple],
        roots: Sequence[int],
        member_roots: Optional[Sequence[int]] = None,
    ):
        if not (len(heights) == len(labels) == len(children)):
            raise ValueError("heights, labels and children must have equal length")
        if len(roots) != 1:
            raise ValueError("a Dag has exactly one root vertex")
        self.mode = mode
        self._heights = tuple(heights)
        self._labels = tuple(labels)
        self._children = tuple(children)
        self._roots = tuple(roots)
        self._member_roots = None if member_roots is None else tuple(member_roots)
        self._validate()

    def _validate(self) -> None:
        n = len(self._heights)
        for v in range(n):
            h = self._heights[v]
            kids = self.edges(v)
            if not kids:
                if h != 0:
                    raise ValueError(f"childless vertex {v} must have height 0")
                continue
            if h != 1 + max(self._heights[c] for c, _ in kids):
                raise ValueError(f"vertex {v} has inconsistent height")
            for c, mult in kids:
                if not 0 <= c < n:
                    raise ValueError(f"vertex {v} references invalid child {c}")
                if self._heights[c] >= h:
                    raise ValueError(f"edge {v}->{c} does not decrease height")
                if mult < 1:
                    raise ValueError("edge multiplicity must be >= 1")
        root = self._roots[0]
        if not 0 <= root < n:
            raise ValueError("invalid root id")
        if self._member_roots is not None:
            for r in self._member_roots:
                if not 0 <= r < n:
                    raise ValueError("invalid member root id")

    # -- accessors -------------------------------------------------------------

    @property
    def roots(self) -> tuple[int, ...]:
        return self._roots

    @property
    def root(self) -> int:
        return self._roots[0]

    @property
    def member_roots(self) -> Optional[tuple[int, ...]]:
        """Dataset member -> DAG vertex of its root; only on forest DAGs."""
        return self._member_roots

    @property
    def is_forest(self) -> bool:
        return self._member_roots is not None

    @property
    def n_members(self) -> int:
        if self._member_roots is None:
            raise ValueError("not a forest DAG")
        return len(self._member_roots)

    def __len__(self) -> int:
        return len(self._heights)

    @property
    def n_vertices(self) -> int:
        return len(self._heights)

    def height(self, v: Optional[int] = None) -> int:
        if v is None:
            v = self.root
        return self._heights[v]

    def heights(self) -> tuple[int, ...]:
        return self._heights

    def label(self, v: int) -> Optional[str]:
        return self._labels[v]

    def children_struct(self, v: int) -> tuple:
        """The raw children encoding of ``v`` (mode dependent)."""
        return self._children[v]

    def edges(self, v: int):
        """Outgoing edges as (child, multiplicity) pairs.

        Ordered mode yields one pair per edge in order (multiplicity 1);
        unordered mode yields the stored multiplicity pairs.
        """
        if self.mode.ordered:
            return tuple((c, 1) for c in self._children[v])
        return self._children[v]

    def aggregated_children(self, v: int) -> tuple[tuple[int, int], ...]:
        """Distinct children of ``v`` with total edge multiplicities."""
        if not self.mode.ordered:
            return self._children[v]
        counts: dict[int, int] = {}
        for c in self._children[v]:
            counts[c] = counts.get(c, 0) + 1
        return tuple(sorted(counts.items()))

    def n_edges(self) -> int:
        return sum(len(self._children[v]) for v in range(len(self)))

    def is_reduced(self) -> bool:
        """True iff no two vertices share (label, children-structure)."""
        seen = set()
        for v in range(len(self)):
            key = (self._labels[v], self._children[v])
            if key in seen:
                return False
            seen.add(key)
        return True

    def __repr__(self) -> str:
        kind = "forest " if self.is_forest else ""
        return f"Dag({kind}{self.mode}, {len(self)} vertices, height {self.height()})"


# -- compression ----------------------------------------------------------------


def reduce_tree(tree: Tree, mode: TreeMode) -> Dag:
    """Compress a tree into its reduced DAG: one vertex per subtree class."""
    n = len(tree)
    class_of = [0] * n
    key_to_id: dict[tuple, int] = {}
    heights: list[int] = []
    labels: list[Optional[str]] = []
    children: list[tuple] = []
    # Postorder so children classes exist before their parents.
    for v in range(n - 1, -1, -1):
        kid_classes = [class_of[c] for c in tree.children(v)]
        struct: tuple
        if mode.ordered:
            struct = tuple(kid_classes)
        else:
            counts: dict[int, int] = {}
            for c in kid_classes:
                counts[c] = counts.get(c, 0) + 1
            struct = tuple(sorted(counts.items()))
        label = tree.label(v) if mode.labeled else None
        key = (label, struct)
        cid = key_to_id.get(key)
        if cid is None:
            cid = len(heights)
            key_to_id[key] = cid
            heights.append(tree.height(v))
            labels.append(label)
            children.append(struct)
        class_of[v] = cid
    return _compact(mode, heights, labels, children, class_of[0], None)


def expand(dag: Dag, v: Optional[int] = None) -> Tree:
    """Rebuild a tree from a single-rooted DAG (inverse of :func:`reduce_tree`).

    ``v`` expands the sub-DAG rooted at a particular vertex.  Unordered
    (child, mult) pairs expand to ``mult`` adjacent copies, children sorted by
    class id.
    """
    if v is None:
        if dag.is_forest:
            raise ValueError("expanding a forest DAG needs an explicit vertex")
        v = dag.root
    parents: list[Optional[int]] = []
    labels: list[Optional[str]] = []
    stack: list[tuple[int, Optional[int]]] = [(v, None)]
    while stack:
        node, parent = stack.pop()
        tid = len(parents)
        parents.append(parent)
        labels.append(dag.label(node))
        for child, mult in reversed(dag.edges(node)):
            for _ in range(mult):
                stack.append((child, tid))
    # Stack order already yields preorder with children left-to-right.
    return Tree.from_parents(parents, labels)


def build_superdag(dags: Sequence[Dag]) -> Dag:
    """Place member DAGs, in order, under one artificial root (no merging yet)."""
    if not dags:
        raise ValueError("cannot build a super-DAG from an empty forest")
    mode = dags[0].mode
    for d in dags:
        if d.mode != mode:
            raise ValueError("all forest members must share one tree mode")
    heights: list[int] = []
    labels: list[Optional[str]] = []
    children: list[tuple] = []
    member_roots: list[int] = []
    for d in dags:
        offset = len(heights)
        heights.extend(d.heights())
        labels.extend(d.label(v) for v in range(len(d)))
        if mode.ordered:
            children.extend(
                tuple(c + offset for c in d.children_struct(v)) for v in range(len(d))
            )
        else:
            children.extend(
                tuple((c + offset, m) for c, m in d.children_struct(v))
                for v in range(len(d))
            )
        member_roots.append(d.root + offset)
    root = len(heights)
    heights.append(1 + max(heights[r] for r in member_roots))
    labels.append(None)
    children.append(_root_struct(mode, member_roots))
    return Dag(mode, heights, labels, children, (root,), member_roots)


def _root_struct(mode: TreeMode, member_roots: Sequence[int]) -> tuple:
    if mode.ordered:
        return tuple(member_roots)
    counts: dict[int, int] = {}
    for r in member_roots:
        counts[r] = counts.get(r, 0) + 1
    return tuple(sorted(counts.items()))


@dataclass
class RecompressTrace:
    """What a recompression run did: merges per height, where it stopped, and
    how many (vertex, child) inspections it spent (complexity accounting)."""

    merged_by_height: dict[int, int] = field(default_factory=dict)
    stop_height: Optional[int] = None
    inspections: int = 0


def recompress(superdag: Dag) -> Dag:
    """Merge equal-structure vertices of a super-DAG bottom-up (see module doc)."""
    dag, _ = recompress_traced(superdag)
    return dag


def recompress_traced(superdag: Dag) -> tuple[Dag, RecompressTrace]:
    if not superdag.is_forest:
        raise ValueError("recompress expects a forest super-DAG")
    mode = superdag.mode
    n = len(superdag)
    heights = list(superdag.heights())
    labels = list(superdag._labels)
    children: list[tuple] = list(superdag._children)
    member_roots = list(superdag.member_roots or ())
    root = superdag.root
    alive = [True] * n
    trace = RecompressTrace()

    by_height: dict[int, list[int]] = {}
    for v in range(n):
        by_height.setdefault(heights[v], []).append(v)
        trace.inspections += 1
    top = heights[root]

    for h in range(top):
        groups: dict[tuple, list[int]] = {}
        for v in by_height.get(h, ()):
            struct = children[v]
            trace.inspections += _key_cost(mode, len(struct))
            groups.setdefault((labels[v], struct), []).append(v)
        remap: dict[int, int] = {}
        merged = 0
        for members in groups.values():
            trace.inspections += len(members)
            if len(members) < 2:
                continue
            rep = members[0]  # smallest id: deterministic representative
            for other in members[1:]:
                remap[other] = rep
                alive[other] = False
                merged += 1
        if not remap:
            trace.stop_height = h
            break
        trace.merged_by_height[h] = merged
        # Rewire every higher vertex; duplicate unordered edges collapse with
        # summed multiplicities, ordered repetitions stay in place.
        for hh in range(h + 1, top + 1):
            for v in by_height.get(hh, ()):
                if not alive[v]:
                    continue
                struct = children[v]
                trace.inspections += len(struct)
                if mode.ordered:
                    if any(c in remap for c in struct):
                        children[v] = tuple(remap.get(c, c) for c in struct)
                else:
                    if any(c in remap for c, _ in struct):
                        counts: dict[int, int] = {}
                        for c, m in struct:
                            c = remap.get(c, c)
                            counts[c] = counts.get(c, 0) + m
                        children[v] = tuple(sorted(counts.items()))
        by_height[h] = [v for v in by_height[h] if alive[v]]
        member_roots = [remap.get(r, r) for r in member_roots]

    order = [v for v in range(n) if alive[v]]
    dag = _compact_alive(mode, heights, labels, children, order, root, member_roots)
    return dag, trace


def _key_cost(mode: TreeMode, length: int) -> int:
    # Inspections charged for building one merge key: copying the children,
    # plus a comparison budget for sorting them in unordered mode.
    if mode.ordered or length < 2:
        return length
    return length + length * max(1, (length - 1).bit_length())


def add_to_forest(forest: Dag, newcomer: Dag) -> Dag:
    """Add one reduced tree DAG to an already recompressed forest DAG.

    Equivalent to recompressing the extended forest from scratch, but runs a
    single recompression pass over the spliced DAG.
    """
    if not forest.is_forest:
        raise ValueError("first argument must be a forest DAG with an artificial root")
    if newcomer.is_forest:
        raise ValueError("newcomer must be a single-tree DAG")
    if forest.mode != newcomer.mode:
        raise ValueError("tree mode mismatch between forest and newcomer")
    mode = forest.mode
    old_root = forest.root
    heights = list(forest.heights())
    labels = list(forest._labels)
    children: list[tuple] = list(forest._children)
    offset = len(heights)
    heights.extend(newcomer.heights())
    labels.extend(newcomer.label(v) for v in range(len(newcomer)))
    if mode.ordered:
        children.extend(
            tuple(c + offset for c in newcomer.children_struct(v))
            for v in range(len(newcomer))
        )
    else:
        children.extend(
            tuple((c + offset, m) for c, m in newcomer.children_struct(v))
            for v in range(len(newcomer))
        )
    member_roots = list(forest.member_roots or ()) + [newcomer.root + offset]
    # Rebuild the artificial root as the rightmost parent of the newcomer.
    keep = [v for v in range(len(heights)) if v != old_root]
    new_id = {old: new for new, old in enumerate(keep)}
    heights2 = [heights[v] for v in keep]
    labels2 = [labels[v] for v in keep]
    children2: list[tuple] = []
    for v in keep:
        if mode.ordered:
            children2.append(tuple(new_id[c] for c in children[v]))
        else:
            children2.append(tuple((new_id[c], m) for c, m in children[v]))
    member_roots2 = [new_id[r] for r in member_roots]
    root = len(heights2)
    heights2.append(1 + max(heights2[r] for r in member_roots2))
    labels2.append(None)
    children2.append(_root_struct(mode, member_roots2))
    spliced = Dag(mode, heights2, labels2, children2, (root,), member_roots2)
    return recompress(spliced)


def reduce_forest(trees: Sequence[Tree], mode: TreeMode) -> Dag:
    """Reduce every tree, join under an artificial root, and recompress."""
    return recompress(build_superdag([reduce_tree(t, mode) for t in trees]))


# -- compaction ------------------------------------------------------------------


def _compact(mode, heights, labels, children, root, member_roots) -> Dag:
    order = list(range(len(heights)))
    return _compact_alive(mode, heights, labels, children, order, root, member_roots)


def _compact_alive(mode, heights, labels, children, order, root, member_roots) -> Dag:
    order = sorted(order, key=lambda v: (heights[v], v))
    new_id = {old: new for new, old in enumerate(order)}
    out_children: list[tuple] = []
    for old in order:
        if mode.ordered:
            out_children.append(tuple(new_id[c] for c in children[old]))
        else:
            out_children.append(
                tuple(sorted((new_id[c], m) for c, m in children[old]))
            )
    return Dag(
        mode,
        [heights[old] for old in order],
        [labels[old] for old in order],
        out_children,
        (new_id[root],),
        None if member_roots is None else [new_id[r] for r in member_roots],
    )


# -- text format -------------------------------------------------------------------


def format_dag(dag: Dag) -> str:
    """One vertex per line: ``id height label? -> (child,mult)*``, sorted by
    (height, id).  Ordered mode writes one pair per edge in order."""
    lines = []
    for v in range(len(dag)):
        label = dag.label(v)
        head = f"{v} {dag.height(v)}" + (f" {label}" if label is not None else "")
        pairs = "".join(f"({c},{m})" for c, m in dag.edges(v))
        lines.append(f"{head} -> {pairs}")
    return "\n".join(lines) + "\n"
