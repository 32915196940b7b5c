import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagkernel import (
    Tree,
    TreeMode,
    TreeParseError,
    canonical_signature,
    count_occurrences,
    join_forest,
    parse_tree,
    random_tree,
    serialize_tree,
    subtree_signatures,
)
from dagkernel.generate import all_ordered_shapes

from conftest import (
    FIG1_T0,
    FIG1_T1,
    MODES,
    ORDERED,
    UNORDERED,
    brute_isomorphic,
    reverse_children,
)


def chain(n, label=None):
    t = Tree.leaf(label)
    for _ in range(n - 1):
        t = Tree.node([t], label=label)
    return t


class TestBasics:
    def test_single_vertex_height(self):
        assert Tree.leaf().height() == 0

    def test_fig1_t0_height(self):
        assert parse_tree(FIG1_T0).height() == 3

    def test_chain_height(self):
        assert chain(6).height() == 5

    def test_height_invalid_vertex(self):
        with pytest.raises(ValueError):
            Tree.leaf().height(3)

    def test_outdegree(self):
        assert Tree.leaf().outdegree() == 0
        assert parse_tree(FIG1_T1).outdegree() == 4
        assert chain(5).outdegree() == 1

    def test_leaves(self):
        assert Tree.leaf().leaves() == (0,)
        assert len(parse_tree(FIG1_T0).leaves()) == 6
        assert len(parse_tree(FIG1_T1).leaves()) == 6

    def test_empty_tree_rejected(self):
        with pytest.raises(ValueError):
            Tree([], [], [])

    def test_two_roots_rejected(self):
        with pytest.raises(ValueError):
            Tree([None, None], [[], []], None)

    def test_cycle_rejected(self):
        with pytest.raises(ValueError):
            Tree([1, 0], [[1], [0]], None)

    def test_duplicate_children_rejected(self):
        with pytest.raises(ValueError):
            Tree([None, 0], [[1, 1], []], None)

    def test_heights_are_monotone_to_root(self):
        rng = random.Random(1)
        for _ in range(50):
            t = random_tree(rng, rng.randint(1, 30))
            assert all(t.height() >= t.height(v) for v in t.vertices())
            assert (t.height() == 0) == (len(t) == 1)


class TestSubtree:
    def test_subtree_at_root_is_tree(self):
        t = parse_tree(FIG1_T0)
        assert t.subtree(0) == t

    def test_subtree_at_leaf(self):
        t = parse_tree(FIG1_T0)
        leaf = t.leaves()[0]
        assert len(t.subtree(leaf)) == 1

    def test_fig1_three_child_vertex_is_star(self):
        # The rightmost internal vertex of the first figure tree: 3 leaf kids.
        t = parse_tree(FIG1_T0)
        (v,) = [
            u
            for u in t.vertices()
            if len(t.children(u)) == 3 and all(t.is_leaf(c) for c in t.children(u))
        ]
        star = t.subtree(v)
        assert len(star) == 4 and star.height() == 1

    def test_subtree_invalid(self):
        with pytest.raises(ValueError):
            Tree.leaf().subtree(2)

    def test_descendants_contiguous(self):
        rng = random.Random(2)
        for _ in range(20):
            t = random_tree(rng, 20)
            for v in t.vertices():
                block = t.descendants(v)
                assert all(v in (u, *t.ancestors(u)) for u in block)

    def test_replace_subtree(self):
        t = parse_tree("((()())())")
        repl = parse_tree("(((())))")
        out = t.replace_subtree(1, repl)
        assert len(out) == len(t) - 3 + len(repl)
        assert out.replace_subtree(0, t) == t


class TestSignatures:
    def test_single_vertices_equal(self):
        assert canonical_signature(Tree.leaf(), UNORDERED) == canonical_signature(
            Tree.leaf(), UNORDERED
        )

    def test_reversal_invariant_unordered(self):
        rng = random.Random(3)
        for _ in range(30):
            t = random_tree(rng, rng.randint(1, 25))
            assert canonical_signature(t, UNORDERED) == canonical_signature(
                reverse_children(t), UNORDERED
            )

    def test_reversal_matches_oracle_ordered(self):
        # Ordered signatures must distinguish mirror images exactly when the
        # brute-force oracle does, for every shape with <= 5 vertices.
        for t in all_ordered_shapes(5):
            r = reverse_children(t)
            assert (canonical_signature(t, ORDERED) == canonical_signature(r, ORDERED)) == (
                brute_isomorphic(t, r, ORDERED)
            )

    @pytest.mark.parametrize("mode", MODES[:2], ids=str)
    def test_exhaustive_pairs_against_oracle(self, mode):
        shapes = list(all_ordered_shapes(6))
        sigs = [canonical_signature(t, mode) for t in shapes]
        for i, t1 in enumerate(shapes):
            for j, t2 in enumerate(shapes):
                assert (sigs[i] == sigs[j]) == brute_isomorphic(t1, t2, mode)

    @pytest.mark.parametrize("mode", MODES, ids=str)
    def test_random_pairs_against_oracle(self, mode):
        rng = random.Random(hash(str(mode)) & 0xFFFF)
        labels = "ab" if mode.labeled else None
        for _ in range(250):
            n = rng.randint(1, 30)
            t1 = random_tree(rng, n, labels)
            # Half the pairs share the shape so matches actually happen.
            if rng.random() < 0.5:
                t2 = reverse_children(t1)
            else:
                t2 = random_tree(rng, rng.randint(1, 30), labels)
            assert (
                canonical_signature(t1, mode) == canonical_signature(t2, mode)
            ) == brute_isomorphic(t1, t2, mode)

    def test_label_participates(self):
        labeled = TreeMode(ordered=False, labeled=True)
        assert canonical_signature(Tree.leaf("a"), labeled) != canonical_signature(
            Tree.leaf("b"), labeled
        )
        unlabeled = UNORDERED
        assert canonical_signature(Tree.leaf("a"), unlabeled) == canonical_signature(
            Tree.leaf("b"), unlabeled
        )


class TestCountOccurrences:
    def test_leaf_count(self):
        t = parse_tree(FIG1_T0)
        assert count_occurrences(Tree.leaf(), t, UNORDERED) == 6

    def test_whole_tree_once(self):
        t = parse_tree(FIG1_T0)
        assert count_occurrences(t, t, UNORDERED) == 1

    def test_chain_in_chain(self):
        assert count_occurrences(chain(2), chain(3), UNORDERED) == 1

    def test_leaf_count_every_tree(self):
        rng = random.Random(4)
        for _ in range(30):
            t = random_tree(rng, rng.randint(1, 25))
            assert count_occurrences(Tree.leaf(), t, UNORDERED) == len(t.leaves())


class TestBracketFormat:
    def test_single_vertex(self):
        assert len(parse_tree("()")) == 1

    def test_two_leaves(self):
        t = parse_tree("(()())")
        assert len(t) == 3 and len(t.children(0)) == 2

    def test_labels(self):
        t = parse_tree("a(b()c())")
        assert t.label(0) == "a"
        assert [t.label(c) for c in t.children(0)] == ["b", "c"]

    def test_whitespace_between_siblings(self):
        assert parse_tree("( ()  () )") == parse_tree("(()())")

    def test_serialize_parse_roundtrip_fixed(self):
        for text in ["()", "(()())", "a(b()c(d()))", FIG1_T0, FIG1_T1]:
            assert serialize_tree(parse_tree(text)) == text.replace(" ", "")

    @settings(max_examples=120, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 40), lab=st.booleans())
    def test_roundtrip_random(self, seed, n, lab):
        t = random_tree(random.Random(seed), n, "xyz" if lab else None)
        assert parse_tree(serialize_tree(t)) == t

    @pytest.mark.parametrize(
        "bad,pos",
        [
            ("", 0),
            ("(", 1),
            (")", 0),
            ("(()", 3),
            ("())", 2),
            ("a", 1),
            ("()x()", 2),
            ("(\x00())", 1),
        ],
    )
    def test_parse_errors_with_position(self, bad, pos):
        with pytest.raises(TreeParseError) as err:
            parse_tree(bad)
        assert err.value.position == pos

    def test_unlabeled_mode_rejects_labels(self):
        with pytest.raises(TreeParseError):
            parse_tree("a()", UNORDERED)
        assert parse_tree("a()", TreeMode(ordered=False, labeled=True)).label(0) == "a"


class TestBuilders:
    def test_node_parent_arrays_consistent(self):
        t = Tree.node([Tree.node([Tree.leaf()]), Tree.leaf()], label="r")
        assert t.parent(0) is None
        for v in range(1, len(t)):
            assert t.parent(v) is not None
            assert v in t.children(t.parent(v))
        # The parent arrays feed subtree extraction; cross-check both paths.
        assert t == parse_tree(serialize_tree(t))
        assert len(t.subtree(1)) == 2

    def test_from_parents(self):
        t = Tree.from_parents([None, 0, 0, 1])
        assert t.children(0) == (1, 3) or len(t.children(0)) == 2


class TestForest:
    def test_join_forest(self):
        t = join_forest([Tree.leaf(), chain(2)])
        assert len(t) == 4 and len(t.children(0)) == 2

    def test_join_empty(self):
        with pytest.raises(ValueError):
            join_forest([])


def test_subtree_signature_consistency():
    # subtree_signatures must agree with signatures of extracted subtrees.
    rng = random.Random(5)
    for mode in MODES:
        t = random_tree(rng, 20, "ab" if mode.labeled else None)
        sigs = subtree_signatures(t, mode)
        for v in t.vertices():
            assert sigs[v] == canonical_signature(t.subtree(v), mode)
