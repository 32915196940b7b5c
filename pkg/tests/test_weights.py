import io
import math
import random

import numpy as np
import pytest

from dagkernel import (
    AnnotatedDag,
    ClassProfile,
    ShapingFn,
    Tree,
    class_profile,
    delta,
    discriminance_weights,
    exponential_weights,
    export_weight_table,
    parse_tree,
    random_tree,
    reduce_forest,
    reduce_tree,
    smoothstep,
    weight_distribution_by_height,
)
from dagkernel.weights import _delta_array

from conftest import FIG3_TREE, UNORDERED


class TestExponential:
    def test_leaf_weight_is_one(self):
        d = reduce_tree(parse_tree(FIG3_TREE), UNORDERED)
        for lam in (0.0, 0.3, 1.0):
            w = exponential_weights(d, lam)
            assert w[0] == 1.0  # height-0 vertex

    def test_lambda_zero_keeps_leaves_only(self):
        d = reduce_tree(parse_tree(FIG3_TREE), UNORDERED)
        w = exponential_weights(d, 0.0)
        assert w[0] == 1.0
        assert all(w[v] == 0.0 for v in range(len(d)) if d.height(v) > 0)

    def test_direct_powers(self):
        d = reduce_tree(parse_tree(FIG3_TREE), UNORDERED)
        w = exponential_weights(d, 0.5)
        for v in range(len(d)):
            assert w[v] == 0.5 ** d.height(v)

    def test_multiplicative_along_height(self):
        d = reduce_tree(parse_tree(FIG3_TREE), UNORDERED)
        w = exponential_weights(d, 0.7)
        by_height = {d.height(v): w[v] for v in range(len(d))}
        for h in range(1, d.height() + 1):
            assert by_height[h] == pytest.approx(0.7 * by_height[h - 1])

    def test_out_of_range(self):
        d = reduce_tree(Tree.leaf(), UNORDERED)
        for bad in (-0.1, 1.5):
            with pytest.raises(ValueError):
                exponential_weights(d, bad)


class TestDelta:
    def test_at_corner(self):
        for k in range(3):
            rho = [0.0] * 3
            rho[k] = 1.0
            assert delta(rho, 3) == 0.0

    def test_all_ones_two_classes(self):
        assert delta([1.0, 1.0], 2) == 1.0

    def test_half_half(self):
        assert delta([0.5, 0.5], 2) == pytest.approx(math.sqrt(0.5), abs=1e-15)

    def test_all_zero_two_classes(self):
        assert delta([0.0, 0.0], 2) == 1.0

    def test_can_exceed_one(self):
        # Hypercube center: every corner is sqrt(K)/2 away.
        assert delta([0.5] * 5, 5) == pytest.approx(math.sqrt(5) / 2)
        assert delta([0.5] * 5, 5) > 1.0

    def test_permutation_invariance(self):
        rng = random.Random(31)
        for _ in range(200):
            k = rng.randint(2, 5)
            rho = [rng.random() for _ in range(k)]
            perm = list(range(k))
            rng.shuffle(perm)
            assert delta([rho[p] for p in perm], k) == pytest.approx(
                delta(rho, k), abs=1e-12
            )

    def test_matches_explicit_enumeration(self):
        rng = random.Random(32)
        for _ in range(100):
            k = rng.randint(2, 4)
            rho = np.array([rng.random() for _ in range(k)])
            cands = []
            for j in range(k):
                e = np.zeros(k)
                e[j] = 1.0
                cands.append(np.linalg.norm(rho - e))
                cands.append(np.linalg.norm(rho - (1.0 - e)))
            assert delta(rho, k) == pytest.approx(min(cands), abs=1e-12)


class TestShaping:
    def test_smoothstep_values(self):
        assert smoothstep(1.0) == 1.0
        assert smoothstep(0.5) == 0.5
        assert smoothstep(-0.2) == 0.0

    def test_kinds(self):
        assert ShapingFn("identity")(0.25) == 0.25
        assert ShapingFn("smoothstep")(0.25) == pytest.approx(3 * 0.0625 - 2 * 0.015625)
        assert ShapingFn("smoothstep2")(0.5) == pytest.approx(smoothstep(0.5))
        thr = ShapingFn("threshold", eps=0.3)
        assert thr(0.3) == 0.0 and thr(0.31) == 1.0 and thr(1.0) == 1.0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            ShapingFn("smoothstep")(1.1)
        with pytest.raises(ValueError):
            ShapingFn("nope")

    def test_endpoint_contract(self):
        for fn in (
            ShapingFn("identity"),
            ShapingFn("smoothstep"),
            ShapingFn("smoothstep2"),
            ShapingFn("threshold", eps=0.3),
        ):
            assert fn(1.0) == 1.0
            assert fn(0.0) == 0.0
            assert fn(-3.0) == 0.0

    def test_apply_matches_scalar(self):
        xs = np.linspace(-1.5, 1.0, 23)
        for kind in ("identity", "smoothstep", "smoothstep2", "threshold"):
            fn = ShapingFn(kind)
            np.testing.assert_allclose(fn.apply(xs), [fn(float(x)) for x in xs])

    def test_monotone(self):
        xs = np.linspace(-1.0, 1.0, 101)
        for kind in ("identity", "smoothstep", "smoothstep2", "threshold"):
            ys = ShapingFn(kind).apply(xs)
            assert np.all(np.diff(ys) >= -1e-15)

    def test_parse_aliases(self):
        assert ShapingFn.parse("smooth").kind == "smoothstep"
        assert ShapingFn.parse("thresh", 0.2).eps == 0.2
        with pytest.raises(ValueError):
            ShapingFn.parse("cubic")


def two_class_dataset(rng, n_per_class=6):
    trees, classes = [], []
    for cls in (0, 1):
        base = random_tree(rng, 12, "ab")
        for _ in range(n_per_class):
            trees.append(base)
            classes.append(cls)
    return trees, classes


class TestClassProfile:
    def make(self, trees, mode=UNORDERED):
        return AnnotatedDag(reduce_forest(trees, mode))

    def test_leaf_profile_all_ones(self):
        rng = random.Random(33)
        trees = [random_tree(rng, rng.randint(2, 12)) for _ in range(6)]
        ann = self.make(trees)
        classes = [0, 0, 0, 1, 1, 1]
        profile = class_profile(ann, classes, range(6))
        (leaf_v,) = [v for v in range(len(ann.dag)) if ann.dag.height(v) == 0]
        np.testing.assert_array_equal(profile.rho[leaf_v], [1.0, 1.0])
        assert profile.dist[leaf_v] == 1.0

    def test_unseen_vertex_zero_profile(self):
        rng = random.Random(34)
        trees = [random_tree(rng, rng.randint(2, 12)) for _ in range(6)]
        ann = self.make(trees)
        classes = [0, 0, 0, 1, 1, 1]
        profile = class_profile(ann, classes, [0, 3])  # members 1,2,4,5 unseen
        seen_union = ann.origins[ann.dag.member_roots[1]]
        if 0 not in seen_union and 3 not in seen_union:
            v = ann.dag.member_roots[1]
            np.testing.assert_array_equal(profile.rho[v], [0.0, 0.0])

    def test_pure_vertex(self):
        t0 = parse_tree(FIG3_TREE)
        t1 = parse_tree("(()()()()())")
        ann = self.make([t0, t1])
        profile = class_profile(ann, [0, 1], [0, 1])
        r0 = ann.dag.member_roots[0]
        np.testing.assert_array_equal(profile.rho[r0], [1.0, 0.0])
        assert profile.dist[r0] == 0.0

    def test_empty_class_rejected(self):
        rng = random.Random(35)
        trees = [random_tree(rng, 8) for _ in range(4)]
        ann = self.make(trees)
        with pytest.raises(ValueError):
            class_profile(ann, [0, 0, 1, 1], [0, 1], n_classes=2)

    def test_missing_class_rejected(self):
        rng = random.Random(36)
        trees = [random_tree(rng, 8) for _ in range(3)]
        ann = self.make(trees)
        with pytest.raises(ValueError):
            class_profile(ann, [0, None, 1], [0, 1, 2])


class TestDiscriminance:
    def make_profile(self, rng):
        trees, classes = two_class_dataset(rng)
        ann = AnnotatedDag(reduce_forest(trees, UNORDERED))
        return ann, class_profile(ann, classes, range(len(trees)))

    def test_leaf_weight_zero(self):
        ann, profile = self.make_profile(random.Random(37))
        w = discriminance_weights(profile, ShapingFn("smoothstep"))
        for v in range(len(ann.dag)):
            if ann.dag.height(v) == 0:
                assert w[v] == 0.0

    def test_pure_vertex_weight_one(self):
        ann, profile = self.make_profile(random.Random(38))
        w = discriminance_weights(profile, ShapingFn("smoothstep"))
        pure = np.where(profile.dist == 0.0)[0]
        assert len(pure) > 0
        assert np.all(w[pure] == 1.0)

    def test_bounded(self):
        ann, profile = self.make_profile(random.Random(39))
        for kind in ("identity", "smoothstep", "smoothstep2", "threshold"):
            w = discriminance_weights(profile, ShapingFn(kind))
            assert np.all((0.0 <= w) & (w <= 1.0))

    def test_monotone_in_distance(self):
        ann, profile = self.make_profile(random.Random(40))
        w = discriminance_weights(profile, ShapingFn("smoothstep"))
        order = np.argsort(profile.dist)
        assert np.all(np.diff(w[order]) <= 1e-15)

    def test_nearest_corner_tie_rule(self):
        profile = ClassProfile(
            2,
            np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5], [1.0, 1.0]]),
            _delta_array(np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5], [1.0, 1.0]])),
            (1, 1),
        )
        assert profile.nearest_corner(0) == (0, True)
        # With two classes e_1 coincides with the complement corner of class
        # 0; the documented rule prefers the presence reading.
        assert profile.nearest_corner(1) == (1, True)
        # (0.5, 0.5) and (1, 1) tie all corners: presence of class 0.
        assert profile.nearest_corner(2) == (0, True)
        assert profile.nearest_corner(3) == (0, True)


class TestExports:
    def test_weight_table_csv(self):
        rng = random.Random(41)
        trees = [random_tree(rng, 10) for _ in range(4)]
        ann = AnnotatedDag(reduce_forest(trees, UNORDERED))
        profile = class_profile(ann, [0, 0, 1, 1], range(4))
        w = discriminance_weights(profile, ShapingFn("smoothstep"))
        buf = io.StringIO()
        export_weight_table(ann.dag, profile, w, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "vertex_id,height,delta,weight"
        assert len(lines) == len(ann.dag)  # header + all but artificial root

    def test_histogram_rows(self):
        rng = random.Random(42)
        trees = [random_tree(rng, 10) for _ in range(4)]
        ann = AnnotatedDag(reduce_forest(trees, UNORDERED))
        profile = class_profile(ann, [0, 0, 1, 1], range(4))
        w = discriminance_weights(profile, ShapingFn("smoothstep"))
        rows = weight_distribution_by_height(ann.dag, w)
        assert rows[0]["height"] == 0
        assert rows[0]["max"] == 0.0  # leaves occur in both classes
        heights = [r["height"] for r in rows]
        assert heights == sorted(set(heights))
        # The mean column must match an independent recomputation.
        for row in rows:
            vals = [
                float(w[v])
                for v in range(len(ann.dag))
                if v != ann.dag.root and ann.dag.height(v) == row["height"]
            ]
            assert row["mean"] == pytest.approx(sum(vals) / len(vals))

    def test_single_height_dag(self):
        ann = AnnotatedDag(reduce_forest([Tree.leaf(), Tree.leaf()], UNORDERED))
        rows = weight_distribution_by_height(ann.dag, np.ones(len(ann.dag)))
        assert len(rows) == 1
