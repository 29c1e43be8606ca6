from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from topdowndt import tree as treemod
from topdowndt.boolfn import conjunction, derived_rng, is_monotone, majority, random_monotone
from topdowndt.tree import (
    DecisionTree,
    Internal,
    Leaf,
    PartialTree,
    chain_tree,
    complete,
    distance,
    evaluate,
    from_json,
    label_leaves,
    leaves,
    path_of,
    random_monotone_tree,
    size,
    split,
    to_boolfunc,
    to_json,
)


def grow_by_splits(spec):
    """Build a partial tree from (leaf_id, coord) pairs."""
    t = PartialTree.empty()
    for leaf_id, coord in spec:
        t = split(t, leaf_id, coord)
    return t


class TestSplit:
    def test_leaf_ids_are_preorder(self):
        t = grow_by_splits([(0, 1), (0, 2), (2, 3)])
        infos = leaves(t)
        assert [info.leaf_id for info in infos] == [0, 1, 2, 3]
        # hi child comes before lo child
        paths = [tuple((s.coord, s.side) for s in info.path) for info in infos]
        assert paths[0] == ((1, 1), (2, 1))
        assert paths[1] == ((1, 1), (2, -1))
        assert paths[2] == ((1, -1), (3, 1))
        assert paths[3] == ((1, -1), (3, -1))

    def test_split_is_persistent(self):
        t1 = grow_by_splits([(0, 1)])
        t2 = split(t1, 0, 2)
        assert size(t1) == 2 and size(t2) == 3

    def test_no_repeat_on_path(self):
        t = grow_by_splits([(0, 1)])
        with pytest.raises(ValueError):
            split(t, 0, 1)

    def test_same_coord_on_disjoint_paths_allowed(self):
        t = grow_by_splits([(0, 1), (0, 2), (2, 2)])
        assert size(t) == 4

    def test_real_mode_may_requery(self):
        t = split(PartialTree.empty(), 0, 1, theta=0.5)
        t = split(t, 0, 1, theta=0.25)
        assert size(t) == 3

    def test_bad_leaf_id(self):
        with pytest.raises(ValueError):
            split(PartialTree.empty(), 3, 1)


class TestEvaluate:
    def test_binary(self):
        t = DecisionTree(Internal(2, None, Leaf(1), Leaf(0)))
        assert evaluate(t, (1, 1)) == 1
        assert evaluate(t, (1, -1)) == 0

    def test_real_threshold_is_geq(self):
        t = DecisionTree(Internal(1, 0.5, Leaf(1), Leaf(0)))
        assert evaluate(t, (0.5,)) == 1
        assert evaluate(t, (0.49,)) == 0

    def test_path_of_agrees_with_evaluate(self):
        t = chain_tree([(1, 2), (3,)])
        for xbits in range(8):
            x = tuple(1 if (xbits >> i) & 1 else -1 for i in range(3))
            info = path_of(t, x)
            assert info.node.label == evaluate(t, x)


class TestCompleteAndDistance:
    def test_completion_labels_majority(self):
        f = conjunction(2)
        t = grow_by_splits([(0, 1)])
        done = complete(t, f)
        # hi leaf sees E = 1/2, which ties and rounds to 1; lo leaf is constant 0
        assert [i.node.label for i in leaves(done)] == [1, 0]

    def test_tie_rounds_to_one(self):
        f = majority(3)
        done = complete(PartialTree.empty(), f)
        assert leaves(done)[0].node.label == 1

    def test_distance_anchor(self):
        f = conjunction(2)
        best2 = DecisionTree(Internal(1, None, Leaf(1), Leaf(0)))
        assert distance(best2, f) == Fraction(1, 4)
        assert distance(complete(PartialTree.empty(), f), f) == Fraction(1, 4)

    def test_partial_distance_is_completion_distance(self):
        f = random_monotone(5, seed=2)
        t = grow_by_splits([(0, 1), (0, 2)])
        assert distance(t, f) == distance(complete(t, f), f)

    @given(st.integers(0, 60))
    def test_split_never_increases_distance(self, seed):
        f = random_monotone(5, seed=seed)
        rng = derived_rng(seed, "split-walk")
        t = PartialTree.empty()
        prev = distance(t, f)
        for _ in range(6):
            infos = leaves(t)
            candidates = [
                (i.leaf_id, c)
                for i in infos
                for c in range(1, 6)
                if c not in {s.coord for s in i.path}
            ]
            if not candidates:
                break
            leaf_id, coord = candidates[rng.randrange(len(candidates))]
            t = split(t, leaf_id, coord)
            cur = distance(t, f)
            assert cur <= prev
            prev = cur

    def test_real_tree_distance_refused(self):
        t = DecisionTree(Internal(1, 0.5, Leaf(1), Leaf(0)))
        with pytest.raises(ValueError):
            distance(t, conjunction(2))


class TestToBoolFunc:
    @given(st.integers(0, 40))
    def test_roundtrip_through_evaluation(self, seed):
        t = random_monotone_tree(5, 12, seed)
        f = to_boolfunc(t, 5)
        for idx in range(32):
            x = tuple(1 if (idx >> i) & 1 else -1 for i in range(5))
            assert ((f.table >> idx) & 1) == evaluate(t, x)


class TestChainTree:
    def test_matches_dnf_exhaustively(self):
        from topdowndt.boolfn import from_dnf

        terms = [(1, 2), (2, 4), (5,)]
        t = chain_tree(terms)
        f = from_dnf(5, terms)
        assert to_boolfunc(t, 5).table == f.table

    def test_shared_coordinates_pruned(self):
        # second term repeats coord 1; the chain must not re-query it
        t = chain_tree([(1, 2), (1, 3)])

        def no_repeats(node, seen):
            if isinstance(node, Leaf):
                return True
            return (
                node.coord not in seen
                and no_repeats(node.hi, seen | {node.coord})
                and no_repeats(node.lo, seen | {node.coord})
            )

        assert no_repeats(t.root, set())


class TestRandomMonotoneTree:
    @given(st.integers(0, 30))
    def test_size_and_monotonicity(self, seed):
        t = random_monotone_tree(8, 16, seed)
        assert size(t) <= 16
        f = to_boolfunc(t, 8)
        assert is_monotone(f)

    def test_deterministic(self):
        a = random_monotone_tree(8, 16, 7)
        b = random_monotone_tree(8, 16, 7)
        assert to_json(a) == to_json(b)


class TestLabelLeaves:
    def test_labels_in_preorder(self):
        t = grow_by_splits([(0, 1), (1, 2)])
        done = label_leaves(t, [1, 0, 1])
        assert [i.node.label for i in leaves(done)] == [1, 0, 1]

    def test_wrong_count_rejected(self):
        t = grow_by_splits([(0, 1)])
        with pytest.raises(ValueError):
            label_leaves(t, [1])


class TestSerialization:
    def test_binary_roundtrip(self):
        t = complete(grow_by_splits([(0, 1), (0, 2)]), majority(3))
        back = from_json(to_json(t))
        assert isinstance(back, DecisionTree)
        assert to_json(back) == to_json(t)

    def test_partial_roundtrip(self):
        t = grow_by_splits([(0, 1), (1, 3)])
        back = from_json(to_json(t))
        assert isinstance(back, PartialTree)
        assert to_json(back) == to_json(t)

    def test_real_roundtrip(self):
        t = DecisionTree(Internal(1, 0.375, Leaf(1), Internal(1, 0.125, Leaf(0), Leaf(1))))
        back = from_json(to_json(t))
        assert back.is_real
        assert to_json(back) == to_json(t)

    def test_mixed_labels_rejected(self):
        with pytest.raises(ValueError):
            from_json({"q": 1, "hi": {"label": 1}, "lo": {"label": None}})
