"""Persistent binary decision trees over boolean or thresholded real features.

Two tree flavors share one node representation:

  * binary mode: internal nodes query 1[x_i = +1]; no coordinate repeats
    along a root-to-leaf path.
  * real mode: internal nodes query 1[x_i >= theta]; coordinates may repeat
    with different thresholds.

Trees are immutable values: split() returns a new tree sharing structure
with the old one, so a growth procedure can keep every intermediate tree
for the cost of the path it rewrote.  A PartialTree has unlabeled leaves;
complete() turns it into a DecisionTree by labeling each leaf with the
rounded conditional expectation of a reference function (ties round to 1).

Size always means number of leaves.  Leaf ids are DFS preorder positions
(hi child before lo child), recomputed on the current tree; they are the
deterministic tie-breaking order used by the growers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .boolfn import BoolFunc, Restriction, SubcubeView, derived_rng


@dataclass(frozen=True)
class Leaf:
    label: int | None = None

    def __post_init__(self):
        if self.label not in (None, 0, 1):
            raise ValueError(f"leaf label must be 0, 1, or None, got {self.label}")


@dataclass(frozen=True)
class Internal:
    coord: int
    theta: float | None
    hi: "Node"
    lo: "Node"

    def __post_init__(self):
        if self.coord < 1:
            raise ValueError(f"query coordinate must be >= 1, got {self.coord}")


Node = Union[Leaf, Internal]


@dataclass(frozen=True)
class PathStep:
    """One edge on a root-to-leaf path: which query, which side was taken."""

    coord: int
    theta: float | None
    side: int  # +1 for the hi branch, -1 for lo

    def __post_init__(self):
        if self.side not in (-1, 1):
            raise ValueError("side must be -1 or +1")


@dataclass(frozen=True)
class LeafInfo:
    leaf_id: int
    path: tuple[PathStep, ...]
    node: Leaf

    @property
    def depth(self) -> int:
        return len(self.path)

    def restriction(self) -> Restriction:
        """The subcube this leaf owns (binary mode only)."""
        for step in self.path:
            if step.theta is not None:
                raise ValueError("restriction() only applies to binary-mode paths")
        return Restriction(tuple((s.coord, s.side) for s in self.path))


def _check_mode(node: Node, path_coords: tuple[int, ...], mode: list) -> None:
    if isinstance(node, Leaf):
        return
    is_real = node.theta is not None
    if mode[0] is None:
        mode[0] = is_real
    elif mode[0] != is_real:
        raise ValueError("tree mixes binary and thresholded queries")
    if not is_real and node.coord in path_coords:
        raise ValueError(f"coordinate {node.coord} repeats on a binary-mode path")
    _check_mode(node.hi, path_coords + (node.coord,), mode)
    _check_mode(node.lo, path_coords + (node.coord,), mode)


class _TreeBase:
    root: Node

    def __init__(self, root: Node):
        mode = [None]
        _check_mode(root, (), mode)
        object.__setattr__(self, "root", root)

    @property
    def is_real(self) -> bool:
        node = self.root
        while isinstance(node, Internal):
            return node.theta is not None
        return False

    def __eq__(self, other):
        return type(self) is type(other) and self.root == other.root

    def __hash__(self):
        return hash((type(self).__name__, self.root))


class PartialTree(_TreeBase):
    """Tree whose leaves are unlabeled placeholders."""

    def __init__(self, root: Node):
        for info in _walk_leaves(root):
            if info.node.label is not None:
                raise ValueError("PartialTree leaves must be unlabeled")
        super().__init__(root)

    @classmethod
    def empty(cls) -> "PartialTree":
        return cls(Leaf())


class DecisionTree(_TreeBase):
    """Tree with every leaf labeled 0 or 1."""

    def __init__(self, root: Node):
        for info in _walk_leaves(root):
            if info.node.label is None:
                raise ValueError("DecisionTree leaves must all be labeled")
        super().__init__(root)


Tree = Union[PartialTree, DecisionTree]


# ---------------------------------------------------------------------------
# traversal
# ---------------------------------------------------------------------------


def _walk_leaves(root: Node):
    stack: list[tuple[Node, tuple[PathStep, ...]]] = [(root, ())]
    leaf_id = 0
    while stack:
        node, path = stack.pop()
        if isinstance(node, Leaf):
            yield LeafInfo(leaf_id, path, node)
            leaf_id += 1
        else:
            # push lo first so the hi child pops first: preorder is hi-then-lo
            stack.append((node.lo, path + (PathStep(node.coord, node.theta, -1),)))
            stack.append((node.hi, path + (PathStep(node.coord, node.theta, +1),)))


def leaves(t: Tree) -> list[LeafInfo]:
    """All leaves in DFS preorder; index in this list is the leaf id."""
    return list(_walk_leaves(t.root))


def size(t: Tree) -> int:
    return sum(1 for _ in _walk_leaves(t.root))


def depth(t: Tree) -> int:
    return max((info.depth for info in _walk_leaves(t.root)), default=0)


def path_of(t: Tree, x: Sequence) -> LeafInfo:
    """Walk the tree on input x and return the leaf reached, with its path."""
    node = t.root
    path: list[PathStep] = []
    while isinstance(node, Internal):
        v = x[node.coord - 1]
        if node.theta is None:
            side = 1 if v == 1 else -1
        else:
            side = 1 if v >= node.theta else -1
        path.append(PathStep(node.coord, node.theta, side))
        node = node.hi if side == 1 else node.lo
    # recover the preorder id of the reached leaf
    target = tuple(path)
    for info in _walk_leaves(t.root):
        if info.path == target:
            return info
    raise AssertionError("unreachable: walked path not found among leaves")


def evaluate(t: DecisionTree, x: Sequence) -> int:
    node = t.root
    while isinstance(node, Internal):
        v = x[node.coord - 1]
        if node.theta is None:
            node = node.hi if v == 1 else node.lo
        else:
            node = node.hi if v >= node.theta else node.lo
    return node.label


# ---------------------------------------------------------------------------
# growth edits
# ---------------------------------------------------------------------------


def split(t: PartialTree, leaf_id: int, coord: int, theta: float | None = None) -> PartialTree:
    """Replace the identified leaf with a query node over two fresh leaves.

    Binary mode forbids re-querying a coordinate already on the leaf's path.
    """
    infos = leaves(t)
    if not 0 <= leaf_id < len(infos):
        raise ValueError(f"no leaf with id {leaf_id} (tree has {len(infos)} leaves)")
    info = infos[leaf_id]
    if theta is None:
        for step in info.path:
            if step.coord == coord:
                raise ValueError(f"coordinate {coord} already queried on this path")
    replacement = Internal(coord, theta, Leaf(), Leaf())
    return PartialTree(_rebuild(t.root, info.path, replacement))


def _rebuild(node: Node, path: tuple[PathStep, ...], replacement: Node) -> Node:
    if not path:
        assert isinstance(node, Leaf)
        return replacement
    step, rest = path[0], path[1:]
    assert isinstance(node, Internal) and node.coord == step.coord
    if step.side == 1:
        return Internal(node.coord, node.theta, _rebuild(node.hi, rest, replacement), node.lo)
    return Internal(node.coord, node.theta, node.hi, _rebuild(node.lo, rest, replacement))


# ---------------------------------------------------------------------------
# completion against a reference function, exact distance
# ---------------------------------------------------------------------------


def _complete_node(node: Node, view: SubcubeView) -> Node:
    if isinstance(node, Leaf):
        label = 1 if 2 * view.ones >= view.size else 0
        return Leaf(label)
    hi, lo = view.split(node.coord)
    return Internal(node.coord, None, _complete_node(node.hi, hi), _complete_node(node.lo, lo))


def complete(t: PartialTree, f: BoolFunc) -> DecisionTree:
    """Label every leaf with round(E[f on that subcube]); E = 1/2 rounds to 1."""
    if t.is_real:
        raise ValueError("complete() applies to binary-mode trees")
    return DecisionTree(_complete_node(t.root, SubcubeView.of_function(f)))


def _error_count(node: Node, view: SubcubeView) -> int:
    if isinstance(node, Leaf):
        if node.label is None:
            return view.error_count()  # best-label error: the f-completion
        return view.size - view.ones if node.label == 1 else view.ones
    hi, lo = view.split(node.coord)
    return _error_count(node.hi, hi) + _error_count(node.lo, lo)


def distance(g: Tree, f: BoolFunc) -> Fraction:
    """Pr[g(x) != f(x)] under uniform x, exactly.

    For a PartialTree this is the distance of its f-completion, i.e. the
    sum over leaves of 2^-depth * bias(f restricted to the leaf).
    """
    if g.is_real:
        raise ValueError("distance() applies to binary-mode trees")
    return Fraction(_error_count(g.root, SubcubeView.of_function(f)), 1 << f.n)


def to_boolfunc(g: DecisionTree, n: int) -> BoolFunc:
    """Materialize a binary-mode tree as a truth table on n coordinates."""
    if g.is_real:
        raise ValueError("to_boolfunc() applies to binary-mode trees")
    table = 0
    for idx in range(1 << n):
        x = tuple(1 if (idx >> i) & 1 else -1 for i in range(n))
        if evaluate(g, x):
            table |= 1 << idx
    return BoolFunc(n, table)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _node_to_json(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"label": node.label}
    d = {"q": node.coord}
    if node.theta is not None:
        d["theta"] = node.theta
    d["hi"] = _node_to_json(node.hi)
    d["lo"] = _node_to_json(node.lo)
    return d


def to_json(t: Tree) -> dict:
    return _node_to_json(t.root)


def _node_from_json(d: dict) -> Node:
    if "q" in d:
        return Internal(
            int(d["q"]),
            float(d["theta"]) if "theta" in d else None,
            _node_from_json(d["hi"]),
            _node_from_json(d["lo"]),
        )
    if "label" not in d:
        raise ValueError("tree node needs either 'q' or 'label'")
    label = d["label"]
    return Leaf(None if label is None else int(label))


def from_json(d: dict) -> Tree:
    """Parse a tree; all-labeled nodes give a DecisionTree, all-unlabeled a PartialTree."""
    root = _node_from_json(d)
    labels = [info.node.label for info in _walk_leaves(root)]
    if all(l is None for l in labels):
        return PartialTree(root)
    if all(l is not None for l in labels):
        return DecisionTree(root)
    raise ValueError("tree mixes labeled and unlabeled leaves")


def label_leaves(t: PartialTree, labels: Sequence[int]) -> DecisionTree:
    """Label the leaves in preorder (leaf-id order) with the given 0/1 values."""
    labels = list(labels)
    if len(labels) != size(t):
        raise ValueError(f"{size(t)} leaves but {len(labels)} labels")
    it = iter(labels)

    def walk(node: Node) -> Node:
        if isinstance(node, Leaf):
            return Leaf(next(it))
        return Internal(node.coord, node.theta, walk(node.hi), walk(node.lo))

    return DecisionTree(walk(t.root))


# ---------------------------------------------------------------------------
# random monotone trees
# ---------------------------------------------------------------------------


def chain_tree(terms: Sequence[Sequence[int]]) -> DecisionTree:
    """Decision tree for an OR of ANDs of positive literals.

    Each term is tested coordinate by coordinate; a failed literal falls
    through to the remaining terms.  Coordinates already decided on the
    path are not re-tested, so paths stay repeat-free and terms sharing
    coordinates do not blow the tree up needlessly.
    """

    def build(idx: int, fixed: dict[int, int]) -> Node:
        if idx == len(terms):
            return Leaf(0)
        live = []
        for c in terms[idx]:
            v = fixed.get(c)
            if v == -1:
                return build(idx + 1, fixed)  # term already falsified
            if v != 1:
                live.append(c)
        if not live:
            return Leaf(1)  # term already satisfied

        def walk(pos: int, fx: dict[int, int]) -> Node:
            if pos == len(live):
                return Leaf(1)
            c = live[pos]
            return Internal(
                c,
                None,
                walk(pos + 1, {**fx, c: 1}),
                build(idx + 1, {**fx, c: -1}),
            )

        return walk(0, fixed)

    return DecisionTree(build(0, {}))


def random_monotone_tree(
    n: int, max_leaves: int, seed: int, max_terms: int = 4, max_width: int = 4
) -> DecisionTree:
    """Random monotone decision tree with at most max_leaves leaves.

    Samples a random positive DNF and keeps its chain tree when the leaf
    count fits the budget; positive literals make the computed function
    monotone by construction.
    """
    rng = derived_rng(seed, "monotone-tree")
    while True:
        m = rng.randint(1, max_terms)
        terms = []
        for _ in range(m):
            width = rng.randint(1, min(max_width, n))
            terms.append(tuple(sorted(rng.sample(range(1, n + 1), width))))
        t = chain_tree(terms)
        if size(t) <= max_leaves:
            return t
