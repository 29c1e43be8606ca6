"""Real-valued features: product distributions, bit encoding, threshold growth.

The bridge back to the binary machinery is the quantile picture: applying
each coordinate's CDF pushes any product distribution forward to uniform
on [0,1]^n, a threshold test x_i >= theta becomes a quantile test, and a
quantile in [0,1) is approximated by its first w bits.  Concretely:

  * encode(x, w) is the w-bit pattern of floor(x * 2^w), MSB first,
    0 -> -1 and 1 -> +1;
  * round_thresholds snaps every threshold of a tree to the nearest
    multiple of 2^-w (ties to the even multiple);
  * booleanize replaces each threshold node of a rounded tree by a bit
    comparator over the encoded coordinates, so the result is an ordinary
    binary-feature tree computing the same function on encoded inputs.
    Comparators re-reading bits already fixed on the path are collapsed,
    which keeps paths free of repeated queries; the blowup is capped and
    booleanized_evaluate() walks the same construction lazily when a tree
    is too large to materialize.

grow_real runs the same greedy loop as grower.grow over (coordinate,
threshold) candidates.  Two sources are supported:

  * a RealSample, treated as the exact distribution (empirical mode:
    expectations are exact frequencies over the sample, so statistical
    error is separated from algorithmic behavior);
  * a (teacher DecisionTree, ProductDistribution) pair (analytic mode:
    expectations are exact rational box integrals in quantile space).

Threshold candidates come from the policy: "midpoints" (midpoints of
consecutive distinct sample values per coordinate, empirical only) or
"grid:w" (multiples of 2^-w in quantile space).  Every trace records the
policy, and every step records whether the chosen threshold is a median
of the leaf's coordinate distribution.  A split that isolates an empty
sample set freezes the empty leaf with the parent's majority label.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import tree as treemod
from .boolfn import derived_rng
from .grower import GAIN_TOL, GrowthConfig, GrowthTrace, TraceStep
from .impurity import ImpuritySpec, evaluate as g_eval
from .tree import DecisionTree, Internal, Leaf, PartialTree

MAX_BITS = 53  # beyond float precision the grid is not representable
BOOLEANIZE_NODE_CAP = 200_000


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoordinateDist:
    """One coordinate's distribution, described by its CDF.

    kind "uniform01": the analytic uniform on [0,1].
    kind "cdf_table": piecewise-linear CDF through the given (value, F)
    knots; first F must be 0 and last must be 1.
    kind "empirical": the step CDF of the given data values,
    right-continuous (F(v) = fraction of values <= v).
    """

    kind: str
    knots: tuple[tuple[Fraction, Fraction], ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "uniform01":
            return
        if self.kind == "cdf_table":
            if len(self.knots) < 2:
                raise ValueError("cdf_table needs at least two knots")
            vs = [v for v, _ in self.knots]
            fs = [F for _, F in self.knots]
            if vs != sorted(vs) or fs != sorted(fs):
                raise ValueError("cdf_table knots must be non-decreasing")
            if fs[0] != 0 or fs[-1] != 1:
                raise ValueError("cdf_table must start at F=0 and end at F=1")
            return
        if self.kind == "empirical":
            if not self.values:
                raise ValueError("empirical coordinate needs data values")
            object.__setattr__(self, "values", tuple(sorted(self.values)))
            return
        raise ValueError(f"unknown coordinate kind {self.kind!r}")

    @classmethod
    def uniform01(cls) -> "CoordinateDist":
        return cls("uniform01")

    @classmethod
    def from_table(cls, points: Sequence[tuple[float, float]]) -> "CoordinateDist":
        knots = tuple((Fraction(v), Fraction(F)) for v, F in points)
        return cls("cdf_table", knots=knots)

    @classmethod
    def from_data(cls, values: Sequence[float]) -> "CoordinateDist":
        return cls("empirical", values=tuple(values))

    def cdf(self, v) -> Fraction:
        if self.kind == "uniform01":
            return Fraction(min(1, max(0, Fraction(v))))
        if self.kind == "empirical":
            return Fraction(bisect.bisect_right(self.values, v), len(self.values))
        v = Fraction(v)
        if v <= self.knots[0][0]:
            return self.knots[0][1] if v == self.knots[0][0] else Fraction(0)
        for (v0, f0), (v1, f1) in zip(self.knots, self.knots[1:]):
            if v <= v1:
                if v1 == v0:
                    return f1
                return f0 + (f1 - f0) * (v - v0) / (v1 - v0)
        return Fraction(1)

    def quantile(self, u: float) -> float:
        if not 0 <= u <= 1:
            raise ValueError("quantile argument must lie in [0,1]")
        if self.kind == "uniform01":
            return float(u)
        if self.kind == "empirical":
            n = len(self.values)
            idx = min(n - 1, max(0, math.ceil(u * n) - 1))
            return self.values[idx]
        u = Fraction(u)
        for (v0, f0), (v1, f1) in zip(self.knots, self.knots[1:]):
            if u <= f1:
                if f1 == f0:
                    return float(v0)
                return float(v0 + (v1 - v0) * (u - f0) / (f1 - f0))
        return float(self.knots[-1][0])

    @property
    def strictly_increasing(self) -> bool:
        """Whether cdf is invertible, as the quantile-space picture needs."""
        if self.kind == "uniform01":
            return True
        if self.kind == "empirical":
            return False
        return all(f0 < f1 and v0 < v1 for (v0, f0), (v1, f1) in zip(self.knots, self.knots[1:]))

    def sample(self, rng) -> float:
        return self.quantile(rng.random())


@dataclass(frozen=True)
class ProductDistribution:
    coords: tuple[CoordinateDist, ...]

    def __post_init__(self):
        if not self.coords:
            raise ValueError("a product distribution needs at least one coordinate")

    @classmethod
    def uniform(cls, n: int) -> "ProductDistribution":
        return cls(tuple(CoordinateDist.uniform01() for _ in range(n)))

    @property
    def n(self) -> int:
        return len(self.coords)

    def sample(self, rng) -> tuple[float, ...]:
        return tuple(c.sample(rng) for c in self.coords)


@dataclass(frozen=True)
class RealSample:
    """Labeled points; the empirical grower treats them as the distribution."""

    points: tuple[tuple[tuple[float, ...], int], ...]
    provenance: str = ""

    def __post_init__(self):
        if not self.points:
            raise ValueError("empty sample")
        n = len(self.points[0][0])
        for x, label in self.points:
            if len(x) != n:
                raise ValueError("inconsistent point dimensions")
            if label not in (0, 1):
                raise ValueError(f"labels must be 0 or 1, got {label}")

    @property
    def n(self) -> int:
        return len(self.points[0][0])

    def __len__(self) -> int:
        return len(self.points)


def cdf_transform(d: ProductDistribution, x: Sequence[float]) -> tuple[float, ...]:
    """Apply each coordinate's CDF; pushes d forward to uniform on [0,1]^n."""
    if len(x) != d.n:
        raise ValueError(f"expected {d.n} coordinates, got {len(x)}")
    return tuple(float(c.cdf(v)) for c, v in zip(d.coords, x))


# ---------------------------------------------------------------------------
# encoding and rounding
# ---------------------------------------------------------------------------


def _check_width(w: int) -> None:
    if not 1 <= w <= MAX_BITS:
        raise ValueError(f"bit width must be in 1..{MAX_BITS}, got {w}")


def encode_int(x: float, w: int) -> int:
    """floor(x * 2^w), clamped so x = 1 maps to the all-ones pattern."""
    _check_width(w)
    if not 0 <= x <= 1:
        raise ValueError(f"encoder domain is [0,1], got {x}")
    return min((1 << w) - 1, int(math.floor(x * (1 << w))))


def encode(x: float, w: int) -> tuple[int, ...]:
    """The w-bit pattern of floor(x * 2^w), MSB first, 0 -> -1 and 1 -> +1."""
    b = encode_int(x, w)
    return tuple(1 if (b >> (w - p)) & 1 else -1 for p in range(1, w + 1))


def encode_point(x: Sequence[float], w: int) -> tuple[int, ...]:
    """Concatenated coordinate encodings: real coord i owns bit coords (i-1)w+1..iw."""
    out: list[int] = []
    for v in x:
        out.extend(encode(v, w))
    return tuple(out)


def round_thresholds(t, w: int):
    """Snap each threshold to the nearest multiple of 2^-w, ties to even."""
    _check_width(w)
    scale = 1 << w

    def walk(node):
        if isinstance(node, Leaf):
            return node
        theta = round(node.theta * scale) / scale
        return Internal(node.coord, theta, walk(node.hi), walk(node.lo))

    return type(t)(walk(t.root))


# ---------------------------------------------------------------------------
# the comparator construction: threshold tree -> binary-feature tree
# ---------------------------------------------------------------------------


def _grid_value(theta: float, w: int) -> int:
    scaled = theta * (1 << w)
    c = round(scaled)
    if scaled != c:
        raise ValueError(
            f"threshold {theta} is not a multiple of 2^-{w}; round_thresholds first"
        )
    return c


def booleanize(t: DecisionTree, w: int, max_nodes: int = BOOLEANIZE_NODE_CAP) -> DecisionTree:
    """Rewrite a grid-threshold tree over encoded bits, one comparator per query.

    Each query x_i >= c/2^w becomes an MSB-first walk over coordinate i's
    bits; bits already fixed on the path are not re-queried, so the output
    is a valid binary-mode tree.  Raises if the rewrite exceeds max_nodes.
    """
    _check_width(w)
    count = 0

    def bump():
        nonlocal count
        count += 1
        if count > max_nodes:
            raise ValueError(
                f"booleanized tree exceeds {max_nodes} nodes; "
                "use booleanized_evaluate for functional access"
            )

    def transform(node, ctx: dict[int, int]):
        bump()
        if isinstance(node, Leaf):
            return Leaf(node.label)
        c = _grid_value(node.theta, w)
        return comparator(node, c, 1, ctx)

    def comparator(node, c: int, p: int, ctx: dict[int, int]):
        # decide floor(x_i 2^w) >= c given bits 1..p-1 matched c so far
        if c <= 0:
            return transform(node.hi, ctx)
        if c >= 1 << w:
            return transform(node.lo, ctx)
        if p > w or (c & ((1 << (w - p + 1)) - 1)) == 0:
            return transform(node.hi, ctx)  # remaining suffix of c is zero
        bit_coord = (node.coord - 1) * w + p
        cbit = (c >> (w - p)) & 1
        known = ctx.get(bit_coord)
        if cbit == 1:
            if known == 1:
                return comparator(node, c, p + 1, ctx)
            if known == -1:
                return transform(node.lo, ctx)
            bump()
            return Internal(
                bit_coord,
                None,
                comparator(node, c, p + 1, {**ctx, bit_coord: 1}),
                transform(node.lo, {**ctx, bit_coord: -1}),
            )
        if known == 1:
            return transform(node.hi, ctx)
        if known == -1:
            return comparator(node, c, p + 1, ctx)
        bump()
        return Internal(
            bit_coord,
            None,
            transform(node.hi, {**ctx, bit_coord: 1}),
            comparator(node, c, p + 1, {**ctx, bit_coord: -1}),
        )

    return DecisionTree(transform(t.root, {}))


def booleanized_evaluate(t: DecisionTree, w: int, bits: Sequence[int]) -> int:
    """Evaluate the comparator construction on encoded bits without building it."""
    _check_width(w)
    node = t.root
    while isinstance(node, Internal):
        c = _grid_value(node.theta, w)
        node = node.hi if _compare_bits(bits, node.coord, w, c) else node.lo
    return node.label


def _compare_bits(bits: Sequence[int], coord: int, w: int, c: int) -> bool:
    if c <= 0:
        return True
    if c >= 1 << w:
        return False
    base = (coord - 1) * w
    for p in range(1, w + 1):
        if (c & ((1 << (w - p + 1)) - 1)) == 0:
            return True
        cbit = (c >> (w - p)) & 1
        b = bits[base + p - 1]
        if cbit == 1:
            if b != 1:
                return False
        elif b == 1:
            return True
    return True


# ---------------------------------------------------------------------------
# sampling utilities
# ---------------------------------------------------------------------------


def estimate_dist(
    t1: DecisionTree,
    t2: DecisionTree,
    d: ProductDistribution,
    samples: int,
    seed: int,
    level: float = 0.99,
) -> tuple[float, float]:
    """Monte-Carlo disagreement rate with a distribution-free half-width."""
    if samples < 1:
        raise ValueError("sample count must be >= 1")
    if not 0 < level < 1:
        raise ValueError("confidence level must be in (0,1)")
    rng = derived_rng(seed, "estimate-dist")
    disagree = 0
    for _ in range(samples):
        x = d.sample(rng)
        if treemod.evaluate(t1, x) != treemod.evaluate(t2, x):
            disagree += 1
    halfwidth = math.sqrt(math.log(2 / (1 - level)) / (2 * samples))
    return disagree / samples, halfwidth


def balanced_random_tree(
    n: int, size: int, seed: int, depth_cap: int | None = None
) -> DecisionTree:
    """Random threshold tree with exactly `size` leaves and depth <= 2 log2(size)."""
    if size < 1:
        raise ValueError("size must be >= 1")
    cap = depth_cap if depth_cap is not None else max(1, math.ceil(2 * math.log2(max(2, size))))
    if size > 1 << cap:
        raise ValueError(f"{size} leaves cannot fit in depth {cap}")
    rng = derived_rng(seed, "balanced-tree")

    def build(leaves_left: int, depth: int):
        if leaves_left == 1:
            return Leaf(rng.randrange(2))
        room = 1 << (cap - depth - 1)  # per child
        lo_min = max(1, leaves_left - room)
        lo_max = min(leaves_left - 1, room)
        hi_leaves = rng.randint(lo_min, lo_max)
        coord = rng.randrange(1, n + 1)
        theta = rng.random()
        return Internal(coord, theta, build(hi_leaves, depth + 1), build(leaves_left - hi_leaves, depth + 1))

    return DecisionTree(build(size, 0))


def sample_teacher(t: DecisionTree, d: ProductDistribution, count: int, seed: int) -> RealSample:
    """Draw points from d labeled by the teacher tree."""
    if count < 1:
        raise ValueError("sample count must be >= 1")
    rng = derived_rng(seed, "teacher-sample")
    pts = []
    for _ in range(count):
        x = d.sample(rng)
        pts.append((x, treemod.evaluate(t, x)))
    return RealSample(tuple(pts), provenance=f"teacher seed={seed} count={count}")


# ---------------------------------------------------------------------------
# threshold policies
# ---------------------------------------------------------------------------


def _parse_policy(policy: str) -> tuple[str, int | None]:
    if policy == "midpoints":
        return "midpoints", None
    if policy.startswith("grid:"):
        w = int(policy.split(":", 1)[1])
        _check_width(w)
        return "grid", w
    raise ValueError(f"unknown threshold policy {policy!r}; use 'midpoints' or 'grid:w'")


# ---------------------------------------------------------------------------
# greedy growth, empirical mode
# ---------------------------------------------------------------------------


class _SampleLeaf:
    __slots__ = (
        "idx",
        "count",
        "ones",
        "expectation",
        "err_count",
        "g_term",
        "active",
        "label_override",
        "best_gain",
        "best_coord",
        "best_theta",
        "best_median",
    )

    def __init__(self, sample, idx, total, spec, policy, grid_w, parent_label=None):
        self.idx = idx
        self.count = len(idx)
        if self.count == 0:
            # frozen: inherits the parent's majority label, never split
            self.ones = 0
            self.expectation = None
            self.err_count = 0
            self.g_term = 0.0
            self.active = False
            self.label_override = parent_label
            self.best_gain = -math.inf
            self.best_coord = None
            self.best_theta = None
            self.best_median = None
            return
        pts = sample.points
        self.ones = sum(pts[i][1] for i in idx)
        self.expectation = Fraction(self.ones, self.count)
        self.err_count = min(self.ones, self.count - self.ones)
        g_here = g_eval(spec, self.expectation)
        self.g_term = self.count / total * g_here
        self.label_override = None
        self.best_gain = -math.inf
        self.best_coord = None
        self.best_theta = None
        self.best_median = None
        self.active = 0 < self.ones < self.count
        if not self.active:
            return
        n = sample.n
        for coord in range(1, n + 1):
            ordered = sorted((pts[i][0][coord - 1], pts[i][1]) for i in idx)
            values = [v for v, _ in ordered]
            prefix = [0]
            for _, lab in ordered:
                prefix.append(prefix[-1] + lab)
            if policy == "midpoints":
                candidates = []
                for j in range(1, self.count):
                    if values[j] != values[j - 1]:
                        candidates.append(((values[j - 1] + values[j]) / 2, j))
            else:
                candidates = []
                for c in range(1, 1 << grid_w):
                    theta = c / (1 << grid_w)
                    candidates.append((theta, bisect.bisect_left(values, theta)))
            for theta, j in candidates:
                lo_n, hi_n = j, self.count - j
                lo_ones = prefix[j]
                hi_ones = self.ones - lo_ones
                total_g = self.count * g_here
                if lo_n:
                    total_g -= lo_n * g_eval(spec, Fraction(lo_ones, lo_n))
                if hi_n:
                    total_g -= hi_n * g_eval(spec, Fraction(hi_ones, hi_n))
                gain = total_g / total
                if gain > self.best_gain + GAIN_TOL:
                    self.best_gain = gain
                    self.best_coord = coord
                    self.best_theta = theta
                    self.best_median = 2 * lo_n <= self.count and 2 * hi_n <= self.count

    def majority(self) -> int:
        if self.label_override is not None:
            return self.label_override
        return 1 if 2 * self.ones >= self.count else 0


def _grow_empirical(sample: RealSample, cfg: GrowthConfig, policy, grid_w):
    spec = cfg.impurity
    total = len(sample)
    root = _SampleLeaf(sample, tuple(range(total)), total, spec, policy, grid_w)
    states = [root]
    t = PartialTree.empty()
    g_imp = root.g_term
    dist = Fraction(root.err_count, total)
    trace = GrowthTrace(
        arity=sample.n,
        mode="real-empirical",
        impurity_name=spec.name,
        kappa=spec.kappa,
        budget=cfg.budget,
        monitor=None,
        initial_expectation=root.expectation,
        initial_g_impurity=g_imp,
        initial_u_f=None,
        initial_distance=dist,
        threshold_policy="midpoints" if policy == "midpoints" else f"grid:{grid_w}",
    )

    while 1 + len(trace.steps) < cfg.budget:
        best_idx = -1
        best_gain = -math.inf
        for i, st in enumerate(states):
            if st.active and st.best_gain > best_gain + GAIN_TOL:
                best_gain = st.best_gain
                best_idx = i
        if best_idx < 0:
            trace.stop_reason = "no-candidates"
            break
        st = states[best_idx]
        if cfg.stop_on_zero_gain and st.best_gain <= GAIN_TOL:
            trace.stop_reason = "zero-gain"
            break
        coord, theta = st.best_coord, st.best_theta
        parent_label = st.majority()
        hi_idx = tuple(i for i in st.idx if sample.points[i][0][coord - 1] >= theta)
        lo_idx = tuple(i for i in st.idx if sample.points[i][0][coord - 1] < theta)
        hi = _SampleLeaf(sample, hi_idx, total, spec, policy, grid_w, parent_label)
        lo = _SampleLeaf(sample, lo_idx, total, spec, policy, grid_w, parent_label)

        dist_before = dist
        dist = dist + Fraction(hi.err_count + lo.err_count - st.err_count, total)
        g_imp = g_imp - st.best_gain

        t = treemod.split(t, best_idx, coord, theta)
        states[best_idx : best_idx + 1] = [hi, lo]
        trace.steps.append(
            TraceStep(
                iteration=len(trace.steps) + 1,
                leaf_id=best_idx,
                coord=coord,
                theta=theta,
                gain=st.best_gain,
                g_impurity=g_imp,
                u_f=None,
                distance=dist,
                distance_before=dist_before,
                expectation_leaf=st.expectation,
                median_split=st.best_median,
            )
        )

    completed = treemod.label_leaves(t, [st.majority() for st in states])
    return completed, trace


# ---------------------------------------------------------------------------
# greedy growth, analytic mode (teacher tree + product distribution)
# ---------------------------------------------------------------------------


def _quantile_threshold(d: ProductDistribution, coord: int, theta) -> Fraction:
    return d.coords[coord - 1].cdf(theta)


def _box_ones(node, box, d) -> Fraction:
    """Integral of the teacher over the quantile-space box."""
    if isinstance(node, Leaf):
        if node.label:
            return math.prod((b - a for a, b in box), start=Fraction(1))
        return Fraction(0)
    u = _quantile_threshold(d, node.coord, node.theta)
    a, b = box[node.coord - 1]
    if u <= a:
        return _box_ones(node.hi, box, d)
    if u >= b:
        return _box_ones(node.lo, box, d)
    hi_box = box[: node.coord - 1] + ((u, b),) + box[node.coord :]
    lo_box = box[: node.coord - 1] + ((a, u),) + box[node.coord :]
    return _box_ones(node.hi, hi_box, d) + _box_ones(node.lo, lo_box, d)


class _BoxLeaf:
    __slots__ = (
        "box",
        "mass",
        "expectation",
        "err_frac",
        "g_term",
        "active",
        "best_gain",
        "best_coord",
        "best_theta",
        "best_median",
    )

    def __init__(self, teacher, d, box, spec, grid_w):
        self.box = box
        self.mass = math.prod((b - a for a, b in box), start=Fraction(1))
        ones = _box_ones(teacher.root, box, d)
        self.expectation = ones / self.mass
        bias = min(self.expectation, 1 - self.expectation)
        self.err_frac = self.mass * bias
        g_here = g_eval(spec, self.expectation)
        self.g_term = float(self.mass) * g_here
        self.best_gain = -math.inf
        self.best_coord = None
        self.best_theta = None
        self.best_median = None
        self.active = bias != 0
        if not self.active:
            return
        scale = 1 << grid_w
        for coord in range(1, len(box) + 1):
            a, b = box[coord - 1]
            c_lo = math.floor(a * scale) + 1
            c_hi = math.ceil(b * scale) - 1
            for c in range(c_lo, c_hi + 1):
                u = Fraction(c, scale)
                if not a < u < b:
                    continue
                hi_box = box[: coord - 1] + ((u, b),) + box[coord:]
                lo_box = box[: coord - 1] + ((a, u),) + box[coord:]
                hi_mass = self.mass / (b - a) * (b - u)
                lo_mass = self.mass / (b - a) * (u - a)
                e_hi = _box_ones(teacher.root, hi_box, d) / hi_mass
                e_lo = _box_ones(teacher.root, lo_box, d) / lo_mass
                gain = self.g_term - float(hi_mass) * g_eval(spec, e_hi) - float(
                    lo_mass
                ) * g_eval(spec, e_lo)
                if gain > self.best_gain + GAIN_TOL:
                    self.best_gain = gain
                    self.best_coord = coord
                    self.best_theta = u
                    self.best_median = 2 * u == a + b


def _grow_analytic(teacher: DecisionTree, d: ProductDistribution, cfg: GrowthConfig, grid_w):
    spec = cfg.impurity
    for c in d.coords:
        if not c.strictly_increasing:
            raise ValueError(
                "analytic growth needs invertible coordinate CDFs "
                "(uniform01 or strictly increasing cdf_table)"
            )
    n = d.n
    unit = tuple((Fraction(0), Fraction(1)) for _ in range(n))
    root = _BoxLeaf(teacher, d, unit, spec, grid_w)
    states = [root]
    t = PartialTree.empty()
    g_imp = root.g_term
    dist = root.err_frac
    trace = GrowthTrace(
        arity=n,
        mode="real-analytic",
        impurity_name=spec.name,
        kappa=spec.kappa,
        budget=cfg.budget,
        monitor=None,
        initial_expectation=root.expectation,
        initial_g_impurity=g_imp,
        initial_u_f=None,
        initial_distance=dist,
        threshold_policy=f"grid:{grid_w}",
    )

    while 1 + len(trace.steps) < cfg.budget:
        best_idx = -1
        best_gain = -math.inf
        for i, st in enumerate(states):
            if st.active and st.best_gain > best_gain + GAIN_TOL:
                best_gain = st.best_gain
                best_idx = i
        if best_idx < 0:
            trace.stop_reason = "no-candidates"
            break
        st = states[best_idx]
        if cfg.stop_on_zero_gain and st.best_gain <= GAIN_TOL:
            trace.stop_reason = "zero-gain"
            break
        coord, u = st.best_coord, st.best_theta
        a, b = st.box[coord - 1]
        hi = _BoxLeaf(teacher, d, st.box[: coord - 1] + ((u, b),) + st.box[coord:], spec, grid_w)
        lo = _BoxLeaf(teacher, d, st.box[: coord - 1] + ((a, u),) + st.box[coord:], spec, grid_w)

        dist_before = dist
        dist = dist - st.err_frac + hi.err_frac + lo.err_frac
        g_imp = g_imp - st.best_gain

        # the tree tests raw quantile coordinates: threshold is u itself
        t = treemod.split(t, best_idx, coord, float(u))
        states[best_idx : best_idx + 1] = [hi, lo]
        trace.steps.append(
            TraceStep(
                iteration=len(trace.steps) + 1,
                leaf_id=best_idx,
                coord=coord,
                theta=float(u),
                gain=st.best_gain,
                g_impurity=g_imp,
                u_f=None,
                distance=dist,
                distance_before=dist_before,
                expectation_leaf=st.expectation,
                median_split=st.best_median,
            )
        )

    completed = treemod.label_leaves(t, [1 if 2 * st.expectation >= 1 else 0 for st in states])
    return completed, trace


def grow_real(source, cfg: GrowthConfig, policy: str = "midpoints"):
    """Greedy threshold growth; source is a RealSample or (teacher, distribution).

    Analytic mode grows in quantile space: the teacher's thresholds are
    mapped through the coordinate CDFs and the returned tree queries
    quantile-transformed inputs on the grid.
    """
    if cfg.impurity is None:
        raise ValueError(
            "real-valued growth scores (coordinate, threshold) candidates by "
            "purity gain; configure an impurity"
        )
    if cfg.monitor is not None:
        raise ValueError("growth monitors apply to binary-feature growth only")
    kind, grid_w = _parse_policy(policy)
    if isinstance(source, RealSample):
        return _grow_empirical(source, cfg, kind, grid_w)
    if isinstance(source, tuple) and len(source) == 2:
        teacher, d = source
        if isinstance(teacher, DecisionTree) and isinstance(d, ProductDistribution):
            if kind != "grid":
                raise ValueError("analytic growth needs the grid policy (no sample to take midpoints from)")
            return _grow_analytic(teacher, d, cfg, grid_w)
    raise TypeError("source must be a RealSample or a (DecisionTree, ProductDistribution) pair")
