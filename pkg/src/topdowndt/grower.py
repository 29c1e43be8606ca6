"""Greedy top-down tree growth with exact per-iteration accounting.

Two split rules share one loop:

  * impurity rule: split the (leaf, coordinate) pair maximizing the purity
    gain  2^-|l| * ( G(E[f_l]) - E_b[ G(E[f_l restricted to x_i=b]) ] ),
    i.e. the decrease of the G-impurity potential
    sum over leaves of 2^-|l| * G(E[f_l]).
  * influence rule: split the leaf maximizing 2^-|l| * Inf_i(f_l) on its
    most influential free coordinate i.

Ties are broken by smallest leaf id (DFS preorder), then smallest
coordinate.  Gains are floats compared with absolute tolerance 1e-12; the
influence rule compares exact rationals.  Pure leaves (bias 0) are never
split; they lose every argmax, and once nothing splittable remains the
loop halts regardless of the remaining budget.  With stop_on_zero_gain
unset (the default) zero-gain splits of impure leaves do happen, in
tie-break order, until the leaf budget is spent.

The grower runs on any function exposing the cursor interface below;
boolfn truth tables and the structured hard instances both do.

Growth is monitored: every iteration appends a TraceStep carrying the
exact distance of the f-completion, the impurity potential, and the
influence potential  u(T) = sum over leaves of 2^-|l| * Inf(f_l)  (total
influence of the leaf's subfunction).  verify_split_inequalities() then
replays the per-step guarantees for monotone targets:

  step 0:        G-impurity = G(E[f]) <= 1
  every step:    distance <= G-impurity
  chosen split:  gain >= 2^-|l| * (kappa/32) * Inf_i(f_l)^2
  while distance > opt_s + eps (budget-s oracle optimum):
                 gain > kappa * eps^2 / (32 * j * (log2 s)^2)
                 at the j-th split (j = size of the tree before it).

The kappa/32 constant is the one the guarantees are stated with; the
tighter kappa/2 variant of the chosen-split bound is recorded alongside
for reporting but never gates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import tree as treemod
from .boolfn import BoolFunc, SubcubeView, is_monotone
from .impurity import ImpuritySpec, evaluate
from .tree import DecisionTree, Internal, Leaf, PartialTree

GAIN_TOL = 1e-12
CHECK_TOL = 1e-12


# ---------------------------------------------------------------------------
# cursor interface
# ---------------------------------------------------------------------------


class TableCursor:
    """Cursor over a boolfn truth table: the grower's view of one leaf."""

    __slots__ = ("view",)

    def __init__(self, view: SubcubeView):
        self.view = view

    @classmethod
    def of_function(cls, f: BoolFunc) -> "TableCursor":
        return cls(SubcubeView.of_function(f))

    def expectation(self) -> Fraction:
        return self.view.expectation()

    def free_coords(self) -> tuple[int, ...]:
        return tuple(sorted(self.view.free))

    def child_expectations(self, coord: int) -> tuple[Fraction, Fraction]:
        hi_ones, lo_ones = self.view.child_ones(coord)
        half = self.view.size >> 1
        return Fraction(hi_ones, half), Fraction(lo_ones, half)

    def influence(self, coord: int) -> Fraction:
        return self.view.influence(coord)

    def total_influence(self) -> Fraction:
        return self.view.total_influence()

    def split(self, coord: int) -> tuple["TableCursor", "TableCursor"]:
        hi, lo = self.view.split(coord)
        return TableCursor(hi), TableCursor(lo)


def _root_cursor(f) -> "TableCursor":
    if isinstance(f, BoolFunc):
        return TableCursor.of_function(f)
    maker = getattr(f, "root_cursor", None)
    if maker is None:
        raise TypeError(f"cannot grow on {type(f).__name__}: no cursor interface")
    return maker()


# ---------------------------------------------------------------------------
# configuration and trace types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Monitor:
    """Parameters for the per-iteration split-gain guarantee."""

    s: int
    eps: Fraction
    opt_s: Fraction

    def __post_init__(self):
        if self.s < 2:
            raise ValueError("monitor needs s >= 2 (log2 s must be positive)")
        if not isinstance(self.eps, Fraction):
            object.__setattr__(self, "eps", Fraction(self.eps).limit_denominator(10**9))
        if not isinstance(self.opt_s, Fraction):
            object.__setattr__(self, "opt_s", Fraction(self.opt_s))
        if self.eps <= 0:
            raise ValueError("monitor eps must be positive")


@dataclass(frozen=True)
class GrowthConfig:
    budget: int
    impurity: ImpuritySpec | None = None  # None selects the influence rule
    stop_on_zero_gain: bool = False
    monitor: Monitor | None = None

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("leaf budget must be >= 1")

    @property
    def rule(self) -> str:
        return "impurity" if self.impurity is not None else "influence"


@dataclass(frozen=True)
class TraceStep:
    iteration: int  # 1-based split index; tree size before the split is `iteration`
    leaf_id: int  # DFS preorder id in the pre-split tree
    coord: int
    theta: float | None
    gain: float  # purity gain, or float(score) under the influence rule
    g_impurity: float | None  # potential after the split (None: influence rule)
    u_f: Fraction | None  # influence potential after the split
    distance: Fraction  # exact distance of the f-completion after the split
    # verification extras, not part of the CSV schema:
    distance_before: Fraction = field(repr=False, default=Fraction(0))
    depth: int = field(repr=False, default=0)
    inf_split: Fraction | None = field(repr=False, default=None)
    expectation_leaf: Fraction | None = field(repr=False, default=None)
    path_key: frozenset = field(repr=False, default=frozenset())
    median_split: bool | None = field(repr=False, default=None)


@dataclass
class GrowthTrace:
    arity: int
    mode: str  # "impurity" | "influence"
    impurity_name: str | None
    kappa: float | None
    budget: int
    monitor: Monitor | None
    initial_expectation: Fraction
    initial_g_impurity: float | None
    initial_u_f: Fraction | None
    initial_distance: Fraction
    steps: list[TraceStep] = field(default_factory=list)
    stop_reason: str = "budget"
    threshold_policy: str | None = None  # real-valued runs record their grid here

    @property
    def final_size(self) -> int:
        return 1 + len(self.steps)

    def final_distance(self) -> Fraction:
        return self.steps[-1].distance if self.steps else self.initial_distance

    def distance_at_size(self, s: int) -> Fraction:
        """Distance of the completion when the tree first had size s."""
        if s < 1:
            raise ValueError("size must be >= 1")
        if s == 1 or not self.steps:
            return self.initial_distance
        idx = min(s - 1, len(self.steps)) - 1
        return self.steps[idx].distance

    def split_choices(self) -> dict[frozenset, int]:
        """Map each split subcube to the coordinate chosen there."""
        return {st.path_key: st.coord for st in self.steps}


# ---------------------------------------------------------------------------
# the growth loop
# ---------------------------------------------------------------------------


class _LeafState:
    __slots__ = (
        "cursor",
        "depth",
        "expectation",
        "bias",
        "err_frac",
        "g_term",
        "u_term",
        "active",
        "best_gain",
        "best_coord",
        "best_inf",
        "path_key",
    )

    def __init__(self, cursor, depth: int, spec: ImpuritySpec | None, path_key: frozenset):
        self.cursor = cursor
        self.depth = depth
        self.path_key = path_key
        e = cursor.expectation()
        self.expectation = e
        self.bias = min(e, 1 - e)
        self.err_frac = Fraction(1, 1 << depth) * self.bias
        self.g_term = None if spec is None else math.ldexp(evaluate(spec, e), -depth)
        self.u_term = Fraction(1, 1 << depth) * cursor.total_influence()
        free = cursor.free_coords()
        self.active = bool(free) and self.bias != 0
        self.best_gain = -math.inf
        self.best_coord = None
        self.best_inf = Fraction(0)
        if not self.active:
            return
        if spec is not None:
            g_here = evaluate(spec, e)
            best = -math.inf
            best_coord = None
            for coord in free:
                e_hi, e_lo = cursor.child_expectations(coord)
                local = g_here - 0.5 * (evaluate(spec, e_hi) + evaluate(spec, e_lo))
                gain = math.ldexp(local, -depth)
                if gain > best + GAIN_TOL:
                    best = gain
                    best_coord = coord
            self.best_gain = best
            self.best_coord = best_coord
        else:
            best_inf = Fraction(-1)
            best_coord = None
            for coord in free:
                inf = cursor.influence(coord)
                if inf > best_inf:
                    best_inf = inf
                    best_coord = coord
            self.best_inf = best_inf
            self.best_coord = best_coord
            # score = 2^-depth * best_inf; gain column records its float value
            self.best_gain = math.ldexp(1.0, -depth) * float(best_inf)


def grow(f, cfg: GrowthConfig) -> tuple[DecisionTree, GrowthTrace]:
    """Run top-down growth to the leaf budget; return (f-completion, trace)."""
    spec = cfg.impurity
    root = _LeafState(_root_cursor(f), 0, spec, frozenset())
    states: list[_LeafState] = [root]
    t = PartialTree.empty()

    g_imp = root.g_term
    u_f = root.u_term
    dist = root.err_frac
    trace = GrowthTrace(
        arity=len(root.cursor.free_coords()),
        mode=cfg.rule,
        impurity_name=spec.name if spec else None,
        kappa=spec.kappa if spec else None,
        budget=cfg.budget,
        monitor=cfg.monitor,
        initial_expectation=root.expectation,
        initial_g_impurity=g_imp,
        initial_u_f=u_f,
        initial_distance=dist,
    )

    while 1 + len(trace.steps) < cfg.budget:
        best_idx = -1
        if spec is not None:
            best_gain = -math.inf
            for idx, st in enumerate(states):
                if st.active and st.best_gain > best_gain + GAIN_TOL:
                    best_gain = st.best_gain
                    best_idx = idx
        else:
            best_score = None
            for idx, st in enumerate(states):
                if not st.active:
                    continue
                score = Fraction(1, 1 << st.depth) * st.best_inf
                if best_score is None or score > best_score:
                    best_score = score
                    best_idx = idx
        if best_idx < 0:
            trace.stop_reason = "no-candidates"
            break
        st = states[best_idx]
        if cfg.stop_on_zero_gain and st.best_gain <= GAIN_TOL:
            trace.stop_reason = "zero-gain"
            break

        coord = st.best_coord
        inf_split = st.cursor.influence(coord)
        hi_cur, lo_cur = st.cursor.split(coord)
        hi = _LeafState(hi_cur, st.depth + 1, spec, st.path_key | {(coord, 1)})
        lo = _LeafState(lo_cur, st.depth + 1, spec, st.path_key | {(coord, -1)})

        dist_before = dist
        dist = dist - st.err_frac + hi.err_frac + lo.err_frac
        u_f = u_f - st.u_term + hi.u_term + lo.u_term
        if spec is not None:
            g_imp = g_imp - st.best_gain  # telescoping: potential drops by the gain

        t = treemod.split(t, best_idx, coord)
        states[best_idx : best_idx + 1] = [hi, lo]

        trace.steps.append(
            TraceStep(
                iteration=len(trace.steps) + 1,
                leaf_id=best_idx,
                coord=coord,
                theta=None,
                gain=st.best_gain,
                g_impurity=g_imp,
                u_f=u_f,
                distance=dist,
                distance_before=dist_before,
                depth=st.depth,
                inf_split=inf_split,
                expectation_leaf=st.expectation,
                path_key=st.path_key,
            )
        )

    labels = iter([1 if 2 * st.expectation >= 1 else 0 for st in states])
    completed = DecisionTree(_label_preorder(t.root, labels))
    return completed, trace


def _label_preorder(node, labels) -> "treemod.Node":
    if isinstance(node, Leaf):
        return Leaf(next(labels))
    return Internal(
        node.coord, node.theta, _label_preorder(node.hi, labels), _label_preorder(node.lo, labels)
    )


# ---------------------------------------------------------------------------
# potentials as standalone operations
# ---------------------------------------------------------------------------


def g_impurity(t: treemod.Tree, f: BoolFunc, spec: ImpuritySpec) -> float:
    """sum over leaves of 2^-|l| * G(E[f_l]), summed in DFS preorder."""
    if t.is_real:
        raise ValueError("g_impurity applies to binary-mode trees")
    total = 0.0
    root = SubcubeView.of_function(f)
    for info in treemod.leaves(t):
        view = root.restrict(info.restriction())
        total += math.ldexp(evaluate(spec, view.expectation()), -info.depth)
    return total


def influence_potential(t: treemod.Tree, f: BoolFunc) -> Fraction:
    """sum over leaves of 2^-|l| * Inf(f_l), with Inf the total influence."""
    total = Fraction(0)
    root = SubcubeView.of_function(f)
    for info in treemod.leaves(t):
        view = root.restrict(info.restriction())
        total += Fraction(1, 1 << info.depth) * view.total_influence()
    return total


def purity_gain(
    t: treemod.Tree, f: BoolFunc, spec: ImpuritySpec, leaf_id: int, coord: int
) -> float:
    """Potential decrease from splitting the identified leaf on coord."""
    infos = treemod.leaves(t)
    if not 0 <= leaf_id < len(infos):
        raise ValueError(f"no leaf with id {leaf_id}")
    info = infos[leaf_id]
    for step in info.path:
        if step.coord == coord:
            raise ValueError(f"coordinate {coord} already queried on this path")
    view = SubcubeView.of_function(f).restrict(info.restriction())
    cursor = TableCursor(view)
    if coord not in cursor.free_coords():
        raise ValueError(f"coordinate {coord} not free at this leaf")
    e_hi, e_lo = cursor.child_expectations(coord)
    local = evaluate(spec, view.expectation()) - 0.5 * (
        evaluate(spec, e_hi) + evaluate(spec, e_lo)
    )
    return math.ldexp(local, -info.depth)


# ---------------------------------------------------------------------------
# per-iteration guarantee verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IterationCheck:
    iteration: int
    gain: float
    monitored: bool  # distance before the split exceeded opt_s + eps
    score_bound: float | None  # kappa eps^2 / (32 j (log2 s)^2) when monitored
    score_ok: bool
    claim3_bound: float  # 2^-depth * (kappa/32) * Inf^2  (gates)
    claim3_ok: bool
    claim3_tight_bound: float  # 2^-depth * (kappa/2) * Inf^2  (reported only)
    claim3_tight_ok: bool
    claim2_ok: bool  # distance <= G-impurity after this split


@dataclass
class SplitInequalityReport:
    claim1_ok: bool
    initial_claim2_ok: bool
    checks: list[IterationCheck]
    monitored_count: int

    @property
    def passed(self) -> bool:
        return (
            self.claim1_ok
            and self.initial_claim2_ok
            and all(c.score_ok and c.claim3_ok and c.claim2_ok for c in self.checks)
        )


def verify_split_inequalities(
    trace: GrowthTrace,
    f,
    spec: ImpuritySpec | None = None,
    monitor: Monitor | None = None,
) -> SplitInequalityReport:
    """Check the recorded growth against the per-step guarantees.

    Guarantees hold for monotone targets only; a non-monotone f is refused.
    """
    if trace.mode != "impurity":
        raise ValueError("split inequalities apply to impurity-rule traces")
    if isinstance(f, BoolFunc):
        if not is_monotone(f):
            raise ValueError("refused: target function is not monotone")
    elif f is not None and not getattr(f, "monotone", True):
        raise ValueError("refused: target function is not monotone")
    monitor = monitor or trace.monitor
    if monitor is None:
        raise ValueError("no monitor parameters supplied")
    kappa = spec.kappa if spec is not None else trace.kappa
    if kappa is None:
        raise ValueError("trace lacks an impurity spec")

    g0 = trace.initial_g_impurity
    claim1_ok = abs(g0 - evaluate(spec, trace.initial_expectation)) <= CHECK_TOL if spec else True
    claim1_ok = claim1_ok and g0 <= 1.0 + CHECK_TOL
    initial_claim2_ok = float(trace.initial_distance) <= g0 + CHECK_TOL

    log2s_sq = math.log2(monitor.s) ** 2
    eps_f = float(monitor.eps)
    threshold = monitor.opt_s + monitor.eps

    checks = []
    monitored_count = 0
    for st in trace.steps:
        monitored = st.distance_before > threshold
        if monitored:
            monitored_count += 1
            bound = kappa * eps_f * eps_f / (32.0 * st.iteration * log2s_sq)
            score_ok = st.gain > bound
        else:
            bound = None
            score_ok = True
        inf_sq = float(st.inf_split) ** 2
        b32 = math.ldexp(kappa / 32.0 * inf_sq, -st.depth)
        b2 = math.ldexp(kappa / 2.0 * inf_sq, -st.depth)
        claim3_ok = st.gain >= b32 - CHECK_TOL
        claim2_ok = float(st.distance) <= st.g_impurity + CHECK_TOL
        checks.append(
            IterationCheck(
                iteration=st.iteration,
                gain=st.gain,
                monitored=monitored,
                score_bound=bound,
                score_ok=score_ok,
                claim3_bound=b32,
                claim3_ok=claim3_ok,
                claim3_tight_bound=b2,
                claim3_tight_ok=st.gain >= b2 - CHECK_TOL,
                claim2_ok=claim2_ok,
            )
        )
    return SplitInequalityReport(claim1_ok, initial_claim2_ok, checks, monitored_count)


# ---------------------------------------------------------------------------
# argmax agreement between the two split rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AgreementReport:
    leaf_id: int
    gain_argmax: dict  # impurity name -> (chosen coord, tied set)
    influence_pick: int
    influence_argmax: tuple[int, ...]
    correlation_argmax: tuple[int, ...]

    @property
    def passed(self) -> bool:
        return all(pick == self.influence_pick for pick, _ in self.gain_argmax.values())


def argmax_agreement(
    f: BoolFunc, t: PartialTree, leaf_id: int, specs: Sequence[ImpuritySpec] | None = None
) -> AgreementReport:
    """At one leaf, compare the purity-gain argmax against the influence argmax.

    For monotone f the most influential coordinate is the most correlated
    one, and any concave impurity's best split is the most correlated
    coordinate, so all picks must agree (up to the shared tie-break).
    """
    if specs is None:
        from .impurity import BUILTIN_NAMES, builtin

        specs = [builtin(name) for name in BUILTIN_NAMES]
    if not is_monotone(f):
        raise ValueError("argmax agreement is only guaranteed for monotone f")
    infos = treemod.leaves(t)
    if not 0 <= leaf_id < len(infos):
        raise ValueError(f"no leaf with id {leaf_id}")
    info = infos[leaf_id]
    view = SubcubeView.of_function(f).restrict(info.restriction())
    if view.is_constant():
        raise ValueError("leaf subfunction is constant; argmax is vacuous")
    cursor = TableCursor(view)
    free = cursor.free_coords()

    influences = {c: cursor.influence(c) for c in free}
    max_inf = max(influences.values())
    inf_set = tuple(c for c in free if influences[c] == max_inf)

    correlations = {c: abs(view.correlation(c)) for c in free}
    max_corr = max(correlations.values())
    corr_set = tuple(c for c in free if correlations[c] == max_corr)

    gain_argmax = {}
    for spec in specs:
        g_here = evaluate(spec, cursor.expectation())
        gains = {}
        for coord in free:
            e_hi, e_lo = cursor.child_expectations(coord)
            gains[coord] = g_here - 0.5 * (evaluate(spec, e_hi) + evaluate(spec, e_lo))
        best = max(gains.values())
        tied = tuple(c for c in free if gains[c] >= best - GAIN_TOL)
        gain_argmax[spec.name] = (tied[0], tied)

    return AgreementReport(
        leaf_id=leaf_id,
        gain_argmax=gain_argmax,
        influence_pick=inf_set[0],
        influence_argmax=inf_set,
        correlation_argmax=corr_set,
    )


def rule_agreement(trace_a: GrowthTrace, trace_b: GrowthTrace) -> tuple[int, list]:
    """Compare the coordinate chosen at every subcube split by both runs.

    Returns (number of common subcubes, list of disagreements).
    """
    a = trace_a.split_choices()
    b = trace_b.split_choices()
    common = a.keys() & b.keys()
    mismatches = [(key, a[key], b[key]) for key in common if a[key] != b[key]]
    return len(common), mismatches


# ---------------------------------------------------------------------------
# trace CSV
# ---------------------------------------------------------------------------

TRACE_COLUMNS = ("iter", "leaf_id", "coord", "theta", "gain", "g_impurity", "u_f", "distance")


def _fmt_float(v: float | None) -> str:
    return "" if v is None else repr(v)


def _fmt_frac(v: Fraction | None) -> str:
    return "" if v is None else str(v)


def write_trace_csv(trace: GrowthTrace, path) -> None:
    """Trace schema: exact columns as fractions, float columns via repr.

    Rerunning an identical config reproduces the file byte for byte.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        w.writerow(
            [
                0,
                "",
                "",
                "",
                "",
                _fmt_float(trace.initial_g_impurity),
                _fmt_frac(trace.initial_u_f),
                _fmt_frac(trace.initial_distance),
            ]
        )
        for st in trace.steps:
            w.writerow(
                [
                    st.iteration,
                    st.leaf_id,
                    st.coord,
                    _fmt_float(st.theta),
                    _fmt_float(st.gain),
                    _fmt_float(st.g_impurity),
                    _fmt_frac(st.u_f),
                    _fmt_frac(st.distance),
                ]
            )
