"""Structured OR-of-ANDs targets with a majority attached: greedy stress tests.

The target family lives on ell + k coordinates.  The first ell are x's,
grouped into m terms of width w (trailing x's beyond m*w are unused); the
last k (k odd) are y's feeding a majority.  With

    T'(x) = OR of the first m' terms,   T(x) = OR of all m terms,

the target is

    f(x, y) = T'(x)  or  ( T(x) and Maj_k(y) ).

All coordinates enter positively, so f is monotone.  Probabilities under
the uniform distribution factor over terms (their coordinate sets are
disjoint), which gives closed forms for the expectation and every
coordinate influence under any restriction.  Those closed forms back a
grower cursor, so greedy growth runs on instances far beyond truth-table
size; to_boolfunc() materializes the table (arity <= 24 only) to
cross-check the formulas by brute force.

Parameter choice: w is picked so Pr[T] is as close to 1/2 as possible
subject to m = ell//w >= 2, and m' so Pr[T'] lands near (but a hair
under) 1/2, giving the y-block a real share of the function's mass:
dist(f, T) = Pr[T and not T'] / 2 exactly.

lower_bound_experiment() grows a budgeted tree on an instance, tracks the
exact error curve, Monte-Carlo checks it, and measures how often the
grown tree queries an x coordinate before its path has seen many y's.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import tree as treemod
from .boolfn import MAX_ARITY, BoolFunc, Restriction, derived_rng
from .grower import GrowthConfig, GrowthTrace, grow
from .impurity import ImpuritySpec
from .tree import DecisionTree, Internal, Leaf

_HALF_TARGET = Fraction(1, 2)
_PRIME_TARGET = Fraction(499, 1000)


@dataclass(frozen=True)
class TribesParams:
    """Term layout of the OR-of-ANDs block on ell coordinates."""

    ell: int
    w: int
    m: int
    m_prime: int
    p_full: Fraction  # Pr[T]
    p_prime: Fraction  # Pr[T']

    @property
    def p_rest(self) -> Fraction:
        """Pr[T and not T']."""
        return self.p_full - self.p_prime

    def term_coords(self, j: int) -> tuple[int, ...]:
        if not 1 <= j <= self.m:
            raise ValueError(f"term index {j} out of range 1..{self.m}")
        base = (j - 1) * self.w
        return tuple(range(base + 1, base + self.w + 1))


def _or_prob(w: int, terms: int) -> Fraction:
    miss = 1 - Fraction(1, 1 << w)
    return 1 - miss**terms


def tribes_params(ell: int) -> TribesParams:
    """Width w: Pr[T] nearest 1/2 with at least two terms; then m' near 1/2."""
    if ell < 2:
        raise ValueError("need ell >= 2 to fit two terms")
    best = None
    for w in range(1, ell // 2 + 1):
        m = ell // w
        gap = abs(_or_prob(w, m) - _HALF_TARGET)
        if best is None or gap < best[0]:
            best = (gap, w, m)
    _, w, m = best
    best_prime = None
    for mp in range(1, m):
        gap = abs(_or_prob(w, mp) - _PRIME_TARGET)
        if best_prime is None or gap < best_prime[0]:
            best_prime = (gap, mp)
    m_prime = best_prime[1]
    return TribesParams(
        ell=ell,
        w=w,
        m=m,
        m_prime=m_prime,
        p_full=_or_prob(w, m),
        p_prime=_or_prob(w, m_prime),
    )


# ---------------------------------------------------------------------------
# majority tail helpers (exact, cached)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _binomial_tail(u: int, t0: int) -> Fraction:
    """Pr[Bin(u, 1/2) >= t0]."""
    if t0 <= 0:
        return Fraction(1)
    if t0 > u:
        return Fraction(0)
    return Fraction(sum(math.comb(u, t) for t in range(t0, u + 1)), 1 << u)


def _maj_prob(u: int, sigma: int) -> Fraction:
    """Pr[sigma + (sum of u fresh signs) > 0]."""
    return _binomial_tail(u, max(0, (u - sigma) // 2 + 1))


def _tie_prob(u: int, sigma: int) -> Fraction:
    """Pr[sigma + (sum of u fresh signs) == 0]."""
    if (u - sigma) % 2:
        return Fraction(0)
    t = (u - sigma) // 2
    if t < 0 or t > u:
        return Fraction(0)
    return Fraction(math.comb(u, t), 1 << u)


# ---------------------------------------------------------------------------
# the instance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HardInstance:
    params: TribesParams
    k: int
    c1: float = 1.0

    def __post_init__(self):
        if self.k < 1 or self.k % 2 == 0:
            raise ValueError("majority arity k must be odd and positive")
        if self.c1 <= 0:
            raise ValueError("c1 must be positive")

    @property
    def arity(self) -> int:
        return self.params.ell + self.k

    @property
    def monotone(self) -> bool:
        return True

    @property
    def shape_satisfied(self) -> bool:
        """Whether k is small enough for the intended regime: log2(ell)/ell <= c1/sqrt(k)."""
        ell = self.params.ell
        return math.log2(ell) / ell <= self.c1 / math.sqrt(self.k)

    @property
    def expectation(self) -> Fraction:
        return restricted_expectation(self, None)

    @property
    def distance_to_terms(self) -> Fraction:
        """dist(f, T): they differ exactly on (T and not T') times Maj = 0."""
        return self.params.p_rest / 2

    def y_coords(self) -> range:
        return range(self.params.ell + 1, self.arity + 1)

    def root_cursor(self) -> "_HardCursor":
        return _HardCursor(self, {})


def choose_params(ell: int, k: int, c1: float = 1.0) -> HardInstance:
    """Pick tribes parameters for ell and pair them with a k-bit majority block."""
    return HardInstance(tribes_params(ell), k, c1)


make_instance = choose_params


def _term_factors(h: HardInstance, fixed: dict[int, int]) -> list[Fraction]:
    """Per term, Pr[term unsatisfied] given the assignment (1 for dead terms)."""
    factors = []
    for j in range(1, h.params.m + 1):
        dead = False
        free = 0
        for c in h.params.term_coords(j):
            v = fixed.get(c)
            if v == -1:
                dead = True
                break
            if v is None:
                free += 1
        if dead:
            factors.append(Fraction(1))
        else:
            factors.append(1 - Fraction(1, 1 << free))
    return factors


def _y_profile(h: HardInstance, fixed: dict[int, int]) -> tuple[int, int]:
    """(free y count, signed sum of fixed y's)."""
    sigma = 0
    free = h.k
    for c in h.y_coords():
        v = fixed.get(c)
        if v is not None:
            sigma += v
            free -= 1
    return free, sigma


def _as_fixed(h: HardInstance, r: Restriction | None) -> dict[int, int]:
    if r is None:
        return {}
    for c, _ in r.fixed:
        if not 1 <= c <= h.arity:
            raise ValueError(f"coordinate {c} out of range 1..{h.arity}")
    return dict(r.fixed)


def _expectation(h: HardInstance, fixed: dict[int, int]) -> Fraction:
    factors = _term_factors(h, fixed)
    qp = math.prod(factors[: h.params.m_prime], start=Fraction(1))
    q = qp * math.prod(factors[h.params.m_prime :], start=Fraction(1))
    u, sigma = _y_profile(h, fixed)
    return (1 - qp) + (qp - q) * _maj_prob(u, sigma)


def _influence(h: HardInstance, fixed: dict[int, int], i: int) -> Fraction:
    if not 1 <= i <= h.arity:
        raise ValueError(f"coordinate {i} out of range 1..{h.arity}")
    if fixed.get(i) is not None:
        raise ValueError(f"coordinate {i} is fixed by the restriction")
    ell = h.params.ell
    factors = _term_factors(h, fixed)
    u, sigma = _y_profile(h, fixed)
    if i > ell:
        # y flip matters iff the rest event holds and the other y's tie
        qp = math.prod(factors[: h.params.m_prime], start=Fraction(1))
        q = qp * math.prod(factors[h.params.m_prime :], start=Fraction(1))
        return (qp - q) * _tie_prob(u - 1, sigma)
    if i > h.params.m * h.params.w:
        return Fraction(0)  # slack coordinate, not in any term
    j = (i - 1) // h.params.w + 1
    pivot = Fraction(1)
    for c in h.params.term_coords(j):
        if c == i:
            continue
        v = fixed.get(c)
        if v == -1:
            return Fraction(0)
        if v is None:
            pivot /= 2
    a = math.prod(
        (factors[jj] for jj in range(h.params.m_prime) if jj != j - 1), start=Fraction(1)
    )
    b = a * math.prod(
        (factors[jj] for jj in range(h.params.m_prime, h.params.m) if jj != j - 1),
        start=Fraction(1),
    )
    mp = _maj_prob(u, sigma)
    if j <= h.params.m_prime:
        # flip moves T'; f changes unless another prime term fires, or a
        # plain term fires together with a positive majority
        return pivot * (b + (a - b) * (1 - mp))
    # flip moves T only; f changes iff no other term fires and Maj = 1
    return pivot * b * mp


def _total_influence(h: HardInstance, fixed: dict[int, int]) -> Fraction:
    total = Fraction(0)
    for c in range(1, h.params.ell + 1):
        if fixed.get(c) is None:
            total += _influence(h, fixed, c)
    free_y = [c for c in h.y_coords() if fixed.get(c) is None]
    if free_y:
        # all free y's share one influence value
        total += len(free_y) * _influence(h, fixed, free_y[0])
    return total


def restricted_expectation(h: HardInstance, r: Restriction | None = None) -> Fraction:
    """E[f given r] = Pr[T'] + Pr[T and not T'] * Pr[Maj], all exact."""
    return _expectation(h, _as_fixed(h, r))


def restricted_influence(h: HardInstance, r: Restriction | None, i: int) -> Fraction:
    """Pr[f changes when coordinate i is flipped], given the restriction."""
    return _influence(h, _as_fixed(h, r), i)


def restricted_total_influence(h: HardInstance, r: Restriction | None = None) -> Fraction:
    """Sum of the influences of all free coordinates."""
    return _total_influence(h, _as_fixed(h, r))


def evaluate(h: HardInstance, x) -> int:
    if len(x) != h.arity:
        raise ValueError(f"expected {h.arity} coordinates, got {len(x)}")
    if any(v not in (-1, 1) for v in x):
        raise ValueError("coordinates must be -1 or +1")
    t_prime = False
    t_full = False
    for j in range(1, h.params.m + 1):
        if all(x[c - 1] == 1 for c in h.params.term_coords(j)):
            t_full = True
            if j <= h.params.m_prime:
                t_prime = True
                break
    if t_prime:
        return 1
    if not t_full:
        return 0
    return 1 if sum(x[c - 1] for c in h.y_coords()) > 0 else 0


class _HardCursor:
    """Grower cursor backed by the closed-form restricted statistics."""

    __slots__ = ("inst", "fixed")

    def __init__(self, inst: HardInstance, fixed: dict[int, int]):
        self.inst = inst
        self.fixed = fixed

    def expectation(self) -> Fraction:
        return _expectation(self.inst, self.fixed)

    def free_coords(self) -> tuple[int, ...]:
        return tuple(c for c in range(1, self.inst.arity + 1) if c not in self.fixed)

    def child_expectations(self, coord: int) -> tuple[Fraction, Fraction]:
        hi = _expectation(self.inst, {**self.fixed, coord: 1})
        lo = _expectation(self.inst, {**self.fixed, coord: -1})
        return hi, lo

    def influence(self, coord: int) -> Fraction:
        return _influence(self.inst, self.fixed, coord)

    def total_influence(self) -> Fraction:
        return _total_influence(self.inst, self.fixed)

    def split(self, coord: int) -> tuple["_HardCursor", "_HardCursor"]:
        return (
            _HardCursor(self.inst, {**self.fixed, coord: 1}),
            _HardCursor(self.inst, {**self.fixed, coord: -1}),
        )


# ---------------------------------------------------------------------------
# materialization (small arities) and reference structures
# ---------------------------------------------------------------------------


def to_boolfunc(h: HardInstance) -> BoolFunc:
    """Materialize the truth table; refuses arity beyond the table cap."""
    if h.arity > MAX_ARITY:
        raise ValueError(f"arity {h.arity} exceeds the truth-table cap {MAX_ARITY}")
    ell, k = h.params.ell, h.k
    x_idx = np.arange(1 << ell, dtype=np.uint32)
    t_prime = np.zeros(1 << ell, dtype=bool)
    t_full = np.zeros(1 << ell, dtype=bool)
    for j in range(1, h.params.m + 1):
        mask = 0
        for c in h.params.term_coords(j):
            mask |= 1 << (c - 1)
        sat = (x_idx & mask) == mask
        t_full |= sat
        if j <= h.params.m_prime:
            t_prime |= sat
    y_idx = np.arange(1 << k, dtype=np.uint64)
    maj = 2 * np.bitwise_count(y_idx).astype(np.int64) > k
    rest = t_full & ~t_prime
    vals = t_prime[np.newaxis, :] | (maj[:, np.newaxis] & rest[np.newaxis, :])
    packed = np.packbits(vals.reshape(-1).astype(np.uint8), bitorder="little")
    return BoolFunc(h.arity, int.from_bytes(packed.tobytes(), "little"))


def terms_boolfunc(h: HardInstance) -> BoolFunc:
    """T as a function on the full arity (ignores the y block)."""
    from .boolfn import from_dnf

    terms = [[c for c in h.params.term_coords(j)] for j in range(1, h.params.m + 1)]
    return from_dnf(h.arity, terms)


def terms_tree(params: TribesParams) -> DecisionTree:
    """A decision tree computing T: chained term tests, shared fall-through."""

    def build(j: int):
        if j > params.m:
            return Leaf(0)
        fail = build(j + 1)
        node = Leaf(1)
        for c in reversed(params.term_coords(j)):
            node = Internal(c, None, node, fail)
        return node

    return DecisionTree(build(1))


def terms_tree_size(params: TribesParams) -> int:
    size = 1
    for _ in range(params.m):
        size = params.w * size + 1
    return size


# ---------------------------------------------------------------------------
# growth experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentReport:
    ell: int
    w: int
    m: int
    m_prime: int
    k: int
    budget: int
    impurity: str | None
    threshold: float
    stop_reason: str
    final_size: int
    initial_distance: Fraction
    final_distance: Fraction  # exact completion distance at the end of growth
    terms_distance: Fraction  # dist(f, T): what a terms-only tree achieves
    mc_estimate: float
    mc_halfwidth: float  # 99% confidence, distribution-free
    xi_cutoff: int
    xi_fraction: float  # paths querying an x before xi_cutoff many y's
    error_curve: tuple  # exact distance after split 0, 1, 2, ...

    @property
    def exact_above_threshold(self) -> bool:
        return float(self.final_distance) > self.threshold

    @property
    def mc_above_threshold(self) -> bool:
        return self.mc_estimate - self.mc_halfwidth > self.threshold


def xi_cutoff(k: int, c3: float = 0.5) -> int:
    """How many y queries a path may see before an x query counts as early."""
    if k < 2:
        return 0
    return int(c3 * k / math.log2(k))


def lower_bound_experiment(
    h: HardInstance,
    spec: ImpuritySpec | None,
    budget: int,
    mc_samples: int = 20000,
    seed: int = 0,
    threshold: float = 0.4,
    c3: float = 0.5,
) -> tuple[ExperimentReport, DecisionTree, GrowthTrace]:
    """Grow on the instance, then measure how far the result stays from f."""
    dtree, trace = grow(h, GrowthConfig(budget=budget, impurity=spec))

    rng = derived_rng(seed, "hard", "mc")
    ell = h.params.ell
    cutoff = xi_cutoff(h.k, c3)
    errors = 0
    early_x = 0
    for _ in range(mc_samples):
        x = [1 if rng.random() < 0.5 else -1 for _ in range(h.arity)]
        if treemod.evaluate(dtree, x) != evaluate(h, x):
            errors += 1
        y_seen = 0
        for step in treemod.path_of(dtree, x).path:
            if step.coord > ell:
                y_seen += 1
                if y_seen > cutoff:
                    break
            else:
                early_x += 1
                break
    halfwidth = math.sqrt(math.log(2 / 0.01) / (2 * mc_samples))

    report = ExperimentReport(
        ell=ell,
        w=h.params.w,
        m=h.params.m,
        m_prime=h.params.m_prime,
        k=h.k,
        budget=budget,
        impurity=spec.name if spec else None,
        threshold=threshold,
        stop_reason=trace.stop_reason,
        final_size=trace.final_size,
        initial_distance=trace.initial_distance,
        final_distance=trace.final_distance(),
        terms_distance=h.distance_to_terms,
        mc_estimate=errors / mc_samples,
        mc_halfwidth=halfwidth,
        xi_cutoff=cutoff,
        xi_fraction=early_x / mc_samples,
        error_curve=tuple([trace.initial_distance] + [st.distance for st in trace.steps]),
    )
    return report, dtree, trace
