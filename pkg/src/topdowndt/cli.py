"""Command-line experiment harness.

Every run is described by an ExperimentConfig (subcommand flags, or a JSON
config file that flags override) and produces a ResultBundle on disk:

    out/
      config.json     exact echo of the resolved config
      summary.json    version, headline numbers, and check outcomes
      *.csv           experiment rows and growth traces
      plotdata/*.csv  (x, y, series) files for external plotting

All randomness flows from the single --seed through named substreams, one
per trial, so --threads changes wall time but never results.  Re-running
an identical config byte-reproduces every file.

Exit status: 0 when every enabled check passes, 1 when a check fails
(the bundle is still written), 2 for an invalid config.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import boolfn
from . import hardinstance
from . import oracle
from . import realvalued
from . import tree as treemod
from .boolfn import BoolFunc, derived_rng, is_monotone, random_monotone
from .grower import (
    GrowthConfig,
    GrowthTrace,
    Monitor,
    grow,
    rule_agreement,
    verify_split_inequalities,
    write_trace_csv,
)
from .impurity import BUILTIN_NAMES, builtin, verify_shape, verify_strong_concavity
from .realvalued import (
    CoordinateDist,
    ProductDistribution,
    RealSample,
    balanced_random_tree,
    booleanized_evaluate,
    cdf_transform,
    encode_point,
    estimate_dist,
    grow_real,
    round_thresholds,
)
from .tree import PartialTree, label_leaves, random_monotone_tree


class ConfigError(ValueError):
    """Invalid experiment configuration; maps to exit status 2."""


KINDS = (
    "grow",
    "grow-real",
    "opt",
    "jz-sweep",
    "agnostic-sweep",
    "hard",
    "realizable",
    "round-check",
    "verify-impurity",
)

DEFAULT_IMPURITIES = ("gini", "entropy", "kearns-mansour")


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    out: str = ""
    threads: int = 1
    fn: str = ""  # function spec JSON (boolfn serialization)
    arity: int = 8
    impurity: str = "gini"  # an impurity name, or "influence"
    impurities: tuple[str, ...] = DEFAULT_IMPURITIES
    budget: int = 16
    size: int = 2
    sizes: tuple[int, ...] = (2, 4, 8)
    epsilon: float = 0.1
    trials: int = 20
    samples: int = 20000
    threshold: float = 0.35
    ell: int = 8
    k: int = 15
    data: str = ""
    dist: str = ""
    thresholds: str = "midpoints"
    leaves: int = 64
    teacher_leaves: int = 16
    target: float = 0.05
    monitor_size: int = 0  # 0 disables the monitor
    inject_failure: bool = False  # self-test hook: adds one always-failing check

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if not self.out:
            self.out = f"results/{self.kind}"
        for name, low in (
            ("budget", 1),
            ("trials", 1),
            ("samples", 1),
            ("threads", 1),
            ("size", 1),
            ("leaves", 1),
            ("teacher_leaves", 1),
            ("arity", 1),
            ("ell", 2),
            ("k", 1),
        ):
            if getattr(self, name) < low:
                raise ConfigError(f"{name} must be >= {low}")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if not 0 < self.target < 1:
            raise ConfigError("target must be in (0,1)")
        if self.impurity not in ("influence", "all") and self.impurity not in BUILTIN_NAMES:
            try:
                builtin(self.impurity)
            except (KeyError, ValueError):
                raise ConfigError(f"unknown impurity {self.impurity!r}") from None
        for name in self.impurities:
            try:
                builtin(name)
            except (KeyError, ValueError):
                raise ConfigError(f"unknown impurity {name!r}") from None


@dataclass
class ResultBundle:
    out_dir: Path
    summary: dict
    checks: dict[str, bool]
    files: list[str]
    payload: dict = field(default_factory=dict, repr=False)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


# ---------------------------------------------------------------------------
# formatting and small shared helpers
# ---------------------------------------------------------------------------


def _dyadic(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _cell(v) -> str:
    if isinstance(v, Fraction):
        return _dyadic(v)
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _trial_seed(cfg: ExperimentConfig, index: int) -> int:
    # distinct per-trial streams derived from the one config seed
    return cfg.seed * 1_000_003 + index


def _parallel(fn, count: int, threads: int) -> list:
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, range(count)))


def _impurity_or_none(name: str):
    return None if name == "influence" else builtin(name)


def _load_function(cfg: ExperimentConfig) -> tuple[BoolFunc, str]:
    if cfg.fn:
        path = Path(cfg.fn)
        if not path.exists():
            raise ConfigError(f"function spec not found: {path}")
        with open(path) as fh:
            spec = json.load(fh)
        try:
            f = boolfn.from_spec(spec)
        except (KeyError, ValueError) as e:
            raise ConfigError(f"bad function spec {path}: {e}") from None
        return f, path.stem
    f = random_monotone(cfg.arity, seed=cfg.seed)
    return f, f"random-monotone-n{cfg.arity}-seed{cfg.seed}"


def _distance_curve(trace: GrowthTrace) -> list[tuple[int, Fraction]]:
    curve = [(1, trace.initial_distance)]
    for st in trace.steps:
        curve.append((st.iteration + 1, st.distance))
    return curve


def _nonincreasing(curve) -> bool:
    return all(b <= a for (_, a), (_, b) in zip(curve, curve[1:]))


def _sweep_budget(s: int, n: int) -> int:
    return min(1 << n, s ** math.ceil(math.log2(s)) if s > 1 else 1)


# ---------------------------------------------------------------------------
# experiment runners: each returns (summary, checks, files, payload)
# ---------------------------------------------------------------------------


def _run_grow(cfg: ExperimentConfig, out: Path):
    f, fname = _load_function(cfg)
    spec = _impurity_or_none(cfg.impurity)
    monitor = None
    if cfg.monitor_size:
        if spec is None:
            raise ConfigError("the growth monitor needs an impurity rule")
        if f.n > oracle.OPT_MAX_ARITY:
            raise ConfigError("monitoring needs the exact oracle; reduce arity")
        opt_s, _ = oracle.opt(f, cfg.monitor_size)
        monitor = Monitor(cfg.monitor_size, Fraction(cfg.epsilon).limit_denominator(10**9), opt_s)
    dtree, trace = grow(
        f, GrowthConfig(budget=cfg.budget, impurity=spec, stop_on_zero_gain=True, monitor=monitor)
    )
    write_trace_csv(trace, out / "trace.csv")
    curve = _distance_curve(trace)
    checks = {"distance-nonincreasing": _nonincreasing(curve)}
    payload = {"curve": curve, "trace": trace}
    if monitor is not None and is_monotone(f):
        report = verify_split_inequalities(trace, f, spec)
        checks["split-inequalities"] = report.passed
        payload["inequalities"] = report
    summary = {
        "function": fname,
        "arity": f.n,
        "rule": cfg.impurity,
        "budget": cfg.budget,
        "final_size": trace.final_size,
        "final_distance": _dyadic(trace.final_distance()),
        "stop_reason": trace.stop_reason,
    }
    return summary, checks, ["trace.csv"], payload


def _coordinate_from_spec(entry: dict, columns: dict[str, list[float]]) -> CoordinateDist:
    kind = entry.get("kind")
    if kind == "uniform01":
        return CoordinateDist.uniform01()
    if kind == "cdf_table":
        return CoordinateDist.from_table([tuple(p) for p in entry["points"]])
    if kind == "empirical":
        col = entry["column"]
        if col not in columns:
            raise ConfigError(f"distribution spec names unknown column {col!r}")
        return CoordinateDist.from_data(columns[col])
    raise ConfigError(f"unknown coordinate distribution kind {kind!r}")


def _load_real_sample(cfg: ExperimentConfig) -> tuple[RealSample, list[str]]:
    if not cfg.data:
        raise ConfigError("grow-real needs --data CSV")
    path = Path(cfg.data)
    if not path.exists():
        raise ConfigError(f"dataset not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty dataset") from None
        if "label" in header:
            label_idx = header.index("label")
        else:
            label_idx = len(header) - 1
        feature_names = [h for i, h in enumerate(header) if i != label_idx]
        points = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ConfigError(f"{path}:{lineno}: expected {len(header)} columns")
            try:
                x = tuple(float(v) for i, v in enumerate(row) if i != label_idx)
                label = int(row[label_idx])
            except ValueError as e:
                raise ConfigError(f"{path}:{lineno}: {e}") from None
            if label not in (0, 1):
                raise ConfigError(f"{path}:{lineno}: label must be 0 or 1")
            points.append((x, label))
    if not points:
        raise ConfigError(f"{path}: no data rows")
    sample = RealSample(tuple(points), provenance=str(path))
    if cfg.dist:
        dist_path = Path(cfg.dist)
        if not dist_path.exists():
            raise ConfigError(f"distribution spec not found: {dist_path}")
        with open(dist_path) as fh:
            entries = json.load(fh)
        if not isinstance(entries, list) or len(entries) != sample.n:
            raise ConfigError(
                f"distribution spec must list one entry per feature column ({sample.n})"
            )
        columns = {
            name: [p[0][i] for p in sample.points] for i, name in enumerate(feature_names)
        }
        d = ProductDistribution(
            tuple(_coordinate_from_spec(e, columns) for e in entries)
        )
        transformed = tuple((cdf_transform(d, x), label) for x, label in sample.points)
        sample = RealSample(transformed, provenance=f"{path} via {dist_path}")
    return sample, feature_names


def _run_grow_real(cfg: ExperimentConfig, out: Path):
    sample, feature_names = _load_real_sample(cfg)
    if cfg.impurity == "influence":
        raise ConfigError("real-valued growth needs an impurity rule")
    dtree, trace = grow_real(
        sample,
        GrowthConfig(budget=cfg.budget, impurity=builtin(cfg.impurity), stop_on_zero_gain=True),
        policy=cfg.thresholds,
    )
    write_trace_csv(trace, out / "trace.csv")
    with open(out / "tree.json", "w") as fh:
        json.dump(treemod.to_json(dtree), fh, indent=2, sort_keys=True)
        fh.write("\n")
    curve = _distance_curve(trace)
    medians = [st.median_split for st in trace.steps]
    summary = {
        "dataset": sample.provenance,
        "points": len(sample),
        "features": feature_names,
        "impurity": cfg.impurity,
        "threshold_policy": trace.threshold_policy,
        "budget": cfg.budget,
        "final_size": trace.final_size,
        "training_distance": _dyadic(trace.final_distance()),
        "median_split_fraction": (sum(1 for m in medians if m) / len(medians)) if medians else None,
        "stop_reason": trace.stop_reason,
    }
    checks = {"distance-nonincreasing": _nonincreasing(curve)}
    payload = {"curve": curve, "trace": trace}
    return summary, checks, ["trace.csv", "tree.json"], payload


def _run_opt(cfg: ExperimentConfig, out: Path):
    if not cfg.fn:
        raise ConfigError("opt needs --fn (exhaustive search has no random default)")
    f, fname = _load_function(cfg)
    try:
        err, witness = oracle.opt(f, cfg.size)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    with open(out / "witness.json", "w") as fh:
        json.dump(
            {"size_budget": cfg.size, "error": _dyadic(err), "tree": treemod.to_json(witness)},
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    checks = {
        "witness-distance-matches": treemod.distance(witness, f) == err,
        "witness-within-budget": treemod.size(witness) <= cfg.size,
    }
    summary = {
        "function": fname,
        "arity": f.n,
        "size": cfg.size,
        "error": _dyadic(err),
        "witness_size": treemod.size(witness),
    }
    return summary, checks, ["witness.json"], {"opt_line": f"opt_{cfg.size} = {_dyadic(err)}"}


def _random_binary_tree(n: int, max_leaves: int, rng) -> treemod.DecisionTree:
    t = PartialTree.empty()
    target = rng.randint(2, max(2, max_leaves))
    while treemod.size(t) < target:
        infos = [info for info in treemod.leaves(t) if len(info.path) < n]
        if not infos:
            break
        info = rng.choice(infos)
        used = {step.coord for step in info.path}
        coord = rng.choice([c for c in range(1, n + 1) if c not in used])
        t = treemod.split(t, info.leaf_id, coord)
    return label_leaves(t, [rng.randint(0, 1) for _ in range(treemod.size(t))])


def _run_jz_sweep(cfg: ExperimentConfig, out: Path):
    n = cfg.arity
    if n > 16:
        raise ConfigError("jz-sweep enumerates truth tables; keep arity <= 16")

    def one(i: int):
        rng = derived_rng(_trial_seed(cfg, i), "jz")
        f = BoolFunc(n, rng.getrandbits(1 << n))
        g = _random_binary_tree(n, max(2, min(cfg.leaves, 1 << n)), rng)
        rep = oracle.verify_jz(f, g)
        return (i, rep.lhs, rep.numerator, rep.tree_size, rep.rhs, rep.passed)

    rows = _parallel(one, cfg.trials, cfg.threads)
    _write_csv(out / "rows.csv", ("trial", "lhs", "numerator", "size", "rhs", "passed"), rows)
    violations = sum(1 for r in rows if not r[5])
    summary = {"arity": n, "trials": cfg.trials, "violations": violations}
    checks = {"jz-zero-violations": violations == 0}
    return summary, checks, ["rows.csv"], {}


def _run_agnostic_sweep(cfg: ExperimentConfig, out: Path):
    n = cfg.arity
    if n > oracle.OPT_MAX_ARITY:
        raise ConfigError(f"agnostic-sweep needs the exact oracle; arity <= {oracle.OPT_MAX_ARITY}")
    eps = Fraction(cfg.epsilon).limit_denominator(10**9)
    names = tuple(cfg.impurities)

    def one(i: int):
        f = random_monotone(n, seed=_trial_seed(cfg, i))
        out_rows = []
        flags = []
        for s in cfg.sizes:
            opt_s, _ = oracle.opt(f, s)
            budget = _sweep_budget(s, n)
            errs = []
            for name in names:
                spec = builtin(name)
                monitor = Monitor(s, eps, opt_s)
                _, trace = grow(
                    f,
                    GrowthConfig(
                        budget=budget, impurity=spec, stop_on_zero_gain=True, monitor=monitor
                    ),
                )
                err = trace.final_distance()
                errs.append(err)
                report = verify_split_inequalities(trace, f, spec)
                flags.append(
                    (err <= opt_s + eps, report.passed, _nonincreasing(_distance_curve(trace)))
                )
            out_rows.append((i, s, opt_s, *errs))
        return out_rows, flags

    results = _parallel(one, cfg.trials, cfg.threads)
    rows = [row for out_rows, _ in results for row in out_rows]
    flags = [fl for _, fls in results for fl in fls]
    header = ("trial", "s", "opt_s", *(f"err_{name}" for name in names))
    _write_csv(out / "rows.csv", header, rows)
    summary = {
        "arity": n,
        "trials": cfg.trials,
        "sizes": list(cfg.sizes),
        "impurities": list(names),
        "epsilon": cfg.epsilon,
        "budgets": {str(s): _sweep_budget(s, n) for s in cfg.sizes},
    }
    checks = {
        "error-within-eps": all(fl[0] for fl in flags),
        "split-inequalities": all(fl[1] for fl in flags),
        "distance-nonincreasing": all(fl[2] for fl in flags),
    }
    payload = {"agnostic_rows": rows, "agnostic_names": names, "sizes": cfg.sizes}
    return summary, checks, ["rows.csv"], payload


def _hard_checkpoints(final_size: int) -> list[int]:
    sizes = {1, final_size}
    p = 2
    while p < final_size:
        sizes.add(p)
        p *= 2
    return sorted(sizes)


def _run_hard(cfg: ExperimentConfig, out: Path):
    if cfg.k % 2 == 0:
        raise ConfigError("k must be odd (majority needs an odd vote count)")
    h = hardinstance.choose_params(cfg.ell, cfg.k)
    spec = _impurity_or_none(cfg.impurity)
    report, dtree, trace = hardinstance.lower_bound_experiment(
        h, spec, cfg.budget, mc_samples=cfg.samples, seed=cfg.seed, threshold=cfg.threshold
    )

    # shared evaluation sample across checkpoint sizes
    rng = derived_rng(cfg.seed, "hard", "curve")
    points = [
        [1 if rng.random() < 0.5 else -1 for _ in range(h.arity)] for _ in range(cfg.samples)
    ]
    truths = [hardinstance.evaluate(h, x) for x in points]
    halfwidth = math.sqrt(math.log(2 / 0.01) / (2 * cfg.samples))

    want = set(_hard_checkpoints(report.final_size))
    completions = {}
    states = [h.root_cursor()]
    pt = PartialTree.empty()
    if 1 in want:
        completions[1] = label_leaves(pt, [1 if 2 * states[0].expectation() >= 1 else 0])
    for st in trace.steps:
        hi, lo = states[st.leaf_id].split(st.coord)
        states[st.leaf_id : st.leaf_id + 1] = [hi, lo]
        pt = treemod.split(pt, st.leaf_id, st.coord)
        if len(states) in want:
            completions[len(states)] = label_leaves(
                pt, [1 if 2 * c.expectation() >= 1 else 0 for c in states]
            )

    rows = []
    for size_ in sorted(completions):
        ct = completions[size_]
        errors = 0
        early_x = 0
        for x, truth in zip(points, truths):
            if treemod.evaluate(ct, x) != truth:
                errors += 1
            y_seen = 0
            for step in treemod.path_of(ct, x).path:
                if step.coord > cfg.ell:
                    y_seen += 1
                    if y_seen > report.xi_cutoff:
                        break
                else:
                    early_x += 1
                    break
        rows.append((size_, errors / cfg.samples, halfwidth, early_x / cfg.samples))
    _write_csv(out / "rows.csv", ("size", "error_estimate", "error_ci", "xi_fraction"), rows)
    _write_csv(
        out / "exact_curve.csv",
        ("size", "distance"),
        [(i + 1, d) for i, d in enumerate(report.error_curve)],
    )

    summary = {
        "ell": report.ell,
        "k": report.k,
        "w": report.w,
        "m": report.m,
        "m_prime": report.m_prime,
        "p_full": _dyadic(h.params.p_full),
        "p_prime": _dyadic(h.params.p_prime),
        "p_rest": _dyadic(h.params.p_rest),
        "expectation": _dyadic(h.expectation),
        "rule": cfg.impurity,
        "budget": report.budget,
        "final_size": report.final_size,
        "final_distance": _dyadic(report.final_distance),
        "terms_distance": _dyadic(report.terms_distance),
        "mc_estimate": report.mc_estimate,
        "mc_halfwidth": report.mc_halfwidth,
        "threshold": report.threshold,
        "exact_above_threshold": report.exact_above_threshold,
        "xi_cutoff": report.xi_cutoff,
        "xi_fraction": report.xi_fraction,
        "stop_reason": report.stop_reason,
    }
    curve = [(i + 1, d) for i, d in enumerate(report.error_curve)]
    checks = {
        "curve-nonincreasing": _nonincreasing(curve),
        "mc-within-ci": abs(report.mc_estimate - float(report.final_distance))
        <= 4 * report.mc_halfwidth,
    }
    payload = {"hard_rows": rows}
    return summary, checks, ["rows.csv", "exact_curve.csv"], payload


def _run_realizable(cfg: ExperimentConfig, out: Path):
    n = cfg.arity
    budget = min(1 << n, cfg.budget)
    names = tuple(cfg.impurities)

    def one(i: int):
        teacher = random_monotone_tree(n, cfg.teacher_leaves, _trial_seed(cfg, i))
        f = treemod.to_boolfunc(teacher, n)
        out_rows = []
        reached_all = True
        traces = {}
        for name in names:
            _, trace = grow(
                f, GrowthConfig(budget=budget, impurity=builtin(name), stop_on_zero_gain=True)
            )
            traces[name] = trace
            reached = None
            if float(trace.initial_distance) <= cfg.target:
                reached = 1
            else:
                for st in trace.steps:
                    if float(st.distance) <= cfg.target:
                        reached = st.iteration + 1
                        break
            reached_all &= reached is not None
            out_rows.append(
                (i, treemod.size(teacher), name, reached, trace.final_distance())
            )
        _, inf_trace = grow(f, GrowthConfig(budget=budget, impurity=None, stop_on_zero_gain=True))
        mismatches = sum(
            len(rule_agreement(traces[name], inf_trace)[1]) for name in names
        )
        return out_rows, reached_all, mismatches

    results = _parallel(one, cfg.trials, cfg.threads)
    rows = [row for out_rows, _, _ in results for row in out_rows]
    _write_csv(
        out / "rows.csv",
        ("trial", "teacher_leaves", "impurity", "reached_size", "final_distance"),
        rows,
    )
    reached = all(r for _, r, _ in results)
    mismatches = sum(m for _, _, m in results)
    summary = {
        "arity": n,
        "trials": cfg.trials,
        "teacher_leaves": cfg.teacher_leaves,
        "target": cfg.target,
        "budget": budget,
        "rule_mismatches": mismatches,
        "max_reached_size": max((r[3] for r in rows if r[3] is not None), default=None),
    }
    checks = {
        "realizable-reaches-target": reached,
        "rule-agreement": mismatches == 0,
    }
    return summary, checks, ["rows.csv"], {}


def _run_round_check(cfg: ExperimentConfig, out: Path):
    n = cfg.arity
    eps = cfg.epsilon
    d = ProductDistribution.uniform(n)
    agree_per_trial = max(1, math.ceil(10**4 / cfg.trials))

    def one(i: int):
        seed = _trial_seed(cfg, i)
        t = balanced_random_tree(n, cfg.leaves, seed)
        depth = treemod.depth(t)
        w = math.ceil(math.log2(cfg.leaves * max(1, depth) / eps)) + 2
        tr = round_thresholds(t, w)
        est, hw = estimate_dist(t, tr, d, cfg.samples, seed)
        rng = derived_rng(seed, "agreement")
        fails = 0
        for _ in range(agree_per_trial):
            x = d.sample(rng)
            bits = encode_point(x, w)
            if treemod.evaluate(tr, x) != booleanized_evaluate(tr, w, bits):
                fails += 1
        return (i, depth, w, est, hw, fails)

    rows = _parallel(one, cfg.trials, cfg.threads)
    _write_csv(
        out / "rows.csv",
        ("trial", "depth", "w", "estimate", "halfwidth", "agreement_failures"),
        rows,
    )
    summary = {
        "arity": n,
        "trials": cfg.trials,
        "leaves": cfg.leaves,
        "epsilon": eps,
        "samples": cfg.samples,
        "agreement_inputs": agree_per_trial * cfg.trials,
        "max_estimate": max(r[3] for r in rows),
    }
    checks = {
        "round-dist-within-eps": all(r[3] <= eps / 2 + r[4] for r in rows),
        "s-construction-agreement": all(r[5] == 0 for r in rows),
    }
    return summary, checks, ["rows.csv"], {}


def _run_verify_impurity(cfg: ExperimentConfig, out: Path):
    names = BUILTIN_NAMES if cfg.impurity in ("all", "influence") else (cfg.impurity,)
    summary = {}
    checks = {}
    for name in names:
        spec = builtin(name)
        rep = verify_strong_concavity(spec)
        problems = verify_shape(spec)
        summary[name] = {
            "kappa": spec.kappa,
            "min_slack": rep.min_slack,
            "max_slack": rep.max_slack,
            "shape_problems": problems,
        }
        checks[f"concavity-{name}"] = rep.passed
        checks[f"shape-{name}"] = not problems
    return summary, checks, [], {}


_RUNNERS = {
    "grow": _run_grow,
    "grow-real": _run_grow_real,
    "opt": _run_opt,
    "jz-sweep": _run_jz_sweep,
    "agnostic-sweep": _run_agnostic_sweep,
    "hard": _run_hard,
    "realizable": _run_realizable,
    "round-check": _run_round_check,
    "verify-impurity": _run_verify_impurity,
}


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------


def emit_plotdata(bundle: ResultBundle) -> list[str]:
    """Write (x, y, series) CSVs for external plotting tools; returns the files."""
    plot_dir = bundle.out_dir / "plotdata"
    written = []

    def emit(name, header, rows):
        plot_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(plot_dir / name, header, rows)
        written.append(f"plotdata/{name}")

    payload = bundle.payload
    if "curve" in payload:
        emit("error_vs_size.csv", ("size", "distance"), payload["curve"])
    if "trace" in payload:
        trace = payload["trace"]
        rows = [(0, trace.initial_g_impurity)]
        rows += [(st.iteration, st.g_impurity) for st in trace.steps]
        emit("potential_vs_iteration.csv", ("iteration", "g_impurity"), rows)
    if "inequalities" in payload:
        rows = [
            (c.iteration, c.gain, c.score_bound, c.monitored)
            for c in payload["inequalities"].checks
        ]
        emit("gain_vs_bound.csv", ("iteration", "gain", "bound", "monitored"), rows)
    if "agnostic_rows" in payload:
        names = payload["agnostic_names"]
        by_s = {}
        for row in payload["agnostic_rows"]:
            by_s.setdefault(row[1], []).append(row)
        rows = []
        for s in payload["sizes"]:
            group = by_s.get(s, [])
            if not group:
                continue
            mean_opt = sum(float(r[2]) for r in group) / len(group)
            means = [sum(float(r[3 + j]) for r in group) / len(group) for j in range(len(names))]
            rows.append((s, mean_opt, *means))
        emit(
            "agnostic.csv",
            ("s", "opt_s", *(f"err_{name}" for name in names)),
            rows,
        )
    if "hard_rows" in payload:
        emit(
            "error_vs_size.csv",
            ("size", "error_estimate", "ci"),
            [(r[0], r[1], r[2]) for r in payload["hard_rows"]],
        )
    return written


# ---------------------------------------------------------------------------
# run + main
# ---------------------------------------------------------------------------


def run(config: ExperimentConfig) -> ResultBundle:
    """Dispatch to the named experiment and write its ResultBundle."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    summary, checks, files, payload = _RUNNERS[config.kind](config, out)
    if config.inject_failure:
        checks["injected-failure"] = False
    bundle = ResultBundle(out_dir=out, summary=summary, checks=checks, files=files, payload=payload)
    bundle.files.extend(emit_plotdata(bundle))

    with open(out / "config.json", "w") as fh:
        json.dump(dataclasses.asdict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "summary.json", "w") as fh:
        json.dump(
            {
                "version": __version__,
                "kind": config.kind,
                "seed": config.seed,
                "summary": summary,
                "checks": checks,
                "files": sorted(bundle.files),
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    bundle.files.extend(["config.json", "summary.json"])
    return bundle


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--out", default=None, help="output directory (default results/<kind>)")
    p.add_argument("--threads", type=int, default=None, help="parallel trials (default 1)")
    p.add_argument("--config", default=None, help="JSON config file; flags override it")
    p.add_argument(
        "--inject-failure",
        action="store_const",
        const=True,
        default=None,
        help="add an always-failing check (exit-contract self-test)",
    )


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v)


def _csv_names(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topdowndt", description="Top-down decision tree growth experiments."
    )
    parser.add_argument("--version", action="version", version=f"topdowndt {__version__}")
    sub = parser.add_subparsers(dest="kind", required=True)

    p = sub.add_parser("grow", help="grow a tree for a boolean function")
    p.add_argument("--fn", default=None, help="function spec JSON (default: random monotone)")
    p.add_argument("--arity", type=int, default=None)
    p.add_argument("--impurity", default=None, help="gini|entropy|kearns-mansour|influence")
    p.add_argument("--budget", type=int, default=None, help="leaf budget")
    p.add_argument("--monitor-size", type=int, default=None, dest="monitor_size")
    p.add_argument("--epsilon", type=float, default=None)
    _add_common(p)

    p = sub.add_parser("grow-real", help="grow a threshold tree from a CSV dataset")
    p.add_argument("--data", default=None, help="CSV with feature columns + {0,1} label")
    p.add_argument("--dist", default=None, help="per-coordinate distribution spec JSON")
    p.add_argument("--impurity", default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--thresholds", default=None, help="midpoints | grid:w")
    _add_common(p)

    p = sub.add_parser("opt", help="exact smallest-error tree of a given size")
    p.add_argument("--fn", default=None, required=False)
    p.add_argument("--size", type=int, default=None, help="leaf budget s")
    _add_common(p)

    p = sub.add_parser("jz-sweep", help="two-function inequality over random pairs")
    p.add_argument("--arity", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--leaves", type=int, default=None, help="max random-tree leaves")
    _add_common(p)

    p = sub.add_parser("agnostic-sweep", help="greedy vs exact optimum on random monotone targets")
    p.add_argument("--arity", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--sizes", type=_csv_ints, default=None, help="comma-separated opt sizes")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--impurities", type=_csv_names, default=None)
    _add_common(p)

    p = sub.add_parser("hard", help="growth on the conjunctions-plus-majority instance")
    p.add_argument("--l", type=int, default=None, dest="ell", help="conjunction block width")
    p.add_argument("--k", type=int, default=None, help="majority block width (odd)")
    p.add_argument("--impurity", default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    _add_common(p)

    p = sub.add_parser("realizable", help="growth on random monotone tree targets")
    p.add_argument("--arity", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--teacher-leaves", type=int, default=None, dest="teacher_leaves")
    p.add_argument("--target", type=float, default=None, help="distance to reach")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--impurities", type=_csv_names, default=None)
    _add_common(p)

    p = sub.add_parser("round-check", help="threshold rounding and bit-encoding agreement")
    p.add_argument("--arity", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--leaves", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--samples", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("verify-impurity", help="strong concavity and shape checks")
    p.add_argument("--impurity", default=None, help="a builtin name, or 'all'")
    _add_common(p)

    return parser


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    merged: dict = {"kind": args.kind}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        with open(path) as fh:
            try:
                file_cfg = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"bad config JSON: {e}") from None
        unknown = set(file_cfg) - fields
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, val in file_cfg.items():
            if key == "kind":
                continue
            merged[key] = tuple(val) if isinstance(val, list) else val
    for key, val in vars(args).items():
        if key in fields and val is not None:
            merged[key] = val
    if args.kind == "verify-impurity" and "impurity" not in merged:
        merged["impurity"] = "all"
    return ExperimentConfig(**merged)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
        bundle = run(config)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if "opt_line" in bundle.payload:
        print(bundle.payload["opt_line"])
    verdicts = "  ".join(
        f"{name}={'PASS' if ok else 'FAIL'}" for name, ok in sorted(bundle.checks.items())
    )
    print(f"[{config.kind}] wrote {bundle.out_dir}")
    if verdicts:
        print(verdicts)
    return 0 if bundle.ok else 1


if __name__ == "__main__":
    sys.exit(main())
