"""Threshold tuning, selection scoring and report aggregation.

Accuracy is exact set equality between predicted and ground-truth
selections, with no partial credit. The singleton-prior score (acc_star)
only applies to task batches whose ground truths are all singletons: it
asks whether the top-responsibility feature alone matches. The structural
rate checks predicted selections against each other without any ground
truth. Confidence intervals use the Normal approximation by default, the
Wilson score interval behind a flag.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from time import perf_counter
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import spearmanr

from .oracle import MixtureOracle
from .relation import check_property1
from .seeding import rng_for
from .subsets import FeatureSet
from .taskgen import Task, task_to_relation

CSV_HEADER = "method,family,accuracy,acc_star,prop1_rate,ci,centroids,wall_time_s"


def select_from_features(values, mu: float) -> FeatureSet:
    """Indices whose magnitude reaches mu times the maximum magnitude.

    Never empty: the argmax always qualifies, and an all-zero vector keeps
    every feature (nothing distinguishes them).
    """
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"mu must lie in (0, 1], got {mu}")
    magnitudes = np.abs(np.asarray(values, dtype=float))
    top = magnitudes.max()
    keep = magnitudes >= mu * top
    return FeatureSet.from_indices(np.flatnonzero(keep).tolist(), len(magnitudes))


def ci_half_width(p: float, count: int, kind: str = "normal") -> float:
    """95% half-width for a proportion; Normal approximation or Wilson."""
    if count < 1:
        raise ValueError("count must be >= 1")
    z = 1.96
    if kind == "normal":
        return z * float(np.sqrt(p * (1.0 - p) / count))
    if kind == "wilson":
        return (
            z
            * float(np.sqrt(p * (1.0 - p) / count + z**2 / (4.0 * count**2)))
            / (1.0 + z**2 / count)
        )
    raise ValueError(f"unknown interval kind {kind!r}")


@dataclass(frozen=True)
class Prediction:
    selection: FeatureSet
    responsibilities: np.ndarray


@dataclass(frozen=True)
class TuneResult:
    method: str
    threshold: float
    curve: tuple[tuple[float, float], ...]


@dataclass
class MethodRun:
    method: str
    kind: str
    threshold: float
    predictions: dict[str, list[Prediction]] = field(default_factory=dict)
    wall_time_s: float = 0.0


@dataclass(frozen=True)
class EvalReport:
    method: str
    family: str
    accuracy: float
    acc_star: float | None
    prop1_rate: float | None
    ci_half_width: float
    centroid_count: int
    wall_time_s: float
    config: dict


def family_of(tasks: Sequence[Task]) -> str:
    singles = all(
        len(c.selection) == 1 for task in tasks for c in task.centroids
    )
    return "univariate" if singles else "multivariate"


def tune(method, tasks: Sequence[Task], master_seed: int, grid=None) -> TuneResult:
    """Grid-search the method's threshold for best mean selection accuracy.

    Attributions are computed once per centroid and re-thresholded across
    the grid; ties resolve to the smaller threshold.
    """
    thresholds = np.asarray(grid if grid is not None else method.threshold_grid())
    if thresholds.size == 0:
        raise ValueError("threshold grid must be non-empty")
    correct = np.zeros(thresholds.size)
    total = 0
    for task in tasks:
        oracle = MixtureOracle(task)
        for j, centroid in enumerate(task.centroids):
            x = np.asarray(centroid.coords)
            rng = rng_for(master_seed, "tune", task.id, method.id, j)
            attribution = method.attribute(oracle, x, rng)
            for gi, threshold in enumerate(thresholds):
                chosen = method.select(oracle, x, attribution, float(threshold))
                if chosen == centroid.selection:
                    correct[gi] += 1
            total += 1
    accuracy = correct / total
    best = int(np.argmax(accuracy))
    curve = tuple(
        (float(t), float(a)) for t, a in zip(thresholds, accuracy)
    )
    return TuneResult(method.id, float(thresholds[best]), curve)


def _tune_task(task: Task, methods, master_seed: int) -> dict[str, np.ndarray]:
    oracle = MixtureOracle(task)
    counts = {
        method.id: np.zeros(method.threshold_grid().size) for method in methods
    }
    for j, centroid in enumerate(task.centroids):
        x = np.asarray(centroid.coords)
        for method in methods:
            rng = rng_for(master_seed, "tune", task.id, method.id, j)
            attribution = method.attribute(oracle, x, rng)
            hits = counts[method.id]
            for gi, threshold in enumerate(method.threshold_grid()):
                chosen = method.select(oracle, x, attribution, float(threshold))
                if chosen == centroid.selection:
                    hits[gi] += 1
    return counts


def tune_all(
    methods, tasks: Sequence[Task], master_seed: int, threads: int = 1
) -> dict[str, TuneResult]:
    """Tune every method in one task-major pass.

    Equivalent to calling tune() per method (identical seed streams) but
    shares each task's oracle across methods and can fan tasks out to
    worker processes.
    """
    worker = partial(_tune_task, methods=methods, master_seed=master_seed)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_task = list(pool.map(worker, tasks))
    else:
        per_task = [worker(task) for task in tasks]
    total = sum(task.m for task in tasks)
    results = {}
    for method in methods:
        grid = method.threshold_grid()
        accuracy = sum(counts[method.id] for counts in per_task) / total
        best = int(np.argmax(accuracy))
        curve = tuple((float(t), float(a)) for t, a in zip(grid, accuracy))
        results[method.id] = TuneResult(method.id, float(grid[best]), curve)
    return results


def _evaluate_task(
    task: Task, methods, thresholds: Mapping[str, float], master_seed: int
) -> dict[str, tuple[list[Prediction], float]]:
    oracle = MixtureOracle(task)
    out: dict[str, tuple[list[Prediction], float]] = {
        method.id: ([], 0.0) for method in methods
    }
    for j, centroid in enumerate(task.centroids):
        x = np.asarray(centroid.coords)
        for method in methods:
            rng = rng_for(master_seed, "eval", task.id, method.id, j)
            start = perf_counter()
            attribution = method.attribute(oracle, x, rng)
            selection = method.select(
                oracle, x, attribution, thresholds[method.id]
            )
            scores = np.asarray(
                method.responsibilities(oracle, x, attribution), dtype=float
            )
            elapsed = perf_counter() - start
            predictions, spent = out[method.id]
            predictions.append(Prediction(selection, scores))
            out[method.id] = (predictions, spent + elapsed)
    return out


def run_methods(
    tasks: Sequence[Task],
    methods,
    thresholds: Mapping[str, float],
    master_seed: int,
    threads: int = 1,
) -> dict[str, MethodRun]:
    """Attribute and select on every centroid of every task.

    Tasks are independent work units; with threads > 1 they are fanned out
    to worker processes and merged back in task order, so results do not
    depend on scheduling.
    """
    missing = [m.id for m in methods if m.id not in thresholds]
    if missing:
        raise ValueError(f"no threshold for methods {missing}")
    worker = partial(
        _evaluate_task, methods=methods, thresholds=dict(thresholds), master_seed=master_seed
    )
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_task = list(pool.map(worker, tasks))
    else:
        per_task = [worker(task) for task in tasks]
    runs = {
        method.id: MethodRun(method.id, method.kind, float(thresholds[method.id]))
        for method in methods
    }
    for task, results in zip(tasks, per_task):
        for method_id, (predictions, elapsed) in results.items():
            runs[method_id].predictions[task.id] = predictions
            runs[method_id].wall_time_s += elapsed
    return runs


def score(
    tasks: Sequence[Task],
    predictions: Mapping[str, Sequence[Prediction]],
    *,
    method: str,
    family: str,
    wall_time_s: float = 0.0,
    config: dict | None = None,
    include_property1: bool = True,
    ci_kind: str = "normal",
) -> EvalReport:
    """Aggregate one method's predictions over a task batch."""
    total = 0
    exact = 0
    star_hits = 0
    prop_flags: list[bool] = []
    univariate = family == "univariate"
    for task in tasks:
        rows = predictions.get(task.id)
        if rows is None or len(rows) != task.m:
            raise ValueError(f"predictions do not cover task {task.id}")
        for centroid, prediction in zip(task.centroids, rows):
            total += 1
            if prediction.selection == centroid.selection:
                exact += 1
            if univariate:
                (target,) = centroid.selection.indices()
                if int(np.argmax(prediction.responsibilities)) == target:
                    star_hits += 1
        if include_property1:
            flags, _ = check_property1(
                task_to_relation(task), [row.selection for row in rows]
            )
            prop_flags.extend(flags)
    accuracy = exact / total
    return EvalReport(
        method=method,
        family=family,
        accuracy=accuracy,
        acc_star=star_hits / total if univariate else None,
        prop1_rate=sum(prop_flags) / len(prop_flags) if include_property1 else None,
        ci_half_width=ci_half_width(accuracy, total, ci_kind),
        centroid_count=total,
        wall_time_s=wall_time_s,
        config=dict(config or {}),
    )


def run_benchmark(
    tasks: Sequence[Task],
    methods,
    thresholds: Mapping[str, float],
    master_seed: int,
    *,
    family: str | None = None,
    include_property1: bool = True,
    threads: int = 1,
    config: dict | None = None,
) -> list[EvalReport]:
    """Run a method zoo over a task batch and score every method."""
    family = family if family is not None else family_of(tasks)
    runs = run_methods(tasks, methods, thresholds, master_seed, threads=threads)
    shared = dict(config or {})
    reports = []
    for method in methods:
        run = runs[method.id]
        reports.append(
            score(
                tasks,
                run.predictions,
                method=method.id,
                family=family,
                wall_time_s=run.wall_time_s,
                config={**shared, "threshold": run.threshold},
                include_property1=include_property1,
            )
        )
    return reports


def correlate(reports: Iterable[EvalReport]) -> float:
    """Spearman rank correlation between structural rate and accuracy."""
    pairs = [
        (r.prop1_rate, r.accuracy) for r in reports if r.prop1_rate is not None
    ]
    if len(pairs) < 5:
        raise ValueError("need at least 5 method reports with structural rates")
    rho = spearmanr([p for p, _ in pairs], [a for _, a in pairs]).statistic
    return float(rho)


def _csv_cell(value: float | None, precision: int) -> str:
    return "" if value is None else f"{value:.{precision}f}"


def reports_to_csv(reports: Sequence[EvalReport]) -> str:
    lines = [CSV_HEADER]
    for r in reports:
        lines.append(
            ",".join(
                [
                    r.method,
                    r.family,
                    f"{r.accuracy:.6f}",
                    _csv_cell(r.acc_star, 6),
                    _csv_cell(r.prop1_rate, 6),
                    f"{r.ci_half_width:.6f}",
                    str(r.centroid_count),
                    f"{r.wall_time_s:.3f}",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def reports_to_json(
    reports: Sequence[EvalReport], config: dict, rho: float | None = None
) -> str:
    payload = {
        "config": config,
        "spearman_rho": rho,
        "reports": [
            {
                "method": r.method,
                "family": r.family,
                "accuracy": r.accuracy,
                "acc_star": r.acc_star,
                "prop1_rate": r.prop1_rate,
                "ci": r.ci_half_width,
                "centroids": r.centroid_count,
                "wall_time_s": r.wall_time_s,
                "config": r.config,
            }
            for r in reports
        ],
    }
    return json.dumps(payload, indent=1) + "\n"
