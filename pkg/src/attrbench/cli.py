"""Command-line front end: generate task batches, tune thresholds, run the zoo.

Exit codes: 0 success, 2 usage, 3 input/output, 4 generation failure. Every
failure prints a single line starting with `error:` to stderr. All three
commands are deterministic in --seed; per-task streams are derived from the
master seed, so --threads never changes any output byte (wall-time fields
aside).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

from .evaluate import (
    correlate,
    family_of,
    reports_to_csv,
    reports_to_json,
    run_benchmark,
    tune_all,
)
from .methods import METHOD_IDS, build_zoo
from .seeding import derive_seed
from .taskgen import (
    GENERATOR_VERSION,
    GenConfig,
    GenerationError,
    Task,
    TaskFormatError,
    generate_task,
    load_task,
    save_task,
)

DEFAULT_MU = 0.5
DEFAULT_ETA = 0.75
_RESERVED_FILES = {"manifest.json", "thresholds.json", "report.json"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _dims_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError("dims must look like 2..11")
    try:
        a, b = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError("dims must look like 2..11")
    if not 2 <= a <= b <= 32:
        raise argparse.ArgumentTypeError("dims must satisfy 2 <= a <= b <= 32")
    return a, b


def build_parser() -> _Parser:
    parser = _Parser(prog="attrbench", description=__doc__.splitlines()[0])
    shared = _Parser(add_help=False)
    shared.add_argument("--seed", type=_u64, default=0, help="master seed (u64)")
    shared.add_argument("--threads", type=_positive_int, default=1)
    shared.add_argument("--out", default=".", help="output directory")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = commands.add_parser("gen", parents=[shared], help="generate a task batch")
    gen.add_argument("--family", choices=["univariate", "multivariate"], required=True)
    gen.add_argument("--count", type=_positive_int, required=True)
    gen.add_argument("--dims", type=_dims_range, default=(2, 11))
    gen.add_argument("--pe", type=float, default=GenConfig.p_erode, help="vertex erosion probability")
    gen.add_argument("--sigma", type=float, default=0.25, help="component scale")
    gen.add_argument("--noise-ratio", type=float, default=0.5)

    tune = commands.add_parser("tune", parents=[shared], help="grid-search thresholds")
    tune.add_argument("--tasks", required=True, help="directory of task files")
    tune.add_argument("--methods", default=None, help="comma-separated method ids")
    tune.add_argument("--figures", action="store_true", help="also render plots")

    run = commands.add_parser("run", parents=[shared], help="evaluate the method zoo")
    run.add_argument("--tasks", required=True, help="directory of task files")
    run.add_argument("--thresholds", default=None, help="thresholds file from tune")
    run.add_argument("--methods", default=None, help="comma-separated method ids")
    run.add_argument("--props", action="store_true", help="score structural rates")
    run.add_argument("--figures", action="store_true", help="also render plots")
    return parser


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _ensure_dir(path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=1)
        handle.write("\n")


def _gen_one(spec: tuple[int, int, int], family: str, config: GenConfig) -> Task:
    index, n, task_seed = spec
    return generate_task(n, config, seed=task_seed, task_id=f"{family}_{index}")


def cmd_gen(args) -> int:
    a, b = args.dims
    config = GenConfig(
        max_cube_dim=1 if args.family == "univariate" else None,
        p_erode=args.pe,
        sigma=args.sigma,
        noise_ratio=args.noise_ratio,
    )
    try:
        config.resolved(a)
    except ValueError as exc:
        return _fail(2, str(exc))
    specs = [
        (i, a + i % (b - a + 1), derive_seed(args.seed, "gen", args.family, i))
        for i in range(args.count)
    ]
    worker = partial(_gen_one, family=args.family, config=config)
    try:
        if args.threads > 1:
            with ProcessPoolExecutor(max_workers=args.threads) as pool:
                tasks = list(pool.map(worker, specs))
        else:
            tasks = [worker(spec) for spec in specs]
    except GenerationError as exc:
        return _fail(4, str(exc))
    out = Path(args.out)
    try:
        _ensure_dir(out)
        for task, (index, _, _) in zip(tasks, specs):
            save_task(task, out / f"{args.family}_{index}.json")
        manifest = {
            "master_seed": str(args.seed),
            "family": args.family,
            "generator_version": GENERATOR_VERSION,
            "dims": [a, b],
            "count": args.count,
            "config": {
                "p_erode": args.pe,
                "sigma": args.sigma,
                "noise_ratio": args.noise_ratio,
            },
            "tasks": [
                {"file": f"{args.family}_{i}.json", "id": t.id, "n": t.n, "seed": str(s)}
                for t, (i, _, s) in zip(tasks, specs)
            ],
        }
        _write_json(out / "manifest.json", manifest)
    except OSError as exc:
        return _fail(3, str(exc))
    print(f"wrote {args.count} tasks and manifest.json to {out}")
    return 0


def _load_tasks(directory: str) -> list[Task]:
    root = Path(directory)
    if not root.is_dir():
        raise OSError(f"not a directory: {directory}")
    manifest = root / "manifest.json"
    if manifest.is_file():
        with open(manifest, "r", encoding="utf-8") as handle:
            names = [entry["file"] for entry in json.load(handle)["tasks"]]
        paths = [root / name for name in names]
    else:
        paths = sorted(
            p for p in root.glob("*.json") if p.name not in _RESERVED_FILES
        )
    if not paths:
        raise OSError(f"no task files in {directory}")
    return [load_task(path) for path in paths]


def _parse_methods(text: str | None):
    ids = METHOD_IDS if text is None else [t.strip() for t in text.split(",") if t.strip()]
    return build_zoo(ids)


def cmd_tune(args) -> int:
    try:
        methods = _parse_methods(args.methods)
    except ValueError as exc:
        return _fail(2, str(exc))
    try:
        tasks = _load_tasks(args.tasks)
    except (OSError, TaskFormatError, json.JSONDecodeError) as exc:
        return _fail(3, str(exc))
    results = tune_all(methods, tasks, args.seed, threads=args.threads)
    payload = {
        method.id: {
            "kind": method.kind,
            "threshold": results[method.id].threshold,
            "curve": [[t, acc] for t, acc in results[method.id].curve],
        }
        for method in methods
    }
    out = Path(args.out)
    try:
        _ensure_dir(out)
        _write_json(out / "thresholds.json", payload)
        if args.figures:
            from .figures import plot_tuning_curves

            plot_tuning_curves(
                {mid: entry["curve"] for mid, entry in payload.items()},
                out / "tuning_curves.png",
            )
    except OSError as exc:
        return _fail(3, str(exc))
    for method in methods:
        result = results[method.id]
        best = max(acc for _, acc in result.curve)
        print(f"{method.id}: threshold={result.threshold:.2f} accuracy={best:.4f}")
    return 0


def _resolve_thresholds(methods, path: str | None) -> dict[str, float]:
    stored: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as handle:
            stored = json.load(handle)
    thresholds = {}
    for method in methods:
        entry = stored.get(method.id)
        if entry is None:
            thresholds[method.id] = (
                DEFAULT_MU if method.kind == "feature" else DEFAULT_ETA
            )
        elif isinstance(entry, dict):
            thresholds[method.id] = float(entry["threshold"])
        else:
            thresholds[method.id] = float(entry)
    return thresholds


def cmd_run(args) -> int:
    try:
        methods = _parse_methods(args.methods)
    except ValueError as exc:
        return _fail(2, str(exc))
    try:
        tasks = _load_tasks(args.tasks)
        thresholds = _resolve_thresholds(methods, args.thresholds)
    except (OSError, TaskFormatError, json.JSONDecodeError, KeyError) as exc:
        return _fail(3, str(exc))
    family = family_of(tasks)
    config = {
        "seed": str(args.seed),
        "tasks": args.tasks,
        "family": family,
        "methods": [m.id for m in methods],
        "thresholds": thresholds,
        "props": args.props,
    }
    reports = run_benchmark(
        tasks,
        methods,
        thresholds,
        args.seed,
        family=family,
        include_property1=args.props,
        threads=args.threads,
    )
    rho = correlate(reports) if args.props and len(reports) >= 5 else None
    csv_text = reports_to_csv(reports)
    out = Path(args.out)
    try:
        _ensure_dir(out)
        with open(out / "report.csv", "w", encoding="utf-8") as handle:
            handle.write(csv_text)
        with open(out / "report.json", "w", encoding="utf-8") as handle:
            handle.write(reports_to_json(reports, config, rho))
        if args.figures:
            from .figures import plot_accuracy_bars, plot_property_scatter

            plot_accuracy_bars(reports, out / "accuracy.png")
            if args.props:
                plot_property_scatter(reports, rho, out / "property_scatter.png")
    except OSError as exc:
        return _fail(3, str(exc))
    print(csv_text, end="")
    if rho is not None:
        print(f"spearman_rho={rho:.4f}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"gen": cmd_gen, "tune": cmd_tune, "run": cmd_run}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
