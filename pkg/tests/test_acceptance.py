"""Acceptance panel: seven end-to-end criteria on frozen-seed task batches.

Each criterion is one test that prints a single PASS/FAIL line with its
measured quantities. Batches are generated once at module scope; the tuning
pass and both evaluation passes record their wall times for the budget
checks. All seeds are frozen, so every number below is reproducible.
"""

import json
from time import perf_counter

import numpy as np
import pytest

from attrbench.cli import main
from attrbench.evaluate import correlate, run_benchmark, tune_all
from attrbench.fanova import fanova_decompose
from attrbench.methods import GAkMMethod, build_zoo, shap_baseline, shapley_expectation
from attrbench.oracle import LinearGaussianDensity, MixtureOracle, conditional_variance
from attrbench.relation import (
    LabeledRelation,
    check_property2,
    functional_domain,
    proxy_sets,
    solve_global_selection,
    solve_instance_selection,
)
from attrbench.seeding import derive_seed
from attrbench.subsets import FeatureSet
from attrbench.taskgen import GenConfig, generate_task

from conftest import make_task

TIGHT_ETA = 1 - 1e-6


_CAPTURE_MANAGER = None


@pytest.fixture(scope="module", autouse=True)
def _verdict_console(request):
    # verdict lines must reach the terminal even under default capture
    global _CAPTURE_MANAGER
    _CAPTURE_MANAGER = request.config.pluginmanager.getplugin("capturemanager")


def _verdict(name: str, ok: bool, detail: str) -> None:
    line = f"{name}: {'PASS' if ok else 'FAIL'} ({detail})"
    if _CAPTURE_MANAGER is not None:
        with _CAPTURE_MANAGER.global_and_fixture_disabled():
            print(line)
    else:
        print(line)
    assert ok, f"{name}: {detail}"


def _gen_batch(master_seed, family, count, lo, hi, **overrides):
    config = GenConfig(
        max_cube_dim=1 if family == "univariate" else None, **overrides
    )
    span = hi - lo + 1
    return [
        generate_task(
            lo + i % span,
            config,
            seed=derive_seed(master_seed, "gen", family, i),
            task_id=f"{family}_{i}",
        )
        for i in range(count)
    ]


@pytest.fixture(scope="module")
def timings():
    return {}


@pytest.fixture(scope="module")
def zoo():
    return build_zoo()


@pytest.fixture(scope="module")
def tuned(zoo, timings):
    tasks = _gen_batch(11, "multivariate", 100, 2, 11)
    start = perf_counter()
    results = tune_all(zoo, tasks, master_seed=7)
    timings["tune"] = perf_counter() - start
    return {mid: r.threshold for mid, r in results.items()}


@pytest.fixture(scope="module")
def uni_reports(zoo, tuned, timings):
    tasks = _gen_batch(22, "univariate", 100, 2, 11)
    start = perf_counter()
    reports = run_benchmark(
        tasks, zoo, tuned, master_seed=8, family="univariate", include_property1=False
    )
    timings["uni"] = perf_counter() - start
    return {r.method: r for r in reports}


@pytest.fixture(scope="module")
def multi_reports(zoo, tuned, timings):
    tasks = _gen_batch(33, "multivariate", 100, 2, 11)
    start = perf_counter()
    reports = run_benchmark(
        tasks, zoo, tuned, master_seed=9, family="multivariate", include_property1=True
    )
    timings["multi"] = perf_counter() - start
    return {r.method: r for r in reports}


def test_criterion_1_exact_machinery_on_the_and_grid():
    start = perf_counter()
    relation = LabeledRelation.from_pairs(
        [((0, 0), 0), ((0, 1), 0), ((1, 0), 0), ((1, 1), 1)], 2
    )
    expected = {
        0: {(0,), (1,)},
        1: {(0,)},
        2: {(1,)},
        3: {(0, 1)},
    }
    solver_ok = all(
        {s.indices() for s in solve_instance_selection(relation, j).minimal_sets}
        == sets
        for j, sets in expected.items()
    )
    global_ok = [
        s.indices() for s in solve_global_selection(relation).minimal_sets
    ] == [(0, 1)]
    grid = np.array([[0.0, 0.0], [0.0, 1.0]])
    components = fanova_decompose(grid)
    total = sum(components.values())
    recon_err = float(np.abs(total - grid).max())
    mean_ok = abs(components[FeatureSet.empty(2)].ravel()[0] - 0.25) <= 1e-12
    elapsed = perf_counter() - start
    ok = solver_ok and global_ok and recon_err <= 1e-12 and mean_ok and elapsed < 1.0
    _verdict(
        "criterion 1",
        ok,
        f"solver={solver_ok} global={global_ok} recon_err={recon_err:.2e} "
        f"time={elapsed:.3f}s",
    )


def test_criterion_2_tiny_noise_batch_is_solved_exactly():
    start = perf_counter()
    tasks = _gen_batch(44, "multivariate", 50, 2, 6, noise_ratio=1 / 64)
    (report,) = run_benchmark(
        tasks,
        [GAkMMethod(None)],
        {"attr_gainfm": TIGHT_ETA},
        master_seed=0,
        include_property1=False,
    )
    elapsed = perf_counter() - start
    ok = report.accuracy == 1.0 and elapsed < 60.0
    _verdict(
        "criterion 2",
        ok,
        f"accuracy={report.accuracy:.4f} on {report.centroid_count} centroids "
        f"time={elapsed:.1f}s",
    )


def test_criterion_3_univariate_panel(uni_reports, timings):
    gam = uni_reports["attr_gam"].accuracy
    shapley = uni_reports["shapley_e"].accuracy
    shap = uni_reports["shap_fe"].accuracy
    star_violations = [
        r.method
        for r in uni_reports.values()
        if r.acc_star is not None and r.acc_star < r.accuracy - 1e-9
    ]
    budget = timings["tune"] + timings["uni"]
    ok = (
        gam >= 0.99
        and shapley >= 0.99
        and shap <= 0.50
        and not star_violations
        and budget < 600.0
    )
    _verdict(
        "criterion 3",
        ok,
        f"attr_gam={gam:.3f} shapley_e={shapley:.3f} shap_fe={shap:.3f} "
        f"star_violations={star_violations} time={budget:.1f}s",
    )


def test_criterion_4_multivariate_panel(multi_reports, timings):
    chain = ["attr_ga2m", "attr_ga3m", "attr_ga4m", "attr_gainfm"]
    acc = [multi_reports[mid].accuracy for mid in chain]
    hw = [multi_reports[mid].ci_half_width for mid in chain]
    chain_ok = all(
        acc[i + 1] >= acc[i] - max(hw[i], hw[i + 1]) for i in range(len(chain) - 1)
    )
    gainfm = multi_reports["attr_gainfm"].accuracy
    shapley = multi_reports["shapley_e"].accuracy
    shap = multi_reports["shap_fe"].accuracy
    elapsed = timings["multi"]
    ok = (
        gainfm >= 0.70
        and chain_ok
        and shapley >= 0.60
        and shap <= 0.30
        and elapsed < 1800.0
    )
    _verdict(
        "criterion 4",
        ok,
        f"chain={[f'{a:.3f}' for a in acc]} shapley_e={shapley:.3f} "
        f"shap_fe={shap:.3f} time={elapsed:.1f}s",
    )


def test_criterion_5_structural_rate_ranks_methods(multi_reports, timings):
    rates = {mid: r.prop1_rate for mid, r in multi_reports.items()}
    gainfm = rates.pop("attr_gainfm")
    runner_up = max(rates.values())
    rho = correlate(multi_reports.values())
    ok = (
        gainfm >= 0.85
        and gainfm > runner_up
        and len(rates) + 1 >= 8
        and rho >= 0.5
        and timings["multi"] < 1800.0
    )
    _verdict(
        "criterion 5",
        ok,
        f"gainfm_rate={gainfm:.4f} runner_up={runner_up:.4f} rho={rho:.3f} "
        f"methods={len(rates) + 1}",
    )


def test_criterion_6_conditional_variance_closed_forms():
    sigma = 0.3
    worst = 0.0
    for alpha in (0.1, 0.5, 0.9):
        density = LinearGaussianDensity((alpha, 1 - alpha), noise_std=sigma)
        x = (0.2, -0.4)
        checks = {
            FeatureSet.singleton(1, 2): alpha**2 / 3 + sigma**2,
            FeatureSet.singleton(0, 2): (1 - alpha) ** 2 / 3 + sigma**2,
            FeatureSet.full(2): sigma**2,
            FeatureSet.empty(2): (alpha**2 + (1 - alpha) ** 2) / 3 + sigma**2,
        }
        for subset, expected in checks.items():
            got = conditional_variance(density, x, subset)
            worst = max(worst, abs(got - expected))
    ok = worst <= 1e-9
    _verdict("criterion 6", ok, f"worst_abs_err={worst:.2e}")


def _random_relation(rng, n, m):
    m = min(m, 3**n)  # only 3^n distinct grid points exist
    points = set()
    while len(points) < m:
        points.add(tuple(float(v) for v in rng.integers(0, 3, size=n)))
    labels = [int(rng.integers(0, 2)) for _ in range(m)]
    return LabeledRelation.from_pairs(zip(sorted(points), labels), n)


def _relation_invariants() -> tuple[bool, bool]:
    """Monotonicity plus proxy duality/inclusion, same 500 random relations."""
    rng = np.random.default_rng(7700)
    hierarchy_ok = True
    proxies_ok = True
    for _ in range(500):
        n = int(rng.integers(2, 6))
        relation = _random_relation(rng, n, int(rng.integers(2, 11)))
        if not check_property2(relation):
            hierarchy_ok = False
        everything = frozenset(range(len(relation)))
        for bits in range(1 << n):
            subset = FeatureSet(bits, n)
            b, c = proxy_sets(relation, subset)
            if not c <= b:
                proxies_ok = False
            if b != everything - functional_domain(relation, subset.complement()):
                proxies_ok = False
    return hierarchy_ok, proxies_ok


def _shapley_axioms_error() -> float:
    worst = 0.0
    task = generate_task(6, GenConfig(), seed=13)
    oracle = MixtureOracle(task)
    rng = np.random.default_rng(5)
    mean = oracle.centroids.mean(axis=0)
    for _ in range(10):
        x = oracle.centroids[rng.integers(0, oracle.m)] + rng.normal(0, 0.05, 6)
        table = oracle.posterior_table(x)
        phi = shapley_expectation(oracle, x)
        worst = max(worst, abs(phi.sum() - (table[-1] - table[0])))
        phi_b = shap_baseline(oracle, x)
        full, at_mean = oracle.posterior_batch(np.stack([x, mean]))
        worst = max(worst, abs(phi_b.sum() - (full - at_mean)))
    xor = make_task(
        [
            ((-1, -1), 0, [0, 1]),
            ((-1, 1), 1, [0, 1]),
            ((1, -1), 1, [0, 1]),
            ((1, 1), 0, [0, 1]),
        ]
    )
    sym = shapley_expectation(MixtureOracle(xor), np.asarray(xor.centroids[0].coords))
    worst = max(worst, abs(sym[0] - sym[1]))
    dummy = make_task(
        [((0, 0, 5), 0, [0, 1]), ((0, 1, 5), 1, [0, 1]), ((1, 0, 5), 1, [0, 1])]
    )
    phi_d = shapley_expectation(
        MixtureOracle(dummy), np.asarray(dummy.centroids[0].coords)
    )
    return max(worst, abs(phi_d[2]))


def _gradient_fd_error() -> float:
    task = generate_task(5, GenConfig(), seed=12)
    oracle = MixtureOracle(task)
    ones = [c.coords for c in task.centroids if c.label == 1]
    zeros = [c.coords for c in task.centroids if c.label == 0]
    rng = np.random.default_rng(2)
    full = FeatureSet.full(5)
    h = 1e-6
    worst = 0.0
    for k in range(100):
        a = np.asarray(ones[k % len(ones)])
        b = np.asarray(zeros[k % len(zeros)])
        x = (a + b) / 2 + rng.normal(0, 0.02, 5)
        grad = oracle.gradient(x)
        scale = np.abs(grad).max()
        if scale < 1e-3:
            continue
        fd = np.empty(5)
        for axis in range(5):
            step = np.zeros(5)
            step[axis] = h
            fd[axis] = (
                oracle.posterior(x + step, full) - oracle.posterior(x - step, full)
            ) / (2 * h)
        worst = max(worst, float(np.abs(fd - grad).max() / scale))
    return worst


def _pipeline_runs_identically(root) -> bool:
    outputs = []
    for name in ("one", "two"):
        base = root / name
        tasks = base / "tasks"
        assert main(
            ["gen", "--family", "multivariate", "--count", "4", "--dims", "2..4",
             "--seed", "5", "--out", str(tasks)]
        ) == 0
        assert main(
            ["tune", "--tasks", str(tasks), "--methods", "attr_gam,attr_gainfm",
             "--seed", "7", "--out", str(base)]
        ) == 0
        assert main(
            ["run", "--tasks", str(tasks), "--methods", "attr_gam,attr_gainfm",
             "--thresholds", str(base / "thresholds.json"), "--seed", "8",
             "--out", str(base)]
        ) == 0
        task_bytes = [
            (tasks / f"multivariate_{i}.json").read_bytes() for i in range(4)
        ]
        csv_rows = [
            line.rsplit(",", 1)[0]
            for line in (base / "report.csv").read_text().splitlines()
        ]
        report = json.loads((base / "report.json").read_text())
        report["config"]["tasks"] = ""  # run-identifying path, not an output
        for row in report["reports"]:
            row["wall_time_s"] = 0.0
        outputs.append(
            (
                task_bytes,
                (tasks / "manifest.json").read_bytes(),
                (base / "thresholds.json").read_bytes(),
                csv_rows,
                report,
            )
        )
    return outputs[0] == outputs[1]


def test_criterion_7_invariants_and_determinism(tmp_path):
    hierarchy_ok, proxies_ok = _relation_invariants()
    shapley_err = _shapley_axioms_error()
    fd_err = _gradient_fd_error()
    deterministic = _pipeline_runs_identically(tmp_path)
    ok = (
        hierarchy_ok
        and proxies_ok
        and shapley_err <= 1e-9
        and fd_err <= 1e-6
        and deterministic
    )
    _verdict(
        "criterion 7",
        ok,
        f"hierarchy={hierarchy_ok} proxies={proxies_ok} "
        f"shapley_err={shapley_err:.2e} grad_fd_err={fd_err:.2e} "
        f"deterministic={deterministic}",
    )
