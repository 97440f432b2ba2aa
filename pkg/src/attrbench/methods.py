"""Attribution method zoo driven by the analytic oracle; no model training.

Two method families share one calling convention. Feature-valued methods
produce one magnitude per coordinate and are thresholded at a fraction mu
of the maximum. Subset-valued methods score index subsets directly through
the oracle's conditional posteriors and are thresholded at a confidence
eta. Each method splits the expensive attribution computation from the
cheap threshold application so tuning can sweep thresholds over cached
attributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .evaluate import select_from_features
from .oracle import MixtureOracle
from .subsets import FeatureSet, masks_of_size, popcount

MU_GRID = np.arange(10, 96) / 100
ETA_GRID = np.arange(50, 101) / 100
UNIT_GRID = np.arange(0, 101) / 100

_SHAP_BATCH = 256


@lru_cache(maxsize=None)
def _level_masks(n: int) -> tuple[np.ndarray, ...]:
    """Subset bitmasks grouped by cardinality, ascending within each level."""
    return tuple(
        np.fromiter(masks_of_size(n, k), dtype=np.int64) for k in range(n + 1)
    )


def _attr_table(oracle: MixtureOracle, x) -> np.ndarray:
    """Highest-class-probability table over all subsets, indexed by bitmask."""
    table = oracle.posterior_table(x)
    return np.maximum(table, 1.0 - table)


# ---------------------------------------------------------------------------
# subset-valued measures


def attr_gakm(
    oracle: MixtureOracle, x, k: int | None, eta: float
) -> tuple[FeatureSet, dict[FeatureSet, float]]:
    """Restricted-expert selection up to interaction order k.

    Scans cardinality levels upward and returns the first subset whose
    conditional confidence clears eta, ties to the smaller bitmask; when no
    subset of order <= k qualifies, falls back to the best subset at order
    exactly k. Also returns every scored subset.
    """
    n = oracle.n
    k = n if k is None else min(k, n)
    if k < 1:
        raise ValueError("interaction order must be >= 1")
    _check_eta(eta, 0.5)
    attr = _attr_table(oracle, x)
    levels = _level_masks(n)
    values = {
        FeatureSet(int(mask), n): float(attr[mask])
        for level in levels[: k + 1]
        for mask in level
    }
    return _select_by_level(attr, levels, k, eta, n), values


def _select_by_level(
    attr: np.ndarray, levels: tuple[np.ndarray, ...], k: int, eta: float, n: int
) -> FeatureSet:
    for level in levels[: k + 1]:
        qualifying = attr[level] >= eta
        if qualifying.any():
            return FeatureSet(int(level[np.argmax(qualifying)]), n)
    top = levels[k]
    return FeatureSet(int(top[np.argmax(attr[top])]), n)


def interpretable_nn_measure(
    oracle: MixtureOracle, x, k: int | None = None, eta: float = 1.0
) -> tuple[FeatureSet, list[tuple[FeatureSet, float]]]:
    """Squared-confidence measure g = 4(posterior - 1/2)^2 with greedy growth.

    Starting from the empty subset, repeatedly adds the index whose
    augmented subset maximises g (ties to the lowest index), stopping once g
    clears eta or every allowed index is used; returns the first qualifying
    subset on the path, else the best visited one.
    """
    n = oracle.n
    k = n if k is None else min(k, n)
    _check_eta(eta, 0.0)
    masks, gains = _greedy_confidence_path(oracle, x, k)
    path = [(FeatureSet(int(m), n), float(g)) for m, g in zip(masks, gains)]
    for subset, g in path:
        if g >= eta:
            return subset, path
    return path[int(np.argmax(gains))][0], path


def _greedy_confidence_path(
    oracle: MixtureOracle, x, k: int
) -> tuple[np.ndarray, np.ndarray]:
    table = oracle.posterior_table(x)
    g = 4.0 * (table - 0.5) ** 2
    current = 0
    masks = [0]
    for _ in range(k):
        best_i = -1
        best_g = -1.0
        for i in range(oracle.n):
            if current >> i & 1:
                continue
            cand = g[current | 1 << i]
            if cand > best_g:
                best_g = float(cand)
                best_i = i
        current |= 1 << best_i
        masks.append(current)
    masks_arr = np.array(masks, dtype=np.int64)
    return masks_arr, g[masks_arr]


SYNERGY_MARGIN = 0.1


def archipelago_style(
    oracle: MixtureOracle, x, eta: float, margin: float = SYNERGY_MARGIN
) -> FeatureSet:
    """Pairwise-synergy merge followed by greedy group accumulation."""
    _check_eta(eta, 0.5)
    prefixes, attrs, fallback = _archipelago_groups(oracle, x, margin)
    for mask, value in zip(prefixes, attrs):
        if value >= eta:
            return FeatureSet(int(mask), oracle.n)
    return FeatureSet(int(fallback), oracle.n)


def _archipelago_groups(
    oracle: MixtureOracle, x, margin: float = SYNERGY_MARGIN
) -> tuple[np.ndarray, np.ndarray, int]:
    """Disjoint interaction groups and their greedy unions.

    A pair is merged only when its joint confidence beats both singleton
    confidences by the synergy margin. Gaussian tails make almost every
    pair marginally superadditive, so a zero margin would chain unrelated
    features into one group; 0.1 sits between that seepage (below ~0.07)
    and genuine pairwise synergy (~0.4 on exclusive-or geometry). Returns
    the cumulative-union masks (starting at the empty set), their
    confidences, and the single best group as the fallback when no union
    qualifies.
    """
    n = oracle.n
    attr = _attr_table(oracle, x)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            pair = (1 << i) | (1 << j)
            if attr[pair] > max(attr[1 << i], attr[1 << j]) + margin:
                parent[find(i)] = find(j)
    groups: dict[int, int] = {}
    for i in range(n):
        root = find(i)
        groups[root] = groups.get(root, 0) | (1 << i)
    ordered = sorted(groups.values(), key=lambda mask: (-attr[mask], mask))
    prefixes = [0]
    for mask in ordered:
        prefixes.append(prefixes[-1] | mask)
    prefix_arr = np.array(prefixes, dtype=np.int64)
    return prefix_arr, attr[prefix_arr], ordered[0]


# ---------------------------------------------------------------------------
# Shapley values


def _exact_shapley(n: int, values: np.ndarray) -> np.ndarray:
    weights = [
        math.factorial(s) * math.factorial(n - s - 1) / math.factorial(n)
        for s in range(n)
    ]
    phi = np.zeros(n)
    for mask in range((1 << n) - 1):
        w = weights[popcount(mask)]
        for i in range(n):
            if mask >> i & 1:
                continue
            phi[i] += w * (values[mask | 1 << i] - values[mask])
    return phi


def _sampled_shapley(
    n: int,
    prefix_values,
    samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Monte-Carlo permutation average; prefix_values maps a (samples, n)
    permutation matrix to the (samples, n+1) value of each prefix."""
    perms = np.stack([rng.permutation(n) for _ in range(samples)])
    values = prefix_values(perms)
    marginals = values[:, 1:] - values[:, :-1]
    phi = np.zeros(n)
    np.add.at(phi, perms.reshape(-1), marginals.reshape(-1))
    return phi / samples


def shapley_expectation(
    oracle: MixtureOracle,
    x,
    max_samples: int = 128,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Signed Shapley values of the conditional-expectation game.

    The value of a coalition is the class-1 posterior given its coordinates.
    Exact subset-weighted computation whenever the full subset lattice fits
    the sampling budget, Monte-Carlo permutations otherwise.
    """
    if max_samples < 1:
        raise ValueError("max_samples must be >= 1")
    n = oracle.n
    x = np.asarray(x, dtype=float)
    if (1 << n) <= max_samples:
        return _exact_shapley(n, oracle.posterior_table(x))
    if rng is None:
        raise ValueError("sampled mode needs an rng")
    sq = (x[None, :] - oracle.centroids) ** 2

    def prefix_values(perms: np.ndarray) -> np.ndarray:
        stepped = sq.T[perms]  # (samples, n, m)
        zeros = np.zeros((len(perms), 1, oracle.m))
        cumulative = np.concatenate([zeros, np.cumsum(stepped, axis=1)], axis=1)
        return oracle._posterior_from_sq(cumulative)

    return _sampled_shapley(n, prefix_values, max_samples, rng)


def shap_baseline(
    oracle: MixtureOracle,
    x,
    max_samples: int = 128,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Signed Shapley values of the fixed-baseline game.

    A coalition keeps its own coordinates from x and takes the remaining
    ones from the centroid mean; its value is the full posterior at that
    hybrid point. Same exact/sampled split as the expectation game.
    """
    if max_samples < 1:
        raise ValueError("max_samples must be >= 1")
    n = oracle.n
    x = np.asarray(x, dtype=float)
    mean = oracle.centroids.mean(axis=0)

    def hybrid_values(member_bits: np.ndarray) -> np.ndarray:
        points = np.where(member_bits, x, mean)
        flat = points.reshape(-1, n)
        out = np.empty(len(flat))
        for start in range(0, len(flat), _SHAP_BATCH):
            out[start : start + _SHAP_BATCH] = oracle.posterior_batch(
                flat[start : start + _SHAP_BATCH]
            )
        return out.reshape(points.shape[:-1])

    if (1 << n) <= max_samples:
        masks = np.arange(1 << n)
        bits = (masks[:, None] >> np.arange(n)) & 1
        return _exact_shapley(n, hybrid_values(bits.astype(bool)))
    if rng is None:
        raise ValueError("sampled mode needs an rng")

    def prefix_values(perms: np.ndarray) -> np.ndarray:
        onehot = np.eye(n, dtype=bool)[perms]  # (samples, n, n)
        grown = np.cumsum(onehot, axis=1).astype(bool)
        empty = np.zeros((len(perms), 1, n), dtype=bool)
        return hybrid_values(np.concatenate([empty, grown], axis=1))

    return _sampled_shapley(n, prefix_values, max_samples, rng)


# ---------------------------------------------------------------------------
# gradient family


def integrated_gradients(
    oracle: MixtureOracle, x, steps: int = 50, baseline=None
) -> np.ndarray:
    """Signed midpoint-rule path integral of the posterior gradient."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.asarray(x, dtype=float)
    base = (
        oracle.centroids.mean(axis=0)
        if baseline is None
        else np.asarray(baseline, dtype=float)
    )
    ts = (np.arange(steps) + 0.5) / steps
    path = base[None, :] + ts[:, None] * (x - base)[None, :]
    return (x - base) * oracle.gradient_batch(path).mean(axis=0)


def expected_gradients(
    oracle: MixtureOracle, x, samples: int = 500, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Signed expectation of the path integrand over random interpolation
    coefficients and centroid backgrounds."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if rng is None:
        raise ValueError("expected gradients need an rng")
    x = np.asarray(x, dtype=float)
    alphas = rng.random(samples)
    backgrounds = oracle.centroids[rng.integers(0, oracle.m, size=samples)]
    points = backgrounds + alphas[:, None] * (x - backgrounds)
    integrand = oracle.gradient_batch(points) * (x - backgrounds)
    return integrand.mean(axis=0)


def gradient_family(
    oracle: MixtureOracle,
    x,
    variant: str,
    steps: int = 50,
    samples: int = 500,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Gradient-based magnitudes: raw, input-weighted, integrated, expected."""
    x = np.asarray(x, dtype=float)
    if variant == "grad":
        return np.abs(oracle.gradient(x))
    if variant == "grad_x_input":
        return np.abs(x * oracle.gradient(x))
    if variant == "integrated":
        return np.abs(integrated_gradients(oracle, x, steps=steps))
    if variant == "expected":
        return np.abs(expected_gradients(oracle, x, samples=samples, rng=rng))
    raise ValueError(f"unknown gradient variant {variant!r}")


# ---------------------------------------------------------------------------
# local surrogate


def lime(
    oracle: MixtureOracle,
    x,
    mode: str,
    n_samples: int = 1000,
    ridge: float = 1.0,
    rng: np.random.Generator | None = None,
    kernel_width_factor: float = 0.75,
) -> np.ndarray:
    """Locally weighted ridge surrogate; returns coefficient magnitudes.

    Continuous mode perturbs x with Gaussian noise scaled by the per-axis
    spread of the centroids and regresses on standardised coordinates.
    Categorical mode resamples each axis from centroid values and regresses
    on same-grid-cell indicators (cells have pitch sigma, the task grid
    spacing). The query point is always the first, unperturbed sample. Both
    modes weight samples with an exponential kernel of width 0.75 sqrt(n)
    in the regression space.
    """
    if rng is None:
        raise ValueError("lime needs an rng")
    x = np.asarray(x, dtype=float)
    n = oracle.n
    if n_samples < n + 1:
        raise ValueError("need at least n + 1 samples")
    if ridge <= 0:
        raise ValueError("ridge strength must be positive")
    if mode == "continuous":
        scale = oracle.centroids.std(axis=0)
        points = x[None, :] + rng.normal(size=(n_samples, n)) * scale[None, :]
        points[0] = x
        spread = points.std(axis=0)
        spread[spread == 0.0] = 1.0
        design = (points - points.mean(axis=0)) / spread
    elif mode == "categorical":
        picks = rng.integers(0, oracle.m, size=(n_samples, n))
        points = oracle.centroids[picks, np.arange(n)[None, :]]
        points[0] = x
        cell = np.floor(points / oracle.task.sigma)
        design = (cell == np.floor(x / oracle.task.sigma)[None, :]).astype(float)
    else:
        raise ValueError(f"unknown lime mode {mode!r}")
    targets = oracle.posterior_batch(points)
    distance = np.sqrt(((design - design[0]) ** 2).sum(axis=1))
    width = kernel_width_factor * math.sqrt(n)
    weights = np.exp(-(distance**2) / width**2)
    return np.abs(_weighted_ridge(design, targets, weights, ridge))


def _weighted_ridge(
    design: np.ndarray, targets: np.ndarray, weights: np.ndarray, ridge: float
) -> np.ndarray:
    """Closed-form weighted ridge with an unpenalised intercept."""
    total = weights.sum()
    col_mean = weights @ design / total
    target_mean = weights @ targets / total
    centered = design - col_mean
    shifted = targets - target_mean
    gram = centered.T @ (centered * weights[:, None])
    gram[np.diag_indices_from(gram)] += ridge
    return np.linalg.solve(gram, centered.T @ (weights * shifted))


def _check_eta(eta: float, low: float) -> None:
    if not low <= eta <= 1.0:
        raise ValueError(f"threshold {eta} outside [{low}, 1]")


def _check_mu(mu: float) -> None:
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"threshold {mu} outside (0, 1]")


# ---------------------------------------------------------------------------
# uniform method interface


@dataclass(frozen=True)
class MethodConfig:
    """Optional per-method knob overrides; None keeps the documented default."""

    method: str
    samples: int | None = None
    steps: int | None = None
    ridge: float | None = None
    kernel_width_factor: float | None = None
    threshold: float | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.samples is not None and self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.steps is not None and self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.ridge is not None and self.ridge <= 0:
            raise ValueError("ridge strength must be positive")
        if self.threshold is not None and not 0.0 < self.threshold <= 1.0:
            raise ValueError("threshold must lie in (0, 1]")


class Method:
    """Uniform interface: expensive attribute(), cheap select().

    `responsibilities` reduces any attribution to one score per feature for
    the singleton-prior metric; for feature methods it is the attribution
    itself, for subset methods the singleton confidences.
    """

    id: str = ""
    kind: str = ""

    def threshold_grid(self) -> np.ndarray:
        raise NotImplementedError

    def attribute(self, oracle: MixtureOracle, x, rng: np.random.Generator):
        raise NotImplementedError

    def select(self, oracle: MixtureOracle, x, attribution, threshold: float) -> FeatureSet:
        raise NotImplementedError

    def responsibilities(self, oracle: MixtureOracle, x, attribution) -> np.ndarray:
        raise NotImplementedError


class FeatureMethod(Method):
    kind = "feature"

    def threshold_grid(self) -> np.ndarray:
        return MU_GRID

    def select(self, oracle, x, attribution, threshold):
        _check_mu(threshold)
        return select_from_features(attribution, threshold)

    def responsibilities(self, oracle, x, attribution):
        return attribution


class SubsetMethod(Method):
    kind = "subset"
    eta_low = 0.5

    def threshold_grid(self) -> np.ndarray:
        return ETA_GRID

    def responsibilities(self, oracle, x, attribution):
        table = _attr_table(oracle, x)
        return table[np.asarray([1 << i for i in range(oracle.n)])]


class AttrGamMethod(FeatureMethod):
    """Univariate restricted experts; confidence above chance per feature."""

    id = "attr_gam"

    def attribute(self, oracle, x, rng):
        table = oracle.posterior_table(x)
        singles = table[np.asarray([1 << i for i in range(oracle.n)])]
        return np.abs(2.0 * singles - 1.0)


class ShapleyMethod(FeatureMethod):
    def __init__(self, use_baseline: bool, samples: int = 128):
        self.id = "shap_fe" if use_baseline else "shapley_e"
        self._fn = shap_baseline if use_baseline else shapley_expectation
        self._samples = samples

    def attribute(self, oracle, x, rng):
        return np.abs(self._fn(oracle, x, max_samples=self._samples, rng=rng))


class GradientMethod(FeatureMethod):
    _IDS = {
        "grad": "gradient",
        "grad_x_input": "grad_x_input",
        "integrated": "integrated_grad",
        "expected": "expected_grad",
    }

    def __init__(self, variant: str, steps: int = 50, samples: int = 500):
        self.id = self._IDS[variant]
        self._variant = variant
        self._steps = steps
        self._samples = samples

    def attribute(self, oracle, x, rng):
        return gradient_family(
            oracle, x, self._variant, steps=self._steps, samples=self._samples, rng=rng
        )


class LimeMethod(FeatureMethod):
    def __init__(
        self,
        mode: str,
        samples: int = 1000,
        ridge: float = 1.0,
        kernel_width_factor: float = 0.75,
    ):
        self.id = "lime_cat" if mode == "categorical" else "lime_cont"
        self._mode = mode
        self._samples = samples
        self._ridge = ridge
        self._kwf = kernel_width_factor

    def attribute(self, oracle, x, rng):
        return lime(
            oracle,
            x,
            self._mode,
            n_samples=self._samples,
            ridge=self._ridge,
            rng=rng,
            kernel_width_factor=self._kwf,
        )


class GAkMMethod(SubsetMethod):
    """Restricted experts up to order k; k = None means every order."""

    def __init__(self, k: int | None):
        self.id = "attr_gainfm" if k is None else f"attr_ga{k}m"
        self._k = k

    def attribute(self, oracle, x, rng):
        return _attr_table(oracle, x)

    def select(self, oracle, x, attribution, threshold):
        _check_eta(threshold, self.eta_low)
        n = oracle.n
        k = n if self._k is None else min(self._k, n)
        return _select_by_level(attribution, _level_masks(n), k, threshold, n)


class ArchipelagoMethod(SubsetMethod):
    id = "archipelago"

    def attribute(self, oracle, x, rng):
        return _archipelago_groups(oracle, x)

    def select(self, oracle, x, attribution, threshold):
        _check_eta(threshold, self.eta_low)
        prefixes, attrs, fallback = attribution
        for mask, value in zip(prefixes, attrs):
            if value >= threshold:
                return FeatureSet(int(mask), oracle.n)
        return FeatureSet(int(fallback), oracle.n)


class InterpretableNNMethod(SubsetMethod):
    id = "interpretable_nn"
    eta_low = 0.0

    def threshold_grid(self) -> np.ndarray:
        return UNIT_GRID

    def attribute(self, oracle, x, rng):
        return _greedy_confidence_path(oracle, x, oracle.n)

    def select(self, oracle, x, attribution, threshold):
        _check_eta(threshold, self.eta_low)
        masks, gains = attribution
        hits = gains >= threshold
        if hits.any():
            return FeatureSet(int(masks[np.argmax(hits)]), oracle.n)
        return FeatureSet(int(masks[np.argmax(gains)]), oracle.n)

    def responsibilities(self, oracle, x, attribution):
        table = oracle.posterior_table(x)
        singles = table[np.asarray([1 << i for i in range(oracle.n)])]
        return 4.0 * (singles - 0.5) ** 2


def build_zoo(
    ids: list[str] | None = None, configs: dict[str, MethodConfig] | None = None
) -> list[Method]:
    """Instantiate methods by id, applying any per-method knob overrides."""
    builders = {
        "lime_cat": lambda c: LimeMethod(
            "categorical",
            samples=c.samples or 1000,
            ridge=c.ridge or 1.0,
            kernel_width_factor=c.kernel_width_factor or 0.75,
        ),
        "lime_cont": lambda c: LimeMethod(
            "continuous",
            samples=c.samples or 1000,
            ridge=c.ridge or 1.0,
            kernel_width_factor=c.kernel_width_factor or 0.75,
        ),
        "attr_gam": lambda c: AttrGamMethod(),
        "shapley_e": lambda c: ShapleyMethod(False, samples=c.samples or 128),
        "shap_fe": lambda c: ShapleyMethod(True, samples=c.samples or 128),
        "gradient": lambda c: GradientMethod("grad"),
        "grad_x_input": lambda c: GradientMethod("grad_x_input"),
        "integrated_grad": lambda c: GradientMethod("integrated", steps=c.steps or 50),
        "expected_grad": lambda c: GradientMethod("expected", samples=c.samples or 500),
        "attr_ga2m": lambda c: GAkMMethod(2),
        "attr_ga3m": lambda c: GAkMMethod(3),
        "attr_ga4m": lambda c: GAkMMethod(4),
        "attr_gainfm": lambda c: GAkMMethod(None),
        "interpretable_nn": lambda c: InterpretableNNMethod(),
        "archipelago": lambda c: ArchipelagoMethod(),
    }
    chosen = ids if ids is not None else list(builders)
    unknown = [i for i in chosen if i not in builders]
    if unknown:
        raise ValueError(
            f"unknown method ids {unknown}; valid ids: {', '.join(sorted(builders))}"
        )
    configs = configs or {}
    return [builders[i](configs.get(i, MethodConfig(i))) for i in chosen]


METHOD_IDS = [
    "lime_cat",
    "lime_cont",
    "attr_gam",
    "shapley_e",
    "shap_fe",
    "gradient",
    "grad_x_input",
    "integrated_grad",
    "expected_grad",
    "attr_ga2m",
    "attr_ga3m",
    "attr_ga4m",
    "attr_gainfm",
    "interpretable_nn",
    "archipelago",
]
