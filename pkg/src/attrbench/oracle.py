"""Analytic Gaussian-mixture view of a task.

One isotropic Gaussian per centroid, uniform component weights, label glued
to the component. Conditioning on a coordinate subset keeps the mixture
Gaussian (projections of isotropic Gaussians are Gaussian), so the class-1
posterior given X_I is a softmax over projected squared distances. All
heavy paths are log-space with max shifting: at small noise the unshifted
likelihoods underflow long before the posterior degenerates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .subsets import FeatureSet
from .taskgen import Task

MAX_TABLE_DIM = 16


class MixtureOracle:
    """Posteriors, subset-conditional posteriors, gradients and samples.

    Immutable after construction; the per-point posterior table cache is
    append-only and keyed by coordinate bytes, safe for concurrent reads.
    """

    def __init__(self, task: Task, cache_size: int = 1024):
        if task.noise_std <= 0:
            raise ValueError("noise_std must be positive")
        self.task = task
        self.n = task.n
        self.centroids = np.array([c.coords for c in task.centroids], dtype=float)
        self.labels = np.array([c.label for c in task.centroids], dtype=np.int8)
        self.std = float(task.noise_std)
        self._class1 = self.labels == 1
        self._inv_two_var = 1.0 / (2.0 * self.std**2)
        self._bit_matrix: np.ndarray | None = None
        self._cache: dict[bytes, np.ndarray] = {}
        self._cache_size = cache_size

    @property
    def m(self) -> int:
        return len(self.labels)

    def _axis_square_diffs(self, x: np.ndarray) -> np.ndarray:
        return (x[None, :] - self.centroids) ** 2

    def _posterior_from_sq(self, sq: np.ndarray) -> np.ndarray:
        """Class-1 posterior from per-component squared distances.

        Accepts (..., m) stacks; reduces the component axis.
        """
        log_w = -sq * self._inv_two_var
        log_w = log_w - log_w.max(axis=-1, keepdims=True)
        w = np.exp(log_w)
        return w[..., self._class1].sum(axis=-1) / w.sum(axis=-1)

    def posterior(self, x, subset: FeatureSet) -> float:
        """P(Y = 1 | X_I = projection of x), conditioning on subset I."""
        x = np.asarray(x, dtype=float)
        self._check_point(x, subset)
        idx = list(subset.indices())
        sq = self._axis_square_diffs(x)[:, idx].sum(axis=1)
        return float(self._posterior_from_sq(sq))

    def posterior_batch(self, points: np.ndarray) -> np.ndarray:
        """Full-conditioning posterior for a (batch, n) stack of points."""
        points = np.asarray(points, dtype=float)
        sq = ((points[:, None, :] - self.centroids[None, :, :]) ** 2).sum(axis=-1)
        return self._posterior_from_sq(sq)

    def posterior_table(self, x) -> np.ndarray:
        """Class-1 posterior for every subset, indexed by subset bitmask.

        One bit-matrix product turns per-axis squared differences into all
        2^n projected squared distances, shared by every subset-enumerating
        method through a per-point cache.
        """
        if self.n > MAX_TABLE_DIM:
            raise ValueError(f"full subset table limited to n <= {MAX_TABLE_DIM}")
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"point must have {self.n} coordinates")
        key = x.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self._bit_matrix is None:
            masks = np.arange(1 << self.n, dtype=np.uint32)
            self._bit_matrix = ((masks[:, None] >> np.arange(self.n)) & 1).astype(float)
        sq = self._bit_matrix @ self._axis_square_diffs(x).T
        table = self._posterior_from_sq(sq)
        table.setflags(write=False)
        if len(self._cache) >= self._cache_size:
            self._cache.pop(next(iter(self._cache)))
        self._cache[key] = table
        return table

    def attr_prob(self, x, subset: FeatureSet) -> float:
        """Highest class probability under subset conditioning, in [1/2, 1]."""
        p = self.posterior(x, subset)
        return max(p, 1.0 - p)

    def attr_entropy(self, x, subset: FeatureSet) -> float:
        """One minus the label entropy normalised by the uniform entropy.

        0 at a uniform posterior, 1 at a deterministic one; 0 log 0 is 0.
        """
        p = self.posterior(x, subset)
        return float(1.0 - (xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / np.log(0.5))

    def gradient(self, x) -> np.ndarray:
        """Analytic gradient of the full-conditioning class-1 posterior."""
        x = np.asarray(x, dtype=float)
        self._check_point(x, None)
        return self.gradient_batch(x[None, :])[0]

    def gradient_batch(self, points: np.ndarray) -> np.ndarray:
        """Gradient of the posterior at each row of a (batch, n) stack.

        Softmax-of-quadratics derivative: with responsibilities r_j and
        posterior p, the gradient is sum_j r_j (1[y_j = 1] - p)(c_j - x)/std^2.
        """
        points = np.asarray(points, dtype=float)
        diffs = self.centroids[None, :, :] - points[:, None, :]
        log_w = -(diffs**2).sum(axis=-1) * self._inv_two_var
        log_w -= log_w.max(axis=-1, keepdims=True)
        w = np.exp(log_w)
        resp = w / w.sum(axis=-1, keepdims=True)
        p = resp[:, self._class1].sum(axis=-1, keepdims=True)
        signs = self._class1.astype(float)[None, :] - p
        return np.einsum("bm,bmn->bn", resp * signs, diffs) / self.std**2

    def sample(
        self, rng: np.random.Generator, count: int
    ) -> list[tuple[tuple[float, ...], int]]:
        """Draw (point, label) pairs from the mixture."""
        if count < 1:
            raise ValueError("count must be >= 1")
        picks = rng.integers(0, self.m, size=count)
        points = self.centroids[picks] + rng.normal(0.0, self.std, size=(count, self.n))
        return [
            (tuple(float(v) for v in row), int(self.labels[j]))
            for row, j in zip(points, picks)
        ]

    def _check_point(self, x: np.ndarray, subset: FeatureSet | None) -> None:
        if x.shape != (self.n,):
            raise ValueError(f"point must have {self.n} coordinates, got {x.shape}")
        if subset is not None and subset.n != self.n:
            raise ValueError(f"subset dimension {subset.n} != task dimension {self.n}")


@dataclass(frozen=True)
class LinearGaussianDensity:
    """Y = weights . X + noise with X uniform on [-1, 1]^d and independent
    Gaussian noise; the only regression density family with built-in
    conditional-variance closed forms."""

    weights: tuple[float, ...]
    noise_std: float = 0.0

    def __post_init__(self) -> None:
        if not self.weights:
            raise ValueError("at least one weight required")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")


def conditional_variance(density, x, subset: FeatureSet) -> float:
    """Var[Y | X_I = projection of x] for a built-in density spec.

    Independent uniforms on [-1, 1] contribute weight^2 / 3 each when left
    unconditioned; additive noise contributes its variance. Constant in x
    for this family, but x is validated against the ambient dimension. The
    reciprocal of the result is the conditional-variance attribution, and
    thresholding it at eta yields the relaxed functionality domain.
    """
    if not isinstance(density, LinearGaussianDensity):
        raise TypeError(f"unsupported density spec {type(density).__name__}")
    d = len(density.weights)
    if subset.n != d:
        raise ValueError(f"subset dimension {subset.n} != density dimension {d}")
    if len(tuple(x)) != d:
        raise ValueError(f"point must have {d} coordinates")
    free = sum(w**2 for i, w in enumerate(density.weights) if i not in subset)
    return free / 3.0 + density.noise_std**2
