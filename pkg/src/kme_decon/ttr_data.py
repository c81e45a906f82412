"""Synthetic task-transformed regression data and the naive baselines."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .gpr import fit_gp
from .kernels import KernelSpec, as_points, gram
from .linalg import factorize

Y_LOW, Y_HIGH = -6.0, 6.0
NOISE_SD = 0.25


def warp(y):
    """Mediating map ``r(y) = sin(3y/4)``; not invertible on ``[-6, 6]``."""
    return np.sin(0.75 * np.asarray(y, dtype=float))


def latent(x):
    """Latent target ``f(x) = x sin(3x) + x^2 / 2``."""
    x = np.asarray(x, dtype=float)
    return x * np.sin(3.0 * x) + 0.5 * x * x


@dataclass(frozen=True)
class TaskTransformedDataset:
    """Transformation pairs ``(x_i, y_i)`` and task pairs ``(y~_j, z~_j)``."""

    x: np.ndarray
    y: np.ndarray
    y_tilde: np.ndarray
    z_tilde: np.ndarray
    ground_truth_f: object = None
    seed: int = None

    def __post_init__(self):
        x = as_points(self.x, "x")
        y = as_points(self.y, "y")
        yt = as_points(self.y_tilde, "y_tilde")
        zt = np.asarray(self.z_tilde, dtype=float).ravel()
        if x.shape[0] != y.shape[0]:
            raise ShapeError(f"x has {x.shape[0]} points, y has {y.shape[0]}")
        if yt.shape[0] != zt.shape[0]:
            raise ShapeError(f"y_tilde has {yt.shape[0]} points, z_tilde has {zt.shape[0]}")
        if y.shape[1] != yt.shape[1]:
            raise ShapeError("y and y_tilde differ in dimension")
        if not np.all(np.isfinite(zt)):
            raise DomainError("z_tilde contains non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "y_tilde", yt)
        object.__setattr__(self, "z_tilde", zt)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def m(self):
        return self.y_tilde.shape[0]

    def with_targets(self, z_tilde):
        return TaskTransformedDataset(self.x, self.y, self.y_tilde, z_tilde,
                                      self.ground_truth_f, self.seed)

    def to_csv(self, path):
        dx, dy = self.x.shape[1], self.y.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([*(f"x{i}" for i in range(dx)), *(f"y{i}" for i in range(dy)), "z", "split"])
            for xi, yi in zip(self.x, self.y):
                w.writerow([*map(repr, map(float, xi)), *map(repr, map(float, yi)), "", "transformation"])
            for yi, zi in zip(self.y_tilde, self.z_tilde):
                w.writerow([*([""] * dx), *map(repr, map(float, yi)), repr(float(zi)), "task"])


def sample_x_given_y(y, rng, noise_sd=NOISE_SD):
    """Draw ``X = r(y) + eta`` for each entry of ``y``."""
    y = np.asarray(y, dtype=float)
    return warp(y) + noise_sd * rng.standard_normal(y.shape)


def sample_z_given_y(y, rng, noise_sd=NOISE_SD):
    """Draw ``Z~ = f(r(y) + eta~) + xi~`` for each entry of ``y``."""
    y = np.asarray(y, dtype=float)
    inner = warp(y) + noise_sd * rng.standard_normal(y.shape)
    return latent(inner) + noise_sd * rng.standard_normal(y.shape)


def generate_ttr(n=200, m=200, seed=0, noise_sd=NOISE_SD, noiseless=False):
    """Sample ``X = r(Y) + eta`` and ``Z~ = f(r(Y~) + eta~) + xi~``.

    ``Y, Y~ ~ U(-6, 6)`` and all three noises are ``N(0, noise_sd^2)``.
    ``noiseless=True`` zeroes the noises.
    """
    if n < 1 or m < 1:
        raise DomainError("n and m must be positive")
    if not noiseless and not noise_sd > 0:
        raise DomainError("noise_sd must be positive")
    sd = 0.0 if noiseless else noise_sd
    rng = np.random.default_rng(seed)
    y = rng.uniform(Y_LOW, Y_HIGH, n)
    x = sample_x_given_y(y, rng, sd)
    y_tilde = rng.uniform(Y_LOW, Y_HIGH, m)
    z_tilde = sample_z_given_y(y_tilde, rng, sd)
    return TaskTransformedDataset(x, y, y_tilde, z_tilde, latent, seed)


def cascade_baseline(dataset, budget=150, seed=0):
    """Compose a GP mean ``X -> Y`` with a GP mean ``Y -> Z``."""
    x_to_y = fit_gp(dataset.x, dataset.y[:, 0], budget=budget, seed=seed)
    y_to_z = fit_gp(dataset.y_tilde, dataset.z_tilde, budget=budget, seed=seed)

    def predict(x_query):
        return y_to_z.predict(x_to_y.predict(x_query)[:, None])

    return predict


def impute_baseline(dataset, budget=150, seed=0):
    """Impute ``z_fake`` at ``y`` with a GP ``Y -> Z``, then regress ``X -> z_fake``."""
    y_to_z = fit_gp(dataset.y_tilde, dataset.z_tilde, budget=budget, seed=seed)
    z_fake = y_to_z.predict(dataset.y)
    x_to_z = fit_gp(dataset.x, z_fake, budget=budget, seed=seed)
    return x_to_z.predict


# Sparse-learning toy process: a GP posterior mean through five anchors.
TOY_ANCHORS = np.array([-4.0, -2.5, -0.5, 1.5, 3.5])
TOY_VALUES = np.array([-1.2, 0.8, 1.5, -0.6, 0.9])
TOY_KERNEL = KernelSpec.gaussian(1.0, 1.0)
TOY_NOISE_SD = 0.1
TOY_LOW, TOY_HIGH = -5.0, 5.0


def toy_function(y):
    """The five-anchor GP mean that generates the sparse-learning data.

    It interpolates ``TOY_VALUES``; inputs equal to an anchor return the
    anchor value exactly.
    """
    y = np.asarray(y, dtype=float).ravel()
    weights = factorize(gram(TOY_KERNEL, TOY_ANCHORS)).solve(TOY_VALUES)
    out = gram(TOY_KERNEL, y, TOY_ANCHORS) @ weights
    row, col = np.nonzero(y[:, None] == TOY_ANCHORS[None, :])
    out[row] = TOY_VALUES[col]
    return out


def toy_gp_process(m=100, seed=0, noiseless=False, at_anchors=False):
    """Inputs ``U(-5, 5)`` and targets ``toy_function + N(0, 0.1^2)``.

    ``at_anchors=True`` places the first five inputs on the anchors.
    """
    if m < 5:
        raise DomainError("m must be at least 5")
    rng = np.random.default_rng(seed)
    y = rng.uniform(TOY_LOW, TOY_HIGH, m)
    if at_anchors:
        y[:5] = TOY_ANCHORS
    noise = rng.standard_normal(m)
    z = toy_function(y)
    if not noiseless:
        z = z + TOY_NOISE_SD * noise
    return y, z
