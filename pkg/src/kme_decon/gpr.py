"""Plain GP regression (kernel ridge mean) with marginal-likelihood tuning.

Used by the cascade and impute baselines.
"""

from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, as_points, gram, median_heuristic
from .linalg import factorize, gaussian_logpdf
from .optimize import minimize_logspace


@dataclass(frozen=True)
class GpRegressor:
    kernel: KernelSpec
    noise: float
    x: np.ndarray
    alpha: np.ndarray
    offset: float = 0.0

    def predict(self, x_query):
        return self.offset + gram(self.kernel, x_query, self.x) @ self.alpha


def gp_nlml(kernel, noise, x, z):
    cov = gram(kernel, x) + noise * np.eye(len(z))
    return -gaussian_logpdf(z, 0.0, cov)


def fit_gp(x, z, kernel=None, noise=None, budget=150, restarts=2, seed=0):
    """Fit a GP to centred targets, tuning lengthscale, signal variance and noise.

    The target mean is added back at prediction, so constant targets are
    reproduced exactly. Unspecified hyperparameters start from the median heuristic, the target
    variance and a tenth of it; pass ``budget=0`` to skip tuning.
    """
    x = as_points(x, "x")
    z = np.asarray(z, dtype=float).ravel()
    offset = float(np.mean(z))
    z = z - offset
    var = float(np.var(z)) if np.var(z) > 0 else 1.0
    if kernel is None:
        kernel = KernelSpec.gaussian(median_heuristic(x), var)
    if noise is None:
        noise = 0.1 * var
    theta0 = np.r_[kernel.log_params(), np.log(noise)]
    names = [f"log_ls{i}" for i in range(len(kernel.lengthscales))] + ["log_sv", "log_noise"]
    bounds = np.column_stack([theta0 - 6.0, theta0 + 6.0])
    bounds[-1, 0] = max(bounds[-1, 0], np.log(1e-8))

    def objective(theta):
        return gp_nlml(kernel.with_log_params(theta[:-1]), np.exp(theta[-1]), x, z)

    best, _, _ = minimize_logspace(objective, theta0, names, bounds, budget, restarts, seed)
    kernel = kernel.with_log_params(best[:-1])
    noise = float(np.exp(best[-1]))
    alpha = factorize(gram(kernel, x) + noise * np.eye(len(z))).solve(z)
    return GpRegressor(kernel, noise, x, alpha, offset)
