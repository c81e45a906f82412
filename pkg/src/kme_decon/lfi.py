"""Likelihood-free inference with deconditional mean embeddings.

Simulations ``(theta_i, x_i)`` define the transformation, samples from the
prior play the role of ``y~`` and the observed summary is the query. The
posterior embedding is evaluated on a grid of candidate parameters and kernel
herding turns it into super-samples. The approximate marginal likelihood
``q_bar`` scores kernel hyperparameters.
"""

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy import stats

from . import _backend
from .dme import transform_matrix
from .embeddings import check_regularizer
from .errors import DomainError, ShapeError
from .kernels import KernelSpec, as_points, gram, median_heuristic, normalized_gaussian
from .linalg import LuFactorization, factorize
from .optimize import minimize_logspace

GRID_SIZE = 512
GRID_PAD = 0.1


@dataclass(frozen=True)
class LfiProblem:
    """Inputs of the posterior-embedding pipeline.

    Attributes
    ----------
    observed : ndarray, shape (1, d_x)
        Observed summary statistic.
    thetas : ndarray, shape (n, d_theta)
        Simulation parameters.
    summaries : ndarray, shape (n, d_x)
        Simulated summaries, aligned with ``thetas``.
    prior_samples : ndarray, shape (m, d_theta)
    grid : ndarray, shape (R, d_theta)
        Candidate parameters at which the embedding is evaluated.
    kernel_k, kernel_l : KernelSpec
        Kernels on summaries and parameters. The (isotropic) lengthscale of
        ``kernel_k`` doubles as the ``eps`` of the normalized kernel used in
        ``q_bar``.
    kernel_lprime : KernelSpec, optional
        Herding kernel; ``None`` uses a unit gaussian with the lengthscales of
        ``kernel_l``.
    lam : float
    delta : float, optional
        Evidence regularizer; ``None`` means ``(n / m) * lam``.
    """

    observed: np.ndarray
    thetas: np.ndarray
    summaries: np.ndarray
    prior_samples: np.ndarray
    grid: np.ndarray
    kernel_k: KernelSpec
    kernel_l: KernelSpec
    lam: float
    kernel_lprime: KernelSpec = None
    delta: float = None
    allow_degenerate: bool = False

    def __post_init__(self):
        obs = as_points(np.atleast_1d(self.observed).reshape(1, -1), "observed")
        th = as_points(self.thetas, "thetas")
        sm = as_points(self.summaries, "summaries")
        pr = as_points(self.prior_samples, "prior_samples")
        gr = as_points(self.grid, "grid")
        if th.shape[0] != sm.shape[0]:
            raise ShapeError(f"{th.shape[0]} thetas but {sm.shape[0]} summaries")
        if sm.shape[1] != obs.shape[1]:
            raise ShapeError("summaries and observed summary differ in dimension")
        if not th.shape[1] == pr.shape[1] == gr.shape[1]:
            raise ShapeError("thetas, prior samples and grid differ in dimension")
        check_regularizer(self.lam, "lambda", self.allow_degenerate)
        if self.delta is not None:
            check_regularizer(self.delta, "delta", self.allow_degenerate)
        for name, value in (("observed", obs), ("thetas", th), ("summaries", sm),
                            ("prior_samples", pr), ("grid", gr)):
            object.__setattr__(self, name, value)

    @property
    def n(self):
        return self.thetas.shape[0]

    @property
    def m(self):
        return self.prior_samples.shape[0]

    @property
    def resolved_delta(self):
        return (self.n / self.m) * self.lam if self.delta is None else self.delta

    @property
    def resolved_lprime(self):
        if self.kernel_lprime is not None:
            return self.kernel_lprime
        return KernelSpec("gaussian", self.kernel_l.lengthscales, 1.0)

    def transform(self):
        return transform_matrix(self.kernel_l, self.thetas, self.prior_samples, self.n * self.lam)

    def transform_row_sums(self):
        """``A 1`` without forming ``A``: one solve against ``L~ 1``.

        Rows of ``L~`` are summed in sorted order, so the result is exactly
        invariant to reordering the prior samples.
        """
        reg = gram(self.kernel_l, self.thetas) + self.n * self.lam * np.eye(self.n)
        l_tilde = gram(self.kernel_l, self.thetas, self.prior_samples)
        return factorize(reg).solve(np.sort(l_tilde, axis=1).sum(axis=1))


def lfi_embedding(problem):
    """Posterior embedding ``L*^T A^T [K A A^T + m delta I]^{-1} k(y)`` on the grid."""
    a = problem.transform()
    k = gram(problem.kernel_k, problem.summaries)
    ky = gram(problem.kernel_k, problem.summaries, problem.observed)[:, 0]
    system = k @ (a @ a.T) + problem.m * problem.resolved_delta * np.eye(problem.n)
    coef = LuFactorization(system).solve(ky)
    l_star = gram(problem.kernel_l, problem.prior_samples, problem.grid)
    return l_star.T @ (a.T @ coef)


class HerdingResult(NamedTuple):
    """Herded super-samples.

    ``accumulator_trace[s]`` is ``sum_{t <= s} l'(., theta_t)`` over the grid
    (empty unless requested).
    """

    super_samples: np.ndarray
    chosen_indices: np.ndarray
    accumulator_trace: np.ndarray


def kernel_herding(mu, grid, kernel_lprime, n_samples, keep_trace=False):
    """Greedy super-samples: step ``s`` picks ``argmax_r mu_r - a_r / s``.

    Ties go to the lowest grid index.
    """
    grid = as_points(grid, "grid")
    mu = np.ascontiguousarray(mu, dtype=np.float64).ravel()
    if mu.shape[0] != grid.shape[0]:
        raise ShapeError(f"mu has {mu.shape[0]} entries, grid has {grid.shape[0]} points")
    if not np.all(np.isfinite(mu)):
        raise DomainError("mu contains non-finite entries")
    if n_samples < 1:
        raise DomainError("n_samples must be positive")
    g = np.ascontiguousarray(gram(kernel_lprime, grid))
    chosen, trace = _backend.herd(mu, g, int(n_samples), bool(keep_trace))
    chosen = np.asarray(chosen, dtype=np.intp)
    return HerdingResult(grid[chosen], chosen, np.asarray(trace))


def approx_marginal_likelihood(problem):
    """``q_bar = mean(A^T kappa_eps)`` with ``kappa_eps_i = N(y; x_i, eps^2 I)``."""
    return _q_bar(problem, problem.transform_row_sums())


def _q_bar(problem, row_sums):
    kappa = normalized_gaussian(problem.kernel_k, problem.observed, problem.summaries)[0]
    return float(kappa @ row_sums) / problem.m


class LfiHyperFit(NamedTuple):
    problem: LfiProblem
    trace: object
    q_init: float
    q_bar: float


def learn_lfi_hyper(problem, budget=100, bounds=None, restarts=1, seed=0, learn=("k",),
                    tie_lprime=True):
    """Maximise ``q_bar`` over log lengthscales of the kernels named in ``learn``.

    ``learn`` holds ``'k'`` (summary kernel, hence ``eps``) and/or ``'l'``
    (parameter kernel). ``lam`` stays fixed, so the default
    ``delta = (n / m) lam`` is unchanged. With ``tie_lprime`` the herding
    kernel follows ``kernel_l``. The trace records ``-q_bar``.

    Notes
    -----
    With fixed ``lam`` the row sums of ``A`` shrink less as ``kernel_l``
    gets smoother, so ``q_bar`` tends to increase without bound in the
    ``l`` lengthscale; learning ``'l'`` is therefore opt-in.
    """
    learn = tuple(learn)
    if not learn or set(learn) - {"k", "l"}:
        raise DomainError(f"learn must name 'k' and/or 'l', got {learn}")
    specs = {"k": problem.kernel_k, "l": problem.kernel_l}
    sizes = [len(specs[name].lengthscales) for name in learn]
    theta0 = np.log(np.concatenate([specs[name].lengthscales for name in learn]))
    names = [f"{name}_log_ls{i}" for name, size in zip(learn, sizes) for i in range(size)]
    if bounds is None:
        bounds = np.column_stack([theta0 - 4.0, theta0 + 4.0])

    def with_theta(theta):
        new = dict(specs)
        start = 0
        for name, size in zip(learn, sizes):
            new[name] = replace(specs[name], lengthscales=tuple(np.exp(theta[start:start + size])))
            start += size
        lprime = None if tie_lprime else problem.kernel_lprime
        return replace(problem, kernel_k=new["k"], kernel_l=new["l"], kernel_lprime=lprime)

    row_sums = {}  # A 1 depends only on kernel_l

    def objective(theta):
        p = with_theta(theta)
        key = p.kernel_l.lengthscales
        if key not in row_sums:
            row_sums.clear()
            row_sums[key] = p.transform_row_sums()
        return -_q_bar(p, row_sums[key])

    best, f_best, trace = minimize_logspace(objective, theta0, names, bounds, budget, restarts, seed)
    if len(trace) == 0:
        q0 = approx_marginal_likelihood(problem)
        return LfiHyperFit(problem, trace, q0, q0)
    return LfiHyperFit(with_theta(best), trace, -trace.values[0], -f_best)


# Exponential observations with a conjugate gamma prior on the rate.

def exp_gamma_simulate(theta, n_obs, seed):
    """Mean of ``n_obs`` exponential draws with rate ``theta``."""
    if not (np.isfinite(theta) and theta > 0):
        raise DomainError(f"rate must be positive, got {theta}")
    if n_obs < 1:
        raise DomainError("n_obs must be positive")
    rng = np.random.default_rng(seed)
    return float(rng.exponential(1.0 / theta, int(n_obs)).mean())


def simulate_batch(thetas, n_obs, seed):
    """Summaries for every rate, each from its own spawned seed stream."""
    thetas = np.asarray(thetas, dtype=float).ravel()
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    streams = root.spawn(thetas.shape[0])
    return np.array([exp_gamma_simulate(t, n_obs, s) for t, s in zip(thetas, streams)])


def exp_gamma_true_posterior(alpha0, beta0, n_obs, sum_x):
    """Conjugate update ``Gamma(alpha0 + n_obs, beta0 + sum_x)`` (shape, rate)."""
    if not (alpha0 > 0 and beta0 > 0):
        raise DomainError("alpha0 and beta0 must be positive")
    if n_obs < 0 or sum_x < 0:
        raise DomainError("n_obs and sum_x must be nonnegative")
    return float(alpha0 + n_obs), float(beta0 + sum_x)


def make_grid(prior_samples, size=GRID_SIZE, pad=GRID_PAD):
    """Uniform grid over the prior-sample range widened by ``pad`` on each side (1-D)."""
    p = as_points(prior_samples, "prior_samples")
    if p.shape[1] != 1:
        raise ShapeError("make_grid builds 1-D grids only")
    lo, hi = float(p.min()), float(p.max())
    width = hi - lo if hi > lo else 1.0
    return np.linspace(lo - pad * width, hi + pad * width, size)[:, None]


def cdf_mae(samples, grid, shape, rate):
    """Mean absolute gap between the empirical CDF of ``samples`` and a gamma CDF on ``grid``."""
    s = np.sort(np.asarray(samples, dtype=float).ravel())
    g = np.asarray(grid, dtype=float).ravel()
    emp = np.searchsorted(s, g, side="right") / s.size
    return float(np.mean(np.abs(emp - stats.gamma.cdf(g, shape, scale=1.0 / rate))))


@dataclass(frozen=True)
class ExpGammaSetup:
    alpha0: float = 1.0
    beta0: float = 1.0
    theta_true: float = 2.0
    n_obs: int = 50


def exp_gamma_problem(setup, n, m, seed, lam=1e-3, grid_size=GRID_SIZE, grid_pad=GRID_PAD,
                      kernel_k=None, kernel_l=None, kernel_lprime=None, delta=None):
    """Simulate observed data, simulations and prior samples for one seed.

    Kernels left as ``None`` become isotropic gaussians with
    median-heuristic lengthscales (``kernel_lprime`` then follows
    ``kernel_l``).

    Returns
    -------
    problem : LfiProblem
    posterior : tuple
        ``(shape, rate)`` of the exact posterior given the observed data.
    """
    root = np.random.SeedSequence(seed)
    obs_seq, sim_seq, prior_seq, data_seq = root.spawn(4)
    data = np.random.default_rng(obs_seq).exponential(1.0 / setup.theta_true, setup.n_obs)
    thetas = np.random.default_rng(sim_seq).gamma(setup.alpha0, 1.0 / setup.beta0, n)
    summaries = simulate_batch(thetas, setup.n_obs, data_seq)
    prior = np.random.default_rng(prior_seq).gamma(setup.alpha0, 1.0 / setup.beta0, m)
    if kernel_k is None:
        kernel_k = KernelSpec.gaussian(median_heuristic(summaries))
    if kernel_l is None:
        kernel_l = KernelSpec.gaussian(median_heuristic(thetas))
    problem = LfiProblem(float(data.mean()), thetas, summaries, prior,
                         make_grid(prior, grid_size, grid_pad), kernel_k, kernel_l, lam,
                         kernel_lprime, delta)
    posterior = exp_gamma_true_posterior(setup.alpha0, setup.beta0, setup.n_obs, float(data.sum()))
    return problem, posterior


class LfiRun(NamedTuple):
    problem: LfiProblem
    mu: np.ndarray
    herding: HerdingResult
    q_bar: float
    posterior_mean: float
    true_mean: float
    rel_error: float
    cdf_mae: float


def run_posterior(problem, true_posterior, n_samples):
    """Embed, herd and score against the exact gamma posterior."""
    mu = lfi_embedding(problem)
    herding = kernel_herding(mu, problem.grid, problem.resolved_lprime, n_samples)
    shape, rate = true_posterior
    mean = float(herding.super_samples.mean())
    true_mean = shape / rate
    return LfiRun(problem, mu, herding, approx_marginal_likelihood(problem), mean, true_mean,
                  abs(mean - true_mean) / true_mean,
                  cdf_mae(herding.super_samples, problem.grid, shape, rate))
