"""Task transformed Gaussian processes.

A GP prior on ``f`` is linked to a GP on ``g`` through the transformation
data; integrating ``g`` out gives a transformed GP whose likelihood is
``z~ | f ~ N(A^T f, Sigma)``. With the MAP simplification for ``g``,
``Sigma = sigma2 I`` and the posterior mean coincides with the DME estimator
for ``lambda = sigma2 / n`` and ``epsilon = sigma2 / m``.
"""

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .dme import dme_fit, parametric_transform
from .errors import ContractViolation, DomainError, ShapeError
from .kernels import as_points, feature, gram
from .linalg import LOG_2PI, LuFactorization, factorize, gaussian_logpdf
from .optimize import OptimizeTrace, minimize_logspace
from .ttr_data import TaskTransformedDataset


@dataclass(frozen=True)
class TtgpHyper:
    """TTGP hyperparameters.

    ``beta2`` and ``gamma2`` are the weight-prior variances of the parametric
    model; the nonparametric model carries them in the kernel signal
    variances instead.
    """

    kernel_k: object = None
    kernel_l: object = None
    sigma2: float = 1.0
    beta2: float = 1.0
    gamma2: float = 1.0
    map_g: bool = True

    def __post_init__(self):
        for name in ("sigma2", "beta2", "gamma2"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value}")

    def dme_regularizers(self, n, m):
        """``(lambda, epsilon)`` for which the DME equals the TTGP mean."""
        return self.sigma2 / n, self.sigma2 / m

    def log_params(self):
        return np.r_[self.kernel_k.log_params(), self.kernel_l.log_params(), np.log(self.sigma2)]

    def param_names(self):
        def names(prefix, kern):
            if kern.family == "gaussian":
                return [f"{prefix}_log_ls{i}" for i in range(len(kern.lengthscales))] + [f"{prefix}_log_sv"]
            return [f"{prefix}_log_sv"]
        return names("k", self.kernel_k) + names("l", self.kernel_l) + ["log_sigma2"]

    def with_log_params(self, theta):
        nk = self.kernel_k.log_params().size
        nl = self.kernel_l.log_params().size
        return replace(self,
                       kernel_k=self.kernel_k.with_log_params(theta[:nk]),
                       kernel_l=self.kernel_l.with_log_params(theta[nk:nk + nl]),
                       sigma2=float(np.exp(theta[nk + nl])))

    def to_dict(self):
        return {
            "kernel_k": self.kernel_k.to_dict() if self.kernel_k else None,
            "kernel_l": self.kernel_l.to_dict() if self.kernel_l else None,
            "sigma2": self.sigma2, "beta2": self.beta2, "gamma2": self.gamma2,
            "map_g": self.map_g,
        }


@dataclass(frozen=True)
class TtgpPosterior:
    mean: np.ndarray
    covariance: np.ndarray
    log_marginal: float

    @property
    def sd(self):
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def build_transform(y, y_tilde, kernel_l, sigma2, map_g=True):
    """Transformation ``A = (L + sigma2 I)^{-1} L~`` and noise covariance.

    With ``map_g`` the covariance is ``sigma2 I``; otherwise it is the
    predictive covariance of ``g`` at ``y~`` plus noise,
    ``L~~ + sigma2 I - L~^T (L + sigma2 I)^{-1} L~``.
    """
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    y = as_points(y, "y")
    y_tilde = as_points(y_tilde, "y_tilde")
    n, m = y.shape[0], y_tilde.shape[0]
    fac = factorize(gram(kernel_l, y) + sigma2 * np.eye(n))
    half = fac.half_solve(gram(kernel_l, y, y_tilde))
    a = fac.half_solve_t(half)
    if map_g:
        return a, sigma2 * np.eye(m)
    sigma = gram(kernel_l, y_tilde) + sigma2 * np.eye(m) - half.T @ half
    return a, 0.5 * (sigma + sigma.T)


def _check(dataset, hyper):
    if not isinstance(dataset, TaskTransformedDataset):
        raise ShapeError("dataset must be a TaskTransformedDataset")
    if hyper.kernel_k is None or hyper.kernel_l is None:
        raise ContractViolation("nonparametric TTGP needs kernel_k and kernel_l")


def marginal_covariance(dataset, hyper):
    """``A^T K A + Sigma``, the covariance of ``z~`` under the prior."""
    _check(dataset, hyper)
    a, sigma = build_transform(dataset.y, dataset.y_tilde, hyper.kernel_l, hyper.sigma2, hyper.map_g)
    cov = a.T @ gram(hyper.kernel_k, dataset.x) @ a
    return 0.5 * (cov + cov.T) + sigma


def log_marginal_nonparametric(dataset, hyper):
    """``log N(z~; 0, A^T K A + Sigma)``."""
    return gaussian_logpdf(dataset.z_tilde, 0.0, marginal_covariance(dataset, hyper))


def log_marginal_alternative(dataset, hyper):
    """MAP-simplified log marginal using only ``n x n`` solves.

    The covariance ``sigma2 [I - A^T (K A A^T + sigma2 I)^{-1} K A]^{-1}`` is
    never formed: its quadratic form and log-determinant both reduce to the
    ``n x n`` system ``M = K A A^T + sigma2 I``.
    """
    _check(dataset, hyper)
    if not hyper.map_g:
        raise ContractViolation("the alternative marginal likelihood requires map_g=True")
    s2 = hyper.sigma2
    n, m = dataset.n, dataset.m
    a, _ = build_transform(dataset.y, dataset.y_tilde, hyper.kernel_l, s2, map_g=True)
    k = gram(hyper.kernel_k, dataset.x)
    lu = LuFactorization(k @ (a @ a.T) + s2 * np.eye(n))
    z = dataset.z_tilde
    u = a @ z
    quad = (float(z @ z) - float(u @ lu.solve(k @ u))) / s2
    sign, logdet_m = lu.slogdet()
    if sign <= 0:
        raise ContractViolation("K A A^T + sigma2 I has non-positive determinant")
    logdet = (m - n) * np.log(s2) + logdet_m
    return -0.5 * (quad + logdet + m * LOG_2PI)


def log_marginal_parametric(dataset, fmap_x, fmap_y, hyper):
    """Weight-space log marginal through the ``p x p`` matrix ``C``.

    ``C = [Phi A Sigma^{-1} A^T Phi^T + I / gamma2]^{-1}`` and the precision
    of ``z~`` is ``Sigma^{-1} - Sigma^{-1} A^T Phi^T C Phi A Sigma^{-1}``.
    """
    phi = feature(fmap_x, dataset.x).T
    psi = feature(fmap_y, dataset.y).T
    psi_t = feature(fmap_y, dataset.y_tilde).T
    s2, b2, g2 = hyper.sigma2, hyper.beta2, hyper.gamma2
    m, p = dataset.m, phi.shape[0]
    a = parametric_transform(psi, psi_t, s2 / b2)
    if hyper.map_g:
        sigma_fac = factorize(s2 * np.eye(m))
    else:
        q = psi.shape[0]
        g_fac = factorize(psi @ psi.T + (s2 / b2) * np.eye(q))
        half = g_fac.half_solve(psi_t)
        sigma = s2 * (half.T @ half) + s2 * np.eye(m)
        sigma_fac = factorize(0.5 * (sigma + sigma.T))
    u = a.T @ phi.T                      # m x p
    su = sigma_fac.solve(u)
    z = dataset.z_tilde
    sz = sigma_fac.solve(z)
    c_inv = u.T @ su + np.eye(p) / g2
    c_fac = factorize(0.5 * (c_inv + c_inv.T))
    t = u.T @ sz
    quad = float(z @ sz) - float(t @ c_fac.solve(t))
    logdet = sigma_fac.logdet() + c_fac.logdet() + p * np.log(g2)
    return -0.5 * (quad + logdet + m * LOG_2PI)


def posterior_predict(dataset, hyper, x_query, form=None):
    """Predictive mean and covariance of ``f`` at the query points.

    ``form='woodbury'`` (MAP only) replaces the ``m x m`` factorization by
    the ``n x n`` system ``A A^T K + sigma2 I``; it is the default when
    ``m > 2n``. ``log_marginal`` is filled in only by the standard form.
    """
    _check(dataset, hyper)
    xq = as_points(x_query, "x_query")
    n, m = dataset.n, dataset.m
    if form is None:
        form = "woodbury" if hyper.map_g and m > 2 * n else "standard"
    if form == "woodbury" and not hyper.map_g:
        raise ContractViolation("the woodbury predictive form requires map_g=True")
    a, sigma = build_transform(dataset.y, dataset.y_tilde, hyper.kernel_l, hyper.sigma2, hyper.map_g)
    k = gram(hyper.kernel_k, dataset.x)
    k_star = gram(hyper.kernel_k, dataset.x, xq)
    k_ss = gram(hyper.kernel_k, xq)
    z = dataset.z_tilde
    if form == "standard":
        s = a.T @ k @ a
        fac = factorize(0.5 * (s + s.T) + sigma)
        v = fac.half_solve(a.T @ k_star)
        w = fac.half_solve(z)
        mean = v.T @ w
        cov = k_ss - v.T @ v
        lml = -0.5 * (float(w @ w) + fac.logdet() + m * LOG_2PI)
    else:
        aat = a @ a.T
        lu = LuFactorization(aat @ k + hyper.sigma2 * np.eye(n))
        mean = k_star.T @ lu.solve(a @ z)
        cov = k_ss - k_star.T @ lu.solve(aat @ k_star)
        lml = np.nan
    return TtgpPosterior(mean, 0.5 * (cov + cov.T), lml)


class HyperFit(NamedTuple):
    hyper: TtgpHyper
    trace: OptimizeTrace
    nlml_init: float
    nlml: float


def _objective_fn(kind):
    if kind == "standard":
        return log_marginal_nonparametric
    if kind == "alternative":
        return log_marginal_alternative
    raise ContractViolation(f"unknown marginal likelihood {kind!r}")


def default_bounds(theta0, width=4.0):
    return np.column_stack([theta0 - width, theta0 + width])


def optimize_hyper(dataset, init, bounds=None, budget=200, restarts=1, seed=0,
                   objective="standard"):
    """Maximise the TTGP marginal likelihood over log kernel parameters and ``sigma2``.

    Never returns hyperparameters with a lower marginal likelihood than
    ``init``.
    """
    _check(dataset, init)
    lml = _objective_fn(objective)
    theta0 = init.log_params()
    if bounds is None:
        bounds = default_bounds(theta0)

    def nlml(theta):
        return -lml(dataset, init.with_log_params(theta))

    best, f_best, trace = minimize_logspace(nlml, theta0, init.param_names(), bounds,
                                            budget, restarts, seed)
    if len(trace) == 0:
        f0 = nlml(theta0)
        return HyperFit(init, trace, f0, f0)
    return HyperFit(init.with_log_params(best), trace, trace.values[0], f_best)


class InducingResult(NamedTuple):
    points: np.ndarray
    hyper: TtgpHyper
    trace: OptimizeTrace
    nlml: float

    def dataset(self, y_tilde, z_tilde):
        return inducing_dataset(self.points, y_tilde, z_tilde)

    def model(self, y_tilde, z_tilde):
        """Woodbury-form DME built on the learned inducing points."""
        ds = self.dataset(y_tilde, z_tilde)
        lam, eps = self.hyper.dme_regularizers(ds.n, ds.m)
        return dme_fit(ds, self.hyper.kernel_k, self.hyper.kernel_l, lam, eps, form="woodbury")


def inducing_dataset(points, y_tilde, z_tilde):
    u = as_points(points, "inducing points")
    return TaskTransformedDataset(u, u, y_tilde, z_tilde)


def sparse_nlml(points, y_tilde, z_tilde, hyper):
    return -log_marginal_alternative(inducing_dataset(points, y_tilde, z_tilde), hyper)


def learn_inducing(y_tilde, z_tilde, n_inducing, init_points, hyper, budget=400,
                   learn_hyper=True, bounds=None, restarts=1, seed=0, tie_kernels=True,
                   halfwidth=4.0):
    """Learn inducing locations ``x = y = u`` by the alternative marginal likelihood.

    Parameters
    ----------
    y_tilde, z_tilde : array
        The full dataset of size ``m``.
    n_inducing : int
    init_points : array, shape (n_inducing, d)
    hyper : TtgpHyper
        Initial (or fixed, with ``learn_hyper=False``) hyperparameters.
    budget : int
        Objective evaluations; ``0`` returns the initial state.
    learn_hyper : bool
        Learn hyperparameters jointly with the points. The first half of the
        budget moves the points under ``hyper``; the second half refines
        points and hyperparameters together from there.
    bounds : array, optional
        Log-space box for the learned hyperparameters; by default
        ``halfwidth`` either side of their initial values. Points are boxed
        to the data range widened by 10%.
    tie_kernels : bool
        Since ``x = y``, use one kernel for both roles when learning
        hyperparameters: ``kernel_l`` is replaced by ``kernel_k`` and only its
        parameters are learned. Ignored with ``learn_hyper=False``.
    """
    if not hyper.map_g:
        raise ContractViolation("inducing-point learning requires map_g=True")
    tie_kernels = tie_kernels and learn_hyper
    if tie_kernels:
        hyper = replace(hyper, kernel_l=hyper.kernel_k)
    yt = as_points(y_tilde, "y_tilde")
    zt = np.asarray(z_tilde, dtype=float).ravel()
    u0 = as_points(init_points, "init_points")
    if u0.shape[0] != n_inducing or u0.shape[1] != yt.shape[1]:
        raise ShapeError(f"init_points must have shape ({n_inducing}, {yt.shape[1]})")
    d = yt.shape[1]
    n_pts = n_inducing * d
    lo, hi = yt.min(axis=0), yt.max(axis=0)
    pad = 0.1 * (hi - lo)
    point_bounds = np.tile(np.column_stack([lo - pad, hi + pad]), (n_inducing, 1))
    point_names = [f"u{i}_{j}" for i in range(n_inducing) for j in range(d)]

    def points_only(theta):
        return sparse_nlml(theta.reshape(n_inducing, d), yt, zt, hyper)

    stage_one = budget // 2 if learn_hyper else budget
    u_best, f_best, trace = minimize_logspace(points_only, u0.ravel(), point_names, point_bounds,
                                              stage_one, restarts, seed)
    if not learn_hyper:
        if len(trace) == 0:
            return InducingResult(u0, hyper, trace, points_only(u0.ravel()))
        return InducingResult(u_best.reshape(n_inducing, d), hyper, trace, f_best)

    if tie_kernels:
        h0 = np.r_[hyper.kernel_k.log_params(), np.log(hyper.sigma2)]
        h_names = hyper.param_names()[:h0.size - 1] + ["log_sigma2"]

        def unpack(theta):
            k = hyper.kernel_k.with_log_params(theta[:-1])
            return replace(hyper, kernel_k=k, kernel_l=k, sigma2=float(np.exp(theta[-1])))
    else:
        h0, h_names, unpack = hyper.log_params(), hyper.param_names(), hyper.with_log_params
    hb = default_bounds(h0, halfwidth) if bounds is None else np.asarray(bounds, float)

    def joint(theta):
        return sparse_nlml(theta[:n_pts].reshape(n_inducing, d), yt, zt, unpack(theta[n_pts:]))

    # stage two restarts from the stage-one points, never from random hyperparameters
    best, f_joint, trace2 = minimize_logspace(joint, np.r_[u_best, h0],
                                              point_names + h_names,
                                              np.vstack([point_bounds, hb]),
                                              budget - len(trace), 1, seed)
    full = OptimizeTrace(point_names + h_names)
    for p, v in zip(trace.params, trace.values):
        full.record(np.r_[p, h0], v)
    for p, v in zip(trace2.params, trace2.values):
        full.record(p, v)
    if len(full) == 0:
        return InducingResult(u0, hyper, full, points_only(u0.ravel()))
    if not len(trace2):
        return InducingResult(u_best.reshape(n_inducing, d), hyper, full, f_best)
    return InducingResult(best[:n_pts].reshape(n_inducing, d), unpack(best[n_pts:]), full, f_joint)
