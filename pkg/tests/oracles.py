"""Dense reference implementations used only by the tests.

Everything here uses explicit inverses, naive loops or plain sampling so it
shares no code path with the package.
"""

import numpy as np


def naive_gaussian_gram(a, b, lengthscale=1.0, signal_variance=1.0):
    a = np.atleast_2d(np.asarray(a, float).reshape(len(a), -1))
    b = np.atleast_2d(np.asarray(b, float).reshape(len(b), -1))
    out = np.empty((a.shape[0], b.shape[0]))
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            d = (a[i] - b[j]) / lengthscale
            out[i, j] = signal_variance * np.exp(-0.5 * float(d @ d))
    return out


def dense_transform(l_mat, l_tilde, reg):
    return np.linalg.inv(l_mat + reg * np.eye(l_mat.shape[0])) @ l_tilde


def dense_dme_alpha(k, l_mat, l_tilde, z, lam, eps):
    """``A [A^T K A + m eps I]^{-1} z`` with explicit inverses."""
    n, m = l_tilde.shape
    a = dense_transform(l_mat, l_tilde, n * lam)
    return a @ np.linalg.inv(a.T @ k @ a + m * eps * np.eye(m)) @ z


def dense_logpdf(x, mean, cov):
    d = np.asarray(x, float) - mean
    _, logdet = np.linalg.slogdet(cov)
    return -0.5 * (d @ np.linalg.inv(cov) @ d + logdet + len(d) * np.log(2 * np.pi))


def central_gradient(fn, w, h=1e-6):
    w = np.asarray(w, float)
    grad = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        grad[i] = (fn(w + e) - fn(w - e)) / (2 * h)
    return grad


def random_spd(rng, n, floor=0.1):
    q = rng.normal(size=(n, n))
    return q @ q.T / n + floor * np.eye(n)


def exp_gamma_evidence(y, eps, alpha0, beta0, n_obs, seed, draws=100_000):
    """Monte Carlo estimate of ``E_theta N(y; xbar(theta), eps^2)`` and the draw sd.

    The sample mean of ``n_obs`` exponentials with rate ``theta`` is drawn
    directly as ``Gamma(n_obs, rate n_obs theta)``.
    """
    rng = np.random.default_rng(seed)
    theta = rng.gamma(alpha0, 1.0 / beta0, draws)
    xbar = rng.gamma(n_obs, 1.0 / (n_obs * theta))
    dens = np.exp(-0.5 * ((y - xbar) / eps) ** 2) / np.sqrt(2 * np.pi * eps * eps)
    return float(dens.mean()), float(dens.std(ddof=1))
