"""Deconditional mean embeddings: the empirical DMO and the DME estimators.

Two computational forms of the nonparametric estimator are provided.
``standard`` factorizes the ``m x m`` system ``A^T K A + m eps I``;
``woodbury`` solves the ``n x n`` system ``K A A^T + m eps I`` instead, so
its cost grows only linearly in the number of task points ``m``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .embeddings import check_regularizer
from .errors import ContractViolation, ShapeError
from .kernels import FeatureMap, KernelSpec, as_points, feature, gram
from .linalg import LuFactorization, factorize
from .ttr_data import TaskTransformedDataset

FORMS = ("standard", "woodbury")


def transform_matrix(kernel_l, y, y_tilde, reg):
    """``A = (L + reg I)^{-1} L~`` with ``L = l(y, y)``, ``L~ = l(y, y~)``."""
    n = y.shape[0]
    return factorize(gram(kernel_l, y) + reg * np.eye(n)).solve(gram(kernel_l, y, y_tilde))


def default_form(n, m):
    return "woodbury" if m > 2 * n else "standard"


def dmo_weights(x, y, y_tilde, kernel_k, kernel_l, lam, epsilon, allow_degenerate=False):
    """Coefficient matrix ``[A^T K A + m eps I]^{-1} A^T`` of the empirical DMO.

    For a query ``x`` and a function ``g`` with values ``g~`` at ``y~``,
    the deconditional estimate is ``g~ @ W @ k(x)``.

    Returns
    -------
    ndarray, shape (m, n)
    """
    x = as_points(x, "x")
    y = as_points(y, "y")
    y_tilde = as_points(y_tilde, "y_tilde")
    if x.shape[0] != y.shape[0]:
        raise ShapeError(f"x has {x.shape[0]} points, y has {y.shape[0]}")
    check_regularizer(lam, "lambda", allow_degenerate)
    check_regularizer(epsilon, "epsilon", allow_degenerate)
    n, m = y.shape[0], y_tilde.shape[0]
    a = transform_matrix(kernel_l, y, y_tilde, n * lam)
    s = a.T @ gram(kernel_k, x) @ a
    s = 0.5 * (s + s.T) + m * epsilon * np.eye(m)
    return factorize(s).solve(a.T)


@dataclass(frozen=True)
class DmeModel:
    """Fitted nonparametric DME estimator ``f(x) = alpha^T k(x)``."""

    anchors_x: np.ndarray
    anchors_y: np.ndarray
    anchors_y_tilde: np.ndarray
    targets_z_tilde: np.ndarray
    kernel_k: KernelSpec
    kernel_l: KernelSpec
    lam: float
    epsilon: float
    A: np.ndarray
    alpha: np.ndarray
    form: str

    def predict(self, x_query):
        return dme_predict(self, x_query)

    def to_dict(self):
        return {
            "form": self.form,
            "lambda": self.lam,
            "epsilon": self.epsilon,
            "kernel_k": self.kernel_k.to_dict(),
            "kernel_l": self.kernel_l.to_dict(),
            "anchors_x": self.anchors_x.tolist(),
            "anchors_y": self.anchors_y.tolist(),
            "anchors_y_tilde": self.anchors_y_tilde.tolist(),
            "targets_z_tilde": self.targets_z_tilde.tolist(),
            "alpha": self.alpha.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        x = as_points(d["anchors_x"])
        y = as_points(d["anchors_y"])
        yt = as_points(d["anchors_y_tilde"])
        kl = KernelSpec.from_dict(d["kernel_l"])
        a = transform_matrix(kl, y, yt, y.shape[0] * d["lambda"])
        return cls(x, y, yt, np.asarray(d["targets_z_tilde"], float),
                   KernelSpec.from_dict(d["kernel_k"]), kl, d["lambda"], d["epsilon"],
                   a, np.asarray(d["alpha"], float), d["form"])


def dme_fit(dataset, kernel_k, kernel_l, lam, epsilon, form=None, allow_degenerate=False):
    """Fit the nonparametric DME estimator on a task-transformed dataset.

    Parameters
    ----------
    dataset : TaskTransformedDataset
    kernel_k, kernel_l : KernelSpec
        Kernels on ``X`` and ``Y``.
    lam, epsilon : float
        Regularizers of the CMO and of the evidence inverse.
    form : {'standard', 'woodbury'}, optional
        Defaults to ``woodbury`` when ``m > 2n``.
    allow_degenerate : bool
        Permit zero regularizers (degenerate-case checks only).
    """
    if not isinstance(dataset, TaskTransformedDataset):
        raise ShapeError("dataset must be a TaskTransformedDataset")
    check_regularizer(lam, "lambda", allow_degenerate)
    check_regularizer(epsilon, "epsilon", allow_degenerate)
    n, m = dataset.n, dataset.m
    form = form or default_form(n, m)
    if form not in FORMS:
        raise ContractViolation(f"unknown form {form!r}")
    a = transform_matrix(kernel_l, dataset.y, dataset.y_tilde, n * lam)
    k = gram(kernel_k, dataset.x)
    z = dataset.z_tilde
    if form == "standard":
        s = a.T @ k @ a
        s = 0.5 * (s + s.T) + m * epsilon * np.eye(m)
        alpha = a @ factorize(s).solve(z)
    else:
        # f(x) = z^T A^T [K A A^T + m eps I]^{-1} k(x)
        system = k @ (a @ a.T) + m * epsilon * np.eye(n)
        alpha = LuFactorization(system).solve(a @ z, trans=1)
    return DmeModel(dataset.x, dataset.y, dataset.y_tilde, z, kernel_k, kernel_l,
                    float(lam), float(epsilon), a, alpha, form)


def dme_predict(model, x_query):
    """Deconditional mean ``alpha^T k(x)`` at each query point."""
    xq = as_points(x_query, "x_query")
    if xq.shape[1] != model.anchors_x.shape[1]:
        raise ShapeError(f"queries are {xq.shape[1]}-D, anchors {model.anchors_x.shape[1]}-D")
    return gram(model.kernel_k, xq, model.anchors_x) @ model.alpha


@dataclass(frozen=True)
class ParametricDmeModel:
    """Weight-space DME estimator ``f(x) = w^T phi(x)``."""

    feature_map_x: FeatureMap
    feature_map_y: FeatureMap
    w_bar: np.ndarray
    A: np.ndarray
    lam: float
    epsilon: float

    def predict(self, x_query):
        return feature(self.feature_map_x, x_query) @ self.w_bar


def _feature_matrices(dataset, fmap_x, fmap_y):
    # columns are features, matching the column-stacked convention
    return (feature(fmap_x, dataset.x).T, feature(fmap_y, dataset.y).T,
            feature(fmap_y, dataset.y_tilde).T)


def parametric_transform(psi, psi_t, reg):
    """``A = Psi^T (Psi Psi^T + reg I)^{-1} Psi~``."""
    q = psi.shape[0]
    return psi.T @ factorize(psi @ psi.T + reg * np.eye(q)).solve(psi_t)


def parametric_dme_fit(dataset, fmap_x, fmap_y, lam, epsilon, allow_degenerate=False):
    """Weights ``[Phi A A^T Phi^T + m eps I]^{-1} Phi A z~``."""
    check_regularizer(lam, "lambda", allow_degenerate)
    check_regularizer(epsilon, "epsilon", allow_degenerate)
    phi, psi, psi_t = _feature_matrices(dataset, fmap_x, fmap_y)
    n, m, p = dataset.n, dataset.m, phi.shape[0]
    a = parametric_transform(psi, psi_t, n * lam)
    theta = phi @ a
    w = factorize(theta @ theta.T + m * epsilon * np.eye(p)).solve(theta @ dataset.z_tilde)
    return ParametricDmeModel(fmap_x, fmap_y, w, a, float(lam), float(epsilon))


def chained_loss(dataset, fmap_x, fmap_y, lam, epsilon, w):
    """Outer objective of the chained regularized least squares problem.

    The inner problem fits ``v`` so that ``v^T psi(y_i)`` matches
    ``w^T phi(x_i)``; the outer loss scores ``v[w]`` on the task targets.
    """
    phi, psi, psi_t = _feature_matrices(dataset, fmap_x, fmap_y)
    w = np.asarray(w, dtype=float).ravel()
    if w.shape[0] != phi.shape[0]:
        raise ShapeError(f"w has length {w.shape[0]}, features have {phi.shape[0]} dims")
    n, q = dataset.n, psi.shape[0]
    v = factorize(psi @ psi.T + n * lam * np.eye(q)).solve(psi @ (phi.T @ w))
    resid = dataset.z_tilde - psi_t.T @ v
    return float(resid @ resid) / dataset.m + epsilon * float(w @ w)


def chained_loss_minimizer(dataset, fmap_x, fmap_y, lam, epsilon):
    """Minimise :func:`chained_loss` directly as a ridge least-squares problem.

    The inner solution is linear in ``w``, ``v[w] = G^{-1} Psi Phi^T w``, so
    the outer loss is ``|z~ - B w|^2 / m + eps |w|^2`` with
    ``B = Psi~^T G^{-1} Psi Phi^T``. It is solved by orthogonal
    factorization of the stacked system ``[B; sqrt(m eps) I] w = [z~; 0]``,
    a route independent of the closed-form weights.
    """
    phi, psi, psi_t = _feature_matrices(dataset, fmap_x, fmap_y)
    n, m, p, q = dataset.n, dataset.m, phi.shape[0], psi.shape[0]
    g = factorize(psi @ psi.T + n * lam * np.eye(q))
    b = psi_t.T @ g.solve(psi @ phi.T)
    design = np.vstack([b, np.sqrt(m * epsilon) * np.eye(p)])
    target = np.r_[dataset.z_tilde, np.zeros(p)]
    w, *_ = sla.lstsq(design, target, check_finite=False)
    return w
