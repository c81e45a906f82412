"""Empirical conditional mean embeddings and kernel Bayes' rule baselines.

Operators are materialised as weight matrices over anchor points: querying an
embedding at a point returns the weights that, paired with function values at
the anchors, give the estimated expectation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .kernels import as_points, gram
from .linalg import LuFactorization, PsdFactorization, factorize

KBR_VARIANTS = ("kbr_a_1", "kbr_a_2", "kbr_b_1", "kbr_b_2")


def check_regularizer(value, name, allow_degenerate):
    if allow_degenerate:
        if value < 0:
            raise DomainError(f"{name} must be nonnegative")
    elif not value > 0:
        raise DomainError(f"{name} must be positive (got {value})")


@dataclass(frozen=True)
class CmeModel:
    """Fitted empirical conditional mean operator of ``X | Y``.

    Attributes
    ----------
    anchors_x, anchors_y : ndarray
        The joint samples, shape ``(n, d_x)`` and ``(n, d_y)``.
    kernel_l : KernelSpec
        Kernel on ``Y``.
    lam : float
        Regularizer; the factorized system is ``L + n lam I``.
    solve_cache : PsdFactorization
    """

    anchors_x: np.ndarray
    anchors_y: np.ndarray
    kernel_l: object
    lam: float
    solve_cache: PsdFactorization
    targets_f_at_x: np.ndarray = None

    @property
    def n(self):
        return self.anchors_y.shape[0]

    def weights(self, y_query):
        """``(L + n lam I)^{-1} l(y)`` for every query, shape ``(n, q)``."""
        return self.solve_cache.solve(gram(self.kernel_l, self.anchors_y, y_query))

    def estimate(self, f_at_anchors, y_query):
        return cme_estimate(self, f_at_anchors, y_query)


def cme_fit(x, y, kernel_l, lam, targets_f_at_x=None, allow_degenerate=False):
    """Fit the empirical CMO ``Phi (L + n lam I)^{-1} Psi^T`` of ``X | Y``."""
    x = as_points(x, "x")
    y = as_points(y, "y")
    if x.shape[0] != y.shape[0]:
        raise ShapeError(f"x has {x.shape[0]} points, y has {y.shape[0]}")
    check_regularizer(lam, "lambda", allow_degenerate)
    n = y.shape[0]
    reg = gram(kernel_l, y) + n * lam * np.eye(n)
    if targets_f_at_x is not None:
        targets_f_at_x = np.asarray(targets_f_at_x, dtype=float)
    return CmeModel(x, y, kernel_l, float(lam), factorize(reg), targets_f_at_x)


def cme_estimate(model, f_at_anchors, y_query):
    """Estimate ``E[f(X) | Y = y]`` as ``f^T (L + n lam I)^{-1} l(y)``.

    Returns one value per query point.
    """
    f = np.asarray(f_at_anchors, dtype=float).ravel()
    if f.shape[0] != model.n:
        raise ShapeError(f"expected {model.n} function values, got {f.shape[0]}")
    return f @ model.weights(y_query)


@dataclass(frozen=True)
class KbrModel:
    """Kernel Bayes' rule posterior of ``Y | X`` in one of four computational forms.

    ``A = (L + n lam I)^{-1} L~`` and ``D = diag(A 1)``. Variants ``a`` return
    weights over the prior anchors ``y~``; variants ``b`` over ``y``. The
    suffix selects the regularisation of the evidence inverse: ``1`` is
    ``[KD + m eps I]^{-1}``, ``2`` is ``[(KD)^2 + m^2 eps I]^{-1} KD``.
    """

    variant: str
    anchors_x: np.ndarray
    anchors_y: np.ndarray
    anchors_y_tilde: np.ndarray
    kernel_k: object
    kernel_l: object
    lam: float
    epsilon: float
    A: np.ndarray
    D: np.ndarray
    K: np.ndarray

    @property
    def m(self):
        return self.anchors_y_tilde.shape[0]

    def _evidence_solve(self, kx):
        n = self.K.shape[0]
        kd = self.K * self.D[None, :]
        m = self.m
        if self.variant.endswith("1"):
            return LuFactorization(kd + m * self.epsilon * np.eye(n)).solve(kx)
        return LuFactorization(kd @ kd + m * m * self.epsilon * np.eye(n)).solve(kd @ kx)

    def weights(self, x_query):
        """Posterior weights at each query, shape ``(m, q)`` or ``(n, q)``."""
        kx = gram(self.kernel_k, self.anchors_x, x_query)
        inner = self._evidence_solve(kx)
        if self.variant.startswith("kbr_a"):
            return self.A.T @ inner
        return self.D[:, None] * inner


def kbr_fit(x, y, y_tilde, kernel_k, kernel_l, lam, epsilon, variant,
            allow_degenerate=False):
    """Build the kernel Bayes' rule posterior operator for ``variant``."""
    if variant not in KBR_VARIANTS:
        raise DomainError(f"unknown KBR variant {variant!r}")
    x = as_points(x, "x")
    y = as_points(y, "y")
    y_tilde = as_points(y_tilde, "y_tilde")
    if x.shape[0] != y.shape[0]:
        raise ShapeError(f"x has {x.shape[0]} points, y has {y.shape[0]}")
    check_regularizer(lam, "lambda", allow_degenerate)
    check_regularizer(epsilon, "epsilon", allow_degenerate)
    n = y.shape[0]
    a = factorize(gram(kernel_l, y) + n * lam * np.eye(n)).solve(gram(kernel_l, y, y_tilde))
    d = a.sum(axis=1)
    return KbrModel(variant, x, y, y_tilde, kernel_k, kernel_l, float(lam),
                    float(epsilon), a, d, gram(kernel_k, x))


def kbr_b_symmetric_form(model, x_query):
    """KBR(b) weights through symmetric inverses built from ``D^{1/2}``.

    Raises
    ------
    DomainError
        If ``D`` has a negative entry; use ``model.weights`` instead.
    """
    if not model.variant.startswith("kbr_b"):
        raise DomainError("symmetric form exists only for the kbr_b variants")
    if np.any(model.D < 0):
        raise DomainError("D has negative entries; its square root is not real")
    n = model.K.shape[0]
    m = model.m
    root = np.sqrt(model.D)
    kx = gram(model.kernel_k, model.anchors_x, x_query)
    if model.variant == "kbr_b_1":
        sym = root[:, None] * model.K * root[None, :] + m * model.epsilon * np.eye(n)
        return root[:, None] * factorize(sym).solve(root[:, None] * kx)
    kd = model.K * model.D[None, :]
    kdk = kd @ model.K
    sym = root[:, None] * kdk * root[None, :] + m * m * model.epsilon * np.eye(n)
    sym = 0.5 * (sym + sym.T)
    return root[:, None] * factorize(sym).solve(root[:, None] * (kd @ kx))
