"""Regularized solves, factorization policy and Gaussian log-densities.

Every inverse that appears in the estimators is realised as a solve against a
factorization held here; explicit inverses only appear in test oracles.
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ShapeError, SingularSystemError

log = logging.getLogger(__name__)

JITTER_START = 1e-12
JITTER_MAX = 1e-4
LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class PsdFactorization:
    """Lower Cholesky factor of ``G + jitter * mean(diag G) * I``.

    ``jitter_used`` is relative to the mean diagonal so it always lies in
    ``{0} U [1e-12, 1e-4]``.
    """

    factor: np.ndarray
    jitter_used: float
    size: int

    def solve(self, b):
        return sla.cho_solve((self.factor, True), b, check_finite=False)

    def logdet(self):
        return 2.0 * float(np.sum(np.log(np.diag(self.factor))))

    def half_solve(self, b):
        """``F^{-1} b`` for the lower factor ``F``."""
        return sla.solve_triangular(self.factor, b, lower=True, check_finite=False)

    def half_solve_t(self, b):
        """``F^{-T} b``; ``half_solve_t(half_solve(b))`` equals ``solve(b)``."""
        return sla.solve_triangular(self.factor, b, lower=True, trans="T", check_finite=False)


def _check_square(g, name="matrix"):
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {g.shape}")
    return g


def factorize(g):
    """Cholesky-factorize a symmetric PSD matrix with deterministic jitter.

    Tries no jitter first, then ``1e-12 * trace/n`` doubling up to
    ``1e-4 * trace/n``.
    """
    g = _check_square(g)
    n = g.shape[0]
    if not np.all(np.isfinite(g)):
        raise SingularSystemError("matrix has non-finite entries")
    scale = float(np.trace(g)) / n
    tried = []
    rel = 0.0
    while True:
        jitter = rel * scale
        tried.append(jitter)
        mat = g if jitter == 0.0 else g + jitter * np.eye(n)
        try:
            factor = sla.cholesky(mat, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            factor = None
        if factor is not None and np.all(np.diag(factor) > 0):
            if rel > 0:
                log.debug("factorized %dx%d system with relative jitter %.3g", n, n, rel)
            return PsdFactorization(factor, rel, n)
        if scale <= 0 or not np.isfinite(scale):
            break
        rel = JITTER_START if rel == 0.0 else rel * 2.0
        if rel > JITTER_MAX * (1 + 1e-12):
            break
    raise SingularSystemError(f"{n}x{n} system is not positive definite at max jitter", tried)


def reg_solve(g, c, b):
    """``(G + c I)^{-1} B`` for symmetric PSD ``G`` and ``c >= 0``."""
    g = _check_square(g, "G")
    if c < 0:
        raise ShapeError("regularizer c must be nonnegative")
    asym = np.max(np.abs(g - g.T)) if g.size else 0.0
    if asym > 1e-10 * max(1.0, float(np.max(np.abs(g)))):
        raise ShapeError(f"G is not symmetric (max asymmetry {asym:.3g})")
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != g.shape[0]:
        raise ShapeError(f"B has {b.shape[0]} rows, G is {g.shape[0]}x{g.shape[0]}")
    return factorize(g + c * np.eye(g.shape[0])).solve(b)


class LuFactorization:
    """LU factorization for the non-symmetric systems (``K A A^T + c I``, ``K D``)."""

    def __init__(self, m):
        m = _check_square(m)
        if not np.all(np.isfinite(m)):
            raise SingularSystemError("matrix has non-finite entries")
        # singularity is reported below as SingularSystemError
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            self.lu, self.piv = sla.lu_factor(m, check_finite=False)
        diag = np.abs(np.diag(self.lu))
        if diag.size and (not np.all(np.isfinite(diag)) or diag.min() <= 1e-300
                          or diag.min() < 1e-15 * diag.max()):
            raise SingularSystemError("matrix is numerically singular")

    def solve(self, b, trans=0):
        return sla.lu_solve((self.lu, self.piv), b, trans=trans, check_finite=False)

    def slogdet(self):
        d = np.diag(self.lu)
        sign = np.prod(np.sign(d)) * (-1.0) ** np.sum(self.piv != np.arange(len(self.piv)))
        return float(sign), float(np.sum(np.log(np.abs(d))))


def general_solve(m, b):
    """``M^{-1} B`` for a square, possibly non-symmetric ``M``."""
    return LuFactorization(m).solve(np.asarray(b, dtype=np.float64))


def woodbury_left(b, c, reg, both=True):
    """Push-through identity ``B (C B + reg I)^{-1} = (B C + reg I)^{-1} B``.

    Parameters
    ----------
    b : array, shape (p, q)
    c : array, shape (q, p)
    reg : float
        Positive regularizer.
    both : bool
        Return both sides (for verification) when true, otherwise only the
        side whose inverse is smaller.

    Returns
    -------
    tuple of arrays or array
        ``(B (C B + reg I)^{-1}, (B C + reg I)^{-1} B)``, each of shape
        ``(p, q)``.
    """
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if b.ndim != 2 or c.ndim != 2 or b.shape[1] != c.shape[0] or c.shape[1] != b.shape[0]:
        raise ShapeError(f"non-conformable shapes {b.shape} and {c.shape}")
    if not reg > 0:
        raise ShapeError("regularizer must be positive")
    p, q = b.shape

    def left():
        # B (CB + rI)^{-1} = ((CB + rI)^{-T} B^T)^T
        return LuFactorization(c @ b + reg * np.eye(q)).solve(b.T, trans=1).T

    def right():
        return LuFactorization(b @ c + reg * np.eye(p)).solve(b)

    if both:
        return left(), right()
    return left() if q <= p else right()


def gaussian_logpdf(x, mean, cov):
    """``log N(x; mean, cov)`` through a Cholesky factorization of ``cov``."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    mean = np.broadcast_to(np.asarray(mean, dtype=np.float64), x.shape)
    cov = _check_square(np.atleast_2d(cov), "cov")
    if cov.shape[0] != x.shape[0]:
        raise ShapeError(f"cov is {cov.shape}, x has length {x.shape[0]}")
    fac = factorize(cov)
    w = fac.half_solve(x - mean)
    return -0.5 * (float(w @ w) + fac.logdet() + x.shape[0] * LOG_2PI)
