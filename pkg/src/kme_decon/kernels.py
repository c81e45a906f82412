"""Positive-definite kernels, gram assembly and explicit feature maps."""

from dataclasses import dataclass, field, replace
from itertools import combinations_with_replacement
from math import factorial, sqrt

import numpy as np

from . import _backend
from .errors import DomainError, ShapeError

FAMILIES = ("gaussian", "linear", "polynomial")


def as_points(a, name="points"):
    """Coerce ``a`` to a float64 C-contiguous ``(n, d)`` array.

    1-D input is read as ``n`` one-dimensional points and a scalar as a single
    one-dimensional point.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr[:, None]
    elif arr.ndim != 2:
        raise ShapeError(f"{name} must be at most 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ShapeError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite coordinates")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family with its hyperparameters.

    Parameters
    ----------
    family : {'gaussian', 'linear', 'polynomial'}
        ``gaussian`` is ``s * exp(-sum_d (x_d - x'_d)^2 / (2 l_d^2))``,
        ``linear`` is ``s * x.x'`` and ``polynomial`` is ``s * (1 + x.x')^p``.
    lengthscales : tuple of float
        One entry per input dimension, or a single entry shared by all of
        them. Only used by the gaussian family.
    signal_variance : float
        Output scale ``s``.
    degree : int
        Polynomial degree ``p``.
    """

    family: str = "gaussian"
    lengthscales: tuple = (1.0,)
    signal_variance: float = 1.0
    degree: int = 2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown kernel family {self.family!r}")
        ls = tuple(float(v) for v in np.atleast_1d(self.lengthscales))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        object.__setattr__(self, "degree", int(self.degree))
        if not ls or not all(np.isfinite(v) and v > 0 for v in ls):
            raise DomainError(f"lengthscales must be positive, got {ls}")
        if not (np.isfinite(self.signal_variance) and self.signal_variance > 0):
            raise DomainError("signal_variance must be positive")
        if self.degree < 1:
            raise DomainError("degree must be a positive integer")

    @classmethod
    def gaussian(cls, lengthscale=1.0, signal_variance=1.0):
        return cls("gaussian", tuple(np.atleast_1d(lengthscale)), signal_variance)

    @property
    def isotropic(self):
        return len(self.lengthscales) == 1

    def lengthscale_vector(self, dim):
        ls = np.asarray(self.lengthscales)
        if ls.size == 1:
            return np.full(dim, ls[0])
        if ls.size != dim:
            raise ShapeError(f"kernel has {ls.size} lengthscales, inputs have {dim} dims")
        return ls

    # log-space parameterisation used by the optimizers
    def log_params(self):
        if self.family == "gaussian":
            return np.log(np.r_[self.lengthscales, self.signal_variance])
        return np.log([self.signal_variance])

    def with_log_params(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.family == "gaussian":
            return replace(self, lengthscales=tuple(np.exp(theta[:-1])),
                           signal_variance=float(np.exp(theta[-1])))
        return replace(self, signal_variance=float(np.exp(theta[0])))

    def to_dict(self):
        return {
            "family": self.family,
            "lengthscales": list(self.lengthscales),
            "signal_variance": self.signal_variance,
            "degree": self.degree,
        }

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"family", "lengthscales", "signal_variance", "degree"}
        if unknown:
            raise DomainError(f"unknown kernel fields: {sorted(unknown)}")
        return cls(
            family=d.get("family", "gaussian"),
            lengthscales=tuple(d.get("lengthscales", (1.0,))),
            signal_variance=d.get("signal_variance", 1.0),
            degree=d.get("degree", 2),
        )


def gram(spec, a, b=None):
    """Gram matrix ``G[i, j] = k(a_i, b_j)``.

    Squared distances are accumulated per dimension as ``sum (a - b)^2`` so
    that ``gram(spec, a, b)`` is exactly ``gram(spec, b, a).T``.
    """
    a = as_points(a, "a")
    b = a if b is None else as_points(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if spec.family == "gaussian":
        ls = np.ascontiguousarray(spec.lengthscale_vector(a.shape[1]))
        return _backend.gaussian_gram(a, b, ls, spec.signal_variance)
    dot = a @ b.T
    if spec.family == "linear":
        return spec.signal_variance * dot
    return spec.signal_variance * (1.0 + dot) ** spec.degree


def normalized_gaussian(spec, y, x):
    """Normal density ``N(y_i; x_j, eps^2 I)`` for every pair.

    ``eps`` is the (isotropic) lengthscale of ``spec``; the signal variance is
    ignored, so this is the gaussian kernel rescaled to integrate to one.
    """
    if spec.family != "gaussian" or not spec.isotropic:
        raise DomainError("normalized_gaussian needs an isotropic gaussian spec")
    eps = spec.lengthscales[0]
    y = as_points(y, "y")
    x = as_points(x, "x")
    dim = y.shape[1]
    unit = KernelSpec("gaussian", (eps,), 1.0)
    return gram(unit, y, x) / (2.0 * np.pi * eps * eps) ** (dim / 2.0)


def median_heuristic(points):
    """Median pairwise Euclidean distance, a common default lengthscale."""
    p = as_points(points)
    if p.shape[0] > 1000:
        p = p[np.linspace(0, p.shape[0] - 1, 1000).astype(int)]
    sq = np.zeros((p.shape[0], p.shape[0]))
    for d in range(p.shape[1]):
        diff = p[:, d, None] - p[None, :, d]
        sq += diff * diff
    iu = np.triu_indices(p.shape[0], k=1)
    if iu[0].size == 0:
        return 1.0
    med = float(np.median(np.sqrt(sq[iu])))
    return med if med > 0 else 1.0


@dataclass(frozen=True)
class FeatureMap:
    """Explicit finite-dimensional feature map.

    ``identity`` maps ``x`` to itself and induces the linear kernel.
    ``polynomial_explicit`` spans all monomials of total degree at most
    ``degree`` with multinomial weights, inducing ``scale * (1 + x.x')^degree``.
    """

    family: str
    input_dim: int
    degree: int = 2
    scale: float = 1.0
    _terms: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.family not in ("identity", "polynomial_explicit"):
            raise DomainError(f"unknown feature map {self.family!r}")
        if self.input_dim < 1 or self.degree < 1 or self.scale <= 0:
            raise DomainError("input_dim, degree and scale must be positive")
        if self.family == "polynomial_explicit":
            terms = []
            # slot 0 is the constant coordinate of the augmented input (1, x)
            for combo in combinations_with_replacement(range(self.input_dim + 1), self.degree):
                counts = np.bincount(combo, minlength=self.input_dim + 1)
                coef = factorial(self.degree)
                for c in counts:
                    coef //= factorial(int(c))
                terms.append((sqrt(coef), tuple(int(c) for c in counts[1:])))
            object.__setattr__(self, "_terms", tuple(terms))

    @property
    def output_dim(self):
        if self.family == "identity":
            return self.input_dim
        return len(self._terms)

    def induced_kernel(self):
        if self.family == "identity":
            return KernelSpec("linear", (1.0,), self.scale)
        return KernelSpec("polynomial", (1.0,), self.scale, self.degree)


def feature(fmap, x):
    """Feature matrix with one row per point of ``x``, shape ``(n, output_dim)``."""
    x = as_points(x, "x")
    if x.shape[1] != fmap.input_dim:
        raise ShapeError(f"feature map expects {fmap.input_dim}-D inputs, got {x.shape[1]}")
    if fmap.family == "identity":
        return sqrt(fmap.scale) * x
    out = np.empty((x.shape[0], len(fmap._terms)))
    for k, (coef, powers) in enumerate(fmap._terms):
        col = np.full(x.shape[0], coef)
        for d, p in enumerate(powers):
            if p:
                col = col * x[:, d] ** p
        out[:, k] = col
    return sqrt(fmap.scale) * out
