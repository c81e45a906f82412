"""Cross-form and degenerate-case equivalence checks, runnable as one suite.

Every check computes the same quantity along two independent computational
routes on seeded random instances and reports the largest deviation seen.
"""

from dataclasses import dataclass

import numpy as np

from .dme import chained_loss_minimizer, dme_fit, dmo_weights, parametric_dme_fit
from .embeddings import KBR_VARIANTS, cme_fit, kbr_b_symmetric_form, kbr_fit
from .kernels import FeatureMap, KernelSpec, feature, gram
from .linalg import general_solve, woodbury_left
from .ttgp import (TtgpHyper, log_marginal_alternative, log_marginal_nonparametric,
                   log_marginal_parametric, posterior_predict)
from .ttr_data import TaskTransformedDataset

DEFAULT_SEEDS = tuple(range(10))


@dataclass(frozen=True)
class CheckResult:
    name: str
    tolerance: float
    kind: str
    max_deviation: float
    seeds: tuple

    @property
    def passed(self):
        return bool(np.isfinite(self.max_deviation) and self.max_deviation <= self.tolerance)

    def to_dict(self):
        return {"name": self.name, "tolerance": self.tolerance, "kind": self.kind,
                "max_deviation": self.max_deviation, "passed": self.passed,
                "seeds": list(self.seeds)}


def deviation(a, b, kind):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = float(np.max(np.abs(a - b)))
    if kind == "relative":
        scale = float(np.max(np.abs(b)))
        return diff / scale if scale > 0 else diff
    return diff


def random_dataset(seed, n=None, m=None, dim=1):
    """Random task-transformed instance with ``n <= 32`` and ``m <= 48``."""
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(4, 33))
    m = m or int(rng.integers(4, 49))
    return TaskTransformedDataset(rng.normal(size=(n, dim)), rng.normal(size=(n, dim)),
                                  rng.normal(size=(m, dim)), rng.normal(size=m))


def random_kernels(seed):
    rng = np.random.default_rng(seed + 1000)
    return (KernelSpec.gaussian(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)),
            KernelSpec.gaussian(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)))


def spread_points(seed, n, spacing=1.0):
    """Well-separated 1-D points, so gaussian grams with unit lengthscale are well conditioned."""
    rng = np.random.default_rng(seed)
    return (np.arange(n) * spacing + rng.uniform(-0.1, 0.1, n))[:, None]


# individual checks; each returns the deviation for one seed

def _woodbury(seed, perturb):
    rng = np.random.default_rng(seed)
    b = rng.normal(size=(5, 7))
    c = rng.normal(size=(7, 5))
    left, right = woodbury_left(b, c, 0.3)
    return deviation(left, right, "relative")


def _dme_forms(seed, perturb):
    ds = random_dataset(seed)
    kk, kl = random_kernels(seed)
    xq = np.linspace(-3, 3, 50)
    std = dme_fit(ds, kk, kl, 0.05, 0.02, form="standard")
    wood = dme_fit(ds, kk, kl, 0.05, 0.02, form="woodbury")
    return deviation(gram(kk, xq, ds.x) @ (std.alpha * (1 + perturb)), wood.predict(xq), "relative")


def _ttgp_marginals(seed, perturb):
    ds = random_dataset(seed)
    kk, kl = random_kernels(seed)
    h = TtgpHyper(kk, kl, 0.2)
    return deviation(log_marginal_nonparametric(ds, h), log_marginal_alternative(ds, h), "absolute")


def _feature_maps(seed):
    rng = np.random.default_rng(seed + 2000)
    return (FeatureMap("polynomial_explicit", 1, int(rng.integers(1, 3))),
            FeatureMap("polynomial_explicit", 1, int(rng.integers(1, 4))))


def _parametric_marginal(seed, perturb):
    ds = random_dataset(seed)
    fx, fy = _feature_maps(seed)
    worst = 0.0
    for map_g in (True, False):
        hp = TtgpHyper(None, None, 0.5, 1.3, 0.7, map_g)
        hk = TtgpHyper(KernelSpec("polynomial", (1.0,), 0.7, fx.degree),
                       KernelSpec("polynomial", (1.0,), 1.3, fy.degree), 0.5, map_g=map_g)
        worst = max(worst, deviation(log_marginal_parametric(ds, fx, fy, hp),
                                     log_marginal_nonparametric(ds, hk), "absolute"))
    return worst


def _ttgp_mean_vs_dme(seed, perturb):
    ds = random_dataset(seed)
    kk, kl = random_kernels(seed)
    h = TtgpHyper(kk, kl, 0.3)
    lam, eps = h.dme_regularizers(ds.n, ds.m)
    xq = np.linspace(-3, 3, 40)
    model = dme_fit(ds, kk, kl, lam, eps, form="standard")
    mean = posterior_predict(ds, h, xq, form="standard").mean
    return deviation(gram(kk, xq, ds.x) @ (model.alpha * (1 + perturb)), mean, "relative")


def _chained_loss(seed, perturb):
    ds = random_dataset(seed)
    fx, fy = _feature_maps(seed)
    w_bar = parametric_dme_fit(ds, fx, fy, 0.05, 0.02).w_bar
    return deviation(w_bar, chained_loss_minimizer(ds, fx, fy, 0.05, 0.02), "relative")


def _kernel_trick(seed, perturb):
    ds = random_dataset(seed)
    fx, fy = _feature_maps(seed)
    w_bar = parametric_dme_fit(ds, fx, fy, 0.05, 0.02).w_bar
    alpha = dme_fit(ds, fx.induced_kernel(), fy.induced_kernel(), 0.05, 0.02, form="standard").alpha
    return deviation(feature(fx, ds.x).T @ (alpha * (1 + perturb)), w_bar, "relative")


def _degenerate_instance(seed, n=8):
    rng = np.random.default_rng(seed + 3000)
    x = spread_points(seed, n)
    y = spread_points(seed + 1, n)
    xq = rng.uniform(-0.5, n - 0.5, (5, 1))
    kernel = KernelSpec.gaussian(0.5)
    return x, y, xq, kernel


def _dmo_reverse_cme(seed, perturb):
    x, y, xq, kernel = _degenerate_instance(seed)
    n, eps = x.shape[0], 0.01
    w = dmo_weights(x, y, y, kernel, kernel, 1e-12, eps)
    reverse = cme_fit(y, x, kernel, eps).weights(xq)
    return deviation(w @ gram(kernel, x, xq), reverse, "absolute")


def _kbr_table(seed, perturb, variants, epsilon):
    x, y, xq, kernel = _degenerate_instance(seed)
    n = x.shape[0]
    k = gram(kernel, x)
    kq = gram(kernel, x, xq)
    if epsilon == 0.0:
        ref_1 = ref_2 = cme_fit(y, x, kernel, 0.0, allow_degenerate=True).weights(xq)
    else:
        ref_1 = cme_fit(y, x, kernel, epsilon).weights(xq)
        # type II regularizes the squared evidence: (K^2 + n^2 eps I)^{-1} K k(x)
        ref_2 = general_solve(k @ k + n * n * epsilon * np.eye(n), k @ kq)
    worst = 0.0
    for variant in variants:
        model = kbr_fit(x, y, y, kernel, kernel, 1e-12, epsilon, variant,
                        allow_degenerate=epsilon == 0.0)
        ref = ref_1 if variant.endswith("1") else ref_2
        worst = max(worst, deviation(model.weights(xq), ref, "absolute"))
    return worst


def _kbr_regularized(seed, perturb):
    return _kbr_table(seed, perturb, KBR_VARIANTS, 0.01)


def _kbr_unregularized(seed, perturb):
    return _kbr_table(seed, perturb, KBR_VARIANTS, 0.0)


def _kbr_symmetric(seed, perturb):
    x, y, xq, _ = _degenerate_instance(seed)
    kernel = KernelSpec.gaussian(1.0)
    rng = np.random.default_rng(seed)
    yt = rng.uniform(-0.5, x.shape[0] - 0.5, (12, 1))
    worst = 0.0
    for variant in ("kbr_b_1", "kbr_b_2"):
        # lambda = 0.05 keeps every row sum of A positive on these instances (D > 0)
        model = kbr_fit(x, y, yt, kernel, kernel, 0.05, 0.01, variant)
        worst = max(worst, deviation(kbr_b_symmetric_form(model, xq), model.weights(xq),
                                     "relative"))
    return worst


CHECKS = (
    ("woodbury_identity", 1e-9, "relative", _woodbury),
    ("dme_standard_vs_woodbury", 1e-8, "relative", _dme_forms),
    ("ttgp_standard_vs_alternative_marginal", 1e-6, "absolute", _ttgp_marginals),
    ("parametric_vs_kernel_marginal", 1e-6, "absolute", _parametric_marginal),
    ("ttgp_mean_vs_dme", 1e-8, "relative", _ttgp_mean_vs_dme),
    ("chained_loss_minimizer_vs_parametric_dme", 1e-8, "relative", _chained_loss),
    ("kernel_trick_w_equals_phi_alpha", 1e-8, "relative", _kernel_trick),
    ("dmo_degenerates_to_reverse_cme", 1e-6, "absolute", _dmo_reverse_cme),
    ("kbr_degenerations_regularized", 1e-6, "absolute", _kbr_regularized),
    ("kbr_degenerations_unregularized", 1e-6, "absolute", _kbr_unregularized),
    ("kbr_b_symmetric_form", 1e-8, "relative", _kbr_symmetric),
)


def run_suite(seeds=DEFAULT_SEEDS, perturb=0.0, names=None):
    """Run every check (or those in ``names``) over ``seeds``.

    ``perturb`` scales the DME dual weights by ``1 + perturb`` wherever they
    enter a check, to confirm that the suite detects faults.
    """
    results = []
    for name, tol, kind, fn in CHECKS:
        if names is not None and name not in names:
            continue
        worst = max(fn(s, perturb) for s in seeds)
        results.append(CheckResult(name, tol, kind, worst, tuple(seeds)))
    return results
