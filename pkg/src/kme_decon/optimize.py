"""Derivative-free minimisation over log-parameters with an evaluation trace."""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import KmeError, OptimizationFailure


@dataclass
class OptimizeTrace:
    """Every objective evaluation of a run, in order.

    ``values`` holds the minimised objective (``inf`` for failed
    evaluations).
    """

    names: list
    params: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def record(self, x, value):
        self.params.append(np.array(x, dtype=float))
        self.values.append(float(value))

    def __len__(self):
        return len(self.values)

    def best(self):
        i = int(np.argmin(self.values))
        return self.params[i], self.values[i]

    def write_csv(self, path, value_name="nlml"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eval_index", *self.names, value_name])
            for i, (p, v) in enumerate(zip(self.params, self.values)):
                w.writerow([i, *(repr(float(t)) for t in p), repr(v)])


class _BudgetExhausted(Exception):
    pass


def minimize_logspace(objective, x0, names, bounds=None, budget=200, restarts=1,
                      seed=0, step=0.5):
    """Minimise ``objective`` with Nelder-Mead, never returning worse than ``x0``.

    Parameters
    ----------
    objective : callable
        Maps a parameter vector to a float. Raising :class:`KmeError` or
        returning a non-finite value marks the point as failed.
    x0 : array
        Starting point; always evaluated first.
    names : list of str
        Parameter names for the trace.
    bounds : array of shape (len(x0), 2), optional
        Box constraints; points are clipped into the box.
    budget : int
        Total number of objective evaluations across all restarts.
    restarts : int
        Restart ``0`` starts at ``x0``; later ones start uniformly in the box
        (or around ``x0`` when unbounded), drawn from ``seed``.
    step : float
        Initial simplex edge length.

    Returns
    -------
    x_best : ndarray
    f_best : float
    trace : OptimizeTrace
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    trace = OptimizeTrace(list(names))
    if bounds is not None:
        bounds = np.asarray(bounds, dtype=float).reshape(dim, 2)
    if budget <= 0:
        return x0.copy(), np.nan, trace

    def clip(x):
        return x if bounds is None else np.clip(x, bounds[:, 0], bounds[:, 1])

    def wrapped(x):
        if len(trace) >= budget:
            raise _BudgetExhausted
        x = clip(np.asarray(x, dtype=float))
        try:
            value = float(objective(x))
        except (KmeError, np.linalg.LinAlgError, FloatingPointError):
            value = np.inf
        if not np.isfinite(value):
            value = np.inf
        trace.record(x, value)
        return value

    rng = np.random.default_rng(seed)
    starts = [clip(x0)]
    for _ in range(max(restarts, 1) - 1):
        if bounds is not None:
            starts.append(rng.uniform(bounds[:, 0], bounds[:, 1]))
        else:
            starts.append(x0 + rng.normal(scale=1.0, size=dim))
    per_start = max(budget // len(starts), 1)
    try:
        wrapped(starts[0])
        for k, start in enumerate(starts):
            stop = budget if k == len(starts) - 1 else min(budget, len(trace) + per_start)
            simplex = np.vstack([start] + [start + step * e for e in np.eye(dim)])
            if bounds is not None:
                # reflect simplex vertices that leave the box back inside
                simplex = np.where(simplex > bounds[:, 1], simplex - 2 * step, simplex)
                simplex = np.clip(simplex, bounds[:, 0], bounds[:, 1])
            remaining = stop - len(trace)
            if remaining <= dim:
                continue
            minimize(wrapped, start, method="Nelder-Mead",
                     options={"initial_simplex": simplex, "maxfev": remaining,
                              "xatol": 1e-6, "fatol": 1e-9, "adaptive": dim > 4})
    except _BudgetExhausted:
        pass
    if not np.any(np.isfinite(trace.values)):
        raise OptimizationFailure("every objective evaluation failed", trace)
    f0 = trace.values[0]
    x_best, f_best = trace.best()
    if not f_best < f0:
        return trace.params[0].copy(), f0, trace
    return x_best.copy(), f_best, trace
