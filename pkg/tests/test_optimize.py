import csv

import numpy as np
import pytest

from kme_decon.errors import DomainError, OptimizationFailure
from kme_decon.optimize import minimize_logspace


def quadratic(x):
    return float(np.sum((x - np.array([1.0, -2.0])) ** 2))


class TestMinimize:
    def test_budget_zero_returns_start(self):
        x, f, trace = minimize_logspace(quadratic, [0.0, 0.0], ["a", "b"], budget=0)
        np.testing.assert_array_equal(x, [0.0, 0.0])
        assert np.isnan(f) and len(trace) == 0

    def test_converges_and_never_worse(self):
        x, f, trace = minimize_logspace(quadratic, [0.0, 0.0], ["a", "b"], budget=300)
        np.testing.assert_allclose(x, [1.0, -2.0], atol=1e-3)
        assert f <= trace.values[0]
        assert f == min(trace.values)

    def test_optimal_start_is_returned(self):
        x, f, _ = minimize_logspace(quadratic, [1.0, -2.0], ["a", "b"], budget=50)
        np.testing.assert_array_equal(x, [1.0, -2.0])
        assert f == 0.0

    def test_budget_counts_every_evaluation(self):
        calls = []

        def counted(x):
            calls.append(1)
            return quadratic(x)

        _, _, trace = minimize_logspace(counted, [5.0, 5.0], ["a", "b"], budget=17, restarts=3)
        assert len(calls) == len(trace) <= 17

    def test_all_failures_raise(self):
        def broken(x):
            raise DomainError("nope")

        with pytest.raises(OptimizationFailure) as info:
            minimize_logspace(broken, [0.0], ["a"], budget=5)
        assert len(info.value.trace) == 5

    def test_failures_recorded_as_inf(self):
        def half_broken(x):
            return np.nan if x[0] > 0.2 else (x[0] + 1) ** 2

        x, f, trace = minimize_logspace(half_broken, [0.0], ["a"], budget=40)
        assert np.inf in trace.values
        assert np.isfinite(f) and x[0] <= 0.2

    def test_bounds_respected(self):
        bounds = np.array([[-1.0, 0.5], [-1.0, 0.5]])
        x, _, trace = minimize_logspace(quadratic, [0.0, 0.0], ["a", "b"], bounds, budget=100,
                                        restarts=2)
        params = np.array(trace.params)
        assert np.all(params >= -1.0) and np.all(params <= 0.5)
        np.testing.assert_allclose(x, [0.5, -1.0], atol=1e-3)

    def test_deterministic(self):
        bounds = np.array([[-3.0, 3.0], [-3.0, 3.0]])
        a = minimize_logspace(quadratic, [0.0, 0.0], ["a", "b"], bounds, 60, restarts=3, seed=4)
        b = minimize_logspace(quadratic, [0.0, 0.0], ["a", "b"], bounds, 60, restarts=3, seed=4)
        assert a[2].values == b[2].values

    def test_write_csv(self, tmp_path):
        _, _, trace = minimize_logspace(quadratic, [0.0, 0.0], ["a", "b"], budget=8)
        trace.write_csv(tmp_path / "t.csv", value_name="loss")
        with open(tmp_path / "t.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["eval_index", "a", "b", "loss"]
        assert len(rows) == 9
        assert float(rows[1][3]) == trace.values[0]
