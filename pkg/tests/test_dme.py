import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import kme_decon.dme as dme_module
from kme_decon.dme import (DmeModel, chained_loss, chained_loss_minimizer, dme_fit, dme_predict,
                           dmo_weights, parametric_dme_fit)
from kme_decon.embeddings import cme_fit
from kme_decon.errors import ContractViolation, DomainError
from kme_decon.kernels import FeatureMap, KernelSpec, feature, gram
from kme_decon.ttgp import TtgpHyper, posterior_predict
from kme_decon.ttr_data import TaskTransformedDataset
from oracles import central_gradient, dense_dme_alpha, naive_gaussian_gram

UNIT = KernelSpec.gaussian(1.0)


def random_dataset(seed, n, m):
    rng = np.random.default_rng(seed)
    return TaskTransformedDataset(rng.normal(size=(n, 1)), rng.normal(size=(n, 1)),
                                  rng.normal(size=(m, 1)), rng.normal(size=m))


def spread(n, seed, spacing=1.0):
    rng = np.random.default_rng(seed)
    return (np.arange(n) * spacing + rng.uniform(-0.1, 0.1, n))[:, None]


class TestDmoWeights:
    def test_scalar_degenerate(self):
        w = dmo_weights([[0.0]], [[0.0]], [[0.0]], UNIT, UNIT, 0.0, 0.0, allow_degenerate=True)
        np.testing.assert_allclose(w, [[1.0]])

    def test_reduces_to_reverse_cme(self):
        x, y = spread(8, 0), spread(8, 1)
        xq = np.linspace(0, 7, 6)
        w = dmo_weights(x, y, y, KernelSpec.gaussian(0.5), KernelSpec.gaussian(0.5), 1e-12, 0.01)
        reverse = cme_fit(y, x, KernelSpec.gaussian(0.5), 0.01).weights(xq)
        assert np.max(np.abs(w @ gram(KernelSpec.gaussian(0.5), x, xq) - reverse)) <= 1e-6

    def test_vs_dense_oracle(self):
        ds = random_dataset(3, 8, 12)
        lam, eps = 0.05, 0.02
        w = dmo_weights(ds.x, ds.y, ds.y_tilde, UNIT, UNIT, lam, eps)
        l_mat = naive_gaussian_gram(ds.y, ds.y)
        a = np.linalg.inv(l_mat + 8 * lam * np.eye(8)) @ naive_gaussian_gram(ds.y, ds.y_tilde)
        k = naive_gaussian_gram(ds.x, ds.x)
        oracle = np.linalg.inv(a.T @ k @ a + 12 * eps * np.eye(12)) @ a.T
        assert np.max(np.abs(w - oracle)) <= 1e-9

    def test_rejects_zero_regularizer(self):
        with pytest.raises(DomainError):
            dmo_weights([[0.0]], [[0.0]], [[0.0]], UNIT, UNIT, 0.0, 0.1)


class TestDmeFit:
    def single(self):
        return TaskTransformedDataset([[0.0]], [[0.0]], [[0.0]], [5.0])

    def test_single_point(self):
        model = dme_fit(self.single(), UNIT, UNIT, 0.0, 0.0, allow_degenerate=True)
        np.testing.assert_allclose(model.alpha, [5.0])
        np.testing.assert_allclose(model.predict([[0.0]]), [5.0])

    def test_single_point_half_kernel(self):
        model = dme_fit(self.single(), UNIT, UNIT, 0.0, 0.0, allow_degenerate=True)
        # exp(-d^2 / 2) = 0.5
        d = np.sqrt(2 * np.log(2))
        np.testing.assert_allclose(dme_predict(model, [[d]]), [2.5], rtol=1e-14)

    @pytest.mark.parametrize("form", ["standard", "woodbury"])
    def test_zero_targets(self, form):
        ds = random_dataset(0, 6, 9).with_targets(np.zeros(9))
        model = dme_fit(ds, UNIT, UNIT, 0.1, 0.1, form=form)
        np.testing.assert_array_equal(model.alpha, 0.0)
        np.testing.assert_array_equal(model.predict(np.linspace(-2, 2, 5)), 0.0)

    def test_zero_alpha_predicts_zero(self):
        model = dme_fit(random_dataset(1, 4, 4), UNIT, UNIT, 0.1, 0.1)
        zeroed = DmeModel(**{**model.__dict__, "alpha": np.zeros(4)})
        np.testing.assert_array_equal(zeroed.predict(np.linspace(-1, 1, 4)), 0.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_forms_agree(self, seed):
        ds = random_dataset(seed, 10, 15)
        xq = np.linspace(-3, 3, 50)
        std = dme_fit(ds, UNIT, KernelSpec.gaussian(0.7), 0.05, 0.02, form="standard").predict(xq)
        wood = dme_fit(ds, UNIT, KernelSpec.gaussian(0.7), 0.05, 0.02, form="woodbury").predict(xq)
        assert np.max(np.abs(std - wood)) <= 1e-8 * np.max(np.abs(std))

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 2**16), n=st.integers(2, 32), m=st.integers(2, 48))
    def test_forms_match_dense_oracle(self, seed, n, m):
        ds = random_dataset(seed, n, m)
        lam, eps = 0.05, 0.02
        xq = np.linspace(-3, 3, 20)
        alpha = dense_dme_alpha(naive_gaussian_gram(ds.x, ds.x), naive_gaussian_gram(ds.y, ds.y),
                                naive_gaussian_gram(ds.y, ds.y_tilde), ds.z_tilde, lam, eps)
        oracle = naive_gaussian_gram(xq, ds.x) @ alpha
        scale = np.max(np.abs(oracle))
        for form in ("standard", "woodbury"):
            pred = dme_fit(ds, UNIT, UNIT, lam, eps, form=form).predict(xq)
            assert np.max(np.abs(pred - oracle)) <= 1e-8 * scale

    def test_linear_in_targets(self):
        ds = random_dataset(4, 7, 11)
        z2 = np.random.default_rng(40).normal(size=11)
        xq = np.linspace(-2, 2, 9)
        for form in ("standard", "woodbury"):
            f1 = dme_fit(ds, UNIT, UNIT, 0.1, 0.05, form=form).predict(xq)
            f2 = dme_fit(ds.with_targets(z2), UNIT, UNIT, 0.1, 0.05, form=form).predict(xq)
            f12 = dme_fit(ds.with_targets(ds.z_tilde + z2), UNIT, UNIT, 0.1, 0.05, form=form).predict(xq)
            np.testing.assert_allclose(f12, f1 + f2, atol=1e-10)

    def test_matches_ttgp_mean(self):
        ds = random_dataset(5, 9, 14)
        hyper = TtgpHyper(UNIT, KernelSpec.gaussian(0.8), 0.3)
        lam, eps = hyper.dme_regularizers(ds.n, ds.m)
        xq = np.linspace(-3, 3, 30)
        pred = dme_fit(ds, UNIT, KernelSpec.gaussian(0.8), lam, eps).predict(xq)
        mean = posterior_predict(ds, hyper, xq).mean
        assert np.max(np.abs(pred - mean)) <= 1e-8 * np.max(np.abs(mean))

    def test_small_epsilon_structure(self):
        # with n < m and well-spread points, A A^T is invertible and the
        # woodbury weights approach A^T (A A^T)^{-1} K^{-1} k(x)
        x, y = spread(5, 0, 1.5), spread(5, 1, 1.5)
        yt = np.random.default_rng(2).uniform(-0.5, 6.5, (15, 1))
        z = np.random.default_rng(3).normal(size=15)
        ds = TaskTransformedDataset(x, y, yt, z)
        xq = np.linspace(0, 6, 7)
        pred = dme_fit(ds, UNIT, UNIT, 0.01, 1e-12, form="woodbury").predict(xq)
        k = naive_gaussian_gram(x, x)
        a = np.linalg.inv(naive_gaussian_gram(y, y) + 5 * 0.01 * np.eye(5)) @ naive_gaussian_gram(y, yt)
        limit = z @ a.T @ np.linalg.inv(a @ a.T) @ np.linalg.inv(k) @ naive_gaussian_gram(x, xq)
        assert np.max(np.abs(pred - limit)) <= 1e-5 * max(1.0, np.max(np.abs(limit)))

    def test_default_form(self):
        assert dme_fit(random_dataset(0, 4, 9), UNIT, UNIT, 0.1, 0.1).form == "woodbury"
        assert dme_fit(random_dataset(0, 4, 8), UNIT, UNIT, 0.1, 0.1).form == "standard"

    def test_woodbury_never_factorizes_m_by_m(self, monkeypatch):
        sizes = []
        real_factorize, real_lu = dme_module.factorize, dme_module.LuFactorization

        def spy_factorize(g):
            sizes.append(np.shape(g)[0])
            return real_factorize(g)

        def spy_lu(g):
            sizes.append(np.shape(g)[0])
            return real_lu(g)

        monkeypatch.setattr(dme_module, "factorize", spy_factorize)
        monkeypatch.setattr(dme_module, "LuFactorization", spy_lu)
        dme_fit(random_dataset(0, 6, 60), UNIT, UNIT, 0.1, 0.1, form="woodbury")
        assert sizes and max(sizes) == 6

    def test_json_round_trip(self):
        model = dme_fit(random_dataset(6, 5, 7), UNIT, KernelSpec.gaussian(0.6), 0.1, 0.05)
        back = DmeModel.from_dict(model.to_dict())
        xq = np.linspace(-1, 1, 5)
        np.testing.assert_array_equal(back.predict(xq), model.predict(xq))
        np.testing.assert_allclose(back.A, model.A)

    def test_errors(self):
        ds = random_dataset(0, 3, 3)
        with pytest.raises(DomainError):
            dme_fit(ds, UNIT, UNIT, -1.0, 0.1)
        with pytest.raises(ContractViolation):
            dme_fit(ds, UNIT, UNIT, 0.1, 0.1, form="dense")


class TestParametric:
    def test_scalar_identity(self):
        ds = TaskTransformedDataset([[1.0]], [[1.0]], [[1.0]], [4.0])
        ident = FeatureMap("identity", 1)
        model = parametric_dme_fit(ds, ident, ident, 0.0, 0.0, allow_degenerate=True)
        np.testing.assert_allclose(model.A, [[1.0]])
        np.testing.assert_allclose(model.w_bar, [4.0])
        np.testing.assert_allclose(model.predict([[2.0], [-0.5]]), [8.0, -2.0])

    def test_zero_targets(self):
        ds = random_dataset(0, 5, 6).with_targets(np.zeros(6))
        fmap = FeatureMap("polynomial_explicit", 1, 2)
        np.testing.assert_array_equal(parametric_dme_fit(ds, fmap, fmap, 0.1, 0.1).w_bar, 0.0)

    @pytest.mark.parametrize("seed", range(4))
    def test_kernel_trick(self, seed):
        ds = random_dataset(seed, 9, 13)
        fx = FeatureMap("polynomial_explicit", 1, 2)
        fy = FeatureMap("polynomial_explicit", 1, 3)
        param = parametric_dme_fit(ds, fx, fy, 0.05, 0.02)
        kern = dme_fit(ds, fx.induced_kernel(), fy.induced_kernel(), 0.05, 0.02, form="standard")
        xq = np.linspace(-2, 2, 21)
        assert np.max(np.abs(param.predict(xq) - kern.predict(xq))) <= 1e-8 * np.max(np.abs(kern.predict(xq)))
        w_from_alpha = feature(fx, ds.x).T @ kern.alpha
        assert np.max(np.abs(w_from_alpha - param.w_bar)) <= 1e-8 * np.max(np.abs(param.w_bar))


class TestChainedLoss:
    def setup_method(self):
        self.ds = random_dataset(11, 12, 20)
        self.fx = FeatureMap("polynomial_explicit", 1, 3)
        self.fy = FeatureMap("polynomial_explicit", 1, 2)
        self.w_bar = parametric_dme_fit(self.ds, self.fx, self.fy, 0.05, 0.02).w_bar

    def loss(self, w):
        return chained_loss(self.ds, self.fx, self.fy, 0.05, 0.02, w)

    def test_zero(self):
        ds = self.ds.with_targets(np.zeros(20))
        assert chained_loss(ds, self.fx, self.fy, 0.05, 0.02, np.zeros(4)) == 0.0

    def test_minimum_over_perturbations(self):
        rng = np.random.default_rng(0)
        base = self.loss(self.w_bar)
        for _ in range(100):
            delta = rng.normal(size=self.w_bar.size)
            assert self.loss(self.w_bar + 0.1 * delta / np.linalg.norm(delta)) > base

    def test_gradient_vanishes(self):
        grad = central_gradient(self.loss, self.w_bar, h=1e-6)
        assert np.linalg.norm(grad) <= 1e-5

    def test_minimizer_matches_weights(self):
        w = chained_loss_minimizer(self.ds, self.fx, self.fy, 0.05, 0.02)
        assert np.max(np.abs(w - self.w_bar)) <= 1e-8 * np.max(np.abs(self.w_bar))
