import numpy as np
import pytest

from knockmed import (
    Dataset,
    ForestConfig,
    fit_outcome_forest,
    gformula_nie,
    product_effects,
)
from knockmed.exceptions import NonBinaryExposureError


def chain_dataset(n, rng, alpha=1.0, beta=1.0, noise=0.5, p=3, binary_x=False):
    """Mediator 0 carries alpha*beta of the exposure effect; others are null."""
    if binary_x:
        x = (rng.random(n) < 0.5).astype(float)
    else:
        x = rng.standard_normal(n)
    m = rng.standard_normal((n, p))
    m[:, 0] += alpha * x
    y = beta * m[:, 0] + noise * rng.standard_normal(n)
    return Dataset(x=x, v=None, m=m, y=y)


class TestProductEffects:
    def test_near_noiseless_chain(self):
        # an exactly deterministic chain would be collinear, so a hair of
        # noise keeps the designs full-rank; the product still pins 1
        rng = np.random.default_rng(0)
        n = 2000
        x = rng.standard_normal(n)
        # outcome noise well below mediator noise: the x / m0 collinearity
        # then costs O(noise_y / (noise_m * sqrt(n))) in the beta estimate
        m = np.column_stack([x + 1e-2 * rng.standard_normal(n),
                             rng.standard_normal(n)])
        y = m[:, 0] + 1e-4 * rng.standard_normal(n)
        data = Dataset(x=x, v=None, m=m, y=y)
        est = product_effects(data, [0], bootstrap_reps=50, rng=np.random.default_rng(1))[0]
        assert abs(est.indirect - 1.0) < 0.01
        assert abs(est.alpha_hat - 1.0) < 0.01
        assert abs(est.beta_hat - 1.0) < 0.01

    def test_null_alpha_ci_covers_zero(self):
        covered = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            data = chain_dataset(10_000, rng, alpha=0.0, beta=1.0)
            est = product_effects(data, [0], bootstrap_reps=100,
                                  rng=np.random.default_rng(1000 + seed))[0]
            covered += est.ci_low <= 0.0 <= est.ci_high
        assert covered >= 90

    def test_default_bootstrap_reps(self):
        import inspect

        sig = inspect.signature(product_effects)
        assert sig.parameters["bootstrap_reps"].default == 100

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(3)
        data = chain_dataset(500, rng)
        e1 = product_effects(data, [0, 1], rng=np.random.default_rng(7))
        e2 = product_effects(data, [0, 1], rng=np.random.default_rng(7))
        assert e1 == e2

    def test_ci_width_shrinks_with_n(self):
        widths = []
        for n in (500, 2000):
            rng = np.random.default_rng(11)
            data = chain_dataset(n, rng, alpha=0.8, beta=0.6)
            est = product_effects(data, [0], bootstrap_reps=200,
                                  rng=np.random.default_rng(5))[0]
            widths.append(est.ci_high - est.ci_low)
        assert widths[1] < widths[0]

    def test_empty_selection_rejected(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ValueError):
            product_effects(chain_dataset(100, rng), [], rng=rng)

    def test_p_value_small_for_strong_effect(self):
        rng = np.random.default_rng(5)
        data = chain_dataset(3000, rng, alpha=1.0, beta=1.0, noise=0.3)
        est = product_effects(data, [0], bootstrap_reps=200,
                              rng=np.random.default_rng(6))[0]
        assert est.p_value == 0.0
        assert est.ci_low > 0


class TestGformulaNie:
    def test_constant_forest_gives_zero(self):
        rng = np.random.default_rng(0)
        data = chain_dataset(400, rng, binary_x=True)
        const = Dataset(x=data.x, v=data.v, m=data.m, y=np.full(data.n, 3.0))
        forest = fit_outcome_forest(const, ForestConfig(n_trees=30),
                                    np.random.default_rng(1))
        for est in gformula_nie(const, [0, 1], forest, mc_draws=20,
                                bootstrap_reps=20, rng=np.random.default_rng(2)):
            assert est.indirect == 0.0
            assert est.ci_low == est.ci_high == 0.0

    def test_linear_truth_matches_product(self):
        rng = np.random.default_rng(10)
        data = chain_dataset(2000, rng, alpha=1.0, beta=1.0, noise=0.5,
                             binary_x=True)
        # mtry must span all columns here: subsampled splits flatten the
        # fitted response surface and bias the contrast toward zero
        forest = fit_outcome_forest(data, ForestConfig(n_trees=150, mtry=4),
                                    np.random.default_rng(11))
        est = gformula_nie(data, [0], forest, mc_draws=1000, bootstrap_reps=40,
                           rng=np.random.default_rng(12))[0]
        assert abs(est.indirect - 1.0) < 0.15
        product = product_effects(data, [0], bootstrap_reps=100,
                                  rng=np.random.default_rng(13))[0]
        # the two estimators agree within the overlap of their intervals
        assert est.ci_low <= product.ci_high and product.ci_low <= est.ci_high

    def test_null_mediator_near_zero(self):
        rng = np.random.default_rng(20)
        data = chain_dataset(1500, rng, alpha=1.0, beta=1.0, binary_x=True)
        forest = fit_outcome_forest(data, ForestConfig(n_trees=100),
                                    np.random.default_rng(21))
        est = gformula_nie(data, [1], forest, mc_draws=300, bootstrap_reps=40,
                           rng=np.random.default_rng(22))[0]
        assert abs(est.indirect) < 0.1
        assert est.ci_low <= 0.0 <= est.ci_high

    def test_continuous_exposure_dichotomized(self):
        rng = np.random.default_rng(30)
        data = chain_dataset(800, rng, alpha=1.0, beta=1.0)
        forest = fit_outcome_forest(data, ForestConfig(n_trees=50),
                                    np.random.default_rng(31))
        est = gformula_nie(data, [0], forest, mc_draws=100, bootstrap_reps=20,
                           rng=np.random.default_rng(32))[0]
        assert est.indirect > 0.3  # positive effect across the median split

    def test_non_binary_exposure_rejected_without_dichotomization(self):
        rng = np.random.default_rng(40)
        data = chain_dataset(300, rng)
        forest = fit_outcome_forest(data, ForestConfig(n_trees=20),
                                    np.random.default_rng(41))
        with pytest.raises(NonBinaryExposureError):
            gformula_nie(data, [0], forest, mc_draws=10, bootstrap_reps=10,
                         rng=np.random.default_rng(42), dichotomize=False)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(50)
        data = chain_dataset(400, rng, binary_x=True)
        forest = fit_outcome_forest(data, ForestConfig(n_trees=30),
                                    np.random.default_rng(51))
        e1 = gformula_nie(data, [0], forest, mc_draws=50, bootstrap_reps=20,
                          rng=np.random.default_rng(52))[0]
        e2 = gformula_nie(data, [0], forest, mc_draws=50, bootstrap_reps=20,
                          rng=np.random.default_rng(52))[0]
        assert (e1.indirect, e1.ci_low, e1.ci_high, e1.p_value) == (
            e2.indirect, e2.ci_low, e2.ci_high, e2.p_value)

    def test_beta_hat_not_defined(self):
        rng = np.random.default_rng(60)
        data = chain_dataset(400, rng, binary_x=True)
        forest = fit_outcome_forest(data, ForestConfig(n_trees=20),
                                    np.random.default_rng(61))
        est = gformula_nie(data, [0], forest, mc_draws=20, bootstrap_reps=10,
                          rng=np.random.default_rng(62))[0]
        assert np.isnan(est.beta_hat)
