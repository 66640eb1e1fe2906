import numpy as np
import pytest

from knockmed import (
    FixedLambda,
    GkmsConfig,
    SimulationConfig,
    gen_cosine,
    gen_interaction,
    gen_linear,
    run_replications,
    score_selection,
)
from knockmed.simulation import (
    AGGREGATE_COLUMNS,
    REPLICATION_COLUMNS,
    aggregate_row,
    replication_rows,
    write_csv,
)


def cfg(setting="linear", **kw):
    base = dict(n=1000, p=100, rho=0.2, a=0.3, b=0.3, setting=setting)
    base.update(kw)
    return SimulationConfig(**base)


class TestLinearGenerator:
    def test_coefficient_templates(self):
        data, truth = gen_linear(cfg(), np.random.default_rng(0))
        alpha, beta = truth.alpha, truth.beta_or_delta
        # 1-based template positions: alpha 1..9 = a, 10..30 = 0.7a, rest 0;
        # beta 1..9 = 0, 10..30 = 0.7b, 31..40 = b, rest 0
        assert alpha[0] == 0.3
        assert alpha[9] == pytest.approx(0.21)
        assert alpha[30] == 0.0
        assert beta[8] == 0.0
        assert beta[9] == pytest.approx(0.21)
        assert beta[30] == pytest.approx(0.3)
        assert beta[40] == 0.0

    def test_true_mediators_are_intersection(self):
        _, truth = gen_linear(cfg(), np.random.default_rng(0))
        assert np.array_equal(truth.true_mediators, np.arange(9, 30))

    def test_global_null_variant(self):
        _, truth = gen_linear(cfg(a=0.0, b=0.0), np.random.default_rng(0))
        assert truth.true_mediators.size == 0

    def test_uncorrelated_noise(self):
        config = cfg(n=10_000, rho=0.0, p=40)
        data, truth = gen_linear(config, np.random.default_rng(1))
        eps = data.m - np.outer(data.x, truth.alpha) - data.v @ np.ones((1, 40))
        corr = np.corrcoef(eps, rowvar=False)
        off = corr[np.triu_indices(40, k=1)]
        assert np.max(np.abs(off)) < 0.05

    def test_compound_symmetry_correlation(self):
        config = cfg(n=20_000, rho=0.4, p=40)
        data, truth = gen_linear(config, np.random.default_rng(2))
        eps = data.m - np.outer(data.x, truth.alpha) - data.v @ np.ones((1, 40))
        corr = np.corrcoef(eps, rowvar=False)
        off = corr[np.triu_indices(40, k=1)]
        assert abs(off.mean() - 0.4) < 0.02
        assert np.max(np.abs(off - 0.4)) < 0.06

    def test_outcome_formula_exact_without_noise(self):
        config = cfg(p=40, sigma_noise=0.0)
        data, truth = gen_linear(config, np.random.default_rng(3))
        rebuilt = data.x + data.m @ truth.beta_or_delta + data.v[:, 0]
        assert np.allclose(data.y, rebuilt)

    def test_exposure_covariate_correlation(self):
        data, _ = gen_linear(cfg(n=100_000, p=40), np.random.default_rng(4))
        assert abs(np.corrcoef(data.x, data.v[:, 0])[0, 1] - 0.5) < 0.01
        assert abs(data.x.var() - 1.0) < 0.02

    def test_p_too_small_rejected(self):
        with pytest.raises(ValueError):
            cfg(p=30)


class TestInteractionGenerator:
    def test_delta_template(self):
        _, truth = gen_interaction(cfg("interaction"), np.random.default_rng(0))
        delta = truth.beta_or_delta
        assert delta.shape == (50,)
        # nonzero exactly at 1-based pair positions 5..19
        assert np.array_equal(np.flatnonzero(delta), np.arange(4, 19))
        assert np.all(delta[4:19] == 0.3)

    def test_alpha_template(self):
        _, truth = gen_interaction(cfg("interaction", a=0.4), np.random.default_rng(0))
        assert np.all(truth.alpha[:9] == pytest.approx(0.2))
        assert np.all(truth.alpha[9:30] == pytest.approx(0.4))
        assert np.all(truth.alpha[30:] == 0.0)

    def test_true_mediators(self):
        # active pairs cover mediators 9..38 (1-based), alpha covers 1..30
        _, truth = gen_interaction(cfg("interaction"), np.random.default_rng(0))
        assert np.array_equal(truth.true_mediators, np.arange(8, 30))

    def test_outcome_independent_of_mediators_when_b_zero(self):
        config = cfg("interaction", b=0.0, n=5000)
        data, _ = gen_interaction(config, np.random.default_rng(1))
        resid = data.y - data.x
        assert abs(resid.std() - config.sigma_noise) < 0.02
        # max over many correlated columns of a ~N(0, 1/n) statistic
        corrs = [abs(np.corrcoef(resid, data.m[:, j])[0, 1]) for j in range(100)]
        assert max(corrs) < 5.0 / np.sqrt(config.n)

    def test_outcome_formula_exact_without_noise(self):
        config = cfg("interaction", sigma_noise=0.0, p=40)
        data, truth = gen_interaction(config, np.random.default_rng(2))
        z_int = data.m[:, 0::2] * data.m[:, 1::2]
        assert np.allclose(data.y, data.x + z_int @ truth.beta_or_delta)

    def test_odd_p_rejected(self):
        with pytest.raises(ValueError):
            cfg("interaction", p=101)


class TestCosineGenerator:
    def test_beta_template(self):
        _, truth = gen_cosine(cfg("cosine", b=0.5), np.random.default_rng(0))
        beta = truth.beta_or_delta
        assert beta[8] == 0.0
        assert beta[9] == pytest.approx(0.5)
        assert beta[30] == pytest.approx(0.35)
        assert beta[39] == 0.0

    def test_true_mediators(self):
        _, truth = gen_cosine(cfg("cosine"), np.random.default_rng(0))
        assert np.array_equal(truth.true_mediators, np.arange(9, 30))

    def test_outcome_formula_exact_without_noise(self):
        config = cfg("cosine", sigma_noise=0.0, p=40)
        data, truth = gen_cosine(config, np.random.default_rng(1))
        assert np.allclose(data.y, data.x + np.cos(data.m) @ truth.beta_or_delta)

    def test_b_zero_is_pathb_null(self):
        _, truth = gen_cosine(cfg("cosine", b=0.0), np.random.default_rng(0))
        assert truth.true_mediators.size == 0


class TestScoreSelection:
    def test_counts(self):
        from knockmed import GroundTruth

        truth = GroundTruth(true_mediators=np.array([1, 2, 3]),
                            alpha=np.zeros(10), beta_or_delta=np.zeros(10))
        fdp, power = score_selection(np.array([1, 2, 7]), truth, 10)
        assert fdp == pytest.approx(1 / 3)
        assert power == pytest.approx(2 / 3)

    def test_empty_truth_guard(self):
        from knockmed import GroundTruth

        truth = GroundTruth(true_mediators=np.array([], dtype=int),
                            alpha=np.zeros(10), beta_or_delta=np.zeros(10))
        fdp, power = score_selection(np.array([], dtype=int), truth, 10)
        assert fdp == 0.0 and power == 0.0


class TestRunReplications:
    def test_single_global_null_replication(self):
        sim = cfg(a=0.0, b=0.0, n=200, p=40, replications=1, seed=3)
        gk = GkmsConfig(pathb_method="pls", lambda_rule=FixedLambda(0.05), seed=0)
        metrics = run_replications(sim, gk)
        assert len(metrics.per_replication) == 1
        rec = metrics.per_replication[0]
        assert rec.error is None
        assert rec.power == 0.0
        if rec.n_selected == 0:
            assert metrics.fdr == 0.0
        else:
            assert metrics.fdr == 1.0

    def test_deterministic_and_thread_invariant(self):
        sim = cfg(n=200, p=40, replications=4, seed=11)
        gk = GkmsConfig(pathb_method="pls", lambda_rule=FixedLambda(0.02))
        m1 = run_replications(sim, gk, n_jobs=1)
        m2 = run_replications(sim, gk, n_jobs=4)
        assert m1.fdr == m2.fdr and m1.power == m2.power
        for r1, r2 in zip(m1.per_replication, m2.per_replication):
            assert np.array_equal(r1.selected, r2.selected)
            assert r1.seed == r2.seed

    def test_replication_seeds_offset_from_base(self):
        sim = cfg(n=200, p=40, replications=3, seed=100)
        gk = GkmsConfig(pathb_method="pls", lambda_rule=FixedLambda(0.02))
        metrics = run_replications(sim, gk)
        assert [r.seed for r in metrics.per_replication] == [100, 101, 102]

    def test_csv_rows(self, tmp_path):
        sim = cfg(n=200, p=40, replications=2, seed=0)
        gk = GkmsConfig(pathb_method="pls", lambda_rule=FixedLambda(0.02))
        metrics = run_replications(sim, gk)
        rows = replication_rows(sim, gk, metrics)
        assert len(rows) == 2
        assert list(rows[0]) == REPLICATION_COLUMNS
        agg = aggregate_row(sim, gk, metrics)
        assert list(agg) == AGGREGATE_COLUMNS
        out = tmp_path / "rows.csv"
        write_csv(out, rows, REPLICATION_COLUMNS)
        header = out.read_text().splitlines()[0]
        assert header == ",".join(REPLICATION_COLUMNS)
