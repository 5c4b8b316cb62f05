import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from resvar.errors import EmptyGrid, GOutOfRange, UndefinedObjective
from resvar.strategies import (
    ALL_STRATEGIES,
    RevenueDistribution,
    Strategy,
    choose_g,
    default_grid,
    revenue_distribution,
    revenue_draws,
)
from resvar.svar import ScenarioSet


def scenario(da, idp, g_draws, g_hat):
    da = np.atleast_1d(np.asarray(da, dtype=float))
    idp = np.atleast_1d(np.asarray(idp, dtype=float))
    g_draws = np.broadcast_to(np.asarray(g_draws, dtype=float), da.shape).copy()
    y = np.column_stack([g_draws / 5.0, np.full(da.size, 60.0), da, idp])
    return ScenarioSet(n_draws=da.size, y_point=y.mean(axis=0), y_draws=y, g_hat=float(g_hat),
                       g_draws=g_draws, seed=None)


def random_scenario(seed, n=1000, scale=1.0):
    rng = np.random.default_rng(seed)
    da = 35 + 12 * rng.standard_normal(n)
    idp = da + rng.normal(rng.uniform(-2, 2), rng.uniform(2, 15), n)
    g = np.maximum(80 + 15 * rng.standard_normal(n), 0)
    return scenario(scale * da, scale * idp, g, 80.0)


def dist_from(mean=None, sharpe=None, var5=None, n=11):
    grid = np.linspace(0, 1, n)
    z = np.zeros(n)
    mean = z if mean is None else np.asarray(mean, float)
    sharpe = z if sharpe is None else np.asarray(sharpe, float)
    var5 = z if var5 is None else np.asarray(var5, float)
    return RevenueDistribution(g_grid=grid, mean=mean, std=np.ones(n), sharpe=sharpe,
                               var_tau={0.01: var5 - 1, 0.05: var5}, g_hat=80.0)


class TestRevenueDraws:
    def test_all_day_ahead(self):
        assert_allclose(revenue_draws(scenario(40.0, 55.0, 100.0, 100.0), 1.0), [4000.0])

    def test_all_intraday(self):
        assert_allclose(revenue_draws(scenario(40.0, 50.0, 100.0, 70.0), 0.0), [5000.0])

    def test_half_split(self):
        assert_allclose(revenue_draws(scenario(40.0, 50.0, 100.0, 80.0), 0.5), [4600.0])

    @pytest.mark.parametrize("g", [-0.01, 1.01])
    def test_out_of_range(self, g):
        with pytest.raises(GOutOfRange):
            revenue_draws(scenario(40.0, 50.0, 100.0, 80.0), g)


class TestRevenueDistribution:
    def test_default_grid(self):
        grid = default_grid()
        assert grid.size == 101 and grid[0] == 0.0 and grid[-1] == 1.0
        assert_allclose(np.diff(grid), 0.01)

    def test_matches_direct_draws(self):
        scen = random_scenario(1)
        dist = revenue_distribution(scen, keep_draws=True)
        for i in (0, 37, 100):
            direct = revenue_draws(scen, dist.g_grid[i])
            assert_allclose(dist.draws[:, i], direct, rtol=1e-12)
            assert_allclose(dist.mean[i], direct.mean(), rtol=1e-12)
            assert_allclose(dist.std[i], direct.std(), rtol=1e-12)
            assert_allclose(dist.var_tau[0.05][i], np.quantile(direct, 0.05), rtol=1e-12)

    def test_degenerate_scenario(self):
        scen = scenario(np.full(200, 40.0), np.full(200, 45.0), 90.0, 90.0)
        dist = revenue_distribution(scen)
        assert_allclose(dist.std, 0.0, atol=1e-9)
        assert np.all(np.isnan(dist.sharpe))
        with pytest.raises(UndefinedObjective):
            choose_g(dist, "MaxSharpe")

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_mean_affine(self, seed):
        dist = revenue_distribution(random_scenario(seed))
        g = dist.g_grid
        line = dist.mean[0] + g * (dist.mean[-1] - dist.mean[0])
        assert np.max(np.abs(dist.mean - line)) <= 1e-9 * max(1.0, np.abs(dist.mean).max())

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_quantiles_monotone_in_tau(self, seed):
        dist = revenue_distribution(random_scenario(seed), taus=(0.05, 0.01, 0.25))
        assert np.all(dist.var_tau[0.01] <= dist.var_tau[0.05])
        assert np.all(dist.var_tau[0.05] <= dist.var_tau[0.25])

    def test_grid_errors(self):
        scen = random_scenario(2)
        with pytest.raises(EmptyGrid):
            revenue_distribution(scen, [])
        with pytest.raises(GOutOfRange):
            revenue_distribution(scen, [0.0, 1.5])
        with pytest.raises(ValueError):
            revenue_distribution(scen, [0.5, 0.2])


class TestChooseG:
    def test_fixed_strategies(self):
        dist = revenue_distribution(random_scenario(3))
        assert choose_g(dist, "DA").g_star == 1.0
        assert choose_g(dist, "ID").g_star == 0.0

    def test_max_profit_boundary(self):
        dist = dist_from(mean=np.linspace(100, 110, 11))
        assert choose_g(dist, Strategy.MAX_PROFIT).g_star == 1.0
        dist = dist_from(mean=np.linspace(110, 100, 11))
        assert choose_g(dist, Strategy.MAX_PROFIT).g_star == 0.0

    def test_max_sharpe_interior(self):
        g = np.linspace(0, 1, 11)
        dist = dist_from(sharpe=-(g - 0.6) ** 2)
        assert choose_g(dist, "MaxSharpe").g_star == pytest.approx(0.6)

    def test_max_sharpe_skips_nan_points(self):
        sharpe = np.linspace(0, 1, 11)
        sharpe[-1] = np.nan
        assert choose_g(dist_from(sharpe=sharpe), "MaxSharpe").g_star == pytest.approx(0.9)

    def test_max_var(self):
        v = np.zeros(11)
        v[3] = 5.0
        dec = choose_g(dist_from(var5=v), "MaxVaR")
        assert dec.g_star == pytest.approx(0.3)
        assert dec.var5_at_g == 5.0

    def test_ties_go_to_smallest_g(self):
        assert choose_g(dist_from(mean=np.full(11, 7.0)), "MaxProfit").g_star == 0.0
        assert choose_g(dist_from(var5=np.full(11, 7.0)), "MaxVaR").g_star == 0.0

    def test_decision_fields(self):
        dist = revenue_distribution(random_scenario(4))
        dec = choose_g(dist, "MaxSharpe")
        i = int(np.flatnonzero(dist.g_grid == dec.g_star)[0])
        assert dec.predicted_revenue == dist.mean[i]
        assert dec.sharpe_at_g == dist.sharpe[i]
        assert dec.var5_at_g == dist.var_tau[0.05][i]
        assert dec.g_hat == 80.0

    def test_strategy_aliases(self):
        assert Strategy.parse("maxsharpe") is Strategy.MAX_SHARPE
        assert Strategy.parse("da") is Strategy.DA
        with pytest.raises(ValueError):
            Strategy.parse("bogus")

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_g_on_grid(self, seed):
        grid = np.sort(np.unique(np.random.default_rng(seed).uniform(0, 1, 17)))
        grid = np.concatenate([[0.0], grid, [1.0]])
        dist = revenue_distribution(random_scenario(seed), grid)
        for s in ALL_STRATEGIES:
            g = choose_g(dist, s).g_star
            assert g in grid and 0.0 <= g <= 1.0

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([0.25, 2.0, 8.0, 1024.0]))
    def test_scale_invariance(self, seed, c):
        a = revenue_distribution(random_scenario(seed))
        b = revenue_distribution(random_scenario(seed, scale=c))
        for s in ALL_STRATEGIES:
            assert choose_g(a, s).g_star == choose_g(b, s).g_star

    def test_scale_invariance_generic_factor(self):
        for seed in range(20):
            a = revenue_distribution(random_scenario(seed))
            b = revenue_distribution(random_scenario(seed, scale=3.7))
            assert_allclose(b.sharpe, a.sharpe, rtol=1e-10)
            for s in ALL_STRATEGIES:
                assert choose_g(a, s).g_star == choose_g(b, s).g_star

    def test_deterministic(self):
        dist = revenue_distribution(random_scenario(5))
        for s in ALL_STRATEGIES:
            assert choose_g(dist, s) == choose_g(dist, s)
