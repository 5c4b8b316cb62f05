import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

import resvar.backtest as bt
from resvar.backtest import BacktestConfig, g_distribution, g_histogram, run_backtest, run_hour
from resvar.errors import BacktestAbort, EmptyLog, InsufficientHistory, NotPositiveDefinite, UndefinedObjective
from resvar.market_data import VARIABLES
from resvar.synthgen import generate_panel

SMALL = dict(calibration_days=220, evaluation_days=40, n_draws=200, master_seed=5)


@pytest.fixture(scope="module")
def panel():
    return generate_panel(n_days=270, seed=21)


@pytest.fixture(scope="module")
def report(panel):
    return run_backtest(panel, BacktestConfig(**SMALL))


class TestConfig:
    def test_defaults(self):
        cfg = BacktestConfig()
        assert cfg.calibration_days == 731 and cfg.evaluation_days == 730
        assert cfg.n_draws == 1000 and len(cfg.strategies) == 5
        assert cfg.grid.size == 101

    def test_strategies_canonical(self):
        cfg = BacktestConfig(strategies=("maxsharpe", "da", "DA"))
        assert [s.value for s in cfg.strategies] == ["DA", "MaxSharpe"]

    @pytest.mark.parametrize("kw", [dict(calibration_days=199), dict(strategies=()),
                                    dict(refit_every=0), dict(threads=0),
                                    dict(taus=(0.01,))])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            BacktestConfig(**kw)

    def test_panel_too_short(self, panel):
        with pytest.raises(InsufficientHistory):
            BacktestConfig(calibration_days=240, evaluation_days=40).evaluation_range(panel)

    def test_evaluation_range(self, panel):
        days = BacktestConfig(**SMALL).evaluation_range(panel)
        assert_array_equal(days, np.arange(230, 270))


class TestRun:
    def test_cell_count(self, report):
        assert report.n_cells == 40 * 24 * 5
        for o in report.outcomes.values():
            assert o.realized.shape == (40, 24)
            assert np.isfinite(o.realized).all() and np.isfinite(o.predicted).all()

    def test_fixed_strategies(self, report):
        da, idd = report.g_dist["DA"], report.g_dist["ID"]
        assert (da["mean_g"], da["share_g0"], da["share_interior"], da["share_g1"]) == (100, 0, 0, 100)
        assert (idd["mean_g"], idd["share_g0"], idd["share_interior"], idd["share_g1"]) == (0, 100, 0, 0)

    def test_max_profit_boundary(self, report):
        assert report.g_dist["MaxProfit"]["share_interior"] == 0.0
        assert report.affine_error_max <= 1e-9 * 1e4

    def test_shares_sum_to_100(self, report):
        for d in report.g_dist.values():
            assert d["share_g0"] + d["share_interior"] + d["share_g1"] == pytest.approx(100.0)
            assert len(d["hourly_means"]) == 24

    def test_strategies_share_one_distribution(self, report):
        # predictions are points of the same affine mean line
        da = report.outcomes["DA"].predicted
        idd = report.outcomes["ID"].predicted
        mp = report.outcomes["MaxProfit"].predicted
        assert_array_equal(mp, np.maximum(da, idd))
        for name in ("MaxSharpe", "MaxVaR"):
            o = report.outcomes[name]
            assert_allclose(o.predicted, idd + o.g * (da - idd), rtol=1e-9, atol=1e-6)

    def test_benchmark_and_pvalues(self, report):
        assert report.benchmark == "DA"
        assert set(report.deltas) == {"ID", "MaxProfit", "MaxSharpe", "MaxVaR"}
        assert set(report.pvalues) == {"revenue", "squared_error", "absolute_error"}

    def test_same_seed_identical(self, panel, report):
        again = run_backtest(panel, BacktestConfig(**SMALL))
        for name, o in report.outcomes.items():
            assert_array_equal(o.realized, again.outcomes[name].realized)
            assert_array_equal(o.g, again.outcomes[name].g)

    def test_threads_do_not_matter(self, panel, report):
        par = run_backtest(panel, BacktestConfig(**SMALL, threads=2))
        for name, o in report.outcomes.items():
            assert_array_equal(o.realized, par.outcomes[name].realized)
            assert_array_equal(o.predicted, par.outcomes[name].predicted)

    def test_seed_changes_draws(self, panel, report):
        other = run_backtest(panel, BacktestConfig(**{**SMALL, "master_seed": 6}))
        assert not np.array_equal(other.outcomes["MaxSharpe"].predicted,
                                  report.outcomes["MaxSharpe"].predicted)
        # fixed strategies have seed-free realized revenue
        assert_array_equal(other.outcomes["DA"].realized, report.outcomes["DA"].realized)

    def test_subset_of_strategies(self, panel):
        rep = run_backtest(panel, BacktestConfig(**{**SMALL, "evaluation_days": 30},
                                                 strategies=("da", "id")))
        assert list(rep.outcomes) == ["DA", "ID"]


class TestWindowHygiene:
    def test_poisoned_future(self, panel):
        cfg = BacktestConfig(**SMALL)
        t = 250
        rng = np.random.default_rng(0)
        poisoned = {}
        for v in VARIABLES:
            arr = getattr(panel, v).copy()
            keep = arr[t].copy()
            arr[t:] = rng.uniform(100, 1000, arr[t:].shape)
            if v in ("res_forecast", "load_forecast"):
                arr[t] = keep
            poisoned[v] = arr
        bad = panel.with_values(**poisoned)
        for h in (4, 17, 24):
            a = run_hour(panel, h, cfg, np.array([t]))
            b = run_hour(bad, h, cfg, np.array([t]))
            assert_array_equal(a.y_point, b.y_point)
            assert_array_equal(a.g_hat, b.g_hat)
            for s in cfg.strategies:
                assert_array_equal(a.g[s], b.g[s])
                assert_array_equal(a.predicted[s], b.predicted[s])

    def test_fit_window_ends_day_before(self, panel, monkeypatch):
        windows = []
        real = bt.fit_hour_model

        def spy(p, hour, window, *args):
            windows.append(window)
            return real(p, hour, window, *args)

        monkeypatch.setattr(bt, "fit_hour_model", spy)
        run_hour(panel, 3, BacktestConfig(**SMALL), np.array([240, 241]))
        assert windows == [(20, 239), (21, 240)]

    def test_refit_every(self, panel, monkeypatch):
        calls = []
        real = bt.fit_hour_model
        monkeypatch.setattr(bt, "fit_hour_model", lambda *a: calls.append(a[2]) or real(*a))
        run_hour(panel, 3, BacktestConfig(**SMALL, refit_every=5), np.arange(240, 252))
        assert [w[1] + 1 for w in calls] == [240, 245, 250]


class TestFailurePolicy:
    def test_fallback_to_previous_model(self, panel, monkeypatch):
        real = bt.fit_hour_model

        def flaky(p, hour, window, *args):
            if window[1] + 1 == 245:
                raise NotPositiveDefinite(2)
            return real(p, hour, window, *args)

        monkeypatch.setattr(bt, "fit_hour_model", flaky)
        res = run_hour(panel, 3, BacktestConfig(**SMALL), np.arange(243, 247))
        assert [t for t, _ in res.failures] == [245]
        ref = run_hour(panel, 3, BacktestConfig(**SMALL, refit_every=2), np.arange(244, 246))
        # day 245 used the day-244 model, same as a refit-every-2 run
        assert res.y_point[2] == pytest.approx(ref.y_point[1])

    def test_abort_without_any_model(self, panel, monkeypatch):
        def broken(*a):
            raise NotPositiveDefinite(0)

        monkeypatch.setattr(bt, "fit_hour_model", broken)
        with pytest.raises(BacktestAbort, match="hour 3"):
            run_hour(panel, 3, BacktestConfig(**SMALL), np.arange(240, 242))

    @staticmethod
    def flaky_days(days):
        real = bt.fit_hour_model

        def flaky(p, hour, window, *args):
            if window[1] + 1 in days and hour <= 3:
                raise NotPositiveDefinite(1)
            return real(p, hour, window, *args)

        return flaky

    def test_failures_within_tolerance(self, panel, monkeypatch):
        # 9 of 960 cells is below 1%
        monkeypatch.setattr(bt, "fit_hour_model", self.flaky_days((245, 246, 247)))
        rep = run_backtest(panel, BacktestConfig(**SMALL))
        assert len(rep.failures) == 9

    def test_abort_above_failure_rate(self, panel, monkeypatch):
        monkeypatch.setattr(bt, "fit_hour_model", self.flaky_days((245, 246, 247, 248)))
        with pytest.raises(BacktestAbort, match="12 of 960"):
            run_backtest(panel, BacktestConfig(**SMALL))

    def test_sharpe_fallback(self, panel, monkeypatch):
        real = bt.choose_g

        def no_sharpe(dist, s, *args):
            if s is bt.Strategy.MAX_SHARPE:
                raise UndefinedObjective("flat")
            return real(dist, s, *args)

        monkeypatch.setattr(bt, "choose_g", no_sharpe)
        res = run_hour(panel, 3, BacktestConfig(**SMALL), np.arange(240, 243))
        assert res.fallbacks == 3
        assert_array_equal(res.g[bt.Strategy.MAX_SHARPE], res.g[bt.Strategy.MAX_PROFIT])


class TestGDistribution:
    def test_da_log(self):
        d = g_distribution(np.ones((10, 24)))
        assert (d["mean_g"], d["share_g0"], d["share_interior"], d["share_g1"]) == (100, 0, 0, 100)

    def test_id_log(self):
        d = g_distribution(np.zeros((10, 24)))
        assert (d["mean_g"], d["share_g0"], d["share_interior"], d["share_g1"]) == (0, 100, 0, 0)

    def test_mixed(self):
        g = np.tile([0.0, 0.25, 1.0, 1.0], (6, 6))
        d = g_distribution(g)
        assert d["mean_g"] == pytest.approx(56.25)
        assert (d["share_g0"], d["share_interior"], d["share_g1"]) == (25.0, 25.0, 50.0)
        assert d["hourly_means"][1] == 25.0

    def test_empty(self):
        with pytest.raises(EmptyLog):
            g_distribution([])

    def test_histogram_interior_only(self):
        edges, counts = g_histogram(np.array([0.0, 0.05, 0.15, 0.55, 1.0]))
        assert edges.size == 11
        assert counts.sum() == 3 and counts[0] == 1 and counts[5] == 1
