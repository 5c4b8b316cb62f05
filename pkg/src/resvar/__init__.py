"""Structural VAR scenarios and day-ahead / intraday bidding for
renewable generators."""
from .backtest import BacktestConfig, BacktestReport, run_backtest
from .market_data import HourlyPanel, InformationSet, load_panel, write_panel
from .strategies import Strategy, choose_g, revenue_distribution
from .svar import VarSpec, fit_hour_model, point_forecast, simulate_scenarios
from .synthgen import GroundTruth, default_truth, generate_panel

__version__ = "0.1.0"

__all__ = [
    "BacktestConfig",
    "BacktestReport",
    "GroundTruth",
    "HourlyPanel",
    "InformationSet",
    "Strategy",
    "VarSpec",
    "choose_g",
    "default_truth",
    "fit_hour_model",
    "generate_panel",
    "load_panel",
    "point_forecast",
    "revenue_distribution",
    "run_backtest",
    "simulate_scenarios",
    "write_panel",
]
