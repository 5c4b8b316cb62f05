import datetime as dt

import numpy as np
import pytest

from resvar.market_data import HOURS, HourlyPanel
from resvar.synthgen import generate_panel


@pytest.fixture(scope="session")
def synth_panel():
    """A 420-day synthetic panel from the default ground truth."""
    return generate_panel(n_days=420, seed=11)


def make_panel(n_days=30, start=dt.date(2018, 1, 1), seed=0, **overrides):
    """Small random panel with positive volumes."""
    rng = np.random.default_rng(seed)
    shape = (n_days, HOURS)
    arrays = {
        "da_price": 30 + 10 * rng.standard_normal(shape),
        "id3_price": 30 + 12 * rng.standard_normal(shape),
        "load_actual": 60 + 5 * rng.random(shape),
        "res_actual": 15 * rng.random(shape),
        "load_forecast": 60 + 5 * rng.random(shape),
        "res_forecast": 15 * rng.random(shape),
    }
    arrays.update(overrides)
    dates = np.datetime64(start, "D") + np.arange(n_days)
    return HourlyPanel(dates=dates, **arrays)


ACCEPTANCE = {}


def record(number, ok, detail):
    """Store one acceptance verdict for the end-of-run summary."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
