from pathlib import Path

import numpy as np
import pytest

from ddditsa import DesignSpec, PanelSeries, fit
from ddditsa.simulate import SimulationSpec, simulate_panel, simulation_design_spec

DATA_DIR = Path(__file__).parent / "data"
CIGAR_CSV = DATA_DIR / "cigar_ca_id_mt_1970_1992.csv"

# a plausible DDD mean structure with non-trivial values in every slot
BETA_DDD = (126.4, -1.4, -11.4, 0.6, 5.8, -0.35, -8.6, -2.1, 12.3, -0.1, -6.5, -0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240117)


@pytest.fixture(scope="session")
def cigar_csv():
    return CIGAR_CSV


@pytest.fixture
def sim_spec():
    return SimulationSpec(beta_true=BETA_DDD, rho=0.3, sigma=2.0, replications=50, seed=11)


@pytest.fixture
def sim_panel(sim_spec):
    return simulate_panel(sim_spec, 0)


@pytest.fixture
def ddd_spec(sim_spec):
    return simulation_design_spec(sim_spec)


@pytest.fixture
def ddd_fit(sim_panel, ddd_spec):
    return fit(sim_panel, ddd_spec)


def make_panel(rng, units=("1", "2", "3", "4"), n_periods=12, start=2000):
    """Random balanced panel with a mild linear trend per unit."""
    t = np.arange(n_periods)
    rows = [10 * rng.random() + rng.normal() * t * 0.2 + rng.normal(size=n_periods) for _ in units]
    return PanelSeries(tuple(units), start + t, np.vstack(rows))


def ddd_design_spec(intervention=2006, lag=1, **kw):
    return DesignSpec(
        treat_unit="1",
        control1_units=("2", "3"),
        control2_units=("4",),
        intervention_time=intervention,
        hac_lag=lag,
        **kw,
    )
