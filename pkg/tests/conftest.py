import numpy as np
import pytest

from relaycell.channel import AntennaPattern, ScenarioConfig, load_link_models, noise_dbm_to_watts
from relaycell.geometry import CellLayout
from relaycell.schemes import EnergyProfile


@pytest.fixture(scope="session")
def links():
    return load_link_models()


@pytest.fixture(scope="session")
def scenario(links):
    """Reference scenario: rate 3 bit/ch.use, -93 dBm noise, 2.6 GHz."""
    return ScenarioConfig(
        rate=3.0,
        noise_w=noise_dbm_to_watts(-93.0),
        f_c_ghz=2.6,
        p_out=0.02,
        links=links,
        antenna=AntennaPattern(g_max_db=18.0),
    )


@pytest.fixture(scope="session")
def profile():
    """Reference energy profile (caps 1 J / 500 mJ, Table-style offsets)."""
    return EnergyProfile(e_dsp_2hop=0.050)


@pytest.fixture(scope="session")
def transmit_profile():
    """Transmit-energy-only accounting: unit amplifiers, no dsp."""
    return EnergyProfile(eta_b=1.0, eta_r=1.0, e_dsp_2hop=0.0)


@pytest.fixture()
def single_relay_layout():
    return CellLayout(800.0, ((100.0, 0.0),), 60.0)


def make_scenario(links, rate=3.0, p_out=0.02, omni=False, g_max=18.0):
    return ScenarioConfig(
        rate=rate,
        noise_w=noise_dbm_to_watts(-93.0),
        f_c_ghz=2.6,
        p_out=p_out,
        links=links,
        antenna=AntennaPattern(g_max_db=g_max, omni=omni),
    )
