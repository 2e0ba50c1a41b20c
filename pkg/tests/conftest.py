import numpy as np
import pytest

import orbitloop as ol

# Linearization radius of the default scenario and the derived natural
# orbital frequency; every plant-level oracle below recomputes from these.
R0 = float(np.hypot(4292.87, 8924.17))
MU = ol.PhysicalConstants().mu
W2 = MU / R0**3


@pytest.fixture(scope="session")
def plant():
    return ol.linearize_plant(R0)


@pytest.fixture(scope="session")
def identity_weights():
    return ol.Weights.identity(4, 2)


@pytest.fixture(scope="session")
def lqr_design(plant, identity_weights):
    return ol.lqr_gain(plant.a, plant.b, identity_weights)


@pytest.fixture(scope="session")
def observer_design(plant, lqr_design):
    return ol.observer_gain(plant.a, plant.c,
                            lqr_design.closed_loop_spectrum, 4.0)
