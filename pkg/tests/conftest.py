import pytest
from hypothesis import HealthCheck, settings

from mlidrive.drive_cycle import builtin_cycle
from mlidrive.reference import (TOPOLOGY_ORDER, device_library, nominal_topology,
                                reference_motor, reference_vehicle)
from mlidrive.semiconductors import load_device_library
from mlidrive.sizing import SizingConstraints

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def raw_library():
    return load_device_library()


@pytest.fixture(scope="session")
def library():
    return device_library()


@pytest.fixture(scope="session")
def motor():
    return reference_motor()


@pytest.fixture(scope="session")
def constraints():
    return SizingConstraints()


@pytest.fixture(scope="session")
def vehicle():
    return reference_vehicle()


@pytest.fixture(scope="session")
def wltc():
    return builtin_cycle()


@pytest.fixture(scope="session")
def topologies(library):
    return {k: nominal_topology(k, library) for k in TOPOLOGY_ORDER}


@pytest.fixture(scope="session")
def sized(topologies, motor, constraints):
    from mlidrive.reference import size_topologies
    return size_topologies(topologies.values(), motor, constraints)
