import numpy as np
import pytest

from ropuf import ChipInstance, MeasurementSettings, PufTopology, TechnologyParams, VariationModel
from ropuf.config import default_topology


@pytest.fixture
def tech():
    return TechnologyParams()


@pytest.fixture
def var():
    return VariationModel()


@pytest.fixture
def topo():
    return default_topology()


@pytest.fixture
def quiet():
    return MeasurementSettings(jitter_sigma=0.0)


def make_chip(topology: PufTopology, d_base, kappa=None, seed=0) -> ChipInstance:
    d = np.asarray(d_base, dtype=float)
    k = np.zeros_like(d) if kappa is None else np.asarray(kappa, dtype=float)
    return ChipInstance(f"crafted-{seed}", seed, topology.ref, d, k)
