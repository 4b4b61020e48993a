import numpy as np
import pytest

from gempic.config import DOMAIN_L
from gempic.mapping import builtin_map


def make_map(name: str):
    if name == "cartesian":
        return builtin_map("cartesian", lx=DOMAIN_L, ly=DOMAIN_L, lz=DOMAIN_L)
    if name == "distorted":
        return builtin_map(
            "distorted", lx=DOMAIN_L, ly=DOMAIN_L, lz=DOMAIN_L,
            lp=np.pi / 2, eps=0.05,
        )
    if name == "cylindrical":
        return builtin_map("cylindrical", r0=0.01, lr=DOMAIN_L - 0.01, lz=DOMAIN_L)
    if name == "elliptical":
        return builtin_map("elliptical", r0=0.05, lr=DOMAIN_L, lz=DOMAIN_L)
    raise ValueError(name)


MAP_NAMES = ["cartesian", "distorted", "cylindrical", "elliptical"]


@pytest.fixture(params=MAP_NAMES)
def any_map(request):
    return make_map(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)
