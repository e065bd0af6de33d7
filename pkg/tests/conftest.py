import pytest

from beaconlab.suites import Bls12381Suite, ToySuite

# Smallest prime above 2**128 (coprime to the cofactor 5): with the full
# 128-bit coefficient space, random-coefficient collisions are negligible.
BIG_TOY_ORDER = 340282366920938463463374607431768211507


@pytest.fixture
def toy():
    return ToySuite()


@pytest.fixture
def toy257():
    return ToySuite(subgroup_order=257)


@pytest.fixture
def big_toy():
    return ToySuite(subgroup_order=BIG_TOY_ORDER)


@pytest.fixture(scope="session")
def production():
    return Bls12381Suite()
