import pytest

from robust_snell import PriorSet, fixtures


@pytest.fixture(scope="session")
def tt1():
    return fixtures.load("tt1")


@pytest.fixture(scope="session")
def tt3():
    return fixtures.load("tt3")


@pytest.fixture(scope="session")
def tt4():
    return fixtures.load("tt4")


@pytest.fixture(scope="session")
def tt4_single(tt4):
    """TT4 with the one-element prior class containing only the reference."""
    return tt4.tree, tt4.payoff, PriorSet.singleton_reference(tt4.tree)
