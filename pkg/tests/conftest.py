import pytest

from pathint.core.streams import RandomStream
from pathint.oracles.fock import FockSpace


@pytest.fixture
def stream() -> RandomStream:
    return RandomStream(1234, 0)


@pytest.fixture(scope="session")
def fock_space() -> FockSpace:
    return FockSpace(60)
