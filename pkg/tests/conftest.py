import pytest
from gmpy2 import mpq


@pytest.fixture
def q():
    return mpq(1, 2)
