import pytest

from spinfact import lie


@pytest.fixture(scope="session")
def models():
    cache = {}

    def get(family, mode="appendix"):
        if (family, mode) not in cache:
            cache[family, mode] = lie.from_family(family, mode)
        return cache[family, mode]

    return get
