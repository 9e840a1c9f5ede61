import functools

import pytest

from phasepredict import FarimaModel, RationalMatrix


@functools.lru_cache(maxsize=None)
def _model(d: float, c: float | None):
    """c=None: scalar identity model; otherwise the 2x2 example with that c."""
    if c is None:
        g = RationalMatrix.identity(1)
    else:
        g = RationalMatrix.paper_example(c)
    return FarimaModel.build(d, g)


@pytest.fixture(scope="session")
def model_of():
    return _model


@pytest.fixture(scope="session")
def scalar_q25():
    return _model(0.25, None)


@pytest.fixture(scope="session")
def example_c05_d03():
    return _model(0.3, 0.5)
