import pytest

from urnlab import SparseLaw, right_shift_model, ssrw_model, triangular_model


@pytest.fixture(scope="session")
def models():
    return {
        "right-shift": right_shift_model(),
        "ssrw1": ssrw_model(1),
        "ssrw2": ssrw_model(2),
        "triangular": triangular_model(),
    }


@pytest.fixture(scope="session")
def delta0():
    def make(dim):
        return SparseLaw.delta((0,) * dim)
    return make
