import pathlib

import pytest

from epsstar import _backend

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(params=sorted(_backend.BACKENDS))
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    monkeypatch.setattr(_backend, "_impl", _backend.BACKENDS[request.param])
    return request.param


@pytest.fixture
def data_dir():
    return DATA
