import os
from pathlib import Path

import pytest

from calvae.data import filter_complete, parse_csv
from calvae.synthetic import write_surrogate_csv

# Point this at the genuine hourly air-quality CSV to run the whole suite
# (acceptance included) against the real distribution instead of the
# surrogate.
DATASET_ENV = "CALVAE_DATASET"


@pytest.fixture(scope="session")
def dataset_path(tmp_path_factory) -> Path:
    real = os.environ.get(DATASET_ENV)
    if real:
        return Path(real)
    path = tmp_path_factory.mktemp("data") / "surrogate_air_quality.csv"
    return write_surrogate_csv(path)


@pytest.fixture(scope="session")
def records(dataset_path):
    return parse_csv(dataset_path)


@pytest.fixture(scope="session")
def frame(records):
    return filter_complete(records)
