import pytest

from musicking_lab.ingest import load_bundled_beat_grid


@pytest.fixture(scope="session")
def grid():
    return load_bundled_beat_grid()
