import pytest

from pcmapf import GridMap, Instance


@pytest.fixture
def open5() -> GridMap:
    return GridMap.empty(5, 5)


def crossing_instance() -> Instance:
    """Two agents crossing an empty 5x5 along the same row."""
    return Instance(GridMap.empty(5, 5), [(0, 0), (4, 4)], [(4, 0), (0, 4)])
