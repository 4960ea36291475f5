import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from diagonal_oe import DiagonalProduct, DihedralBackend, Profile, Schedule  # noqa: E402
from diagonal_oe.tiling import FolnerTiling  # noqa: E402

A, B, T, TI = ("a", 1), ("b", 1), ("t", 1), ("t", -1)


@pytest.fixture(scope="session")
def lamplighter():
    return DiagonalProduct(Schedule(2, 2, (0,), (1,), True, Profile.identity()))


@pytest.fixture(scope="session")
def d4():
    return DiagonalProduct(Schedule(2, 2, (0, 2), (1, 4), True), [DihedralBackend(4)])


@pytest.fixture(scope="session")
def lamp_tiling(lamplighter):
    return FolnerTiling(lamplighter)


@pytest.fixture(scope="session")
def d4_tiling(d4):
    return FolnerTiling(d4)
