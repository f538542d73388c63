import numpy as np
import pytest

from bevlift.pointcloud import RangeSpec
from bevlift.raster import GridConfig, Palette


@pytest.fixture(scope="session")
def default_grid() -> GridConfig:
    return GridConfig(RangeSpec(-30.0, 30.0, -30.0, 30.0), 0.1, 0.1, 3)


@pytest.fixture(scope="session")
def default_palette() -> Palette:
    return Palette()


@pytest.fixture()
def small_grid() -> GridConfig:
    # 40 x 40 image: range 4 m at 0.1 m pillars
    return GridConfig(RangeSpec(-2.0, 2.0, -2.0, 2.0), 0.1, 0.1, 3)


def cloud_from_rows(rows, frame_id="test"):
    from bevlift.pointcloud import PointCloud

    return PointCloud(np.asarray(rows, dtype=np.float32).reshape(-1, 4), frame_id=frame_id)
