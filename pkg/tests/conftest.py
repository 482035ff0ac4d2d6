from pathlib import Path

import numpy as np
import pytest

from semnav.consistency import ConsistencyParams
from semnav.mapping import MapParams, ObjectLibrary

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture
def small_library() -> ObjectLibrary:
    return ObjectLibrary(
        params=MapParams(),
        consistency_params=ConsistencyParams(),
        workspace=(-1.0, -2.0, 4.0, 2.0),
        height=1.0,
    )


def make_observation(points, instance_id=0, class_id=1, stationarity=1):
    from semnav.mapping import Observation

    points = np.asarray(points, dtype=float).reshape(-1, 3)
    centroid = points.mean(axis=0) if len(points) else np.zeros(3)
    return Observation(
        instance_id=instance_id,
        class_id=class_id,
        stationarity=stationarity,
        points=points,
        centroid=centroid,
    )
