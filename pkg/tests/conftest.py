import numpy as np
import pytest

import scripted_scene
from scenesynth.frame_store import Frame


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def toy_scene(tmp_path_factory):
    return scripted_scene.write_scene(tmp_path_factory.mktemp("scene") / "toy")


def make_frames(arrays, start=1):
    return [Frame(start + i, a) for i, a in enumerate(arrays)]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
