import json
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from lfoexec.executor import load_environment
from lfoexec.kinematics import load_robot
from lfoexec.taskir import parse_task_sequence

DATA = Path(str(resources.files("lfoexec") / "data"))
ROBOTS = ("nextage_like", "fetch_like")


def data_path(name: str) -> Path:
    return DATA / name


def planar_two_link(link1: float = 1.0, link2: float = 1.0) -> dict:
    """Two revolute z-joints in the xy plane; tool frame at the tip of link 2."""
    def joint(name, x):
        return {"name": name, "type": "revolute", "axis": [0, 0, 1],
                "origin": {"position": [x, 0, 0], "quaternion": [1, 0, 0, 0]}, "limits": [-3.0, 3.0]}
    return {
        "name": "planar",
        "joints": [joint("j1", 0.0), joint("j2", link1)],
        "end_effector": {"position": [link2, 0, 0], "quaternion": [1, 0, 0, 0]},
        "laban_table": {"upper_arm": {}, "lower_arm": {}},
    }


@pytest.fixture(scope="session")
def planar():
    return load_robot(json.dumps(planar_two_link()))


@pytest.fixture(scope="session")
def robots():
    return {name: load_robot(data_path(f"{name}.robot")) for name in ROBOTS}


@pytest.fixture(scope="session")
def nextage(robots):
    return robots["nextage_like"]


@pytest.fixture(scope="session")
def fetch(robots):
    return robots["fetch_like"]


@pytest.fixture(scope="session")
def plate_demo():
    return parse_task_sequence(data_path("place_on_plate.demo"))


@pytest.fixture(scope="session")
def shelf_demo():
    return parse_task_sequence(data_path("shelf.demo"))


@pytest.fixture(scope="session")
def table_env():
    return load_environment(data_path("table_plate.env"))


@pytest.fixture(scope="session")
def shelf_env():
    return load_environment(data_path("shelf.env"))


def random_q(model, rng, n):
    lim = model.limits
    return lim[:, 0] + rng.random((n, model.dof)) * (lim[:, 1] - lim[:, 0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- acceptance summary --------------------------------------------------------

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE[number] = (title, bool(ok), detail)
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)
