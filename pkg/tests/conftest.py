import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mqpot.cli import load  # noqa: E402

SESSIONS = os.path.join(os.path.dirname(__file__), "..", "src", "mqpot", "sessions")


def session_path(name):
    return os.path.join(SESSIONS, name + ".json")


@pytest.fixture(scope="session")
def f4_session():
    return load(session_path("f4_q0"))


@pytest.fixture(scope="session")
def sec6_ex1():
    return load(session_path("sec6_ex1"))


@pytest.fixture(scope="session")
def sec6_ex2_n0():
    return load(session_path("sec6_ex2_n0"))
