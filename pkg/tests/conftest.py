import pathlib

import pytest

from abcwb.parser import parse_program

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


def load_corpus(name: str):
    return parse_program((CORPUS / name).read_text())


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS


@pytest.fixture(scope="session")
def robotics():
    return load_corpus("robotics.abc")


@pytest.fixture(scope="session")
def groups():
    return load_corpus("groups.abc")


@pytest.fixture(scope="session")
def pubsub():
    return load_corpus("pubsub.abc")


@pytest.fixture(scope="session")
def channels():
    return load_corpus("channels.abc")


@pytest.fixture(scope="session")
def adaptation():
    return load_corpus("adaptation.abc")
