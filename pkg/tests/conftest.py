import json
import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

DATA = HERE.parent / "demos" / "data"


@pytest.fixture(scope="session")
def coverage_config():
    return json.loads((DATA / "tables.json").read_text())


@pytest.fixture(scope="session")
def coverage_trace():
    return [json.loads(line) for line in (DATA / "coverage_trace.jsonl").read_text().splitlines()]


@pytest.fixture(scope="session")
def lina():
    from tmlina import build_lina_model

    return build_lina_model()


@pytest.fixture(scope="session")
def automaton(lina):
    from tmlina import derive_automaton, event_catalog

    return derive_automaton(lina, event_catalog())


@pytest.fixture(scope="session")
def lina_dot(lina):
    """The exported DOT text and its pydot parse."""
    import pydot

    from tmlina import export_dot

    text = export_dot(lina)
    graphs = pydot.graph_from_dot_data(text)
    return text, graphs
