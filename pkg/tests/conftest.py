import json
import os

import pytest

HERE = os.path.dirname(os.path.abspath(__file__))


@pytest.fixture(scope="session")
def golden():
    with open(os.path.join(HERE, "oracles", "golden.json")) as fh:
        return json.load(fh)
