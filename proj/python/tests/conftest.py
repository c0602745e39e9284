import json
import os
from pathlib import Path

import pytest

ROOT = Path(os.environ.get("EWS_SOURCE_DIR", Path(__file__).resolve().parents[2]))


@pytest.fixture(scope="session")
def root():
    return ROOT


@pytest.fixture(scope="session")
def interchange_schema():
    return json.loads((ROOT / "docs/schemas/interchange.schema.json").read_text())


@pytest.fixture(scope="session")
def result_schema():
    return json.loads((ROOT / "docs/schemas/extraction_result.schema.json").read_text())
