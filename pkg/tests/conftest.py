import os
import sys
from pathlib import Path

import pytest

# Ensure project root is importable so `import concurrence_classes` works
ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """
    Drop every CONCURRENCE_* variable so each test sees default settings,
    whatever the developer's shell holds, and keep the CLI from reading a
    .env file into os.environ.
    """
    for name in list(os.environ):
        if name.startswith("CONCURRENCE_"):
            monkeypatch.delenv(name, raising=False)
    monkeypatch.setattr("concurrence_classes.cli.load_dotenv", lambda *args, **kwargs: False)
    yield


@pytest.fixture
def state_file(tmp_path):
    """Write a state dict to a JSON file and return its path."""
    import json

    def write(data, name="state.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write
