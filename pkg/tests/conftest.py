import os
import sys
import textwrap
from pathlib import Path

import pytest
from hypothesis import settings

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def corpus() -> Path:
    return CORPUS


FAKE = textwrap.dedent("""
    import sys, time
    mode = sys.argv[1]
    if mode == "crash":
        sys.exit(1)
    for line in sys.stdin:
        if line.strip() == "(check-sat)":
            if mode == "hang":
                time.sleep(30)
            print(mode, flush=True)
""")


@pytest.fixture
def fake_solver(tmp_path):
    path = tmp_path / "fake_solver.py"
    path.write_text(FAKE)
    return lambda mode: [sys.executable, str(path), mode]
