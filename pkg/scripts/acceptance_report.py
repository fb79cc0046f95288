"""Print one PASS/FAIL line per acceptance criterion (same checks as the test suite)."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from test_acceptance import run_all  # noqa: E402

if __name__ == "__main__":
    sys.exit(0 if run_all() else 1)
