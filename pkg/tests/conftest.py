import sys
from pathlib import Path

# Ensure repo root is on sys.path when running `pytest` from anywhere
ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running computations (deselect with -m 'not slow')")
