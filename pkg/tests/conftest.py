import sys
from pathlib import Path

TESTS_DIR = Path(__file__).parent

# let tests import the reference oracles as `reference.*`
sys.path.insert(0, str(TESTS_DIR))
