import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from util import toy_corpus


@pytest.fixture
def corpus3():
    return toy_corpus()
