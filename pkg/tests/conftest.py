from __future__ import annotations

import pytest

from walkops import env as envs
from walkops.walk import Move

U, D, H = Move.UP, Move.DOWN, Move.HORIZONTAL

# the worked example: levels -2..1 oriented (-, +, -, +)
WORKED_MOVES = [U, H, H, D, D, D, H, H, H, H, U, H, H, H, U]
WORKED_SIGNS = {-2: -1, -1: 1, 0: -1, 1: 1}


@pytest.fixture
def worked_env():
    return envs.explicit(WORKED_SIGNS)


@pytest.fixture
def worked_moves():
    return list(WORKED_MOVES)
