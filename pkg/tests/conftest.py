"""
Shared fixtures: the fixture games, their classifications and restricted matrices
"""
from pathlib import Path

import numpy as np
import pytest

from app.services.classification import PlayerClassifier
from app.services.game_model import GameService

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def game_service() -> GameService:
    return GameService()


@pytest.fixture(scope="session")
def classifier() -> PlayerClassifier:
    return PlayerClassifier()


def _load(name):
    service = GameService()
    return service.normalize(service.load_game(FIXTURES / name))


@pytest.fixture(scope="session")
def sec25_game():
    return _load("sec25.json")


@pytest.fixture(scope="session")
def sec25_cls(sec25_game, classifier):
    return classifier.classify_players(sec25_game)


@pytest.fixture(scope="session")
def two_player_game():
    return _load("two_player.json")


@pytest.fixture(scope="session")
def all_positive_game():
    return _load("all_positive.json")


@pytest.fixture(scope="session")
def zero_lcp_game():
    return _load("zero_lcp.json")


@pytest.fixture
def ex1_pos():
    return np.array([[0.0, 2.0, -1.0], [-1.0, 0.0, 2.0], [2.0, -1.0, 0.0]])


@pytest.fixture
def ex1_zero():
    return np.array([[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]])


@pytest.fixture(scope="session")
def cyclic_game():
    """Seeded three-player game where each player is hurt by one quitter and helped by the other"""
    service = GameService()

    def make(seed: int):
        rng = np.random.default_rng(seed)
        up = rng.uniform(0.5, 1.0, size=3)
        down = rng.uniform(-0.6, -0.1, size=3)
        R = np.zeros((3, 3))
        for i in range(3):
            R[i, (i + 1) % 3] = up[i]
            R[i, (i + 2) % 3] = down[i]
        payoffs = {str(j + 1): R[:, j].tolist() for j in range(3)}
        return service.normalize(service.parse_game({"players": 3, "payoffs": payoffs}))

    return make
