"""
Tests for the end-to-end sunspot pipeline on random cyclic games
"""
import numpy as np
import pytest

from app.models.sunspot import SunspotPath
from app.services.equilibrium import EquilibriumService
from app.services.game_model import GameService


@pytest.fixture(scope="module")
def service():
    return EquilibriumService()


def test_cyclic_game_with_vertex_start(service):
    R = np.array([[0.0, 0.881, -0.408], [-0.589, 0.0, 0.669], [0.829, -0.277, 0.0]])
    game = GameService().parse_game({
        "players": 3,
        "payoffs": {str(j + 1): R[:, j].tolist() for j in range(3)},
    })
    report = service.run_sunspot(game, 0.2)
    assert report.path == SunspotPath.ANCHOR_SEQUENCE
    assert report.evaluation.passed
    np.testing.assert_allclose(report.sequence.start[:2], [0.0, 0.0])


@pytest.mark.parametrize("seed", range(20))
def test_random_cyclic_games_reach_equilibrium(service, cyclic_game, seed):
    game = cyclic_game(seed)
    _, cls = service.prepare(game)
    assert cls.n == 3
    assert service.lcp.nontrivial_zero_solution(cls.restricted) is None
    report = service.run_sunspot(game, 0.2)
    assert report.evaluation.passed
    assert report.sequence.length > 0
