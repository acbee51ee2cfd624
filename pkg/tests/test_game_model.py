"""
Tests for game loading, normalization and stationary payoffs
"""
import json

import numpy as np
import pytest

from app.core.exceptions import GameFormatError
from app.services.game_model import GameService


def test_load_sec25_keeps_stored_scale(game_service, fixtures_dir):
    game = game_service.load_game(fixtures_dir / "sec25.json")
    assert game.n_players == 4
    assert game.scale == 4.0
    np.testing.assert_allclose(game.quit_alone(0), [0.0, 1.0, -0.25, -0.25])
    assert any("defaulted" in w for w in game.warnings)


def test_missing_coalitions_default_to_zero(sec25_game):
    np.testing.assert_array_equal(sec25_game.payoff((0, 1)), np.zeros(4))
    np.testing.assert_array_equal(sec25_game.stay_payoff, np.zeros(4))


def test_large_payoffs_are_rescaled(game_service):
    game = game_service.parse_game({"players": 2, "payoffs": {"1": [0, 4], "2": [-2, 0]}})
    assert game.scale == pytest.approx(4.0)
    np.testing.assert_allclose(game.quit_alone(0), [0.0, 1.0])
    assert any("rescaled" in w for w in game.warnings)


def test_strict_mode_rejects_large_payoffs(game_service):
    with pytest.raises(GameFormatError):
        game_service.parse_game({"players": 1, "payoffs": {"1": [3.0]}}, strict=True)


@pytest.mark.parametrize("payload", [
    {"players": 2, "payoffs": {"1": [0.0]}},
    {"players": 2, "payoffs": {"3": [0.0, 0.0]}},
    {"players": 2, "payoffs": {"1,2": [0.0, 0.0], "2,1": [0.0, 0.0]}},
    {"players": 0, "payoffs": {}},
])
def test_invalid_games_are_rejected(game_service, payload):
    with pytest.raises(GameFormatError):
        game_service.parse_game(payload)


def test_duplicate_json_keys_are_rejected(game_service, tmp_path):
    path = tmp_path / "dup.json"
    path.write_text('{"players": 1, "payoffs": {"1": [0.0], "1": [0.5]}}')
    with pytest.raises(GameFormatError):
        game_service.load_game(path)


def test_missing_file(game_service, tmp_path):
    with pytest.raises(GameFormatError):
        game_service.load_game(tmp_path / "absent.json")


def test_normalize_shifts_diagonal_to_zero(game_service):
    game = game_service.parse_game({
        "players": 2,
        "payoffs": {"": [0.5, 0.5], "1": [0.25, 0.5], "2": [0.0, -0.5]},
    })
    normalized = game_service.normalize(game)
    assert normalized.is_normalized()
    np.testing.assert_allclose(normalized.stay_payoff, [0.25, 1.0])
    np.testing.assert_allclose(normalized.quit_alone(1), [-0.25, 0.0])


def test_normalize_leaves_normalized_game_alone(game_service, sec25_game):
    assert game_service.normalize(sec25_game) is sec25_game


def test_stationary_payoff_of_sure_quit(game_service, sec25_game):
    payoff = game_service.stationary_payoff(sec25_game, [1.0, 0.0, 0.0, 0.0])
    np.testing.assert_allclose(payoff, [0.0, 1.0, -0.25, -0.25])


def test_stationary_payoff_without_quitting_is_stay_payoff(game_service, two_player_game):
    payoff = game_service.stationary_payoff(two_player_game, [0.0, 0.0])
    np.testing.assert_allclose(payoff, two_player_game.stay_payoff)


def test_stationary_payoff_mixes_single_and_joint_quits(game_service, two_player_game):
    x = [0.5, 0.5]
    # each of {1}, {2}, {1,2} ends play with probability 1/4, out of 3/4 total
    expected = (np.array([0.0, 1.0]) + np.array([-1.0, 0.0]) + np.array([0.5, 0.5])) / 3.0
    np.testing.assert_allclose(game_service.stationary_payoff(two_player_game, x), expected)


def test_discounted_payoff_limits(game_service, two_player_game):
    x = [0.2, 0.0]
    undiscounted = game_service.stationary_payoff(two_player_game, x)
    np.testing.assert_allclose(game_service.discounted_payoff(two_player_game, x, 0.0), undiscounted)
    # λ close to 1 weighs the running payoff r^∅ heavily
    near_one = game_service.discounted_payoff(two_player_game, x, 0.999)
    assert near_one[0] < undiscounted[0] + 1e-12


def test_discounted_payoff_rejects_bad_factor(game_service, two_player_game):
    with pytest.raises(ValueError):
        game_service.discounted_payoff(two_player_game, [0.1, 0.1], 1.0)


def test_deviation_gain_nonnegative_for_pure_profiles(game_service, two_player_game):
    for i in range(2):
        assert game_service.stationary_deviation_gain(two_player_game, [0.0, 0.0], i) >= 0.0


def test_auxiliary_game_replaces_stay_payoff(game_service, sec25_game):
    aux = game_service.auxiliary_game(sec25_game, [0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(aux.stay_payoff, [0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(aux.quit_alone(2), sec25_game.quit_alone(2))
    with pytest.raises(GameFormatError):
        game_service.auxiliary_game(sec25_game, [0.1])


def test_load_matrix_and_profile(game_service, fixtures_dir, tmp_path):
    matrix = game_service.load_matrix(fixtures_dir / "ex1_pos.json")
    assert matrix.shape == (3, 3)

    path = tmp_path / "profile.json"
    path.write_text(json.dumps({
        "kiloblocks": [{"z": [0.5, 0.5], "lambda": {"1": 0.1}, "block_len": 2}],
        "player_order": [1],
        "n_players": 2,
    }))
    profile = game_service.load_profile(path)
    assert profile.kiloblocks[0].intensity(1) == pytest.approx(0.1)

    path.write_text(json.dumps({"kiloblocks": [{"z": [0.7, 0.7], "block_len": 1}], "player_order": [1], "n_players": 1}))
    with pytest.raises(GameFormatError):
        game_service.load_profile(path)


def test_tolerance_override_is_kept():
    assert GameService(1e-6).tolerance == 1e-6
