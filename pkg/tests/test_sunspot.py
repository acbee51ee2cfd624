"""
Tests for anchor sequences, orbit approximation and profile assembly
"""
import numpy as np
import pytest

from app.core.exceptions import FixedPointDetected, PreconditionError
from app.services.evaluation import ProfileEvaluator
from app.services.geometry import FeasibleSetD
from app.services.sunspot import SunspotConstructor, approximate_orbit, block_length, sup_distance


@pytest.fixture(scope="module")
def constructor():
    return SunspotConstructor()


@pytest.fixture(scope="module")
def sequence(constructor, sec25_cls):
    return constructor.generate_sequence(sec25_cls, FeasibleSetD(sec25_cls.restricted), 0.1)


@pytest.mark.parametrize(
    "intensities,eps,expected",
    [
        ([0.1], 0.1, 2),
        ([0.05], 0.05, 2),
        ([0.5], 0.1, 7),
        ([], 0.1, 1),
        ([0.0, 0.01], 0.1, 1),
        ([0.1, 0.5], 0.1, 7),
    ],
)
def test_block_length(intensities, eps, expected):
    C = block_length(intensities, eps)
    assert C == expected
    assert all(1.0 - (1.0 - lam) ** (1.0 / C) < eps for lam in intensities)


def test_block_length_rejects_certain_quit():
    with pytest.raises(PreconditionError):
        block_length([1.0], 0.1)


def test_sup_distance():
    assert sup_distance([0.0, 1.0], [0.5, -1.0]) == 2.0
    assert sup_distance([], []) == 0.0


def test_orbit_of_translation():
    orbit = approximate_orbit(lambda x: x + 1.0, np.zeros(1), C=10.0, c=0.5)
    assert len(orbit.points) == 11
    assert orbit.drift_sum == pytest.approx(11.0)
    assert orbit.jump_sum == 0.0
    assert orbit.cycle_length is None


def test_orbit_unrolls_cycles():
    calls = []

    def flip(x):
        calls.append(x.copy())
        return 1.0 - x

    orbit = approximate_orbit(flip, np.zeros(1), C=5.0, c=0.5)
    assert orbit.cycle_length == 2
    assert len(calls) == 2
    assert len(orbit.points) == 6
    np.testing.assert_allclose([p[0] for p in orbit.points], [0, 1, 0, 1, 0, 1])


def test_orbit_detects_fixed_point():
    with pytest.raises(FixedPointDetected):
        approximate_orbit(lambda x: x, np.ones(2), C=1.0, c=0.1)


def _contracting_without_fixed_point(rate):
    def step(x):
        if x[0] == 0.5:
            return np.zeros(1)
        return 0.5 + (x - 0.5) * rate
    return step


@pytest.mark.parametrize("rate", [0.5, 0.8, 0.9, 0.99])
def test_orbit_jumps_to_limit_of_contraction(rate):
    orbit = approximate_orbit(_contracting_without_fixed_point(rate), np.zeros(1), C=1.2, c=0.05)
    assert orbit.limit_jumps >= 1
    assert orbit.jump_sum < 0.05
    assert orbit.drift_sum > 1.2
    assert any(p[0] == 0.5 for p in orbit.points)


def test_orbit_detects_fixed_point_at_limit():
    with pytest.raises(FixedPointDetected):
        approximate_orbit(lambda x: 0.5 + (x - 0.5) * 0.8, np.zeros(1), C=1.2, c=0.05)


def test_sequence_on_two_cycle(constructor, sequence):
    assert constructor.drift_target(4, 0.05) == pytest.approx(5040.0)
    assert sequence.C_target == pytest.approx(1320.0)
    assert sequence.cycle_length == 2
    assert sequence.jump_sum == pytest.approx(0.0, abs=1e-9)
    assert sequence.satisfies_targets()
    np.testing.assert_allclose(sequence.points[0], [0.0, 0.0, 0.0, 0.5], atol=1e-9)
    np.testing.assert_allclose(sequence.points[1], [0.0, 0.0, 0.5, 0.0], atol=1e-9)
    assert all(block.drift == pytest.approx(0.5) for block in sequence.blocks)


def test_sequence_report(sequence):
    report = sequence.to_report()
    assert report.length == sequence.length
    assert report.cycle_length == 2
    assert report.limit_jumps == 0


def test_assemble_profile_shares_kiloblocks(constructor, sequence, sec25_cls):
    profile = constructor.assemble_profile(sequence, sec25_cls, 0.1)
    assert len(profile.kiloblocks) == sequence.length
    assert len({id(kb) for kb in profile.kiloblocks}) == 2
    assert profile.player_order == [1, 2, 3, 4]
    assert profile.n_players == 4
    first = profile.kiloblocks[-1]
    assert set(first.lambda_) == {"1", "2", "4"}
    assert first.block_len == 2


def test_zero_lcp_game_has_no_sequence(constructor, classifier, zero_lcp_game):
    cls = classifier.classify_players(zero_lcp_game)
    with pytest.raises(PreconditionError):
        constructor.generate_sequence(cls, FeasibleSetD(cls.restricted), 0.05)


def test_invalid_eps(constructor, sec25_cls):
    with pytest.raises(PreconditionError):
        constructor.generate_sequence(sec25_cls, FeasibleSetD(sec25_cls.restricted), 0.0)


@pytest.mark.parametrize("seed", range(3))
def test_sequences_from_random_boundary_starts(constructor, classifier, cyclic_game, seed):
    game = cyclic_game(100 + seed)
    cls = classifier.classify_players(game)
    D = FeasibleSetD(cls.restricted)
    evaluator = ProfileEvaluator()
    eps = 0.2
    for start in [None] + D.sample_boundary(2, seed=seed):
        sequence = constructor.generate_sequence(cls, D, eps, start=start)
        assert sequence.satisfies_targets()
        assert all(D.boundary(y) for y in sequence.points)
        profile = constructor.assemble_profile(sequence, cls, eps)
        report = evaluator.verify_sunspot(profile, game, eps, anchor_value=cls.lift(sequence.blocks[-1].w))
        assert report.passed, report.failures
