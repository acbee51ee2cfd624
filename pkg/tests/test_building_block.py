"""
Tests for building-block construction and the block checker
"""
import numpy as np
import pytest

from app.core.exceptions import PreconditionError
from app.models.sunspot import BlockCase
from app.services.building_block import BlockBuilder, BuildingBlock
from app.services.classification import PlayerClassifier
from app.services.geometry import FeasibleSetD

START = np.array([0.0, 0.0, 0.0, 0.5])


@pytest.fixture
def builder(sec25_cls):
    return BlockBuilder(FeasibleSetD(sec25_cls.restricted))


def explicit_block(R, eps):
    """Hand-made block at (0, 0, 0, ½) with players 1, 2 and 4 quitting"""
    w = np.array([0.0, 0.0, 0.5, 0.0])
    z = np.array([eps, 1.0, 1.0, 0.0, 4.0]) / (6.0 + eps)
    return BuildingBlock(
        y=START.copy(),
        w=w,
        w_i=(1.0 - eps) * w[None, :] + eps * R.T,
        z=z,
        lam=np.full(4, eps),
        eps=eps,
        case=BlockCase.SUPPLIED,
    )


@pytest.mark.parametrize("eps", [0.1, 0.05, 0.01])
def test_explicit_block_passes_checker(builder, sec25_cls, eps):
    block = explicit_block(sec25_cls.restricted, eps)
    np.testing.assert_allclose(block.w_i[0], [0.0, eps, 0.5 - 0.75 * eps, -0.25 * eps], atol=1e-12)
    check = builder.check_block(block)
    assert check.passed, check.failed
    assert check.residuals["F2"] == pytest.approx(-0.25 * eps)


def test_checker_reports_each_failure(builder, sec25_cls):
    block = explicit_block(sec25_cls.restricted, 0.05)
    block.z = np.array([0.5, 0.5, 0.0, 0.0, 0.0])
    check = builder.check_block(block)
    assert not check.passed
    assert "F3" in check.failed
    assert "F1" not in check.failed


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_built_block_at_start(builder, eps):
    block = builder.build_block(START, eps)
    assert builder.check_block(block).passed
    np.testing.assert_allclose(block.w, [0.0, 0.0, 0.5, 0.0], atol=1e-8)
    assert block.z[0] == pytest.approx(eps / (6.0 + eps), rel=1e-6)
    assert block.support() == (0, 1, 3)
    assert block.drift == pytest.approx(0.5)


def test_blocks_are_cached(builder):
    assert builder.build_block(START, 0.05) is builder.build_block(START + 1e-14, 0.05)


def test_report_uses_lambda_alias(builder):
    report = builder.report(builder.build_block(START, 0.05))
    dumped = report.model_dump(by_alias=True)
    assert "lambda" in dumped
    assert dumped["passed"] is True
    assert dumped["conditions"]["F5"] is True


def test_anchor_must_be_on_boundary(builder):
    with pytest.raises(PreconditionError):
        builder.build_block(np.full(4, 0.125), 0.05)
    with pytest.raises(PreconditionError):
        builder.build_block(START, 1.5)


def test_random_boundary_anchors(builder):
    for y in builder.D.sample_boundary(15, seed=7):
        block = builder.build_block(y, 0.05)
        check = builder.check_block(block)
        assert check.passed, (y, check.failed)


def test_zero_lcp_game_is_rejected(zero_lcp_game):
    cls = PlayerClassifier().classify_players(zero_lcp_game)
    D = FeasibleSetD(cls.restricted)
    builder = BlockBuilder(D)
    with pytest.raises(PreconditionError):
        builder.build_block([0.0, 0.0, 0.25], 0.05)
