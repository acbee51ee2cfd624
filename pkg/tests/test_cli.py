"""
Tests for the command line front end
"""
import io
import json

import pytest

from app import cli

SEC25_TARGET = "0.125,0.125,0.125,0.125"


def run(*argv):
    out = io.StringIO()
    code = cli.dispatch(list(argv), stdout=out)
    return code, json.loads(out.getvalue()), out.getvalue()


@pytest.fixture
def sec25(fixtures_dir):
    return str(fixtures_dir / "sec25.json")


def test_classify_envelope(sec25):
    code, payload, _ = run("classify", sec25)
    assert code == cli.EXIT_OK
    assert set(payload) == {"tool", "version", "command", "tolerance", "warnings", "report"}
    assert payload["command"] == "classify"
    assert payload["report"]["normal_set"] == [1, 2, 3, 4]
    assert "payoffs are stored divided by 4" in payload["warnings"]


def test_output_is_deterministic(sec25):
    assert run("classify", sec25)[2] == run("classify", sec25)[2]
    assert run("qtest", sec25, "--samples", "200")[2] == run("qtest", sec25, "--samples", "200")[2]


def test_lcp_command(fixtures_dir):
    matrix = fixtures_dir / "ex1_pos.json"
    code, payload, _ = run("lcp", "--matrix", str(matrix), "--q", "0,0,-1", "--exact")
    assert code == cli.EXIT_OK
    report = payload["report"]
    assert report["solvable"] is True
    assert sum(report["solution"]["z"]) == pytest.approx(1.0)
    assert report["solution"]["exact_z"] is not None


def test_lcp_length_mismatch(tmp_path):
    matrix = tmp_path / "m.json"
    matrix.write_text(json.dumps({"matrix": [[0, 1], [1, 0]]}))
    code, payload, _ = run("lcp", "--matrix", str(matrix), "--q", "0,0,1")
    assert code == cli.EXIT_INPUT_ERROR
    assert payload["report"]["type"] == "PreconditionError"


def test_qtest_on_matrix_file(fixtures_dir):
    code, payload, _ = run("qtest", "--matrix", str(fixtures_dir / "ex1_zero.json"))
    assert code == cli.EXIT_OK
    assert payload["report"]["verdict"] == "not_Q_with_witness"
    assert payload["report"]["method"] == "determinant_3x3"


def test_qtest_needs_input():
    code, _, _ = run("qtest")
    assert code == cli.EXIT_INPUT_ERROR


def test_stationary_zero_lcp(fixtures_dir):
    code, payload, _ = run("stationary", str(fixtures_dir / "zero_lcp.json"), "--eps", "0.05")
    assert code == cli.EXIT_OK
    assert payload["report"]["branch"] == "zero_lcp"
    assert payload["report"]["passed"] is True


def test_stationary_rejects_sunspot_game(sec25):
    code, payload, _ = run("stationary", sec25, "--eps", "0.05")
    assert code == cli.EXIT_INPUT_ERROR
    assert "error" in payload["report"]


def test_block_command(sec25):
    code, payload, _ = run("block", sec25, "--y", "0,0,0,0.5", "--eps", "0.05")
    assert code == cli.EXIT_OK
    assert payload["report"]["passed"] is True
    assert "lambda" in payload["report"]


def test_mmatrix_command(sec25):
    code, payload, _ = run("mmatrix", sec25, "--exact")
    assert code == cli.EXIT_OK
    assert payload["report"]["targets"][0]["j"] == 2
    assert payload["report"]["targets"][0]["w"] == [0.5, 0.0, 0.0, 0.0]


def test_sunspot_profile_round_trip(sec25, tmp_path):
    profile = tmp_path / "profile.json"
    code, payload, _ = run("sunspot", sec25, "--eps", "0.05", "--target", SEC25_TARGET, "--write-profile", str(profile))
    assert code == cli.EXIT_OK
    assert payload["report"]["path"] == "m_matrix"
    assert payload["report"]["evaluation"]["passed"] is True
    assert profile.exists()

    code, payload, _ = run("verify", sec25, "--profile", str(profile), "--eps", "0.05")
    assert code == cli.EXIT_OK
    assert payload["report"]["termination_prob"] == pytest.approx(1.0)

    code, payload, _ = run("simulate", sec25, "--profile", str(profile), "--seed", "5", "--runs", "2000")
    assert code == cli.EXIT_OK
    assert payload["report"]["runs"] == 2000
    assert payload["report"]["truncated"] == 0


@pytest.mark.parametrize("argv", [["nope"], ["classify"], ["sunspot", "game.json"], ["lcp", "--matrix", "m.json", "--q", "a,b"]])
def test_usage_errors(argv):
    code, payload, _ = run(*argv)
    assert code == cli.EXIT_INPUT_ERROR
    assert payload["command"] == "usage"


def test_missing_file(tmp_path):
    code, payload, _ = run("classify", str(tmp_path / "missing.json"))
    assert code == cli.EXIT_INPUT_ERROR
    assert payload["report"]["type"] == "GameFormatError"
