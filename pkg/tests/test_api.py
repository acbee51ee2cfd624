"""
Tests for the HTTP API
"""
import json

import httpx
import pytest
import pytest_asyncio

from app.main import app


@pytest.fixture
def sec25_body(fixtures_dir):
    return json.loads((fixtures_dir / "sec25.json").read_text())


@pytest_asyncio.fixture
async def client():
    async with httpx.AsyncClient(transport=httpx.ASGITransport(app=app), base_url="http://test") as c:
        yield c


@pytest.mark.asyncio
async def test_root_and_health(client):
    response = await client.get("/")
    assert response.status_code == 200
    assert response.json()["health"] == "/api/v1/health"

    response = await client.get("/api/v1/health")
    assert response.json()["status"] == "healthy"

    response = await client.get("/api/v1/health/detailed")
    assert "numerics" in response.json()


@pytest.mark.asyncio
async def test_classify(client, sec25_body):
    response = await client.post("/api/v1/games/classify", json={"game": sec25_body})
    assert response.status_code == 200
    assert response.json()["abnormal"] == []


@pytest.mark.asyncio
async def test_bad_game_is_rejected(client):
    body = {"game": {"players": 2, "payoffs": {"3": [0.0, 0.0]}}}
    response = await client.post("/api/v1/games/classify", json=body)
    assert response.status_code == 422


@pytest.mark.asyncio
async def test_stationary_for_sunspot_game_is_400(client, sec25_body):
    response = await client.post("/api/v1/games/stationary", json={"game": sec25_body, "eps": 0.1})
    assert response.status_code == 400


@pytest.mark.asyncio
async def test_lcp_solve(client):
    body = {"matrix": [[0, 2, -1], [-1, 0, 2], [2, -1, 0]], "q": [0, 0, -1]}
    response = await client.post("/api/v1/lcp/solve", json=body)
    assert response.status_code == 200
    assert response.json()["solvable"] is True


@pytest.mark.asyncio
async def test_m_matrix(client, sec25_body):
    response = await client.post("/api/v1/lcp/mmatrix", json={"game": sec25_body})
    assert response.status_code == 200
    assert response.json()["passed"] is True


@pytest.mark.asyncio
async def test_sunspot_construct_with_target(client, sec25_body):
    body = {"game": sec25_body, "eps": 0.05, "target": [0.125, 0.125, 0.125, 0.125]}
    response = await client.post("/api/v1/sunspot/construct", json=body)
    assert response.status_code == 200
    report = response.json()
    assert report["path"] == "m_matrix"
    assert report["evaluation"]["passed"] is True

    verify = {"game": sec25_body, "profile": report["profile"], "eps": 0.05}
    response = await client.post("/api/v1/sunspot/verify", json=verify)
    assert response.status_code == 200
    assert response.json()["passed"] is True
