"""
Tests for the HTTP API (health, fairness audit, inner solve).
"""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from app import app
from config import APIConfig, __version__


@pytest.fixture
def client(monkeypatch) -> TestClient:
    monkeypatch.setattr(APIConfig, "API_KEY", "")
    with TestClient(app) as test_client:
        yield test_client


def test_root_and_health(client):
    root = client.get("/").json()
    assert root["docs"] == "/docs"
    assert "/inner-solve" in root["endpoints"]
    response = client.get("/api/health")
    assert response.status_code == 200
    assert response.json() == {"status": "healthy", "version": __version__}


def test_audit_returns_gaps_and_counts(client):
    response = client.post("/api/audit", json={
        "preds": [1, 0, 0, 0],
        "labels": [0, 1, 0, 1],
        "sensitive": [0, 0, 1, 1],
    })
    assert response.status_code == 200
    body = response.json()
    assert body["independence"] == pytest.approx(0.5)
    assert body["sufficiency_yhat1"] is None
    assert body["total"] == 4
    assert body["counts"]["n_y0_yhat1_s0"] == 1
    assert sum(body["counts"].values()) == 4


def test_audit_strict_mode_is_a_client_error(client):
    response = client.post("/api/audit", json={
        "preds": [1, 0], "labels": [1, 0], "sensitive": [0, 0], "strict": True,
    })
    assert response.status_code == 422
    body = response.json()
    assert body["code"] == "VALIDATION_ERROR"
    assert "ind" in body["detail"]


@pytest.mark.parametrize(
    "payload",
    [
        {"preds": [1, 0], "labels": [1], "sensitive": [0, 1]},
        {"preds": [2], "labels": [1], "sensitive": [0]},
        {"preds": [], "labels": [], "sensitive": []},
    ],
)
def test_audit_rejects_malformed_input(client, payload):
    assert client.post("/api/audit", json=payload).status_code == 422


def test_inner_solve_trs_matches_closed_form(client):
    response = client.post("/api/inner-solve", json={
        "w": [3.0, 4.0], "b": 0.0, "x": [0.0, 0.0], "y": 0, "radius": 0.1,
    })
    assert response.status_code == 200
    body = response.json()
    assert body["solver"] == "TRS"
    np.testing.assert_allclose(body["delta"], body["exact_delta"], atol=1e-7)
    np.testing.assert_allclose(body["delta"], [0.06, 0.08], atol=1e-7)
    assert body["lam"] == pytest.approx(body["exact_lam"], rel=1e-6)
    assert body["boundary_active"]
    assert body["perturbed_loss"] > body["loss"]
    assert body["kkt"]["primal"] <= 1e-9


@pytest.mark.parametrize("solver", ["PGD", "RANDOM"])
def test_inner_solve_other_solvers_stay_in_the_ball(client, solver):
    response = client.post("/api/inner-solve", json={
        "w": [1.0, -2.0], "b": 0.3, "x": [0.4, 0.6], "y": 1, "radius": 0.2, "solver": solver, "seed": 5,
    })
    assert response.status_code == 200
    body = response.json()
    assert body["solver"] == solver
    assert body["delta_norm"] <= 0.2 + 1e-12
    np.testing.assert_allclose(np.subtract(body["perturbed"], [0.4, 0.6]), body["delta"], atol=1e-15)


@pytest.mark.parametrize(
    "payload",
    [
        {"w": [1.0], "x": [0.1, 0.2], "y": 0, "radius": 0.1},
        {"w": [1.0], "x": [0.1], "y": 0, "radius": 0.0},
        {"w": [1.0], "x": [0.1], "y": 0, "radius": 0.1, "solver": "NONE"},
        {"w": [1.0], "x": [0.1], "y": 3, "radius": 0.1},
    ],
)
def test_inner_solve_rejects_malformed_input(client, payload):
    assert client.post("/api/inner-solve", json=payload).status_code == 422


def test_api_key_is_enforced_when_configured(client, monkeypatch):
    monkeypatch.setattr(APIConfig, "API_KEY", "secret")
    payload = {"preds": [1, 0], "labels": [1, 0], "sensitive": [0, 1]}
    assert client.post("/api/audit", json=payload).status_code == 401
    assert client.post("/api/audit", json=payload, headers={"X-API-Key": "wrong"}).status_code == 403
    assert client.post("/api/audit", json=payload, headers={"X-API-Key": "secret"}).status_code == 200
    assert client.get("/api/health").status_code == 200
