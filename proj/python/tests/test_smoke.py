import json

import numpy as np
import pytest

import pampc

HOVER = np.array([0, 0, 1.5, 0, 0, 0, 1, 0, 0, 0], dtype=float)


def short_config(kind="hover", duration=0.5):
    cfg = json.loads(pampc.default_config(kind))
    cfg["scenario"]["duration"] = duration
    return json.dumps(cfg)


def test_hover_is_equilibrium():
    x = pampc.rk4_step(HOVER, np.array([9.81, 0, 0, 0]), 0.1)
    np.testing.assert_allclose(x, HOVER, atol=1e-12)


def test_step_jacobians_match_differences():
    rng = np.random.default_rng(3)
    q = rng.normal(size=4)
    x = np.concatenate([rng.uniform(-1, 1, 6), q / np.linalg.norm(q)])
    u = np.array([11.0, 0.4, -0.3, 0.2])
    _, A, B = pampc.rk4_step_with_jacobians(x, u, 0.05)
    h = 1e-6
    # Position/velocity columns only: the stepped output renormalizes q.
    for j in range(6):
        e = np.zeros(10)
        e[j] = h
        col = (pampc.rk4_step(x + e, u, 0.05) - pampc.rk4_step(x - e, u, 0.05)) / (2 * h)
        np.testing.assert_allclose(A[:6, j], col[:6], atol=1e-6)
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        col = (pampc.rk4_step(x, u + e, 0.05) - pampc.rk4_step(x, u - e, 0.05)) / (2 * h)
        np.testing.assert_allclose(B[:6, j], col[:6], atol=1e-6)


def test_pixel_of_point_on_optical_axis_is_centered():
    # Default camera: 0.1 m forward on body x, pitched 45 deg down.
    cam = HOVER[:3] + np.array([0.1, 0, 0])
    target = cam + 2.0 * np.array([np.sqrt(0.5), 0, -np.sqrt(0.5)])
    z = pampc.perception_state(HOVER, np.array([9.81, 0, 0, 0]), target)
    np.testing.assert_allclose(z, np.zeros(4), atol=1e-9)


def test_qp_satisfies_kkt():
    rng = np.random.default_rng(5)
    n = 12
    M = rng.normal(size=(n, n))
    H = M @ M.T + n * np.eye(n)
    g = 10 * rng.normal(size=n)
    lb, ub = -np.ones(n), np.ones(n)
    x, status, _ = pampc.solve_qp(H, g, lb, ub)
    assert status == "Optimal"
    grad = H @ x + g
    step = np.clip(x - grad, lb, ub) - x
    assert np.max(np.abs(step)) < 1e-9


def test_run_returns_log_and_metrics():
    out = pampc.run(short_config("hover"))
    log, metrics = out["log"], out["metrics"]
    assert log["state"].shape == (51, pampc.STATE_DIM)
    assert log["input"].shape == (51, pampc.INPUT_DIM)
    assert metrics["bound_violations"] == 0
    assert np.max(np.abs(log["state"][:, :3] - HOVER[:3])) < 1e-3


def test_csv_round_trip(tmp_path):
    out = pampc.run_to_directory(short_config("circle"), str(tmp_path))
    back = pampc.read_log_csv(str(tmp_path / "log.csv"))
    np.testing.assert_allclose(back["state"], out["log"]["state"], rtol=1e-15, atol=0)
    np.testing.assert_allclose(back["t"], out["log"]["t"])
    assert json.loads((tmp_path / "metrics.json").read_text())["bound_violations"] == 0


def test_invalid_config_raises():
    with pytest.raises(pampc.ConfigInvalid, match="ocp.horizon_steps"):
        pampc.run(short_config(), ["ocp.horizon_steps=1"])
    with pytest.raises(pampc.ConfigInvalid):
        pampc.resolve_config('{"version": 1, "no_such_key": 3}')


def test_override_changes_resolved_config():
    cfg = pampc.load_config(pampc.resolve_config(short_config("circle"), ["scenario.circle.speed=1.5"]))
    assert cfg["scenario"]["circle"]["speed"] == 1.5


def test_verify_and_corrupt_hook():
    assert all(r["passed"] for r in pampc.verify())
    bad = {r["name"]: r["passed"] for r in pampc.verify(corrupt_jacobian=True)}
    assert not bad["dynamics_jacobians"]
