"""HTTP service endpoints, exercised in-process through the ASGI app."""

import asyncio
import math

import httpx
import pytest

from sca_ising import __version__
from sca_ising.jsonio import validate_output
from sca_ising.service.app import create_app

app = create_app()

FERRO2 = {"n_vertices": 2, "edges": [[0, 1, 1.0]]}
PATH3 = {"n_vertices": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0]], "fields": [1.0, 0.0, 0.0]}
ONE_SITE = {"n_vertices": 1, "fields": [1.0]}


def call(method: str, path: str, body: dict | None = None) -> httpx.Response:
    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://svc") as client:
            if method == "get":
                return await client.get(path)
            return await client.post(path, json=body)

    return asyncio.run(go())


class TestHealth:
    def test_healthz(self):
        response = call("get", "/healthz")
        assert response.status_code == 200
        assert response.json() == {"status": "ok", "version": __version__}


class TestBounds:
    def test_feasible_plan(self):
        response = call("post", "/bounds", {"model": FERRO2, "beta": 0.05, "epsilon": 2.5})
        assert response.status_code == 200
        body = response.json()
        validate_output("plan", body)
        assert body["feasible"] is not None
        low, high = body["feasible"]
        assert body["q_recommended"] == pytest.approx(0.5 * (low + high))

    def test_infeasible_plan(self):
        response = call("post", "/bounds", {"model": FERRO2, "beta": 2.0, "epsilon": 2.5})
        assert response.status_code == 200
        body = response.json()
        assert body["feasible"] is None
        assert body["q_recommended"] is None

    def test_degenerate_model_rejected(self):
        response = call("post", "/bounds", {"model": {"n_vertices": 2}, "beta": 0.5})
        assert response.status_code == 400
        assert "v = 0" in response.json()["detail"]

    def test_missing_model(self):
        response = call("post", "/bounds", {"beta": 0.5})
        assert response.status_code == 422


class TestVerify:
    def test_exact_range_default(self):
        response = call(
            "post", "/verify", {"model": ONE_SITE, "beta": 1.0, "q": 2.0, "epsilon": 0.5}
        )
        assert response.status_code == 200
        body = response.json()
        validate_output("verify", body)
        assert body["r_h_source"] == "exact"
        assert body["r_h"] == 2.0
        assert body["constants"]["r_h_exact"] == 2.0
        assert body["closeness"]["is_close"] is True
        assert body["closeness"]["worst_pair"] is None
        assert body["detailed_balance"]["sca"] < 1e-12
        assert body["detailed_balance"]["glauber"] < 1e-12
        assert body["stationarity"]["sca"] < 1e-12
        assert 0.0 <= body["tv_distance"] <= 1.0

    def test_sqrt_v_range(self):
        response = call(
            "post",
            "/verify",
            {"model": ONE_SITE, "beta": 1.0, "q": 2.0, "r_h_mode": "sqrt-v"},
        )
        body = response.json()
        assert body["r_h_source"] == "sqrt-v"
        assert body["r_h"] == 1.0
        assert body["constants"]["r_h_exact"] is None

    def test_matrix_cap_skips_kernels(self):
        response = call(
            "post",
            "/verify",
            {"model": PATH3, "beta": 0.5, "q": 1.0, "matrix_cap": 2},
        )
        body = response.json()
        assert body["detailed_balance"] is None
        assert body["stationarity"] is None
        assert any("matrix cap of 2" in note for note in body["notes"])
        validate_output("verify", body)

    def test_enum_cap_rejects(self):
        response = call(
            "post", "/verify", {"model": PATH3, "beta": 0.5, "q": 1.0, "enum_cap": 2}
        )
        assert response.status_code == 400
        assert response.json()["error"] == "CapacityError"

    def test_failing_closeness_reports_pair(self):
        # uniform stationary law at beta=0 cannot track a nonconstant H
        response = call(
            "post",
            "/verify",
            {"model": FERRO2, "beta": 0.0, "q": 1.0, "epsilon": 0.5},
        )
        body = response.json()
        assert body["closeness"]["is_close"] is False
        assert body["closeness"]["worst_pair"] is not None
        assert body["closeness"]["margin"] > 0.0


class TestFlips:
    def test_sampled_mode(self):
        request = {"model": FERRO2, "beta": 0.5, "q": 0.1, "samples": 32, "seed": 5}
        response = call("post", "/flips", request)
        assert response.status_code == 200
        body = response.json()
        validate_output("flips", body)
        assert body["mode"] == "sampled"
        assert body["n_configurations"] == 32
        assert body["seed"] == 5
        again = call("post", "/flips", request).json()
        assert again == body

    def test_exhaustive_mode(self):
        response = call(
            "post", "/flips", {"model": PATH3, "beta": 0.5, "q": 0.1, "exhaustive": True}
        )
        body = response.json()
        assert body["mode"] == "exhaustive"
        assert body["n_configurations"] == 8
        assert body["seed"] is None

    def test_infinite_temperature_means(self):
        response = call(
            "post", "/flips", {"model": PATH3, "beta": 0.0, "q": 0.0, "exhaustive": True}
        )
        body = response.json()
        assert body["glauber"]["mean"] == pytest.approx(0.5, rel=1e-14)
        assert body["glauber"]["mean_per_sweep"] == pytest.approx(1.5, rel=1e-14)
        assert body["sca"]["mean"] == pytest.approx(1.5, rel=1e-14)
        assert body["dominance"]["holds_everywhere"] is True
        assert body["dominance"]["min_gap"] == pytest.approx(1.0, rel=1e-12)
        assert body["bound_verdict"] == "dominant"

    def test_oversized_pinning_not_guaranteed(self):
        model = {"n_vertices": 4, "edges": [[0, 1, 1.0]]}
        response = call(
            "post", "/flips", {"model": model, "beta": 0.5, "q": 10.0, "exhaustive": True}
        )
        body = response.json()
        assert body["bound_verdict"] == "not-guaranteed"
        assert body["q"] == 10.0
        assert body["q_upper_flips"] < 10.0

    def test_envelope_at_zero_pinning(self):
        response = call(
            "post", "/flips", {"model": FERRO2, "beta": 1.0, "q": 0.0, "exhaustive": True}
        )
        body = response.json()
        # eps_x == 1 when q == 0, so the envelope is exactly n
        assert body["epsilon_envelope"]["min"] == pytest.approx(2.0, rel=1e-14)
        assert body["epsilon_envelope"]["max"] == pytest.approx(2.0, rel=1e-14)

    def test_bad_samples(self):
        response = call("post", "/flips", {"model": FERRO2, "beta": 0.5, "q": 0.1, "samples": 0})
        assert response.status_code == 400


class TestSearch:
    def test_explicit_q(self):
        response = call(
            "post",
            "/search",
            {"model": FERRO2, "beta": 1.0, "q": 0.5, "n_steps": 10, "n_chains": 20, "seed": 3},
        )
        assert response.status_code == 200
        body = response.json()
        assert body["plan"] is None
        assert body["traces"] is None
        assert body["resolved"]["q"] == 0.5
        assert body["resolved"]["auto_q"] is False
        profile = body["profile"]
        assert sum(profile["counts"].values()) == 20
        assert profile["best"]["energy"] == -1.0
        body.pop("traces")
        validate_output("search", body)

    def test_auto_q_feasible(self):
        response = call(
            "post",
            "/search",
            {
                "model": FERRO2,
                "beta": 0.05,
                "auto_q": True,
                "epsilon": 2.5,
                "n_steps": 5,
                "n_chains": 8,
            },
        )
        body = response.json()
        assert body["plan"]["feasible"] is not None
        assert body["resolved"]["q"] == pytest.approx(body["plan"]["q_recommended"])
        assert body["profile"] is not None

    def test_auto_q_infeasible(self):
        response = call(
            "post",
            "/search",
            {
                "model": FERRO2,
                "beta": 5.0,
                "auto_q": True,
                "epsilon": 2.5,
                "n_steps": 5,
                "n_chains": 8,
            },
        )
        assert response.status_code == 200
        body = response.json()
        assert body["profile"] is None
        assert body["traces"] is None
        assert body["resolved"]["q"] is None
        assert body["plan"]["feasible"] is None
        body.pop("traces")
        validate_output("search", body)

    def test_record_trace(self):
        response = call(
            "post",
            "/search",
            {
                "model": FERRO2,
                "beta": 0.5,
                "q": 0.2,
                "n_steps": 4,
                "n_chains": 3,
                "record_trace": True,
            },
        )
        traces = response.json()["traces"]
        assert len(traces) == 3 * 5
        chains = {row[0] for row in traces}
        assert chains == {0, 1, 2}

    def test_schedule_run(self):
        response = call(
            "post",
            "/search",
            {
                "model": PATH3,
                "schedule": [[0, 2.0], [3, 0.5]],
                "q": 0.2,
                "n_steps": 6,
                "n_chains": 4,
            },
        )
        body = response.json()
        assert body["resolved"]["beta"] == 2.0
        assert body["resolved"]["schedule"] == [[0, 2.0], [3, 0.5]]

    @pytest.mark.parametrize(
        "payload,fragment",
        [
            ({"beta": 1.0, "schedule": [[0, 1.0]], "q": 0.5}, "not both"),
            ({"schedule": [[0, 1.0]], "auto_q": True}, "single beta"),
            ({"beta": 1.0, "q": 0.5, "auto_q": True}, "not both"),
            ({"q": 0.5}, "beta is required"),
            ({"beta": 1.0}, "q is required"),
        ],
    )
    def test_parameter_exclusivity(self, payload, fragment):
        body = {"model": FERRO2, "n_steps": 2, "n_chains": 2}
        body.update(payload)
        response = call("post", "/search", body)
        assert response.status_code == 400
        assert fragment in response.json()["detail"]

    def test_glauber_kernel(self):
        response = call(
            "post",
            "/search",
            {
                "model": FERRO2,
                "beta": 1.0,
                "q": 0.0,
                "kernel": "glauber",
                "n_steps": 10,
                "n_chains": 6,
            },
        )
        assert response.json()["profile"]["kernel"] == "glauber"


class TestExact:
    def test_gibbs_only(self):
        response = call("post", "/exact", {"model": FERRO2, "beta": 1.0})
        assert response.status_code == 200
        body = response.json()
        validate_output("exact", body)
        assert body["sca"] is None
        assert body["tv_distance"] is None
        assert len(body["gibbs"]["log_probs"]) == 4
        assert body["ground_states"] == {"energy": -1.0, "indices": [0, 3]}

    def test_with_pinning(self):
        response = call("post", "/exact", {"model": FERRO2, "beta": 1.0, "q": 1.0})
        body = response.json()
        validate_output("exact", body)
        assert body["sca"] is not None
        assert 0.0 <= body["tv_distance"] <= 1.0
        probs = [math.exp(v) for v in body["sca"]["log_probs"]]
        assert sum(probs) == pytest.approx(1.0, abs=1e-10)

    def test_invalid_model(self):
        bad = {"n_vertices": 2, "edges": [[0, 0, 1.0]]}
        response = call("post", "/exact", {"model": bad, "beta": 1.0})
        assert response.status_code == 400
        assert "self-coupling" in response.json()["detail"]
