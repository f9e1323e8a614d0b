"""HTTP server: route contracts, CLI byte parity, read-only guarantee."""

import json

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from smolt import __version__
from smolt.cli import cli
from smolt.server import create_app
from smolt.serving import verify_readonly_snapshot

HORIZON = 6
SEED = 2
N_DRAWS = 40


@pytest.fixture(scope="module")
def policies_file(tmp_path_factory, pipeline_run):
    nf = len(pipeline_run.summary["fisheries"])
    p = tmp_path_factory.mktemp("pol") / "policies.json"
    p.write_text(json.dumps({"policies": [
        {"name": "half", "multiplier": [0.5] * nf},
    ]}))
    return p


@pytest.fixture(scope="module")
def client(pipeline_run, policies_file):
    app = create_app(pipeline_run.out_dir, seed=SEED, n_draws=N_DRAWS,
                     horizon=HORIZON, policies_file=policies_file)
    with TestClient(app) as c:
        yield c


class TestBasicRoutes:
    def test_health(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json() == {"schema": "v1", "status": "ok",
                            "version": __version__}

    def test_stocks_lists_everything(self, client, pipeline_run):
        doc = client.get("/stocks").json()
        assert doc["stocks"] == pipeline_run.summary["stocks"]
        assert doc["fisheries"] == pipeline_run.summary["fisheries"]
        assert doc["policies"] == ["half", "moratorium", "status_quo"]

    def test_summary_is_exact_pipeline_bytes(self, client, pipeline_run):
        r = client.get("/posterior/summary")
        disk = (pipeline_run.out_dir / "summary.json").read_bytes()
        assert r.content == disk


class TestSmoltsRoute:
    def test_full_series(self, client, pipeline_run):
        doc = client.get("/posterior/smolts").json()
        assert set(doc["stocks"]) == set(pipeline_run.summary["stocks"])

    def test_filters(self, client, pipeline_run):
        sid = pipeline_run.summary["stocks"][0]
        doc = client.get("/posterior/smolts",
                         params={"stock": sid,
                                 "quantiles": "0.05,0.95"}).json()
        assert list(doc["stocks"]) == [sid]
        assert set(doc["stocks"][sid]) == {"years", "q05", "q95"}

    def test_unknown_stock_404(self, client):
        r = client.get("/posterior/smolts", params={"stock": "atlantis"})
        assert r.status_code == 404
        assert "atlantis" in r.json()["detail"]

    def test_bad_quantile_400_names_field(self, client):
        r = client.get("/posterior/smolts", params={"quantiles": "0.33"})
        assert r.status_code == 400
        assert r.json()["detail"][0]["field"] == "quantiles"


class TestProjectRoute:
    def test_idempotent_posts(self, client):
        body = {"name": "moratorium", "multiplier": [0.0, 0.0]}
        nf = len(client.get("/stocks").json()["fisheries"])
        body["multiplier"] = [0.0] * nf
        r1 = client.post("/project", json=body)
        r2 = client.post("/project", json=body)
        assert r1.status_code == 200
        assert r1.content == r2.content
        assert r1.json()["policy"] == "moratorium"

    def test_matches_cli_bytes(self, client, pipeline_run, tmp_path,
                               policies_file):
        nf = len(pipeline_run.summary["fisheries"])
        body = {"name": "half", "multiplier": [0.5] * nf}
        http = client.post("/project", json=body).content
        res = CliRunner().invoke(cli, [
            "project", "--results", str(pipeline_run.out_dir),
            "--policy-file", str(policies_file), "--name", "half",
            "--horizon", str(HORIZON), "--seed", str(SEED),
            "--draws", str(N_DRAWS)])
        assert res.exit_code == 0, res.output
        assert res.stdout.encode("utf-8") == http

    def test_malformed_policy_400(self, client):
        r = client.post("/project", json={"name": "x"})
        assert r.status_code == 400
        assert r.json()["detail"][0]["field"] == "policy"

    def test_wrong_width_400(self, client):
        r = client.post("/project", json={"name": "x",
                                          "multiplier": [1.0] * 99})
        assert r.status_code == 400
        assert "multiplier" in r.json()["detail"][0]["field"]


class TestCompareRoute:
    def test_compare_builtin_and_file(self, client):
        r = client.get("/policies/compare",
                       params={"ids": "status_quo,half"})
        assert r.status_code == 200
        doc = r.json()
        assert set(doc["policies"]) == {"status_quo", "half"}
        assert doc["schema"] == "v1"

    def test_matches_cli_bytes(self, client, pipeline_run, policies_file):
        http = client.get("/policies/compare",
                          params={"ids": "status_quo,half"}).content
        res = CliRunner().invoke(cli, [
            "compare", "--results", str(pipeline_run.out_dir),
            "--policy-file", str(policies_file),
            "--ids", "status_quo,half",
            "--horizon", str(HORIZON), "--seed", str(SEED),
            "--draws", str(N_DRAWS)])
        assert res.exit_code == 0, res.output
        assert res.stdout.encode("utf-8") == http

    def test_unknown_policy_404(self, client):
        r = client.get("/policies/compare", params={"ids": "ghost"})
        assert r.status_code == 404
        assert "ghost" in r.json()["detail"]

    def test_empty_ids_400(self, client):
        r = client.get("/policies/compare", params={"ids": ","})
        assert r.status_code == 400


class TestReadOnly:
    def test_no_request_writes_to_results_dir(self, pipeline_run,
                                              policies_file):
        before = verify_readonly_snapshot(pipeline_run.out_dir)
        app = create_app(pipeline_run.out_dir, seed=SEED, n_draws=N_DRAWS,
                         horizon=HORIZON, policies_file=policies_file)
        with TestClient(app) as c:
            nf = len(c.get("/stocks").json()["fisheries"])
            c.get("/posterior/summary")
            c.get("/posterior/smolts")
            c.post("/project", json={"name": "q",
                                     "multiplier": [0.7] * nf})
            c.get("/policies/compare", params={"ids": "status_quo,half"})
        assert verify_readonly_snapshot(pipeline_run.out_dir) == before
