"""Desk-scale acceptance gates.

Each criterion is one test that records a single PASS/FAIL line with the
measured values and the gates they were held to; conftest prints the
collected lines after the run. The medium-demo posterior
(4 stocks x 25 years, 4 chains x 20000 iterations) is fitted once per
session and shared by the recovery, shrinkage, decision, and parity
criteria; its wall time is charged against each criterion that depends
on it.
"""

import json
import math
import time
from types import SimpleNamespace

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from smolt.cli import cli
from smolt.data import save_dataset
from smolt.decisions import Policy, compare_policies
from smolt.dynamics import (bh_recruitment, eggs_from_spawners,
                            spawners_from_sea, survival_kernel)
from smolt.likelihoods import expected_catch
from smolt.mcmc import Block, ess, run_chain
from smolt.pipeline import PipelineConfig, rerun_from_manifest, run_pipeline
from smolt.serving import load_store, projection_payload
from smolt.server import create_app
from smolt.simulate import make_demo


def _record(request, line):
    lines = getattr(request.config, "_acceptance_lines", None)
    if lines is None:
        lines = request.config._acceptance_lines = []
    lines.append(line)


@pytest.fixture()
def verdict(request):
    """Record one PASS/FAIL line; conftest prints them after the run."""
    def _v(num, ok, detail):
        line = (f"acceptance criterion {num}: "
                f"{'PASS' if ok else 'FAIL'} ({detail})")
        _record(request, line)
        print(line)
        return line
    return _v


@pytest.fixture(scope="module")
def medium(tmp_path_factory, request):
    root = tmp_path_factory.mktemp("medium")
    dataset, truth = make_demo("medium", seed=5)
    save_dataset(dataset, root / "data")
    t0 = time.time()
    result = run_pipeline(PipelineConfig(
        data_dir=str(root / "data"), out_dir=str(root / "out"),
        seed=42, n_chains=4, n_iter=20000, warmup=10000, thin=5,
        keep_draws=2000))
    elapsed = time.time() - t0
    _record(request, f"acceptance fixture: medium pipeline fitted in "
                     f"{elapsed:.0f} s (4 chains x 20000 iterations)")
    return SimpleNamespace(result=result, truth=truth, elapsed=elapsed,
                           out_dir=result.out_dir)


def test_criterion_1_kernel_oracles(verdict):
    """Vectorized kernels against straight-line reimplementations:
    1e-12 relative on 1e4 random inputs, under 10 s."""
    t0 = time.time()
    rng = np.random.default_rng(101)
    n = 10_000
    worst = 0.0

    eggs = rng.uniform(1e3, 1e9, n)
    alpha = rng.uniform(1e2, 1e6, n)
    beta = rng.uniform(1e-8, 1e-3, n)
    got = bh_recruitment(eggs, alpha, beta)
    want = np.array([eggs[k] / (alpha[k] + beta[k] * eggs[k])
                     for k in range(n)])
    worst = max(worst, float(np.max(np.abs(got - want) / np.abs(want))))

    pop = rng.uniform(1.0, 1e7, n)
    f = rng.uniform(0.0, 1.5, n)
    m = rng.uniform(0.01, 0.6, n)
    eps = rng.lognormal(0.0, 0.3, n)
    got = survival_kernel(pop, f, m, eps)
    want = np.array([pop[k] * math.exp(-f[k] - m[k]) * eps[k]
                     for k in range(n)])
    worst = max(worst, float(np.max(np.abs(got - want) / np.abs(want))))

    mat = rng.uniform(0.0, 1.0, n)
    got = spawners_from_sea(pop, mat, f, m, eps)
    want = np.array([mat[k] * pop[k] * math.exp(-f[k] - m[k]) * eps[k]
                     for k in range(n)])
    nz = want != 0
    worst = max(worst, float(np.max(
        np.abs(got[nz] - want[nz]) / np.abs(want[nz]))))

    na = 4
    sp = rng.uniform(0.0, 1e5, (n, na))
    fec = rng.uniform(1e3, 2e4, na)
    got = eggs_from_spawners(sp, fec, 0.55)
    want = np.array([sum(0.55 * fec[a] * sp[k, a] for a in range(na))
                     for k in range(n)])
    worst = max(worst, float(np.max(np.abs(got - want) / np.abs(want))))

    nf, ny = 4, 2500  # nf * ny = 1e4 catch cells
    q = rng.uniform(1e-5, 1e-3, nf)
    effort = rng.uniform(1.0, 50.0, (nf, ny))
    sel = rng.uniform(0.05, 1.0, (nf, na + 1))
    ff = q[:, None, None] * effort[:, :, None] * sel[:, None, :]
    ftot = ff.sum(axis=0)
    mgrid = rng.uniform(0.05, 0.5, (ny, na + 1))
    n_sea = rng.uniform(1.0, 1e6, (ny, na))
    age0 = rng.uniform(1.0, 1e7, ny)
    s74 = rng.uniform(0.3, 1.0, ny)
    got = expected_catch(n_sea, age0, ff, ftot, mgrid, s74)
    want = np.zeros((nf, ny))
    for fi in range(nf):
        for t in range(ny):
            z0 = ftot[t, 0] + mgrid[t, 0] - math.log(s74[t])
            c = ff[fi, t, 0] * (1.0 - math.exp(-z0)) / z0 * age0[t]
            for a in range(1, na + 1):
                z = ftot[t, a] + mgrid[t, a]
                c += ff[fi, t, a] * (1.0 - math.exp(-z)) / z * n_sea[t, a - 1]
            want[fi, t] = c
    worst = max(worst, float(np.max(np.abs(got - want) / np.abs(want))))

    elapsed = time.time() - t0
    ok = worst <= 1e-12 and elapsed < 10.0
    line = verdict(1, ok, f"worst relative error {worst:.2e} <= 1e-12 "
                           f"on 1e4 inputs per kernel, {elapsed:.1f} s < 10 s")
    assert ok, line


def test_criterion_2_sampler_correctness(verdict):
    """Adaptive Metropolis on conjugate targets: moments within 3 Monte
    Carlo standard errors of closed form at 5e4 kept draws; same-seed
    bit-exact; under 2 min."""
    t0 = time.time()
    blocks = [Block("theta", np.array([0]))]
    n_iter, warmup = 60_000, 10_000  # 50k kept
    checks = []

    # normal likelihood, normal prior
    rng = np.random.default_rng(7)
    y = rng.normal(2.0, 1.5, size=12)
    m0, s0, s = 1.0, 2.0, 1.5
    prec = 1.0 / s0**2 + y.size / s**2
    mu_true = (m0 / s0**2 + y.sum() / s**2) / prec
    var_true = 1.0 / prec

    def lp_normal(x):
        th = x[0]
        return (-0.5 * ((th - m0) / s0) ** 2
                - 0.5 * np.sum(((y - th) / s) ** 2))

    chain = run_chain(lp_normal, np.array([0.0]), blocks, n_iter=n_iter,
                      warmup=warmup, rng=np.random.default_rng(11))
    d = chain.draws[:, 0]
    neff = float(ess([chain])[0])
    mcse_mean = d.std() / math.sqrt(neff)
    mcse_var = var_true * math.sqrt(2.0 / neff)
    checks.append(("normal mean", abs(d.mean() - mu_true), 3 * mcse_mean))
    checks.append(("normal var", abs(d.var() - var_true), 3 * mcse_var))

    # beta prior, binomial likelihood (sampled on the unit interval;
    # out-of-range proposals are rejected through -inf)
    a0, b0, trials, successes = 3.0, 2.0, 40, 11
    ap, bp = a0 + successes, b0 + trials - successes
    mu_b = ap / (ap + bp)
    var_b = ap * bp / ((ap + bp) ** 2 * (ap + bp + 1.0))

    def lp_beta(x):
        p = x[0]
        if not 0.0 < p < 1.0:
            return -np.inf
        return ((a0 + successes - 1.0) * math.log(p)
                + (b0 + trials - successes - 1.0) * math.log1p(-p))

    chain_b = run_chain(lp_beta, np.array([0.5]), blocks, n_iter=n_iter,
                        warmup=warmup, rng=np.random.default_rng(13))
    db = chain_b.draws[:, 0]
    neff_b = float(ess([chain_b])[0])
    checks.append(("beta mean", abs(db.mean() - mu_b),
                   3 * db.std() / math.sqrt(neff_b)))
    checks.append(("beta var", abs(db.var() - var_b),
                   3 * var_b * math.sqrt(2.0 / neff_b)))

    rerun = run_chain(lp_normal, np.array([0.0]),
                      [Block("theta", np.array([0]))], n_iter=4000,
                      warmup=1000, rng=np.random.default_rng(11))
    short = run_chain(lp_normal, np.array([0.0]),
                      [Block("theta", np.array([0]))], n_iter=4000,
                      warmup=1000, rng=np.random.default_rng(11))
    deterministic = np.array_equal(rerun.draws, short.draws)

    elapsed = time.time() - t0
    moment_ok = all(err <= tol for _, err, tol in checks)
    ok = moment_ok and deterministic and elapsed < 120.0
    detail = ", ".join(f"{name} |err| {err:.2e} <= {tol:.2e}"
                       for name, err, tol in checks)
    line = verdict(2, ok, f"{detail}; same-seed bit-exact: {deterministic}; "
                           f"{elapsed:.0f} s < 120 s")
    assert ok, line


def test_criterion_3_posterior_recovery(verdict, medium):
    """90% intervals cover true smolt runs in >=80% of river-years, true
    log q inside the 95% interval, all split R-hat <= 1.05, total <= 15 min
    on the medium demo."""
    t0 = time.time()
    summary = medium.result.summary
    truth = medium.truth
    assert len(summary["stocks"]) == 4 and len(summary["years"]) == 25

    R = truth.R
    hits = total = 0
    for i, sid in enumerate(summary["stocks"]):
        s = summary["smolts"][sid]
        lo, hi = np.array(s["q05"]), np.array(s["q95"])
        hits += int(np.sum((R[i] >= lo) & (R[i] <= hi)))
        total += R.shape[1]
    coverage = hits / total

    model = medium.result.model
    draws = np.load(medium.out_dir / "posterior_draws.npy")
    flat = draws.reshape(-1, model.layout.size)
    qsl = model.layout.slice_of("q")
    lo_q, hi_q = np.quantile(flat[:, qsl], [0.025, 0.975], axis=0)
    true_logq = np.log(truth.params["q"])
    q_inside = bool(np.all((true_logq >= lo_q) & (true_logq <= hi_q)))

    max_rhat = summary["diagnostics"]["max_rhat"]
    gate = CliRunner().invoke(cli, ["diagnose", "--results",
                                    str(medium.out_dir)])
    elapsed = medium.elapsed + (time.time() - t0)
    ok = (coverage >= 0.80 and q_inside and max_rhat <= 1.05
          and gate.exit_code == 0 and elapsed <= 900.0)
    line = verdict(3, ok, f"smolt coverage {coverage:.2f} >= 0.80, "
                           f"log q in 95% CI: {q_inside}, "
                           f"max R-hat {max_rhat:.3f} <= 1.05 "
                           f"(diagnose exit {gate.exit_code}), "
                           f"{elapsed:.0f} s <= 900 s")
    assert ok, line


def test_criterion_4_sequential_shrinkage(verdict, medium):
    """Posterior sd of log smolts non-increasing from the mark-recapture
    stage to the river stage to the full fit in >=80% of trap river-years,
    within 10 min."""
    t0 = time.time()
    flow = medium.result.summary["river_information_flow"]
    assert flow, "no trap river-years in the medium demo"
    mono = sum(1 for e in flow
               if e["sd_river_stage"] is not None
               and e["sd_trap"] >= e["sd_river_stage"] - 1e-12
               and e["sd_river_stage"] >= e["sd_posterior"] - 1e-12)
    frac = mono / len(flow)
    elapsed = medium.elapsed + (time.time() - t0)
    ok = frac >= 0.80 and elapsed <= 600.0
    line = verdict(4, ok, f"sd non-increasing in {mono}/{len(flow)} trap "
                           f"river-years ({frac:.2f} >= 0.80), "
                           f"{elapsed:.0f} s <= 600 s")
    assert ok, line


def test_criterion_5_decision_monotonicity(verdict, medium):
    """With shared noise on 2000 draws: moratorium recovery probability
    >= status quo per stock, and P(>=0.75 capacity) <= P(>=0.5) under
    every policy; under 1 min."""
    t0 = time.time()
    store = load_store(medium.out_dir)
    nf = len(store.fishery_ids)
    state = store.projection_state(2000, seed=0)
    assert state["alpha"].shape[0] == 2000
    comp = compare_policies(
        state,
        [Policy("status_quo", multiplier=np.ones(nf)),
         Policy("moratorium", multiplier=np.zeros(nf))],
        horizon=10, seed=0)
    window = (4, 6)
    p_sq = comp.results["status_quo"].prob_recovery(0.5, window)
    p_mor = comp.results["moratorium"].prob_recovery(0.5, window)
    dominance = bool(np.all(p_mor >= p_sq))
    nested = all(
        bool(np.all(r.prob_recovery(0.75, window)
                    <= r.prob_recovery(0.5, window) + 1e-12))
        for r in comp.results.values())
    elapsed = time.time() - t0
    ok = dominance and nested and elapsed < 60.0
    line = verdict(5, ok,
                    f"P(recover 0.5) moratorium >= status quo per stock: "
                    f"{dominance} (min margin "
                    f"{float(np.min(p_mor - p_sq)):+.3f}), "
                    f"P(0.75) <= P(0.5) everywhere: {nested}, "
                    f"2000 draws, {elapsed:.1f} s < 60 s")
    assert ok, line


def test_criterion_6_pipeline_reproducibility(verdict, pipeline_run, tmp_path):
    """Re-executing a run from its manifest reproduces every stage output
    bit-identically."""
    t0 = time.time()
    result, matches = rerun_from_manifest(
        pipeline_run.out_dir / "manifest.json", tmp_path / "rerun")
    bad = sorted(name for name, okf in matches.items() if not okf)
    elapsed = time.time() - t0
    ok = not bad and len(matches) > 0
    line = verdict(6, ok, f"{len(matches)} outputs reproduced "
                           f"bit-identically ({'none differ' if not bad else bad}), "
                           f"{elapsed:.0f} s")
    assert ok, line


def test_criterion_7_cli_api_parity(verdict, medium, tmp_path):
    """POST /project equals the CLI projection byte-for-byte at a fixed
    seed, and the interactive projection (1000-draw subsample, horizon 6)
    answers within 2 s."""
    nf = len(medium.result.summary["fisheries"])
    policy = {"name": "interactive", "multiplier": [0.8] * nf}
    pol_file = tmp_path / "policy.json"
    pol_file.write_text(json.dumps(policy))

    app = create_app(medium.out_dir, seed=0, n_draws=1000, horizon=6)
    with TestClient(app) as client:
        t0 = time.time()
        resp = client.post("/project", json=policy)
        latency = time.time() - t0
        assert resp.status_code == 200
        http_bytes = resp.content

    res = CliRunner().invoke(cli, [
        "project", "--results", str(medium.out_dir),
        "--policy-file", str(pol_file),
        "--horizon", "6", "--seed", "0", "--draws", "1000"])
    assert res.exit_code == 0, res.output
    cli_bytes = res.stdout.encode("utf-8")

    identical = http_bytes == cli_bytes
    ok = identical and latency <= 2.0
    line = verdict(7, ok, f"HTTP and CLI payloads byte-identical: "
                           f"{identical} ({len(http_bytes)} bytes), "
                           f"projection latency {latency:.2f} s <= 2 s")
    assert ok, line
