"""End-to-end assessment pipeline with a reproducibility manifest.

Stages run in sequence: expert capacity priors, river submodels
(mark-recapture, then the parr hierarchy), the external stock-recruit
hyperprior, the egg-survival series, and finally the life-history fit.
Every stage is deterministic given the dataset, and the fit is
deterministic given (dataset, sampler settings, seed, backend), so the
manifest written at the end names everything needed to reproduce the run
bit for bit: input file hashes, configuration, seed, backend, package
version, and the hashes of every output file.

Output directory layout:

    manifest.json             run identity and file hashes
    summary.json              canonical-JSON posterior summary
    priors.json               stage outputs feeding the fit
    posterior_draws.npy       (chains, kept, dim) post-warmup draws
    posterior_logpost.npy     (chains, kept) log posterior values
    posterior_subsample.npy   (k, dim) evenly spaced flat subsample
    dataset/                  a verbatim copy of the input data
"""

import hashlib
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .canon import canonical_json
from .data import load_dataset, save_dataset
from .errors import PipelineError
from .mcmc import ess, split_rhat
from .model import build_model
from .priors import fit_m74_series, fit_quantile_prior, fit_sr_hyperprior
from .rivers import approximate_smolt_likelihood, fit_river_model


@dataclass
class PipelineConfig:
    data_dir: str
    out_dir: str
    seed: int = 0
    n_chains: int = 4
    n_iter: int = 4000
    warmup: int = 0          # 0 means n_iter // 2
    thin: int = 1
    keep_draws: int = 2000   # size of the projection subsample
    rhat_limit: float = 1.05
    enforce_rhat: bool = False

    def resolved_warmup(self):
        return self.warmup if self.warmup > 0 else self.n_iter // 2


@dataclass
class PipelineResult:
    config: PipelineConfig
    dataset: object
    model: object
    fit: object
    river: object
    smolt_approx: list
    manifest: dict
    summary: dict
    out_dir: Path


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _hash_tree(root):
    root = Path(root)
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file():
            out[str(p.relative_to(root))] = file_sha256(p)
    return out


def _quantile_row(draws_1d):
    qs = np.quantile(draws_1d, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {
        "mean": float(np.mean(draws_1d)), "sd": float(np.std(draws_1d)),
        "q05": float(qs[0]), "q25": float(qs[1]), "q50": float(qs[2]),
        "q75": float(qs[3]), "q95": float(qs[4]),
    }


def _stage_priors_json(cap_priors, sr_hyper, m74_prior, river, approx):
    out = {"capacity": {sid: {"mu": p.mu, "sd": p.sd}
                        for sid, p in sorted(cap_priors.items())}}
    if sr_hyper is not None:
        out["stock_recruit_hyper"] = {
            "mean": sr_hyper.mean.tolist(),
            "cov_between": sr_hyper.cov_between.tolist(),
            "cov_predictive": sr_hyper.cov_predictive.tolist(),
            "points": sr_hyper.points.tolist(),
        }
    if m74_prior is not None:
        out["egg_survival"] = {
            "a": m74_prior.a.tolist(), "b": m74_prior.b.tolist(),
            "observed": [bool(v) for v in m74_prior.observed],
        }
    out["river"] = {
        "n_calibration_pairs": river.n_calibration_pairs,
        "survival_mean": river.theta_mean,
        "survival_tau": river.theta_tau,
        "trap_posteriors": [
            {"stock": s, "year": y, "mu": mu, "sd": sd}
            for (s, y), (mu, sd) in sorted(river.trap_post.items())],
        "smolt_terms": [
            {"stock": a.stock, "year": a.year, "mu": a.mu, "sd": a.sd}
            for a in approx],
    }
    # NaNs (unset hierarchy) have no canonical JSON form
    if out["river"]["survival_mean"] != out["river"]["survival_mean"]:
        out["river"]["survival_mean"] = None
        out["river"]["survival_tau"] = None
    return out


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    t_start = time.time()
    data_dir = Path(config.data_dir)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(data_dir)
    input_hashes = _hash_tree(data_dir)
    timings = {}

    t0 = time.time()
    cap_priors = {eq.stock: fit_quantile_prior(eq.probs, eq.values)
                  for eq in dataset.expert_pspc}
    river = fit_river_model(dataset)
    approx = approximate_smolt_likelihood(river, dataset)
    sr_hyper = fit_sr_hyperprior(dataset.external_sr) \
        if len(dataset.external_sr) >= 3 else None
    m74_prior = fit_m74_series(dataset.m74, dataset.years) \
        if dataset.m74 else None
    timings["prior_stages"] = time.time() - t0

    model = build_model(dataset, smolt_approx=approx,
                        capacity_priors=cap_priors, sr_hyper=sr_hyper,
                        m74_prior=m74_prior)
    t0 = time.time()
    fit = model.fit(n_chains=config.n_chains, n_iter=config.n_iter,
                    warmup=config.resolved_warmup(), seed=config.seed,
                    thin=config.thin)
    timings["fit"] = time.time() - t0

    t0 = time.time()
    draws = fit.draw_matrix()          # (m, kept, d)
    flat = fit.flat()
    rhat = split_rhat(draws)
    scalar_dims = model.scalar_dims()
    ess_scalar = ess(draws, dims=scalar_dims)
    max_rhat = float(np.max(rhat))
    if config.enforce_rhat and max_rhat > config.rhat_limit:
        raise PipelineError(
            f"max split R-hat {max_rhat:.3f} exceeds {config.rhat_limit}")

    k = min(config.keep_draws, flat.shape[0])
    sub_idx = np.unique(np.linspace(0, flat.shape[0] - 1, k).astype(int))
    subsample = np.ascontiguousarray(flat[sub_idx])

    traj = model.trajectories(subsample)
    names = model.param_names()
    params_summary = {}
    for j, dim in enumerate(scalar_dims):
        row = _quantile_row(flat[:, dim])
        row["rhat"] = float(rhat[dim])
        row["ess"] = float(ess_scalar[j])
        params_summary[names[dim]] = row

    years = [int(y) for y in dataset.years]
    smolts = {}
    spawners = {}
    capacity = {}
    beta_cols = fit.block_slice("beta")
    for i, sid in enumerate(dataset.stock_ids):
        R = traj["R"][:, i, :]             # (k, ny)
        qs = np.quantile(R, [0.05, 0.25, 0.5, 0.75, 0.95], axis=0)
        smolts[sid] = {
            "years": years,
            "mean": R.mean(axis=0).tolist(),
            "q05": qs[0].tolist(), "q25": qs[1].tolist(),
            "q50": qs[2].tolist(), "q75": qs[3].tolist(),
            "q95": qs[4].tolist(),
        }
        Ssum = traj["S"][:, i, :, :].sum(axis=2)
        sq = np.quantile(Ssum, [0.05, 0.5, 0.95], axis=0)
        spawners[sid] = {"years": years, "q05": sq[0].tolist(),
                         "q50": sq[1].tolist(), "q95": sq[2].tolist()}
        cap_draws = 1.0 / np.exp(flat[:, beta_cols.start + i])
        capacity[sid] = _quantile_row(cap_draws)

    # information flow at trap river-years: trap-only sd, river-stage sd,
    # and the full posterior sd of log smolts
    approx_by_key = {(a.stock, a.year): a for a in approx}
    info_flow = []
    for (sid, year), (mu_b, sd_b) in sorted(river.trap_post.items()):
        i = dataset.stock_index(sid)
        t = dataset.year_index(year)
        logR = np.log(traj["R"][:, i, t])
        entry = {"stock": sid, "year": int(year),
                 "sd_trap": float(sd_b),
                 "sd_posterior": float(np.std(logR))}
        a = approx_by_key.get((sid, year))
        entry["sd_river_stage"] = float(a.sd) if a is not None else None
        info_flow.append(entry)
    timings["summaries"] = time.time() - t0

    summary = {
        "schema": "v1",
        "version": __version__,
        "backend": BACKEND,
        "seed": config.seed,
        "n_chains": config.n_chains,
        "n_iter": config.n_iter,
        "warmup": config.resolved_warmup(),
        "thin": config.thin,
        "n_kept_per_chain": int(draws.shape[1]),
        "diagnostics": {
            "max_rhat": max_rhat,
            "min_ess_scalar": float(np.min(ess_scalar)),
            "rhat_limit": config.rhat_limit,
            "converged": bool(max_rhat <= config.rhat_limit),
        },
        "stocks": list(dataset.stock_ids),
        "fisheries": list(dataset.fishery_ids),
        "years": years,
        "parameters": params_summary,
        "smolts": smolts,
        "spawners": spawners,
        "capacity": capacity,
        "river_information_flow": info_flow,
        "n_subsample": int(subsample.shape[0]),
    }

    np.save(out_dir / "posterior_draws.npy", draws)
    np.save(out_dir / "posterior_logpost.npy",
            np.stack([c.logposts for c in fit.chains]))
    np.save(out_dir / "posterior_subsample.npy", subsample)
    (out_dir / "summary.json").write_text(canonical_json(summary))
    priors_json = _stage_priors_json(cap_priors, sr_hyper, m74_prior, river,
                                     approx)
    (out_dir / "priors.json").write_text(canonical_json(priors_json))
    save_dataset(dataset, out_dir / "dataset")

    output_hashes = _hash_tree(out_dir)
    output_hashes.pop("manifest.json", None)
    manifest = {
        "version": __version__,
        "backend": BACKEND,
        "config": asdict(config),
        "inputs": input_hashes,
        "outputs": output_hashes,
        "timings": {k: round(v, 3) for k, v in timings.items()},
        "wall_seconds": round(time.time() - t_start, 3),
    }
    (out_dir / "manifest.json").write_text(canonical_json(manifest))
    return PipelineResult(config=config, dataset=dataset, model=model,
                          fit=fit, river=river, smolt_approx=approx,
                          manifest=manifest, summary=summary,
                          out_dir=out_dir)


def rerun_from_manifest(manifest_path, out_dir, data_dir=None):
    """Re-execute a run from its manifest and report whether every output
    hash matches. `data_dir` overrides the recorded location (the files must
    still hash identically)."""
    import json

    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    cfg_dict = dict(manifest["config"])
    if data_dir is not None:
        cfg_dict["data_dir"] = str(data_dir)
    cfg_dict["out_dir"] = str(out_dir)
    config = PipelineConfig(**cfg_dict)
    if manifest["backend"] != BACKEND:
        raise PipelineError(
            f"manifest was produced with backend {manifest['backend']!r}, "
            f"current backend is {BACKEND!r}")
    current_inputs = _hash_tree(config.data_dir)
    if current_inputs != manifest["inputs"]:
        changed = sorted(set(current_inputs.items())
                         ^ set(manifest["inputs"].items()))
        raise PipelineError(f"input data changed since the manifest: "
                            f"{sorted({k for k, _ in changed})}")
    result = run_pipeline(config)
    matches = {
        name: result.manifest["outputs"].get(name) == digest
        for name, digest in manifest["outputs"].items()
    }
    return result, matches
