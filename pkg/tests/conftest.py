"""Shared fixtures.

One small synthetic dataset and one pipeline run are built per session and
reused everywhere; the MCMC fit inside the pipeline is the expensive part,
so tests that only need draws or output files share it instead of refitting.
"""

import numpy as np
import pytest

from smolt.data import save_dataset
from smolt.model import build_model
from smolt.pipeline import PipelineConfig, run_pipeline
from smolt.priors import fit_m74_series, fit_quantile_prior, fit_sr_hyperprior
from smolt.rivers import approximate_smolt_likelihood, fit_river_model
from smolt.simulate import make_demo

SMALL_SEED = 3
PIPELINE_SEED = 11


@pytest.fixture(scope="session")
def small_demo():
    return make_demo("small", seed=SMALL_SEED)


@pytest.fixture(scope="session")
def small_dataset(small_demo):
    return small_demo[0]


@pytest.fixture(scope="session")
def small_truth(small_demo):
    return small_demo[1]


@pytest.fixture(scope="session")
def small_stages(small_dataset):
    """Sequential prior-stage products for the small dataset."""
    ds = small_dataset
    river = fit_river_model(ds)
    return {
        "capacity_priors": {eq.stock: fit_quantile_prior(eq.probs, eq.values)
                            for eq in ds.expert_pspc},
        "river": river,
        "smolt_approx": approximate_smolt_likelihood(river, ds),
        "sr_hyper": (fit_sr_hyperprior(ds.external_sr)
                     if len(ds.external_sr) >= 3 else None),
        "m74_prior": fit_m74_series(ds.m74, ds.years) if ds.m74 else None,
    }


@pytest.fixture(scope="session")
def small_model(small_dataset, small_stages):
    st = small_stages
    return build_model(small_dataset, smolt_approx=st["smolt_approx"],
                       capacity_priors=st["capacity_priors"],
                       sr_hyper=st["sr_hyper"], m74_prior=st["m74_prior"])


@pytest.fixture(scope="session")
def small_data_dir(tmp_path_factory, small_dataset):
    d = tmp_path_factory.mktemp("data") / "small"
    save_dataset(small_dataset, d)
    return d


@pytest.fixture(scope="session")
def pipeline_run(tmp_path_factory, small_data_dir):
    out = tmp_path_factory.mktemp("results") / "run"
    config = PipelineConfig(data_dir=str(small_data_dir), out_dir=str(out),
                            seed=PIPELINE_SEED, n_chains=2, n_iter=2500,
                            keep_draws=300)
    return run_pipeline(config)


@pytest.fixture(scope="session")
def posterior_dir(pipeline_run):
    return pipeline_run.out_dir


@pytest.fixture(scope="session")
def posterior_draws(posterior_dir):
    return np.load(posterior_dir / "posterior_subsample.npy")


@pytest.fixture(scope="session")
def projection_state(small_model, posterior_draws):
    return small_model.projection_state(posterior_draws)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
