"""Command-line entry points.

Every command exits nonzero on failure after printing exactly one
machine-parsable line to stderr of the form `ERROR <CODE>: <detail>`.
Options can also be set through SMOLT_-prefixed environment variables
(e.g. SMOLT_FIT_SEED); a JSON config file seeds `fit` and explicit flags
win over it.
"""

import functools
import json
import sys
from pathlib import Path

import click

from . import __version__
from .canon import canonical_json
from .errors import PipelineError, SmoltError, ValidationError

EXIT_ERROR = 3
EXIT_GATE = 1


def _fail(code, message):
    click.echo(f"ERROR {code}: {message}", err=True)
    sys.exit(EXIT_ERROR)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SmoltError as e:
            _fail(e.code, e)
        except FileNotFoundError as e:
            _fail("IO", e)
        except json.JSONDecodeError as e:
            _fail("INVALID", f"bad JSON: {e}")
    return wrapper


@click.group()
@click.version_option(__version__)
def cli():
    """Bayesian salmon stock assessment: simulate, fit, diagnose, project,
    compare, serve."""


@cli.command()
@click.option("--size", type=click.Choice(["small", "medium"]),
              default="small", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--truth/--no-truth", "with_truth", default=True,
              help="Also write truth.json with the generating parameters.")
@handle_errors
def simulate(size, seed, out, with_truth):
    """Write a synthetic demo dataset (and its generating truth)."""
    from .data import save_dataset
    from .simulate import make_demo

    dataset, truth = make_demo(size, seed=seed)
    save_dataset(dataset, out)
    if with_truth:
        doc = {
            "seed": seed,
            "size": size,
            "capacity": truth.design.capacity.tolist(),
            "alpha": truth.params["alpha"].tolist(),
            "beta": truth.params["beta"].tolist(),
            "q": truth.params["q"].tolist(),
            "maturation": truth.params["maturation"].tolist(),
            "mortality": truth.params["mortality"].tolist(),
            "sigma": truth.params["sigma"].tolist(),
            "s74": truth.params["s74"].tolist(),
            "smolts": truth.R.tolist(),
            "stocks": dataset.stock_ids,
        }
        (Path(out) / "truth.json").write_text(canonical_json(doc))
    click.echo(f"dataset written to {out}")


def _merged_fit_config(ctx, config, overrides):
    """config-file values unless a flag was given explicitly; flags win."""
    from .pipeline import PipelineConfig

    base = {}
    if config is not None:
        base = json.loads(Path(config).read_text())
        if not isinstance(base, dict):
            raise ValidationError(f"config {config}: expected a JSON object")
        unknown = set(base) - set(PipelineConfig.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"config {config}: unknown keys "
                                  f"{sorted(unknown)}")
    for name, value in overrides.items():
        src = ctx.get_parameter_source(name)
        if src is not None and src.name != "DEFAULT":
            base[name] = value
        elif name not in base and value is not None:
            base[name] = value
    missing = {k for k in ("data_dir", "out_dir") if not base.get(k)}
    if missing:
        raise ValidationError(f"fit: missing {sorted(missing)} "
                              "(set via flags or config file)")
    return PipelineConfig(**{k: v for k, v in base.items() if v is not None})


@cli.command()
@click.option("--config", type=click.Path(exists=True, path_type=Path),
              help="JSON file with PipelineConfig fields.")
@click.option("--data", "data_dir", type=click.Path(path_type=Path))
@click.option("--out", "out_dir", type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--chains", "n_chains", type=int, default=4, show_default=True)
@click.option("--iters", "n_iter", type=int, default=4000, show_default=True)
@click.option("--warmup", type=int, default=0,
              help="Warmup iterations (default: half of --iters).")
@click.option("--thin", type=int, default=1, show_default=True)
@click.option("--keep-draws", type=int, default=2000, show_default=True)
@click.option("--enforce-rhat/--no-enforce-rhat", default=False,
              help="Fail the run if max split R-hat exceeds the limit.")
@click.option("--from-manifest", type=click.Path(exists=True,
                                                 path_type=Path),
              help="Re-execute a previous run and verify output hashes.")
@click.pass_context
@handle_errors
def fit(ctx, config, from_manifest, **overrides):
    """Run the full assessment pipeline and write a posterior directory."""
    from .pipeline import rerun_from_manifest, run_pipeline

    if from_manifest is not None:
        out_dir = overrides.get("out_dir")
        if out_dir is None:
            raise ValidationError("fit --from-manifest: --out is required")
        result, matches = rerun_from_manifest(
            from_manifest, out_dir, data_dir=overrides.get("data_dir"))
        bad = sorted(name for name, ok in matches.items() if not ok)
        if bad:
            raise PipelineError(
                f"rerun outputs differ from manifest: {bad}")
        click.echo(f"rerun reproduced {len(matches)} outputs bit-identically "
                   f"in {result.out_dir}")
        return
    cfg = _merged_fit_config(ctx, config, {k: str(v) if isinstance(v, Path)
                                           else v
                                           for k, v in overrides.items()})
    result = run_pipeline(cfg)
    diag = result.summary["diagnostics"]
    click.echo(f"fit complete: {result.out_dir} "
               f"(max R-hat {diag['max_rhat']:.3f}, "
               f"backend {result.summary['backend']})")


@cli.command()
@click.option("--results", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--rhat-limit", type=float, default=1.05, show_default=True)
@click.option("--top", type=int, default=10, show_default=True,
              help="How many worst parameters to list.")
@handle_errors
def diagnose(results, rhat_limit, top):
    """Print convergence diagnostics; exit 1 if the R-hat gate fails."""
    summary_path = Path(results) / "summary.json"
    summary = json.loads(summary_path.read_text())
    params = summary["parameters"]
    rows = sorted(params.items(), key=lambda kv: -kv[1]["rhat"])[:top]
    click.echo(f"{'parameter':<22} {'rhat':>7} {'ess':>9} "
               f"{'mean':>12} {'sd':>12}")
    for name, row in rows:
        click.echo(f"{name:<22} {row['rhat']:>7.3f} {row['ess']:>9.0f} "
                   f"{row['mean']:>12.4g} {row['sd']:>12.4g}")
    diag = summary["diagnostics"]
    click.echo(f"max split R-hat over all dimensions: "
               f"{diag['max_rhat']:.4f} (limit {rhat_limit})")
    click.echo(f"min ESS over reported parameters:    "
               f"{diag['min_ess_scalar']:.0f}")
    if diag["max_rhat"] > rhat_limit:
        click.echo("NOT CONVERGED")
        sys.exit(EXIT_GATE)
    click.echo("CONVERGED")


def _projection_options(fn):
    fn = click.option("--results", required=True,
                      type=click.Path(exists=True, path_type=Path))(fn)
    fn = click.option("--policy-file", required=True,
                      type=click.Path(exists=True, path_type=Path))(fn)
    fn = click.option("--horizon", type=int, default=10, show_default=True)(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    fn = click.option("--draws", "n_draws", type=int, default=1000,
                      show_default=True)(fn)
    fn = click.option("--full-draws", is_flag=True, default=False,
                      help="Project on every stored draw.")(fn)
    fn = click.option("--out", type=click.Path(path_type=Path),
                      help="Output file (default: stdout).")(fn)
    return fn


def _emit(payload: bytes, out):
    if out is None:
        sys.stdout.write(payload.decode("utf-8"))
    else:
        Path(out).write_bytes(payload)
        click.echo(f"wrote {out}", err=True)


@cli.command()
@_projection_options
@click.option("--name", help="Pick one policy by name from the file.")
@handle_errors
def project(results, policy_file, horizon, seed, n_draws, full_draws, out,
            name):
    """Project the posterior forward under one policy."""
    from .serving import load_policy_file, load_store, projection_payload

    store = load_store(results)
    policies = load_policy_file(policy_file, len(store.fishery_ids))
    if name is not None:
        match = [p for p in policies if p.name == name]
        if not match:
            raise ValidationError(f"policy {name!r} not in {policy_file}")
        policy = match[0]
    elif len(policies) == 1:
        policy = policies[0]
    else:
        raise ValidationError("project: multiple policies in file, "
                              "pick one with --name")
    _emit(projection_payload(store, policy, horizon=horizon, seed=seed,
                             n_draws=n_draws, full=full_draws), out)


@cli.command()
@_projection_options
@click.option("--ids", help="Comma-separated policy names to include "
                            "(default: all in the file plus built-ins).")
@handle_errors
def compare(results, policy_file, horizon, seed, n_draws, full_draws, out,
            ids):
    """Project several policies with shared noise and summarize them."""
    from .serving import (builtin_policies, comparison_payload,
                          load_policy_file, load_store)

    store = load_store(results)
    nf = len(store.fishery_ids)
    named = builtin_policies(nf)
    for pol in load_policy_file(policy_file, nf):
        named[pol.name] = pol
    if ids:
        requested = [s for s in ids.split(",") if s]
        missing = [pid for pid in requested if pid not in named]
        if missing:
            raise ValidationError(f"unknown policies {missing}")
        policies = [named[pid] for pid in requested]
    else:
        policies = list(named.values())
    _emit(comparison_payload(store, policies, horizon=horizon, seed=seed,
                             n_draws=n_draws, full=full_draws), out)


@cli.command()
@click.option("--posterior-dir", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Server-fixed projection seed.")
@click.option("--draws", "n_draws", type=int, default=1000,
              show_default=True)
@click.option("--full-draws", is_flag=True, default=False)
@click.option("--horizon", type=int, default=10, show_default=True)
@click.option("--policies", "policies_file",
              type=click.Path(exists=True, path_type=Path),
              help="JSON file with named policies for /policies/compare.")
@handle_errors
def serve(posterior_dir, host, port, seed, n_draws, full_draws, horizon,
          policies_file):
    """Serve a fitted posterior read-only over HTTP."""
    import uvicorn

    from .server import create_app

    app = create_app(posterior_dir, seed=seed, n_draws=n_draws,
                     full_draws=full_draws, horizon=horizon,
                     policies_file=policies_file)
    click.echo(f"serving {posterior_dir} on http://{host}:{port} "
               f"(projection seed {seed}, {n_draws} draws)")
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main():
    cli(auto_envvar_prefix="SMOLT")


if __name__ == "__main__":
    main()
