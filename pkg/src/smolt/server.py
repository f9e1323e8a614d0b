"""Read-only HTTP service over one fitted posterior directory.

Responses are canonical JSON bytes from the same serving functions the CLI
uses, so any payload can be reproduced byte-identically offline. The
projection seed is fixed when the app is created, making POST /project
idempotent for identical bodies. State is loaded once and never written;
concurrent requests share the immutable store and run in the framework's
bounded worker pool.
"""

from fastapi import Body, FastAPI, HTTPException, Query, Response

from . import __version__
from .canon import canonical_json_bytes
from .errors import SmoltError, ValidationError
from .serving import (DEFAULT_HORIZON, DEFAULT_PROJECTION_DRAWS,
                      DEFAULT_PROJECTION_SEED, SCHEMA_VERSION,
                      builtin_policies, comparison_payload, load_policy_file,
                      load_store, parse_policy, projection_payload,
                      smolt_series_payload)


def _json(payload: bytes) -> Response:
    return Response(content=payload, media_type="application/json")


def create_app(posterior_dir, *, seed=DEFAULT_PROJECTION_SEED,
               n_draws=DEFAULT_PROJECTION_DRAWS, full_draws=False,
               horizon=DEFAULT_HORIZON, policies_file=None) -> FastAPI:
    store = load_store(posterior_dir)
    nf = len(store.fishery_ids)
    named = builtin_policies(nf)
    if policies_file is not None:
        for pol in load_policy_file(policies_file, nf):
            named[pol.name] = pol

    app = FastAPI(title="smolt posterior service", version=__version__,
                  docs_url=None, redoc_url=None)

    @app.get("/health")
    def health():
        return _json(canonical_json_bytes(
            {"schema": SCHEMA_VERSION, "status": "ok",
             "version": __version__}))

    @app.get("/stocks")
    def stocks():
        return _json(canonical_json_bytes({
            "schema": SCHEMA_VERSION,
            "stocks": store.stock_ids,
            "fisheries": store.fishery_ids,
            "years": store.summary["years"],
            "policies": sorted(named),
        }))

    @app.get("/posterior/summary")
    def posterior_summary():
        # exact bytes of the pipeline's summary.json
        return _json(store.summary_bytes)

    @app.get("/posterior/smolts")
    def posterior_smolts(stock: str = Query(default=None),
                         quantiles: str = Query(default=None)):
        qs = quantiles.split(",") if quantiles else None
        try:
            return _json(smolt_series_payload(store, stock=stock,
                                              quantiles=qs))
        except KeyError as e:
            raise HTTPException(status_code=404,
                                detail=f"unknown stock {e.args[0]!r}")
        except ValidationError as e:
            raise HTTPException(status_code=400,
                                detail=[{"field": "quantiles",
                                         "msg": str(e)}])

    @app.post("/project")
    def run_projection(body: dict = Body(...)):
        try:
            policy = parse_policy(body, nf)
        except ValidationError as e:
            field = str(e).split(":")[0] if ":" in str(e) else "policy"
            raise HTTPException(status_code=400,
                                detail=[{"field": field, "msg": str(e)}])
        try:
            return _json(projection_payload(
                store, policy, horizon=horizon, seed=seed,
                n_draws=n_draws, full=full_draws))
        except SmoltError as e:
            raise HTTPException(status_code=400,
                                detail=[{"field": "policy", "msg": str(e)}])

    @app.get("/policies/compare")
    def policies_compare(ids: str = Query(...)):
        requested = [s for s in ids.split(",") if s]
        if not requested:
            raise HTTPException(status_code=400,
                                detail=[{"field": "ids",
                                         "msg": "no policy ids given"}])
        missing = [pid for pid in requested if pid not in named]
        if missing:
            raise HTTPException(status_code=404,
                                detail=f"unknown policies {missing}")
        policies = [named[pid] for pid in requested]
        return _json(comparison_payload(
            store, policies, horizon=horizon, seed=seed,
            n_draws=n_draws, full=full_draws))

    return app
