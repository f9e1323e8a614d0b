"""Shared posterior-directory access for the CLI and the HTTP server.

Both front ends call the same functions with the same defaults, so a CLI
projection and an API projection over one posterior directory produce the
same canonical JSON bytes. Projections run on a seeded subsample of the
stored draws (1000 by default) to stay interactive; full-draw mode uses
every stored draw.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .canon import canonical_json_bytes
from .data import load_dataset
from .decisions import Policy, compare_policies, project
from .errors import ValidationError
from .model import build_model
from .pipeline import file_sha256

SCHEMA_VERSION = "v1"
DEFAULT_HORIZON = 10
DEFAULT_PROJECTION_SEED = 0
DEFAULT_PROJECTION_DRAWS = 1000
DEFAULT_THRESHOLDS = (0.5, 0.75)
DEFAULT_WINDOW = (4, 6)
DEFAULT_COLLAPSE_FRAC = 0.1
QUANTILE_KEYS = {"0.05": "q05", "0.25": "q25", "0.5": "q50",
                 "0.75": "q75", "0.95": "q95"}


@dataclass
class PosteriorStore:
    """Immutable view of one results directory. The model is rebuilt from
    the dataset copy the pipeline stored, so the directory is
    self-contained."""

    results_dir: Path
    summary: dict
    summary_bytes: bytes
    manifest: dict
    model: object
    subsample: np.ndarray
    _state_cache: dict = field(default_factory=dict)

    @property
    def stock_ids(self):
        return list(self.summary["stocks"])

    @property
    def fishery_ids(self):
        return list(self.summary["fisheries"])

    def draws_for(self, n_draws, seed, full=False):
        """Seeded thinning of the stored subsample (or of the full draw
        matrix in full mode). Deterministic given (n_draws, seed, full)."""
        if full:
            raw = np.load(self.results_dir / "posterior_draws.npy")
            pool = raw.reshape(-1, raw.shape[-1])
        else:
            pool = self.subsample
        if n_draws >= pool.shape[0]:
            return pool
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(seed)))
        idx = np.sort(rng.choice(pool.shape[0], size=n_draws, replace=False))
        return pool[idx]

    def projection_state(self, n_draws, seed, full=False):
        key = (int(n_draws), int(seed), bool(full))
        if key not in self._state_cache:
            draws = self.draws_for(n_draws, seed, full)
            self._state_cache[key] = self.model.projection_state(draws)
        return self._state_cache[key]


def load_store(results_dir) -> PosteriorStore:
    d = Path(results_dir)
    summary_path = d / "summary.json"
    if not summary_path.exists():
        raise ValidationError(f"{d}: summary.json not found (not a results dir?)")
    summary_bytes = summary_path.read_bytes()
    summary = json.loads(summary_bytes)
    manifest = json.loads((d / "manifest.json").read_text())
    dataset = load_dataset(d / "dataset")
    model = build_model(dataset)  # only used for projection_state geometry
    subsample = np.load(d / "posterior_subsample.npy")
    if subsample.ndim != 2 or subsample.shape[1] != model.layout.size:
        raise ValidationError("posterior subsample does not match the dataset")
    return PosteriorStore(results_dir=d, summary=summary,
                          summary_bytes=summary_bytes, manifest=manifest,
                          model=model, subsample=subsample)


def parse_policy(obj, nf) -> Policy:
    """Policy from a JSON-shaped dict; raises ValidationError with field
    names for anything malformed."""
    if not isinstance(obj, dict):
        raise ValidationError("policy: expected an object")
    name = obj.get("name")
    if not name or not isinstance(name, str):
        raise ValidationError("policy.name: required string")
    mult = obj.get("multiplier")
    sched = obj.get("schedule")
    if (mult is None) == (sched is None):
        raise ValidationError(
            "policy: exactly one of multiplier/schedule required")
    extra = set(obj) - {"name", "multiplier", "schedule"}
    if extra:
        raise ValidationError(f"policy: unknown fields {sorted(extra)}")
    if mult is not None:
        arr = np.asarray(mult, dtype=float)
        if arr.shape != (nf,):
            raise ValidationError(
                f"policy.multiplier: expected {nf} values, got {arr.shape}")
        if np.any(arr < 0):
            raise ValidationError("policy.multiplier: values must be >= 0")
        return Policy(name, multiplier=arr)
    arr = np.asarray(sched, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != nf:
        raise ValidationError(
            f"policy.schedule: expected ({nf}, horizon) rows")
    if np.any(arr < 0):
        raise ValidationError("policy.schedule: values must be >= 0")
    return Policy(name, schedule=arr)


def load_policy_file(path, nf):
    """Policy file: either one policy object or {"policies": [...]}; order
    preserved, names must be unique."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValidationError(f"policy file {path}: invalid JSON ({e})") from None
    if isinstance(doc, dict) and "policies" in doc:
        items = doc["policies"]
    elif isinstance(doc, dict):
        items = [doc]
    else:
        raise ValidationError(f"policy file {path}: expected object")
    if not items:
        raise ValidationError(f"policy file {path}: no policies defined")
    policies = [parse_policy(p, nf) for p in items]
    names = [p.name for p in policies]
    if len(set(names)) != len(names):
        raise ValidationError(f"policy file {path}: duplicate policy names")
    return policies


def builtin_policies(nf):
    return {
        "status_quo": Policy("status_quo", multiplier=np.ones(nf)),
        "moratorium": Policy("moratorium", multiplier=np.zeros(nf)),
    }


def projection_payload(store: PosteriorStore, policy: Policy,
                       horizon=DEFAULT_HORIZON, seed=DEFAULT_PROJECTION_SEED,
                       n_draws=DEFAULT_PROJECTION_DRAWS, full=False,
                       thresholds=DEFAULT_THRESHOLDS, window=DEFAULT_WINDOW,
                       collapse_frac=DEFAULT_COLLAPSE_FRAC) -> bytes:
    """Canonical bytes of one projection; the CLI writes these to a file and
    the server returns them as a response body."""
    state = store.projection_state(n_draws, seed, full)
    result = project(state, policy, horizon, seed=seed)
    doc = result.summary(thresholds=thresholds, window=window,
                         collapse_frac=collapse_frac)
    doc["schema"] = SCHEMA_VERSION
    doc["seed"] = int(seed)
    return canonical_json_bytes(doc)


def comparison_payload(store: PosteriorStore, policies,
                       horizon=DEFAULT_HORIZON,
                       seed=DEFAULT_PROJECTION_SEED,
                       n_draws=DEFAULT_PROJECTION_DRAWS, full=False,
                       thresholds=DEFAULT_THRESHOLDS, window=DEFAULT_WINDOW,
                       collapse_frac=DEFAULT_COLLAPSE_FRAC) -> bytes:
    state = store.projection_state(n_draws, seed, full)
    comp = compare_policies(state, policies, horizon, seed=seed)
    doc = comp.summary(thresholds=thresholds, window=window,
                       collapse_frac=collapse_frac)
    doc["schema"] = SCHEMA_VERSION
    return canonical_json_bytes(doc)


def smolt_series_payload(store: PosteriorStore, stock=None,
                         quantiles=None) -> bytes:
    """Filtered view of the stored smolt quantile series. Raises KeyError
    for an unknown stock (the server maps that to 404)."""
    smolts = store.summary["smolts"]
    if stock is not None:
        if stock not in smolts:
            raise KeyError(stock)
        selected = {stock: smolts[stock]}
    else:
        selected = smolts
    if quantiles is None:
        keys = list(QUANTILE_KEYS.values())
    else:
        keys = []
        for q in quantiles:
            qs = str(q)
            if qs not in QUANTILE_KEYS:
                raise ValidationError(
                    f"quantiles: {qs!r} not stored "
                    f"(available: {sorted(QUANTILE_KEYS)})")
            keys.append(QUANTILE_KEYS[qs])
    doc = {
        "schema": SCHEMA_VERSION,
        "stocks": {
            sid: {"years": series["years"],
                  **{k: series[k] for k in keys}}
            for sid, series in selected.items()},
    }
    return canonical_json_bytes(doc)


def verify_readonly_snapshot(results_dir):
    """Hash every file under a results directory; compare snapshots to prove
    the server never wrote anything."""
    d = Path(results_dir)
    return {str(p.relative_to(d)): file_sha256(p)
            for p in sorted(d.rglob("*")) if p.is_file()}
