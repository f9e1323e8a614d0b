"""Forward projection under management policies and policy comparison.

A policy is a future effort schedule per fishery. Comparisons draw one set
of projection noise (process innovations and future egg-survival resampling
indices) and reuse it across every policy, so differences between policies
are policy effects, not Monte Carlo luck: with shared noise, lowering effort
can only raise smolt production draw by draw.

Future egg-survival factors are resampled per draw from that draw's own
fitted annual values, which propagates both parameter uncertainty and the
historical year-to-year spread without assuming a trend.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import K
from .errors import ValidationError

DEFAULT_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass(frozen=True)
class Policy:
    """Future fishing effort: either a per-fishery multiplier on the last
    observed effort, or an explicit (nf, horizon) schedule."""

    name: str
    multiplier: np.ndarray = None
    schedule: np.ndarray = None

    def __post_init__(self):
        if (self.multiplier is None) == (self.schedule is None):
            raise ValidationError(
                f"policy {self.name}: give exactly one of multiplier/schedule")
        if self.multiplier is not None:
            m = np.asarray(self.multiplier, dtype=float)
            if m.ndim != 1 or np.any(m < 0):
                raise ValidationError(
                    f"policy {self.name}: multiplier must be 1-D, >= 0")
            object.__setattr__(self, "multiplier", m)
        else:
            s = np.asarray(self.schedule, dtype=float)
            if s.ndim != 2 or np.any(s < 0):
                raise ValidationError(
                    f"policy {self.name}: schedule must be (nf, H), >= 0")
            object.__setattr__(self, "schedule", s)

    def effort(self, effort_last, horizon):
        nf = effort_last.shape[0]
        if self.schedule is not None:
            if self.schedule.shape != (nf, horizon):
                raise ValidationError(
                    f"policy {self.name}: schedule shape "
                    f"{self.schedule.shape} != ({nf}, {horizon})")
            return np.ascontiguousarray(self.schedule)
        if self.multiplier.shape[0] != nf:
            raise ValidationError(
                f"policy {self.name}: multiplier length != fisheries")
        return np.ascontiguousarray(
            np.repeat((self.multiplier * effort_last)[:, None], horizon,
                      axis=1))


def status_quo(nf):
    return Policy("status_quo", multiplier=np.ones(nf))


def moratorium(nf):
    return Policy("moratorium", multiplier=np.zeros(nf))


def make_projection_noise(state, horizon, seed):
    """Fresh innovations and egg-survival resampling indices, shaped for
    every draw in `state`. One seed pins everything."""
    nd, ns = state["r_last"].shape
    na = state["n_last"].shape[2]
    ny = state["s74_fitted"].shape[1]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return {
        "z_r": rng.standard_normal((nd, horizon, ns)),
        "z_n": rng.standard_normal((nd, horizon, ns, na)),
        "z_s": rng.standard_normal((nd, horizon, ns, na)),
        "s74_idx": rng.integers(0, ny, size=(nd, horizon)),
    }


@dataclass
class ProjectionResult:
    """Per-draw projected smolt runs and catches under one policy."""

    policy: str
    stock_ids: list
    fishery_ids: list
    smolts: np.ndarray    # (nd, ns, H)
    catch: np.ndarray     # (nd, nf, H)
    capacity: np.ndarray  # (nd, ns), 1/beta per draw

    @property
    def horizon(self):
        return self.smolts.shape[2]

    @property
    def n_draws(self):
        return self.smolts.shape[0]

    def smolt_quantiles(self, qs=DEFAULT_QUANTILES):
        return np.quantile(self.smolts, qs, axis=0)  # (len(qs), ns, H)

    def catch_quantiles(self, qs=DEFAULT_QUANTILES):
        return np.quantile(self.catch.sum(axis=1), qs, axis=0)

    def prob_recovery(self, frac, window=(4, 6)):
        """Per stock: share of draws whose smolt run reaches frac * capacity
        in at least one of the (1-based, inclusive) window years."""
        lo, hi = window
        if not 1 <= lo <= hi <= self.horizon:
            raise ValidationError(f"recovery window {window} outside horizon")
        seg = self.smolts[:, :, lo - 1:hi]  # (nd, ns, w)
        hit = (seg >= frac * self.capacity[:, :, None]).any(axis=2)
        return hit.mean(axis=0)

    def prob_any_collapse(self, frac=0.1):
        """Share of draws with at least one stock below frac * capacity in
        the final projection year."""
        last = self.smolts[:, :, -1]
        return float((last < frac * self.capacity).any(axis=1).mean())

    def expected_cumulative_catch(self):
        return float(self.catch.sum(axis=(1, 2)).mean())

    def summary(self, thresholds=(0.5, 0.75), window=(4, 6),
                collapse_frac=0.1, qs=DEFAULT_QUANTILES):
        sq = self.smolt_quantiles(qs)
        return {
            "policy": self.policy,
            "horizon": int(self.horizon),
            "n_draws": int(self.n_draws),
            "stocks": list(self.stock_ids),
            "quantile_probs": [float(q) for q in qs],
            "smolt_quantiles": {
                sid: sq[:, i, :].tolist()
                for i, sid in enumerate(self.stock_ids)},
            "prob_recovery": {
                str(th): [float(v) for v in self.prob_recovery(th, window)]
                for th in thresholds},
            "recovery_window": [int(window[0]), int(window[1])],
            "prob_any_collapse": self.prob_any_collapse(collapse_frac),
            "collapse_frac": float(collapse_frac),
            "expected_cumulative_catch": self.expected_cumulative_catch(),
            "catch_quantiles": [float(v)
                                for v in self.catch_quantiles(qs).mean(axis=1)],
        }


def project(state, policy: Policy, horizon, noise=None, seed=None,
            rel_future=None) -> ProjectionResult:
    """Project every draw in `state` forward under `policy`.

    Pass `noise` (from make_projection_noise) to share innovations across
    policies, or a `seed` to build a private set. Future reared releases
    default to the last fitted year's level.
    """
    if horizon < 1:
        raise ValidationError("project: horizon must be >= 1")
    if noise is None:
        if seed is None:
            raise ValidationError("project: need noise or seed")
        noise = make_projection_noise(state, horizon, seed)
    if noise["z_r"].shape[1] != horizon:
        raise ValidationError("project: noise horizon mismatch")
    effort_fut = policy.effort(state["effort_last"], horizon)
    nd = state["r_last"].shape[0]
    s74_fut = np.take_along_axis(state["s74_fitted"], noise["s74_idx"],
                                 axis=1)
    rel_future = state["rel_last"] if rel_future is None else float(rel_future)
    R, Csum = K.project_core(
        state["alpha"], state["beta"], state["q"], state["L"],
        state["m0"], state["mad"],
        state["sig_r"], state["sig_n"], state["sig_s"],
        state["s74_last"], np.ascontiguousarray(s74_fut),
        state["n_last"], state["r_last"], state["o_tail"],
        state["nr_last"], state["rel_last"], rel_future,
        np.ascontiguousarray(state["effort_last"]), effort_fut,
        np.ascontiguousarray(state["selectivity"]),
        np.ascontiguousarray(state["fecundity"]),
        float(state["female_prop"]),
        np.ascontiguousarray(noise["z_r"]),
        np.ascontiguousarray(noise["z_n"]),
        np.ascontiguousarray(noise["z_s"]),
        int(state["o_tail"].shape[2]))
    return ProjectionResult(
        policy=policy.name, stock_ids=list(state["stock_ids"]),
        fishery_ids=list(state["fishery_ids"]),
        smolts=R, catch=Csum, capacity=1.0 / state["beta"])


@dataclass
class PolicyComparison:
    results: dict  # name -> ProjectionResult
    horizon: int
    seed: int

    def summary(self, **kwargs):
        return {
            "horizon": int(self.horizon),
            "seed": int(self.seed),
            "policies": {name: r.summary(**kwargs)
                         for name, r in self.results.items()},
        }


def compare_policies(state, policies, horizon, seed=0) -> PolicyComparison:
    """Project the same draws under each policy with shared noise."""
    names = [p.name for p in policies]
    if len(set(names)) != len(names):
        raise ValidationError("compare_policies: duplicate policy names")
    noise = make_projection_noise(state, horizon, seed)
    results = {}
    for pol in policies:
        results[pol.name] = project(state, pol, horizon, noise=noise)
    return PolicyComparison(results=results, horizon=horizon, seed=seed)
