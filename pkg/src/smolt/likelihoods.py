"""Observation model: fishing mortality, expected catches, and the
log-likelihood terms linking latent states to data.

All catch observations are lognormal around the Baranov expectation with a
mean-preserving shift (log C_obs ~ N(log C_exp - sigma^2/2, sigma)), so the
observation MEAN, not the median, equals the model catch. Spawner counts use
the same form. Tag recoveries are multinomial over (fishery, year) cells with
a never-seen cell absorbing natural mortality, non-reporting and survival
past the recovery horizon.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import K
from .errors import DomainError, ValidationError


def fishing_mortality(q, effort, selectivity):
    """Effort-proportional instantaneous F.

    q: (nf,) catchabilities; effort: (nf, ny); selectivity: (nf, na+1) with
    column 0 the post-smolt year. Returns (F_fishery, F_total) of shapes
    (nf, ny, na+1) and (ny, na+1).
    """
    q = np.ascontiguousarray(q, dtype=float)
    effort = np.ascontiguousarray(effort, dtype=float)
    sel = np.ascontiguousarray(selectivity, dtype=float)
    if q.ndim != 1 or effort.ndim != 2 or sel.ndim != 2:
        raise ValidationError("fishing_mortality: bad ranks")
    if effort.shape[0] != q.shape[0] or sel.shape[0] != q.shape[0]:
        raise ValidationError("fishing_mortality: inconsistent fishery count")
    if np.any(q < 0) or np.any(effort < 0) or np.any(sel < 0):
        raise DomainError("fishing_mortality: negative input")
    return K.fishing_mortality_grid(q, effort, sel)


def expected_catch(n_sea, age0, f_fishery, f_total, m, s74):
    """Baranov expected catch per fishery and year.

    n_sea: (ny, na) total abundance at sea ages 1..A_max (wild plus reared);
    age0: (ny,) abundance entering the post-smolt year (M74 survival applies
    inside via M_eff = M - log s74). Returns (nf, ny).
    """
    n_sea = np.ascontiguousarray(n_sea, dtype=float)
    age0 = np.ascontiguousarray(age0, dtype=float)
    m = np.ascontiguousarray(m, dtype=float)
    s74 = np.ascontiguousarray(s74, dtype=float)
    if np.any(n_sea < 0) or np.any(age0 < 0):
        raise DomainError("expected_catch: negative abundance")
    if np.any(s74 < 0) or np.any(s74 > 1):
        raise DomainError("expected_catch: s74 outside [0, 1]")
    return K.catch_grid(n_sea, age0,
                        np.ascontiguousarray(f_fishery, dtype=float),
                        np.ascontiguousarray(f_total, dtype=float), m, s74)


def loglik_catch(observed, expected, sd):
    """Sum of lognormal catch log-densities; -inf when any expected
    catch is nonpositive while an observation exists."""
    observed = np.atleast_1d(np.asarray(observed, dtype=float))
    expected = np.atleast_1d(np.asarray(expected, dtype=float))
    sd = np.broadcast_to(np.asarray(sd, dtype=float), observed.shape)
    if observed.shape != expected.shape:
        raise ValidationError("loglik_catch: shape mismatch")
    if np.any(observed <= 0) or np.any(sd <= 0):
        raise DomainError("loglik_catch: observations and sd must be > 0")
    lp = 0.0
    for k in range(observed.size):
        lp += K.lognormal_obs_loglik(float(np.log(observed.flat[k])),
                                     float(expected.flat[k]),
                                     float(sd.flat[k]))
        if lp == -np.inf:
            return -np.inf
    return float(lp)


def loglik_spawner_count(observed, expected_total, cv):
    """Spawner count likelihood: lognormal with sd = sqrt(log(1 + cv^2)),
    mean-preserving shift as for catches."""
    sd = np.sqrt(np.log1p(np.square(np.asarray(cv, dtype=float))))
    return loglik_catch(observed, expected_total, sd)


def loglik_smolt_approx(log_smolts, mu, sd):
    """Normal approximation on log smolt abundance carried forward from the
    river stage."""
    log_smolts = np.atleast_1d(np.asarray(log_smolts, dtype=float))
    mu = np.broadcast_to(np.asarray(mu, dtype=float), log_smolts.shape)
    sd = np.broadcast_to(np.asarray(sd, dtype=float), log_smolts.shape)
    if np.any(sd <= 0):
        raise DomainError("loglik_smolt_approx: sd must be > 0")
    r = (log_smolts - mu) / sd
    return float(np.sum(-0.5 * r * r - np.log(sd) - 0.5 * np.log(2 * np.pi)))


def loglik_tags(release_years, released, recoveries, reporting_rates,
                f_fishery, f_total, m, maturation, s74):
    """Carlin-tag multinomial log-likelihood over recovery cells.

    release_years: (nc,) year index of each cohort's sea entry; released:
    (nc,) tag counts; recoveries: (nc, nf, ny) recovery counts. Tagged fish
    are smolts, so they face the same M74 survival and post-smolt mortality
    as the wild age-0 group, then age with maturation removals.
    """
    rel = np.ascontiguousarray(release_years, dtype=np.int64)
    m_tags = np.ascontiguousarray(released, dtype=np.float64)
    rec = np.ascontiguousarray(recoveries, dtype=np.float64)
    lam = np.ascontiguousarray(reporting_rates, dtype=np.float64)
    if rec.ndim != 3 or rec.shape[0] != rel.shape[0]:
        raise ValidationError("loglik_tags: recoveries must be (nc, nf, ny)")
    if np.any(m_tags <= 0):
        raise DomainError("loglik_tags: released must be > 0")
    if np.any(rec < 0):
        raise DomainError("loglik_tags: negative recovery count")
    return float(K.tag_loglik(
        rel, m_tags, rec, lam,
        np.ascontiguousarray(f_fishery, dtype=float),
        np.ascontiguousarray(f_total, dtype=float),
        np.ascontiguousarray(m, dtype=float),
        np.ascontiguousarray(maturation, dtype=float),
        np.ascontiguousarray(s74, dtype=float)))


@dataclass
class ObservationPack:
    """Dense kernel-ready views of one Dataset's observations.

    Index arrays are int64 and value arrays float64, contiguous, so they can
    be handed straight to the jitted log-posterior.
    """

    effort: np.ndarray          # (nf, ny)
    selectivity: np.ndarray     # (nf, na+1)
    reporting_rates: np.ndarray  # (nf,)
    releases: np.ndarray        # (ny,) reared smolt releases
    cat_f: np.ndarray
    cat_t: np.ndarray
    cat_logobs: np.ndarray
    cat_sig: np.ndarray
    tag_rel: np.ndarray         # (nc,) release year indices
    tag_m: np.ndarray           # (nc,) released counts
    tag_rec: np.ndarray         # (nc, nf, ny)
    sp_i: np.ndarray
    sp_t: np.ndarray
    sp_logobs: np.ndarray
    sp_sig: np.ndarray
    sm_i: np.ndarray
    sm_t: np.ndarray
    sm_mu: np.ndarray
    sm_sd: np.ndarray

    def loglik_args(self):
        return (self.effort, self.selectivity, self.releases,
                self.cat_f, self.cat_t, self.cat_logobs, self.cat_sig,
                self.tag_rel, self.tag_m, self.tag_rec, self.reporting_rates,
                self.sp_i, self.sp_t, self.sp_logobs, self.sp_sig,
                self.sm_i, self.sm_t, self.sm_mu, self.sm_sd)


def pack_observations(dataset, smolt_approx=None) -> ObservationPack:
    """Flatten a Dataset into kernel arrays.

    smolt_approx: optional list of SmoltLikelihoodApprox carrying the river
    stage's normal approximation on log smolts; zero-catch records are
    dropped (no mass at zero in a lognormal; effort still contributes to F).
    """
    nf = len(dataset.fisheries)
    ny = dataset.n_years
    cat_f, cat_t, cat_logobs, cat_sig = [], [], [], []
    for rec in dataset.catch_effort:
        if rec.catch > 0:
            f = dataset.fishery_index(rec.fishery)
            cat_f.append(f)
            cat_t.append(dataset.year_index(rec.year))
            cat_logobs.append(np.log(rec.catch))
            cat_sig.append(dataset.fisheries[f].obs_sd)
    cohorts = sorted(dataset.tag_cohorts, key=lambda c: (c.release_year,
                                                         c.cohort))
    nc = len(cohorts)
    tag_rel = np.zeros(nc, dtype=np.int64)
    tag_m = np.zeros(nc)
    tag_rec = np.zeros((nc, nf, ny))
    for k, c in enumerate(cohorts):
        tag_rel[k] = dataset.year_index(c.release_year)
        tag_m[k] = c.released
        for (fishery, year), n in c.recoveries.items():
            tag_rec[k, dataset.fishery_index(fishery),
                    dataset.year_index(year)] += n
    sp_i, sp_t, sp_logobs, sp_sig = [], [], [], []
    for rec in dataset.spawner_counts:
        if rec.count > 0:
            sp_i.append(dataset.stock_index(rec.stock))
            sp_t.append(dataset.year_index(rec.year))
            sp_logobs.append(np.log(rec.count))
            sp_sig.append(np.sqrt(np.log1p(rec.cv ** 2)))
    sm_i, sm_t, sm_mu, sm_sd = [], [], [], []
    for rec in (smolt_approx or []):
        sm_i.append(dataset.stock_index(rec.stock))
        sm_t.append(dataset.year_index(rec.year))
        sm_mu.append(rec.mu)
        sm_sd.append(rec.sd)
    return ObservationPack(
        effort=np.ascontiguousarray(dataset.effort_grid()),
        selectivity=np.ascontiguousarray(
            np.stack([f.selectivity for f in dataset.fisheries])),
        reporting_rates=np.array([f.reporting_rate
                                  for f in dataset.fisheries]),
        releases=np.ascontiguousarray(dataset.reared_grid()),
        cat_f=np.asarray(cat_f, dtype=np.int64),
        cat_t=np.asarray(cat_t, dtype=np.int64),
        cat_logobs=np.asarray(cat_logobs, dtype=np.float64),
        cat_sig=np.asarray(cat_sig, dtype=np.float64),
        tag_rel=tag_rel, tag_m=tag_m, tag_rec=tag_rec,
        sp_i=np.asarray(sp_i, dtype=np.int64),
        sp_t=np.asarray(sp_t, dtype=np.int64),
        sp_logobs=np.asarray(sp_logobs, dtype=np.float64),
        sp_sig=np.asarray(sp_sig, dtype=np.float64),
        sm_i=np.asarray(sm_i, dtype=np.int64),
        sm_t=np.asarray(sm_t, dtype=np.int64),
        sm_mu=np.asarray(sm_mu, dtype=np.float64),
        sm_sd=np.asarray(sm_sd, dtype=np.float64))
