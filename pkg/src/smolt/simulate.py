"""Synthetic assessment generator: true states from the population model,
observations from the same error families the likelihood assumes.

Used for calibration checks (does the posterior cover the truth?) and for
the bundled demos. Every random quantity comes from one SeedSequence, so a
(design, seed) pair pins the dataset bit-for-bit.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._backend import K
from .data import (CatchEffortRecord, Dataset, ElectrofishingRecord,
                   ExpertQuantiles, ExternalSRSeries, FisheryDef, M74Record,
                   SmoltTrapRecord, SpawnerCount, StockDef, TagCohort)
from .errors import ValidationError
from .params import ParameterLayout


@dataclass
class SimulationDesign:
    """True parameter values and observation plans for one synthetic
    assessment. Defaults give the medium demo used by the calibration
    checks; `make_demo` builds the standard sizes."""

    n_stocks: int = 4
    n_years: int = 25
    max_sea_age: int = 4
    n_fisheries: int = 3
    smolt_delay: int = 4
    parr_lag: int = 1
    year_start: int = 2000
    habitat_area: np.ndarray = None      # (ns,)
    capacity_per_area: float = 40.0
    alpha_true: np.ndarray = None        # (ns,) eggs per smolt at low density
    q_true: np.ndarray = None            # (nf,)
    maturation_true: np.ndarray = None   # (na,), last = 1
    m_post_smolt: float = 1.0
    m_adult: float = 0.15
    sigma_true: tuple = (0.25, 0.15, 0.10)
    fecundity: np.ndarray = None         # (na,)
    female_prop: float = 0.5
    s74_logit_mean: float = 1.8
    s74_logit_sd: float = 0.8
    effort_base: np.ndarray = None       # (nf,)
    selectivity: np.ndarray = None       # (nf, na+1)
    reporting_rate: np.ndarray = None    # (nf,)
    catch_obs_sd: float = 0.10
    spawner_cv: float = 0.15
    spawner_years_from: int = 3
    trap_stocks: tuple = (0, 1)
    trap_years: tuple = None             # default: years 4..ny-2
    trap_marked: int = 600
    trap_pi: float = 0.08
    ef_sites: int = 5
    ef_site_sd: float = 0.35
    theta_mean: float = 0.45             # parr-to-smolt survival
    theta_river_sd: float = 0.15
    tag_cohort_years: tuple = None       # default: every other year
    tag_released: int = 3000
    n_external_stocks: int = 6
    external_len: int = 15
    external_sr_sd: float = 0.30
    m74_families: int = 40
    reared_per_year: float = 30000.0

    def __post_init__(self):
        ns, na, nf = self.n_stocks, self.max_sea_age, self.n_fisheries
        if self.habitat_area is None:
            self.habitat_area = np.linspace(600.0, 2400.0, ns)
        if self.alpha_true is None:
            self.alpha_true = np.full(ns, 60.0)
        if self.q_true is None:
            self.q_true = np.full(nf, 0.02)
        if self.maturation_true is None:
            m = np.linspace(0.2, 0.8, na)
            m[-1] = 1.0
            self.maturation_true = m
        if self.fecundity is None:
            self.fecundity = 4000.0 + 5500.0 * np.arange(na)
        if self.effort_base is None:
            self.effort_base = np.full(nf, 10.0)
        if self.selectivity is None:
            sel = np.zeros((nf, na + 1))
            ages = np.arange(na + 1)
            for f in range(nf):
                peak = 1.0 + f * (na - 1) / max(nf - 1, 1)
                sel[f] = np.exp(-0.5 * ((ages - peak) / 1.2) ** 2)
                sel[f, 0] *= 0.2  # post-smolts are poorly available everywhere
                sel[f] /= sel[f].max()
            self.selectivity = sel
        if self.reporting_rate is None:
            self.reporting_rate = np.linspace(0.5, 0.8, nf)
        if self.trap_years is None:
            self.trap_years = tuple(range(4, self.n_years - 1))
        if self.tag_cohort_years is None:
            self.tag_cohort_years = tuple(range(2, self.n_years - 2, 2))
        self.habitat_area = np.asarray(self.habitat_area, dtype=float)
        self.alpha_true = np.asarray(self.alpha_true, dtype=float)
        self.q_true = np.asarray(self.q_true, dtype=float)
        self.maturation_true = np.asarray(self.maturation_true, dtype=float)
        self.fecundity = np.asarray(self.fecundity, dtype=float)
        self.effort_base = np.asarray(self.effort_base, dtype=float)
        self.reporting_rate = np.asarray(self.reporting_rate, dtype=float)

    @property
    def capacity(self):
        return self.capacity_per_area * self.habitat_area

    @property
    def beta_true(self):
        return 1.0 / self.capacity

    def layout(self):
        return ParameterLayout(ns=self.n_stocks, ny=self.n_years,
                               na=self.max_sea_age, nf=self.n_fisheries,
                               tdelay=self.smolt_delay)


@dataclass
class SimulationTruth:
    """True parameters and latent states behind one synthetic dataset."""

    design: SimulationDesign
    params: dict              # natural-scale dict packable by the layout
    x_true: np.ndarray        # same content on the sampling scale
    R: np.ndarray
    N: np.ndarray
    S: np.ndarray
    O: np.ndarray
    Nr: np.ndarray
    expected_catch: np.ndarray
    theta: np.ndarray         # per-river parr-to-smolt survival
    effort: np.ndarray


def tag_cell_probabilities(t0, f_fishery, f_total, m, maturation, s74,
                           reporting, n_years):
    """Recovery probability per (fishery, year) cell for one smolt cohort
    entering the sea in year t0, plus the never-seen remainder. Mirrors the
    likelihood's survival accounting and doubles as its oracle in tests."""
    nf = f_fishery.shape[0]
    na = maturation.shape[0]
    probs = np.zeros((nf, n_years))
    frac = 1.0
    for t in range(t0, n_years):
        a = t - t0
        if a > na:
            break
        if a == 0:
            if s74[t] <= 0.0:
                frac = 0.0
                break
            z = f_total[t, 0] + m[t, 0] - math.log(s74[t])
            col = 0
        else:
            z = f_total[t, a] + m[t, a]
            col = a
        for f in range(nf):
            if z > 0 and f_fishery[f, t, col] > 0:
                probs[f, t] = frac * (f_fishery[f, t, col] / z) \
                    * (1.0 - math.exp(-z)) * reporting[f]
        frac *= math.exp(-z)
        if a >= 1:
            frac *= 1.0 - maturation[a - 1]
        if frac <= 0.0:
            break
    return probs, 1.0 - probs.sum()


def simulate(design: SimulationDesign, seed=0):
    """Generate (dataset, truth) for a design. Observation noise follows the
    model's error families exactly; see the module docstring."""
    ds_seed = np.random.SeedSequence(seed)
    rngs = [np.random.Generator(np.random.PCG64(s))
            for s in ds_seed.spawn(8)]
    (rng_s74, rng_proc, rng_catch, rng_tags, rng_river, rng_spawn,
     rng_external, rng_m74) = rngs
    d = design
    ns, ny, na, nf, T = (d.n_stocks, d.n_years, d.max_sea_age,
                         d.n_fisheries, d.smolt_delay)
    lay = d.layout()

    s74 = special.expit(d.s74_logit_mean
                        + d.s74_logit_sd * rng_s74.standard_normal(ny))
    z_r = rng_proc.standard_normal((ns, ny - T))
    z_n = rng_proc.standard_normal((ns, ny - 1, na))
    z_s = rng_proc.standard_normal((ns, ny, na))

    effort = np.empty((nf, ny))
    for f in range(nf):
        trend = np.linspace(1.2, 0.8, ny) if f == 0 else np.ones(ny)
        effort[f] = d.effort_base[f] * trend
    _, Ftot = K.fishing_mortality_grid(d.q_true, effort, d.selectivity)
    Ff, _ = K.fishing_mortality_grid(d.q_true, effort, d.selectivity)
    M = np.empty((ny, na + 1))
    M[:, 0] = d.m_post_smolt
    M[:, 1:] = d.m_adult

    # seed years at 60% capacity, first-year sea ages decayed from that
    r_seed = np.tile((0.6 * d.capacity)[:, None], (1, T))
    n_init = np.empty((ns, na))
    for i in range(ns):
        n = 0.6 * d.capacity[i] * s74[0] * math.exp(-d.m_post_smolt)
        for a in range(na):
            n_init[i, a] = n
            n *= (1.0 - d.maturation_true[a]) * math.exp(-d.m_adult)
    sig_r, sig_n, sig_s = d.sigma_true
    R, N, S, O = K.traj_core(
        d.alpha_true, d.beta_true, Ftot, M, d.maturation_true, s74,
        sig_r, sig_n, sig_s, d.female_prop, d.fecundity,
        r_seed, n_init, z_r, z_n, z_s, T)
    releases = np.full(ny, d.reared_per_year)
    Nr = K.reared_core(releases, Ftot, M, d.maturation_true, s74)
    n_tot = N.sum(axis=0) + Nr
    age0 = R.sum(axis=0) + releases
    C = K.catch_grid(n_tot, age0, Ff, Ftot, M, s74)

    params = {
        "alpha": d.alpha_true, "beta": d.beta_true, "q": d.q_true,
        "maturation": d.maturation_true,
        "mortality": np.array([d.m_post_smolt, d.m_adult]),
        "sigma": np.array(d.sigma_true), "s74": s74,
        "r_seed": r_seed, "n_init": n_init,
        "z_r": z_r, "z_n": z_n, "z_s": z_s,
    }
    x_true = lay.pack(params)

    stocks = [StockDef(f"river_{i}", float(d.habitat_area[i]))
              for i in range(ns)]
    fisheries = [FisheryDef(f"fishery_{f}", float(d.q_true[f]),
                            d.selectivity[f], float(d.reporting_rate[f]),
                            d.catch_obs_sd) for f in range(nf)]
    ds = Dataset(year_start=d.year_start, n_years=ny, max_sea_age=na,
                 smolt_delay=T, stocks=stocks, fisheries=fisheries,
                 fecundity=d.fecundity, female_prop=d.female_prop,
                 m_post_smolt=d.m_post_smolt, m_adult=d.m_adult,
                 parr_lag=d.parr_lag)
    for year, n in zip(ds.years, releases):
        ds.reared_releases[int(year)] = float(n)

    sd_c = d.catch_obs_sd
    for f in range(nf):
        for t in range(ny):
            obs = C[f, t] * math.exp(sd_c * rng_catch.standard_normal()
                                     - 0.5 * sd_c * sd_c)
            ds.catch_effort.append(CatchEffortRecord(
                fisheries[f].id, int(ds.years[t]), float(effort[f, t]),
                float(obs)))

    sd_sp = math.sqrt(math.log1p(d.spawner_cv ** 2))
    for i in range(ns):
        for t in range(d.spawner_years_from, ny):
            exp_tot = float(S[i, t].sum())
            obs = exp_tot * math.exp(sd_sp * rng_spawn.standard_normal()
                                     - 0.5 * sd_sp * sd_sp)
            ds.spawner_counts.append(SpawnerCount(
                stocks[i].id, int(ds.years[t]), float(obs), d.spawner_cv))

    for t0 in d.tag_cohort_years:
        probs, never = tag_cell_probabilities(
            t0, Ff, Ftot, M, d.maturation_true, s74, d.reporting_rate, ny)
        flat = np.append(probs.ravel(), never)
        counts = rng_tags.multinomial(d.tag_released, flat / flat.sum())
        cohort = TagCohort(f"cohort_{d.year_start + t0}",
                           int(ds.years[t0]), d.tag_released)
        grid = counts[:-1].reshape(nf, ny)
        for f in range(nf):
            for t in range(ny):
                if grid[f, t] > 0:
                    cohort.recoveries[(fisheries[f].id, int(ds.years[t]))] = \
                        int(grid[f, t])
        ds.tag_cohorts.append(cohort)

    theta = d.theta_mean * np.exp(
        d.theta_river_sd * rng_river.standard_normal(ns))
    for i in range(ns):
        for t in range(ny):
            ts = t + d.parr_lag  # the year these parr run as smolts
            if not 0 <= ts < ny:
                continue
            parr_abund = R[i, ts] / theta[i]
            dens = parr_abund / d.habitat_area[i]
            for k in range(d.ef_sites):
                site = dens * math.exp(
                    d.ef_site_sd * rng_river.standard_normal()
                    - 0.5 * d.ef_site_sd ** 2)
                ds.electrofishing.append(ElectrofishingRecord(
                    stocks[i].id, int(ds.years[t]), f"site_{k}",
                    float(site), 1.0))

    for i in d.trap_stocks:
        for t in d.trap_years:
            run = R[i, t]
            cu = int(rng_river.poisson(run * d.trap_pi))
            rec = int(rng_river.binomial(d.trap_marked, d.trap_pi))
            ds.smolt_traps.append(SmoltTrapRecord(
                stocks[i].id, int(ds.years[t]), d.trap_marked,
                cu + rec, rec))

    # expert quantiles: centered on true capacity, about a factor-2 spread
    for i in range(ns):
        cap = d.capacity[i]
        ds.expert_pspc.append(ExpertQuantiles(
            stocks[i].id, np.array([0.1, 0.5, 0.9]),
            cap * np.array([0.53, 1.0, 1.9])))

    hyper_mean = np.array([math.log(60.0), -math.log(50000.0)])
    hyper_chol = np.linalg.cholesky(
        np.array([[0.16, 0.05], [0.05, 0.64]]))
    for j in range(d.n_external_stocks):
        la, lb = hyper_mean + hyper_chol @ rng_external.standard_normal(2)
        aj, bj = math.exp(la), math.exp(lb)
        cap_j = 1.0 / bj
        eggs = cap_j * aj * np.exp(
            rng_external.uniform(math.log(0.05), math.log(3.0),
                                 d.external_len))
        rec = eggs / (aj + bj * eggs) * np.exp(
            d.external_sr_sd * rng_external.standard_normal(d.external_len)
            - 0.5 * d.external_sr_sd ** 2)
        ds.external_sr.append(ExternalSRSeries(f"external_{j}", eggs, rec))

    for t in range(ny):
        affected = int(rng_m74.binomial(d.m74_families, 1.0 - s74[t]))
        ds.m74.append(M74Record(int(ds.years[t]), d.m74_families, affected))

    ds.validate()
    truth = SimulationTruth(design=d, params=params, x_true=x_true,
                            R=R, N=N, S=S, O=O, Nr=Nr, expected_catch=C,
                            theta=theta, effort=effort)
    return ds, truth


def make_demo(size="small", seed=0):
    """Standard demo designs: 'small' fits in seconds, 'medium' is the
    calibration-scale assessment (4 stocks, 25 years, 4 sea ages)."""
    if size == "small":
        design = SimulationDesign(
            n_stocks=2, n_years=12, max_sea_age=2, n_fisheries=2,
            smolt_delay=2, trap_stocks=(0,), trap_years=tuple(range(3, 10)),
            tag_cohort_years=(2, 4, 6), n_external_stocks=5,
            external_len=12, spawner_years_from=2)
    elif size == "medium":
        # effort high enough that some stocks sit well below capacity,
        # so recovery probabilities respond to policy changes
        design = SimulationDesign(
            effort_base=np.array([22.0, 16.0, 10.0]))
    else:
        raise ValidationError(f"unknown demo size {size!r}")
    return simulate(design, seed=seed)
