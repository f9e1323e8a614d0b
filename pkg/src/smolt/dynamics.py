"""Age-structured life-history dynamics.

State per stock i and year t: smolts R[i,t], sea abundance N[i,t,a] for sea
ages a = 1..A_max, spawners S[i,t,a], eggs O[i,t]. Transitions:

    N[i,t+1,1]   = R[i,t]  * exp(-F[t,0] - M[t,0]) * s74[t] * eps
    N[i,t+1,a+1] = (1-L_a) * N[i,t,a] * exp(-F[t,a] - M[t,a]) * eps
    S[i,t,a]     = L_a * N[i,t,a] * exp(-F[t,a] - M[t,a]) * eps
    O[i,t]       = sum_a p * f_a * S[i,t,a]
    R[i,t+T]     = O[i,t] / (alpha_i + beta_i * O[i,t]) * eps

Process errors are mean-one lognormal, eps = exp(sigma*z - sigma^2/2) with z
standard normal. s74 is the first-year M74 survival of the cohort leaving the
river in year t. All operations are pure; the batch/hot path lives in the
kernel backends (see `_backend`).
"""

from dataclasses import dataclass, field

import numpy as np

from ._backend import K
from .errors import DomainError, ValidationError


def _check_nonneg(name, *vals):
    for v in vals:
        arr = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise DomainError(f"{name}: inputs must be finite and >= 0")


@dataclass(frozen=True)
class AgeStructure:
    """Sea-age layout: ages 1..max_sea_age, plus the post-smolt year (age 0);
    smolt_delay is the egg-cohort-to-smolt lag in years."""

    max_sea_age: int
    smolt_delay: int

    def __post_init__(self):
        if self.max_sea_age < 1 or self.smolt_delay < 1:
            raise ValidationError("max_sea_age and smolt_delay must be >= 1")

    @property
    def n_ages(self):
        return self.max_sea_age


@dataclass(frozen=True)
class StockParams:
    """Beverton-Holt parameters and egg production for one stock.

    pspc (potential smolt production capacity) is the recruitment asymptote
    1/beta and must satisfy pspc * beta == 1.
    """

    alpha: float
    beta: float
    fecundity: np.ndarray  # eggs per female spawner, by sea age
    female_prop: float
    pspc: float = None

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValidationError("alpha and beta must be > 0")
        if self.pspc is None:
            object.__setattr__(self, "pspc", 1.0 / self.beta)
        if not np.isclose(self.pspc * self.beta, 1.0, rtol=1e-12, atol=0):
            raise ValidationError("pspc must equal 1/beta")
        if not 0.0 <= self.female_prop <= 1.0:
            raise ValidationError("female_prop must be in [0, 1]")
        fec = np.asarray(self.fecundity, dtype=float)
        if np.any(fec <= 0) or np.any(np.diff(fec) < 0):
            raise ValidationError("fecundity must be positive and nondecreasing")
        object.__setattr__(self, "fecundity", fec)


@dataclass(frozen=True)
class MortalitySchedule:
    """Instantaneous rates per (year, age column); column 0 is the post-smolt
    year, columns 1..A_max the sea ages."""

    F: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        F = np.asarray(self.F, dtype=float)
        M = np.asarray(self.M, dtype=float)
        if F.shape != M.shape or F.ndim != 2:
            raise ValidationError("F and M must be 2-d with matching shapes")
        if (not np.all(np.isfinite(F)) or np.any(F < 0)
                or not np.all(np.isfinite(M)) or np.any(M < 0)):
            raise DomainError("mortality rates must be finite and >= 0")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "M", M)


@dataclass(frozen=True)
class MaturationSchedule:
    """Fraction maturing at each sea age; the oldest age matures fully."""

    L: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float)
        if np.any(L < 0) or np.any(L > 1):
            raise ValidationError("maturation fractions must be in [0, 1]")
        if L[-1] != 1.0:
            raise ValidationError("L at the oldest sea age must be 1")
        object.__setattr__(self, "L", L)


@dataclass(frozen=True)
class M74Series:
    """First-year juvenile survival from M74 syndrome, per year."""

    s74: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s74, dtype=float)
        if np.any(s < 0) or np.any(s > 1):
            raise ValidationError("M74 survivals must be in [0, 1]")
        object.__setattr__(self, "s74", s)


@dataclass(frozen=True)
class ProcessNoise:
    """Log-scale sds per transition type plus the standard-normal innovations.

    z_r[i, j] perturbs R[i, j + smolt_delay]; z_n[i, t, a] the transition into
    year t+1; z_s[i, t, a] the year-t spawner split.
    """

    sigma_r: float
    sigma_n: float
    sigma_s: float
    z_r: np.ndarray
    z_n: np.ndarray
    z_s: np.ndarray

    def __post_init__(self):
        if min(self.sigma_r, self.sigma_n, self.sigma_s) < 0:
            raise ValidationError("process sigmas must be >= 0")


@dataclass
class StockState:
    """Latent trajectories; shapes R,O: (stocks, years), N,S: (stocks, years, ages)."""

    R: np.ndarray
    N: np.ndarray
    S: np.ndarray
    O: np.ndarray

    @classmethod
    def zeros(cls, n_stocks, n_years, n_ages):
        return cls(R=np.zeros((n_stocks, n_years)),
                   N=np.zeros((n_stocks, n_years, n_ages)),
                   S=np.zeros((n_stocks, n_years, n_ages)),
                   O=np.zeros((n_stocks, n_years)))

    def copy(self):
        return StockState(self.R.copy(), self.N.copy(),
                          self.S.copy(), self.O.copy())


def process_error(sigma, z):
    """Mean-one multiplicative error exp(sigma*z - sigma^2/2)."""
    return np.exp(sigma * np.asarray(z, dtype=float) - 0.5 * sigma * sigma)


def bh_recruitment(eggs, alpha, beta):
    """Beverton-Holt expected smolts O/(alpha + beta*O); saturates at 1/beta."""
    _check_nonneg("bh_recruitment", eggs)
    if not (np.all(np.asarray(alpha) > 0) and np.all(np.asarray(beta) > 0)):
        raise DomainError("bh_recruitment: alpha and beta must be > 0")
    eggs, alpha, beta = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (eggs, alpha, beta)))
    out = K.bh_batch(eggs.ravel(), alpha.ravel(), beta.ravel())
    return float(out[0]) if out.size == 1 and eggs.ndim == 0 \
        else out.reshape(eggs.shape)


def survival_kernel(n, f, m, eps=1.0):
    """Survivors n * exp(-F - M) * eps."""
    _check_nonneg("survival_kernel", n, f, m)
    if np.any(np.asarray(eps) <= 0):
        raise DomainError("survival_kernel: eps must be > 0")
    n, f, m, eps = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (n, f, m, eps)))
    out = K.survival_batch(n.ravel(), f.ravel(), m.ravel(), eps.ravel())
    return float(out[0]) if out.size == 1 and n.ndim == 0 \
        else out.reshape(n.shape)


def spawners_from_sea(n, maturing, f, m, eps=1.0):
    """Spawners L_a * N * exp(-F - M) * eps."""
    _check_nonneg("spawners_from_sea", n, f, m)
    if np.any((np.asarray(maturing) < 0) | (np.asarray(maturing) > 1)):
        raise DomainError("spawners_from_sea: maturing fraction in [0, 1]")
    n, mat, f, m, eps = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (n, maturing, f, m, eps)))
    out = K.spawners_batch(n.ravel(), mat.ravel(), f.ravel(), m.ravel(),
                           eps.ravel())
    return float(out[0]) if out.size == 1 and n.ndim == 0 \
        else out.reshape(n.shape)


def eggs_from_spawners(spawners, fecundity, female_prop):
    """Total eggs sum_a p * f_a * S_a; linear and homogeneous in S."""
    sp = np.atleast_2d(np.asarray(spawners, dtype=float))
    fec = np.asarray(fecundity, dtype=float)
    if np.any(fec < 0) or not np.all(np.isfinite(fec)):
        raise DomainError("eggs_from_spawners: fecundity must be >= 0")
    _check_nonneg("eggs_from_spawners", sp)
    out = K.eggs_batch(sp, fec, float(female_prop))
    return float(out[0]) if np.asarray(spawners).ndim == 1 else out


def depletion_ratio(smolts, pspc):
    """Smolt abundance as a fraction of PSPC; may exceed 1."""
    if np.any(np.asarray(pspc) <= 0):
        raise DomainError("depletion_ratio: pspc must be > 0")
    _check_nonneg("depletion_ratio", smolts)
    return np.asarray(smolts, dtype=float) / np.asarray(pspc, dtype=float)


@dataclass(frozen=True)
class StepParams:
    """Everything `step_population` needs for one year's transition."""

    ages: AgeStructure
    stocks: list  # StockParams per stock
    mortality: MortalitySchedule  # full (years, ages+1) grids
    maturation: MaturationSchedule
    m74: M74Series
    noise: ProcessNoise


def step_population(state: StockState, t: int, params: StepParams) -> StockState:
    """Advance the population one year: fills S[., t, .], O[., t], R[., t+T]
    (when in range) and N[., t+1, .].

    Applies, in order: the smolt -> post-smolt transition (with M74 survival),
    aging of the sea population, the spawner split, egg production, and
    Beverton-Holt recruitment with process error. Deterministic given the
    noise draws in `params.noise`.
    """
    ns, ny = state.R.shape
    na = state.N.shape[2]
    T = params.ages.smolt_delay
    if t + 1 >= ny:
        raise ValidationError("step_population: t+1 beyond the horizon")
    if len(params.stocks) != ns or params.maturation.L.shape[0] != na:
        raise ValidationError("step_population: dimension mismatch")
    F, M = params.mortality.F, params.mortality.M
    L = params.maturation.L
    nz = params.noise
    out = state.copy()
    eps_n = process_error(nz.sigma_n, nz.z_n[:, t, :])
    eps_s = process_error(nz.sigma_s, nz.z_s[:, t, :])
    for i in range(ns):
        # 1) smolt -> post-smolt, M74 survival inside the first sea year
        out.N[i, t + 1, 0] = survival_kernel(
            state.R[i, t], F[t, 0], M[t, 0],
            eps_n[i, 0]) * params.m74.s74[t]
        # 2) aging with maturation removal
        for a in range(na - 1):
            out.N[i, t + 1, a + 1] = (1.0 - L[a]) * survival_kernel(
                state.N[i, t, a], F[t, a + 1], M[t, a + 1], eps_n[i, a + 1])
        # 3) spawners, 4) eggs
        for a in range(na):
            out.S[i, t, a] = spawners_from_sea(
                state.N[i, t, a], L[a], F[t, a + 1], M[t, a + 1], eps_s[i, a])
        sp = params.stocks[i]
        out.O[i, t] = eggs_from_spawners(out.S[i, t, :], sp.fecundity,
                                         sp.female_prop)
        # 5) recruitment T years on
        if t + T < ny:
            out.R[i, t + T] = bh_recruitment(out.O[i, t], sp.alpha, sp.beta) \
                * process_error(nz.sigma_r, nz.z_r[i, t])
    return out


def simulate_trajectories(alpha, beta, mortality: MortalitySchedule,
                          maturation: MaturationSchedule, m74: M74Series,
                          noise: ProcessNoise, fecundity, female_prop,
                          r_seed, n_init, smolt_delay) -> StockState:
    """Full multi-year trajectories through the kernel backend (hot path)."""
    R, N, S, O = K.traj_core(
        np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float),
        mortality.F, mortality.M, maturation.L, m74.s74,
        float(noise.sigma_r), float(noise.sigma_n), float(noise.sigma_s),
        float(female_prop), np.asarray(fecundity, dtype=float),
        np.asarray(r_seed, dtype=float), np.asarray(n_init, dtype=float),
        noise.z_r, noise.z_n, noise.z_s, smolt_delay)
    return StockState(R=R, N=N, S=S, O=O)
