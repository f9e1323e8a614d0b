"""Prior construction from auxiliary sources, run before the life-history fit.

Three independent builders feed the main model:

  * expert quantiles on pre-fishery smolt production capacity, matched to a
    lognormal (capacity = 1/beta, so this pins down log beta);
  * external stock-recruit series, each reduced to a fitted
    (log alpha, log beta) point, then pooled into a bivariate normal whose
    predictive distribution supplies the conditional prior
    p(log alpha | log beta) for assessed stocks;
  * annual yolk-sac mortality screening (affected families / examined),
    turned into per-year Beta priors on the egg-to-smolt survival factor.

Each builder is deterministic given its inputs, so prior choices are fully
reproducible from the dataset alone.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class NormalPrior:
    mu: float
    sd: float

    def __post_init__(self):
        if not (self.sd > 0 and math.isfinite(self.sd)
                and math.isfinite(self.mu)):
            raise ValidationError("NormalPrior: bad mu/sd")

    def quantile(self, p):
        return self.mu + self.sd * special.ndtri(p)

    def logpdf(self, x):
        r = (np.asarray(x) - self.mu) / self.sd
        return -0.5 * r * r - math.log(self.sd) - 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class HalfNormalPrior:
    scale: float

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValidationError("HalfNormalPrior: scale must be > 0")


@dataclass(frozen=True)
class BetaPrior:
    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValidationError("BetaPrior: a, b must be > 0")

    @property
    def mean(self):
        return self.a / (self.a + self.b)

    @property
    def var(self):
        s = self.a + self.b
        return self.a * self.b / (s * s * (s + 1.0))


def fit_quantile_prior(probs, values) -> NormalPrior:
    """Lognormal matched to elicited quantiles, returned as the normal on the
    log scale. log(values) against standard-normal quantiles is linear under
    a lognormal, so two pairs solve exactly and more are fit by least
    squares."""
    p = np.asarray(probs, dtype=float)
    v = np.asarray(values, dtype=float)
    if p.ndim != 1 or p.shape != v.shape or p.size < 2:
        raise ValidationError("fit_quantile_prior: need >= 2 (prob, value) pairs")
    if np.any(p <= 0) or np.any(p >= 1) or np.any(np.diff(p) <= 0):
        raise DomainError("fit_quantile_prior: probs strictly increasing in (0,1)")
    if np.any(v <= 0) or np.any(np.diff(v) <= 0):
        raise DomainError("fit_quantile_prior: values strictly increasing, > 0")
    zq = special.ndtri(p)
    slope, intercept = np.polyfit(zq, np.log(v), 1)
    if slope <= 0:
        raise DomainError("fit_quantile_prior: implied sd nonpositive")
    return NormalPrior(mu=float(intercept), sd=float(slope))


def capacity_prior_to_log_beta(prior: NormalPrior) -> NormalPrior:
    """Capacity is 1/beta, so log beta = -log capacity: negate the mean."""
    return NormalPrior(mu=-prior.mu, sd=prior.sd)


def fit_beverton_holt(spawners, recruits):
    """Point fit of (log alpha, log beta) to one stock-recruit series by
    least squares on log recruitment. Start values come from the reciprocal
    regression 1/R = alpha/S + beta."""
    s = np.asarray(spawners, dtype=float)
    r = np.asarray(recruits, dtype=float)
    if s.shape != r.shape or s.size < 3:
        raise ValidationError("fit_beverton_holt: need >= 3 paired points")
    if np.any(s <= 0) or np.any(r <= 0):
        raise DomainError("fit_beverton_holt: values must be > 0")
    A = np.column_stack([1.0 / s, np.ones_like(s)])
    coef, *_ = np.linalg.lstsq(A, 1.0 / r, rcond=None)
    a0 = max(coef[0], 1e-12)
    b0 = max(coef[1], 1e-12 / float(np.max(s)))
    x0 = np.log([a0, b0])

    def resid(x):
        alpha, beta = np.exp(x)
        return np.log(r) - np.log(s / (alpha + beta * s))

    sol = optimize.least_squares(resid, x0, method="lm")
    if not sol.success:
        raise DomainError("fit_beverton_holt: fit did not converge")
    return float(sol.x[0]), float(sol.x[1])


@dataclass(frozen=True)
class SRHyperPrior:
    """Predictive bivariate normal for a new stock's (log alpha, log beta).

    cov_predictive already carries the 1 + 1/J inflation for predicting a
    new pair from J fitted external stocks.
    """

    mean: np.ndarray
    cov_between: np.ndarray
    cov_predictive: np.ndarray
    points: np.ndarray  # (J, 2) fitted external (log alpha, log beta)

    def conditional_alpha_given_beta(self):
        """(mu_a, mu_b, sd_a, sd_b, rho) so that
        log alpha | log beta ~ N(mu_a + rho (sd_a/sd_b)(log beta - mu_b),
        sd_a^2 (1 - rho^2))."""
        sd_a = math.sqrt(self.cov_predictive[0, 0])
        sd_b = math.sqrt(self.cov_predictive[1, 1])
        rho = self.cov_predictive[0, 1] / (sd_a * sd_b)
        return (float(self.mean[0]), float(self.mean[1]), sd_a, sd_b,
                float(rho))


def fit_sr_hyperprior(series_list) -> SRHyperPrior:
    """Fit each external series, then pool the (log alpha, log beta) points
    into the bivariate normal predictive N(mean, S (1 + 1/J))."""
    if len(series_list) < 3:
        raise ValidationError("fit_sr_hyperprior: need >= 3 external stocks")
    points = np.array([fit_beverton_holt(s.spawners, s.recruits)
                       for s in series_list])
    mean = points.mean(axis=0)
    cov = np.cov(points, rowvar=False, ddof=1)
    j = points.shape[0]
    cov_pred = cov * (1.0 + 1.0 / j)
    evals = np.linalg.eigvalsh(cov_pred)
    if np.any(evals <= 0):
        raise DomainError("fit_sr_hyperprior: degenerate between-stock covariance")
    rho = cov_pred[0, 1] / math.sqrt(cov_pred[0, 0] * cov_pred[1, 1])
    if abs(rho) > 0.999:
        raise DomainError("fit_sr_hyperprior: |rho| too close to 1")
    return SRHyperPrior(mean=mean, cov_between=cov, cov_predictive=cov_pred,
                        points=points)


@dataclass(frozen=True)
class M74SeriesPrior:
    """Per-year Beta priors on the yolk-sac-mortality survival factor.

    Years with screening data get the conjugate posterior (survivors =
    families - affected); years without data share a moment-matched Beta fit
    to the equal-weight mixture of the observed-year posteriors.
    """

    a: np.ndarray
    b: np.ndarray
    observed: np.ndarray  # bool per year

    def mean(self):
        return self.a / (self.a + self.b)

    def beta_params(self):
        return self.a.copy(), self.b.copy()


def _moment_match_beta(means, vars_):
    m = float(np.mean(means))
    # mixture variance: mean of variances plus variance of means
    v = float(np.mean(vars_) + np.var(means))
    v = min(v, m * (1.0 - m) * 0.999)
    nu = m * (1.0 - m) / v - 1.0
    return max(m * nu, 1e-3), max((1.0 - m) * nu, 1e-3)


def fit_m74_series(records, years, prior_a=1.0, prior_b=1.0) -> M74SeriesPrior:
    """Conjugate per-year update. `records` carry (year, families, affected);
    survival of a cohort is 1 - affected fraction, so the Beta posterior on
    survival is Beta(prior_a + families - affected, prior_b + affected)."""
    years = np.asarray(years, dtype=int)
    ny = years.shape[0]
    a = np.full(ny, 2.0)
    b = np.full(ny, 2.0)
    observed = np.zeros(ny, dtype=bool)
    year_pos = {int(y): t for t, y in enumerate(years)}
    agg = {}
    for rec in records:
        if rec.year not in year_pos:
            raise ValidationError(f"m74 record outside modeled years: {rec.year}")
        n, y = agg.get(rec.year, (0, 0))
        agg[rec.year] = (n + rec.families, y + rec.affected)
    for year, (n, y) in agg.items():
        t = year_pos[year]
        a[t] = prior_a + (n - y)
        b[t] = prior_b + y
        observed[t] = True
    if np.any(observed) and not np.all(observed):
        post = stats.beta(a[observed], b[observed])
        am, bm = _moment_match_beta(post.mean(), post.var())
        a[~observed] = am
        b[~observed] = bm
    return M74SeriesPrior(a=a, b=b, observed=observed)
