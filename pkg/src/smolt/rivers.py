"""River submodels: smolt-trap mark-recapture and the hierarchical
parr-to-smolt stage.

These run before the sea model and compress river data into per-river-year
normal approximations on log smolt abundance, which enter the life-history
fit as pseudo-likelihood terms. Two sources:

  * traps: marked fish released upstream give a Beta posterior on trap
    catchability; unmarked captures are Poisson thinned by that catchability.
    With a flat prior on log run size the log-abundance posterior has exact
    mean/variance in digamma/trigamma form, which the normal approximation
    takes over.
  * electrofishing: site parr densities scale by habitat area to a parr
    abundance; a river-level parr-to-smolt survival converts it to the smolt
    run `parr_lag` years later. Survivals are calibrated on river-years where
    both trap and parr estimates exist and pooled normal-normal on the log
    scale, so rivers without traps borrow strength from those with.

Where both sources cover the same river-year they are precision-combined, so
the result is never more diffuse than the trap posterior alone.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .data import SmoltLikelihoodApprox
from .errors import DomainError, ValidationError

# floors: single electrofishing site, between-site spread, survival spread
MIN_SITE_SD = 0.30
MIN_PARR_SD = 0.10
MIN_TAU = 0.05
# weakly informative half-normal scale for the between-river survival sd
# (log scale: 2 sd spans roughly a factor of e between rivers)
TAU_PRIOR_SCALE = 0.5
_TAU_GRID = np.linspace(1e-3, 4.0 * TAU_PRIOR_SCALE, 240)


def _t_sd_inflation(df):
    """Widen a normal sd so its 90% interval matches the t_df interval.

    Standard errors estimated from a handful of sites are chi-noisy;
    quoting them as exact makes downstream intervals overconfident.
    Matching the t quantile keeps the output normal (which the likelihood
    approximation needs) while restoring honest tails.
    """
    if df < 1:
        raise DomainError("t inflation needs at least 1 degree of freedom")
    return float(stats.t.ppf(0.95, df) / stats.norm.ppf(0.95))


def _tau_posterior(means, se2):
    """Grid posterior over the between-river sd, flat prior on the mean.

    With the population mean integrated out analytically, the marginal
    likelihood of tau given river-level survival estimates m_r +- se_r is
    closed-form; a half-normal prior keeps tau identified when only a few
    rivers are calibrated (the method-of-moments variance routinely goes
    negative there). Returns (weights, M_hat, V_M) on the tau grid.
    """
    logw = np.empty_like(_TAU_GRID)
    m_hat = np.empty_like(_TAU_GRID)
    v_m = np.empty_like(_TAU_GRID)
    for i, tau in enumerate(_TAU_GRID):
        d = tau ** 2 + se2
        w = 1.0 / d
        tot = float(np.sum(w))
        m_hat[i] = float(np.sum(w * means)) / tot
        v_m[i] = 1.0 / tot
        logw[i] = (-0.5 * float(np.sum(np.log(d))) - 0.5 * math.log(tot)
                   - 0.5 * float(np.sum(w * (means - m_hat[i]) ** 2))
                   - 0.5 * (tau / TAU_PRIOR_SCALE) ** 2)
    logw -= logw.max()
    weights = np.exp(logw)
    weights /= weights.sum()
    return weights, m_hat, v_m


def markrecapture_posterior(marked, captured, recaptured,
                            prior_a=1.0, prior_b=1.0):
    """Normal approximation to the log run-size posterior of one trap year.

    recaptured ~ Binomial(marked, pi) updates pi conjugately;
    (captured - recaptured) unmarked fish ~ Poisson(N pi). Under a flat prior
    on log N, N factors as Gamma(c_u, 1)/pi, giving exact moments
      E[log N] = psi(c_u) - psi(A) + psi(A + B)
      V[log N] = psi'(c_u) + psi'(A) - psi'(A + B)
    with (A, B) the Beta posterior on pi. Returns (mu, sd, (A, B)).
    """
    m, c, r = int(marked), int(captured), int(recaptured)
    if m <= 0:
        raise DomainError("markrecapture: marked must be > 0")
    if r > min(m, c) or min(c, r) < 0:
        raise DomainError("markrecapture: need 0 <= recaptured <= min(marked, captured)")
    cu = c - r
    if cu < 1:
        raise DomainError("markrecapture: need at least one unmarked capture")
    A = prior_a + r
    B = prior_b + m - r
    mu = special.digamma(cu) - special.digamma(A) + special.digamma(A + B)
    var = (special.polygamma(1, cu) + special.polygamma(1, A)
           - special.polygamma(1, A + B))
    return float(mu), float(math.sqrt(var)), (float(A), float(B))


def parr_abundance_estimate(records, habitat_area):
    """(mu, sd) of log parr abundance from one river-year's site densities.

    Sites are area-weighted on the natural scale; spread across sites sets
    the standard error, floored for single-site years.
    """
    dens = np.array([r.density for r in records], dtype=float)
    area = np.array([r.area for r in records], dtype=float)
    if dens.size == 0:
        raise ValidationError("parr_abundance_estimate: no site records")
    if np.all(dens <= 0):
        raise DomainError("parr_abundance_estimate: all-zero densities")
    mean_dens = float(np.sum(dens * area) / np.sum(area))
    mu = math.log(mean_dens * habitat_area)
    if dens.size == 1:
        sd = MIN_SITE_SD
    else:
        logs = np.log(np.maximum(dens, 1e-6 * mean_dens))
        se = float(np.std(logs, ddof=1) / math.sqrt(dens.size))
        sd = max(se * _t_sd_inflation(dens.size - 1), MIN_PARR_SD)
    return mu, sd


@dataclass
class RiverModel:
    """Fitted river stage: trap posteriors, parr estimates, and the
    parr-to-smolt survival hierarchy on the log scale."""

    parr_lag: int
    trap_post: dict = field(default_factory=dict)   # (stock, year) -> (mu, sd)
    parr_est: dict = field(default_factory=dict)    # (stock, year) -> (mu, sd)
    theta_mean: float = float("nan")     # hierarchy mean, log scale
    theta_tau: float = float("nan")      # posterior mean between-river sd
    theta_pred: tuple = None             # new-river predictive (mu, sd)
    theta_by_stock: dict = field(default_factory=dict)  # stock -> (mu, sd)
    n_calibration_pairs: int = 0

    def theta_for(self, stock):
        """Posterior (mu, sd) of the river's log survival; rivers never
        calibrated get the predictive distribution for a new river, which
        carries the full tau posterior rather than a point estimate."""
        if stock in self.theta_by_stock:
            return self.theta_by_stock[stock]
        return self.theta_pred


def fit_river_model(dataset) -> RiverModel:
    """Run trap posteriors, estimate parr abundances, and calibrate the
    survival hierarchy on river-years where a trap run matches a parr cohort
    `parr_lag` years earlier."""
    model = RiverModel(parr_lag=dataset.parr_lag)
    for rec in dataset.smolt_traps:
        mu, sd, _ = markrecapture_posterior(rec.marked, rec.captured,
                                            rec.recaptured)
        model.trap_post[(rec.stock, rec.year)] = (mu, sd)
    by_ry = {}
    for rec in dataset.electrofishing:
        by_ry.setdefault((rec.stock, rec.year), []).append(rec)
    areas = {s.id: s.habitat_area for s in dataset.stocks}
    for (stock, year), recs in by_ry.items():
        model.parr_est[(stock, year)] = parr_abundance_estimate(
            recs, areas[stock])
    # calibration points: log theta = log run - log parr(year - lag)
    points = {}
    for (stock, year), (mu_t, sd_t) in model.trap_post.items():
        parr = model.parr_est.get((stock, year - dataset.parr_lag))
        if parr is None:
            continue
        mu_p, sd_p = parr
        points.setdefault(stock, []).append(
            (mu_t - mu_p, math.sqrt(sd_t ** 2 + sd_p ** 2)))
    model.n_calibration_pairs = sum(len(v) for v in points.values())
    if model.n_calibration_pairs == 0:
        raise ValidationError(
            "river model: no trap year lines up with a parr cohort "
            f"{dataset.parr_lag} year(s) earlier in any river")
    # two levels: precision-weight within each river, then marginalize the
    # between-river sd on a grid so a heavily trapped river gets one vote
    # and small-j uncertainty in tau flows into every output
    stocks = sorted(points)
    means = np.empty(len(stocks))
    se2 = np.empty(len(stocks))
    for r, stock in enumerate(stocks):
        w = np.array([1.0 / e ** 2 for _, e in points[stock]])
        v = np.array([v for v, _ in points[stock]])
        means[r] = np.sum(w * v) / np.sum(w)
        se2[r] = 1.0 / np.sum(w)
    wts, m_hat, v_m = _tau_posterior(means, se2)
    model.theta_mean = float(np.sum(wts * m_hat))
    model.theta_tau = max(float(np.sum(wts * _TAU_GRID)), MIN_TAU)
    pred_var = float(np.sum(
        wts * (_TAU_GRID ** 2 + v_m + (m_hat - model.theta_mean) ** 2)))
    model.theta_pred = (model.theta_mean, math.sqrt(pred_var))
    for r, stock in enumerate(stocks):
        # normal-normal shrinkage toward M_hat at each tau, then mix
        c = 1.0 / _TAU_GRID ** 2
        k = c + 1.0 / se2[r]
        m_post = (c * m_hat + means[r] / se2[r]) / k
        v_post = 1.0 / k + (c / k) ** 2 * v_m
        mu = float(np.sum(wts * m_post))
        var = float(np.sum(wts * (v_post + (m_post - mu) ** 2)))
        model.theta_by_stock[stock] = (mu, math.sqrt(var))
    return model


def approximate_smolt_likelihood(model: RiverModel, dataset):
    """Per-river-year normal terms on log smolts for the sea model.

    Trap years use the trap posterior, sharpened by the parr prediction when
    one exists; parr-only years use the survival hierarchy. Years with
    neither source yield no term.
    """
    out = []
    keys = set(model.trap_post)
    theta_cache = {}
    for (stock, parr_year) in model.parr_est:
        smolt_year = parr_year + model.parr_lag
        if dataset.year_start <= smolt_year \
                < dataset.year_start + dataset.n_years:
            keys.add((stock, smolt_year))
    for (stock, year) in sorted(keys):
        trap = model.trap_post.get((stock, year))
        parr = model.parr_est.get((stock, year - model.parr_lag))
        pred = None
        if parr is not None:
            if stock not in theta_cache:
                theta_cache[stock] = model.theta_for(stock)
            theta = theta_cache[stock]
            if theta is not None:
                pred = (parr[0] + theta[0],
                        math.sqrt(parr[1] ** 2 + theta[1] ** 2))
        if trap is not None and pred is not None:
            w_t = 1.0 / trap[1] ** 2
            w_p = 1.0 / pred[1] ** 2
            mu = (w_t * trap[0] + w_p * pred[0]) / (w_t + w_p)
            sd = math.sqrt(1.0 / (w_t + w_p))
        elif trap is not None:
            mu, sd = trap
        elif pred is not None:
            mu, sd = pred
        else:
            continue
        out.append(SmoltLikelihoodApprox(stock=stock, year=year,
                                         mu=float(mu), sd=float(sd)))
    return out
