"""Pure-numpy fallback for the hot kernels.

Same public names, signatures and math as `kernels_numba`; vectorized across
stocks/records instead of scalar loops, so floating-point summation order can
differ from the numba path by ~1e-15 relative. Used when numba is unavailable
or SMOLT_NUMBA=0; also the reference side of the backend-equivalence tests.
"""

import math

import numpy as np
from scipy.special import expit, gammaln

LOG_2PI = math.log(2.0 * math.pi)

PRIOR_SKIP = -1
PRIOR_NORMAL = 0
PRIOR_BETA_LOGIT = 1
PRIOR_HALFNORMAL_LOG = 2


def bh_batch(eggs, alpha, beta):
    return eggs / (alpha + beta * eggs)


def survival_batch(n, f, m, eps):
    return n * np.exp(-f - m) * eps


def spawners_batch(n, mat, f, m, eps):
    return mat * n * np.exp(-f - m) * eps


def eggs_batch(spawners, fec, female_prop):
    return female_prop * (spawners * fec).sum(axis=-1)


def baranov_batch(n, f, m):
    z = f + m
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where((z > 0.0) & (f > 0.0),
                     (f / np.where(z > 0.0, z, 1.0)) * (1.0 - np.exp(-z)) * n,
                     0.0)
    return c


def traj_core(alpha, beta, F, M, L, s74, sig_r, sig_n, sig_s,
              female_prop, fec, r_seed, n_init, z_r, z_n, z_s, tdelay):
    ns, ny, na = z_s.shape
    R = np.zeros((ns, ny))
    N = np.zeros((ns, ny, na))
    S = np.zeros((ns, ny, na))
    O = np.zeros((ns, ny))
    R[:, :tdelay] = r_seed
    N[:, 0, :] = n_init
    eps_s = np.exp(sig_s * z_s - 0.5 * sig_s * sig_s)
    eps_n = np.exp(sig_n * z_n - 0.5 * sig_n * sig_n)
    eps_r = np.exp(sig_r * z_r - 0.5 * sig_r * sig_r)
    surv = np.exp(-(F[:, 1:] + M[:, 1:]))  # (ny, na)
    surv0 = np.exp(-(F[:, 0] + M[:, 0])) * s74
    for t in range(ny):
        S[:, t, :] = L * N[:, t, :] * surv[t] * eps_s[:, t, :]
        O[:, t] = female_prop * (S[:, t, :] * fec).sum(axis=1)
        if t + tdelay < ny:
            R[:, t + tdelay] = O[:, t] / (alpha + beta * O[:, t]) \
                * eps_r[:, t]
        if t + 1 < ny:
            N[:, t + 1, 0] = R[:, t] * surv0[t] * eps_n[:, t, 0]
            N[:, t + 1, 1:] = (1.0 - L[:-1]) * N[:, t, :-1] \
                * surv[t, :-1] * eps_n[:, t, 1:]
    return R, N, S, O


def reared_core(releases, F, M, L, s74):
    ny = releases.shape[0]
    na = L.shape[0]
    Nr = np.zeros((ny, na))
    surv = np.exp(-(F[:, 1:] + M[:, 1:]))
    surv0 = np.exp(-(F[:, 0] + M[:, 0])) * s74
    for t in range(ny - 1):
        Nr[t + 1, 0] = releases[t] * surv0[t]
        Nr[t + 1, 1:] = (1.0 - L[:-1]) * Nr[t, :-1] * surv[t, :-1]
    return Nr


def fishing_mortality_grid(q, effort, sel):
    Ff = q[:, None, None] * effort[:, :, None] * sel[:, None, :]
    return Ff, Ff.sum(axis=0)


def catch_grid(n_sea_tot, age0_tot, Ff, Ftot, M, s74):
    nf, ny, _ = Ff.shape
    C = np.zeros((nf, ny))
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(s74 > 0.0, np.log(np.where(s74 > 0.0, s74, 1.0)),
                        -np.inf)
        z0 = Ftot[:, 0] + M[:, 0] - logs  # (ny,)
        frac0 = np.where((z0 > 0.0) & np.isfinite(z0),
                         (1.0 - np.exp(-np.where(np.isfinite(z0), z0, 0.0)))
                         / np.where(z0 > 0.0, z0, 1.0), 0.0)
        z = Ftot[:, 1:] + M[:, 1:]  # (ny, na)
        frac = np.where(z > 0.0,
                        (1.0 - np.exp(-z)) / np.where(z > 0.0, z, 1.0), 0.0)
    for f in range(nf):
        c0 = np.where(Ff[f, :, 0] > 0.0, Ff[f, :, 0] * frac0 * age0_tot, 0.0)
        ca = np.where(Ff[f, :, 1:] > 0.0,
                      Ff[f, :, 1:] * frac * n_sea_tot, 0.0).sum(axis=1)
        C[f] = c0 + ca
    return C


def lognormal_obs_loglik(log_obs, expected, sig):
    if expected <= 0.0 or not math.isfinite(expected):
        return -np.inf
    mu = math.log(expected) - 0.5 * sig * sig
    r = (log_obs - mu) / sig
    return -0.5 * r * r - math.log(sig) - log_obs - 0.5 * LOG_2PI


def catch_loglik(C, cat_f, cat_t, cat_logobs, cat_sig):
    c = C[cat_f, cat_t]
    if np.any(c <= 0.0) or not np.all(np.isfinite(c)):
        return -np.inf
    mu = np.log(c) - 0.5 * cat_sig**2
    r = (cat_logobs - mu) / cat_sig
    return float(np.sum(-0.5 * r * r - np.log(cat_sig) - cat_logobs
                        - 0.5 * LOG_2PI))


def spawner_loglik(S, sp_i, sp_t, sp_logobs, sp_sig):
    tot = S.sum(axis=2)[sp_i, sp_t]
    if np.any(tot <= 0.0) or not np.all(np.isfinite(tot)):
        return -np.inf
    mu = np.log(tot) - 0.5 * sp_sig**2
    r = (sp_logobs - mu) / sp_sig
    return float(np.sum(-0.5 * r * r - np.log(sp_sig) - sp_logobs
                        - 0.5 * LOG_2PI))


def smolt_approx_loglik(R, sm_i, sm_t, sm_mu, sm_sd):
    r = R[sm_i, sm_t]
    if np.any(r <= 0.0):
        return -np.inf
    d = (np.log(r) - sm_mu) / sm_sd
    return float(np.sum(-0.5 * d * d - np.log(sm_sd) - 0.5 * LOG_2PI))


def tag_loglik(tag_rel, tag_m, tag_rec, lam, Ff, Ftot, M, L, s74):
    nc = tag_rel.shape[0]
    ny = Ff.shape[1]
    na = L.shape[0]
    lp = 0.0
    for k in range(nc):
        t0 = int(tag_rel[k])
        m = tag_m[k]
        frac = 1.0
        seen = 0.0
        rec_tot = 0.0
        lfact = 0.0
        for t in range(t0, ny):
            a = t - t0
            if a > na:
                break
            if a == 0:
                zt = np.inf if s74[t] <= 0.0 \
                    else Ftot[t, 0] + M[t, 0] - math.log(s74[t])
                col = 0
            else:
                zt = Ftot[t, a] + M[t, a]
                col = a
            if np.isinf(zt) or zt <= 0.0:
                p = np.zeros_like(lam)
            else:
                p = frac * (Ff[:, t, col] / zt) * (1.0 - math.exp(-zt)) * lam
            r = tag_rec[k, :, t]
            if np.any((r > 0.0) & (p <= 0.0)):
                return -np.inf
            pos = r > 0.0
            lp += float(np.sum(r[pos] * np.log(p[pos])))
            lfact += float(np.sum(gammaln(r[pos] + 1.0)))
            rec_tot += float(np.sum(r[pos]))
            seen += float(np.sum(p))
            frac = 0.0 if np.isinf(zt) else frac * math.exp(-zt)
            if a >= 1:
                frac *= 1.0 - L[a - 1]
            if frac <= 0.0:
                break
        never = 1.0 - seen
        if never <= 0.0:
            return -np.inf
        lp += (m - rec_tot) * math.log(never)
        lp += float(gammaln(m + 1.0)) - lfact - float(gammaln(m - rec_tot + 1.0))
    return lp


def logprior_core(x, pk, pp1, pp2,
                  pr_ia, pr_ib, pr_mu_a, pr_mu_b, pr_sd_a, pr_sd_b, pr_rho):
    lp = 0.0
    k0 = pk == PRIOR_NORMAL
    if np.any(k0):
        r = (x[k0] - pp1[k0]) / pp2[k0]
        lp += float(np.sum(-0.5 * r * r - np.log(pp2[k0]) - 0.5 * LOG_2PI))
    k1 = pk == PRIOR_BETA_LOGIT
    if np.any(k1):
        v = x[k1]
        a = pp1[k1]
        b = pp2[k1]
        log_s = -np.logaddexp(0.0, -v)
        log_1ms = -np.logaddexp(0.0, v)
        lp += float(np.sum(a * log_s + b * log_1ms
                           - (gammaln(a) + gammaln(b) - gammaln(a + b))))
    k2 = pk == PRIOR_HALFNORMAL_LOG
    if np.any(k2):
        s = pp1[k2]
        v = np.exp(x[k2])
        lp += float(np.sum(0.5 * math.log(2.0 / math.pi) - np.log(s)
                           - 0.5 * (v / s) ** 2 + x[k2]))
    if pr_ia.shape[0]:
        xa = x[pr_ia]
        xb = x[pr_ib]
        csd = pr_sd_a * np.sqrt(1.0 - pr_rho**2)
        cmu = pr_mu_a + pr_rho * (pr_sd_a / pr_sd_b) * (xb - pr_mu_b)
        r = (xa - cmu) / csd
        lp += float(np.sum(-0.5 * r * r - np.log(csd) - 0.5 * LOG_2PI))
    return lp


def unpack_core(x, dims, off):
    ns, ny, na, nf, tdelay = (int(v) for v in dims)
    alpha = np.exp(x[off[0]:off[0] + ns])
    beta = np.exp(x[off[1]:off[1] + ns])
    q = np.exp(x[off[2]:off[2] + nf])
    L = np.empty(na)
    L[:na - 1] = expit(x[off[3]:off[3] + na - 1])
    L[na - 1] = 1.0
    m0 = math.exp(x[off[4]])
    mad = math.exp(x[off[4] + 1])
    sig_r, sig_n, sig_s = np.exp(x[off[5]:off[5] + 3])
    s74 = expit(x[off[6]:off[6] + ny])
    r_seed = np.exp(x[off[7]:off[7] + ns * tdelay]).reshape(ns, tdelay)
    n_init = np.exp(x[off[8]:off[8] + ns * na]).reshape(ns, na)
    z_r = x[off[9]:off[9] + ns * (ny - tdelay)].reshape(ns, ny - tdelay)
    z_n = x[off[10]:off[10] + ns * (ny - 1) * na].reshape(ns, ny - 1, na)
    z_s = x[off[11]:off[11] + ns * ny * na].reshape(ns, ny, na)
    return alpha, beta, q, L, m0, mad, sig_r, sig_n, sig_s, s74, \
        r_seed, n_init, z_r, z_n, z_s


def logpost_core(x, dims, off,
                 pk, pp1, pp2,
                 pr_ia, pr_ib, pr_mu_a, pr_mu_b, pr_sd_a, pr_sd_b, pr_rho,
                 effort, sel, fec, female_prop, releases,
                 cat_f, cat_t, cat_logobs, cat_sig,
                 tag_rel, tag_m, tag_rec, lam,
                 sp_i, sp_t, sp_logobs, sp_sig,
                 sm_i, sm_t, sm_mu, sm_sd):
    lp = logprior_core(x, pk, pp1, pp2, pr_ia, pr_ib,
                       pr_mu_a, pr_mu_b, pr_sd_a, pr_sd_b, pr_rho)
    if not math.isfinite(lp):
        return -np.inf
    (alpha, beta, q, L, m0, mad, sig_r, sig_n, sig_s, s74,
     r_seed, n_init, z_r, z_n, z_s) = unpack_core(x, dims, off)
    ns, ny, na, nf, tdelay = (int(v) for v in dims)
    M = np.empty((ny, na + 1))
    M[:, 0] = m0
    M[:, 1:] = mad
    Ff, Ftot = fishing_mortality_grid(q, effort, sel)
    R, N, S, O = traj_core(alpha, beta, Ftot, M, L, s74, sig_r, sig_n, sig_s,
                           female_prop, fec, r_seed, n_init, z_r, z_n, z_s,
                           tdelay)
    Nr = reared_core(releases, Ftot, M, L, s74)
    n_tot = N.sum(axis=0) + Nr
    age0 = R.sum(axis=0) + releases
    C = catch_grid(n_tot, age0, Ff, Ftot, M, s74)
    lp += catch_loglik(C, cat_f, cat_t, cat_logobs, cat_sig)
    if lp == -np.inf:
        return -np.inf
    lp += tag_loglik(tag_rel, tag_m, tag_rec, lam, Ff, Ftot, M, L, s74)
    if lp == -np.inf:
        return -np.inf
    lp += spawner_loglik(S, sp_i, sp_t, sp_logobs, sp_sig)
    if lp == -np.inf:
        return -np.inf
    lp += smolt_approx_loglik(R, sm_i, sm_t, sm_mu, sm_sd)
    if not math.isfinite(lp):
        return -np.inf
    return lp


def project_core(alpha, beta, q, L, m0, mad, sig_r, sig_n, sig_s,
                 s74_last, s74_fut,
                 n_last, r_last, o_tail, nr_last, rel_last, rel_future,
                 effort_last, effort_fut, sel, fec, female_prop,
                 z_r, z_n, z_s, tdelay):
    nd, ns, na = n_last.shape
    nf, H = effort_fut.shape
    R = np.zeros((nd, ns, H))
    Csum = np.zeros((nd, nf, H))
    # effort per year row: row 0 = last fitted year, rows 1..H policy years
    eff = np.concatenate([effort_last[:, None], effort_fut], axis=1)
    # F[d, f, row, col]
    Ffish = q[:, :, None, None] * eff[None, :, :, None] * sel[None, :, None, :]
    F = Ffish.sum(axis=1)  # (nd, H+1, na+1)
    hn = 0.5 * sig_n**2
    hs = 0.5 * sig_s**2
    hr = 0.5 * sig_r**2
    N = np.zeros((nd, ns, H, na))
    Nr = np.zeros((nd, H, na))
    Ocur = np.zeros((nd, ns, H))
    z0 = F[:, 0, 0] + m0  # (nd,)
    N[:, :, 0, 0] = r_last * (np.exp(-z0) * s74_last)[:, None] \
        * np.exp(sig_n[:, None] * z_n[:, 0, :, 0] - hn[:, None])
    za = F[:, 0, 1:na] + mad[:, None]  # (nd, na-1)
    N[:, :, 0, 1:] = (1.0 - L[:, None, :na - 1]) * n_last[:, :, :na - 1] \
        * np.exp(-za)[:, None, :] \
        * np.exp(sig_n[:, None, None] * z_n[:, 0, :, 1:] - hn[:, None, None])
    Nr[:, 0, 0] = rel_last * np.exp(-z0) * s74_last
    Nr[:, 0, 1:] = (1.0 - L[:, :na - 1]) * nr_last[:, :na - 1] * np.exp(-za)
    for j in range(H):
        s74j = s74_fut[:, j]
        if j < tdelay:
            eggs = o_tail[:, :, j]
        else:
            eggs = Ocur[:, :, j - tdelay]
        R[:, :, j] = eggs / (alpha + beta * eggs) \
            * np.exp(sig_r[:, None] * z_r[:, j, :] - hr[:, None])
        za = F[:, j + 1, 1:] + mad[:, None]  # (nd, na)
        sp = L[:, None, :] * N[:, :, j, :] * np.exp(-za)[:, None, :] \
            * np.exp(sig_s[:, None, None] * z_s[:, j, :, :]
                     - hs[:, None, None])
        Ocur[:, :, j] = female_prop * (sp * fec).sum(axis=2)
        # catch
        a0 = R[:, :, j].sum(axis=1) + rel_future  # (nd,)
        nsea = N[:, :, j, :].sum(axis=1) + Nr[:, j, :]  # (nd, na)
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(s74j > 0.0,
                            np.log(np.where(s74j > 0.0, s74j, 1.0)), -np.inf)
            zc0 = F[:, j + 1, 0] + m0 - logs  # (nd,)
            frac0 = np.where((zc0 > 0.0) & np.isfinite(zc0),
                             (1.0 - np.exp(-np.where(np.isfinite(zc0), zc0,
                                                     0.0)))
                             / np.where(zc0 > 0.0, zc0, 1.0), 0.0)
            fraca = np.where(za > 0.0, (1.0 - np.exp(-za))
                             / np.where(za > 0.0, za, 1.0), 0.0)  # (nd, na)
        for f in range(nf):
            c0 = np.where(Ffish[:, f, j + 1, 0] > 0.0,
                          Ffish[:, f, j + 1, 0] * frac0 * a0, 0.0)
            ca = np.where(Ffish[:, f, j + 1, 1:] > 0.0,
                          Ffish[:, f, j + 1, 1:] * fraca * nsea,
                          0.0).sum(axis=1)
            Csum[:, f, j] = c0 + ca
        if j + 1 < H:
            z0 = F[:, j + 1, 0] + m0
            N[:, :, j + 1, 0] = R[:, :, j] * (np.exp(-z0) * s74j)[:, None] \
                * np.exp(sig_n[:, None] * z_n[:, j + 1, :, 0] - hn[:, None])
            N[:, :, j + 1, 1:] = (1.0 - L[:, None, :na - 1]) \
                * N[:, :, j, :na - 1] * np.exp(-za[:, None, :na - 1]) \
                * np.exp(sig_n[:, None, None] * z_n[:, j + 1, :, 1:]
                         - hn[:, None, None])
            Nr[:, j + 1, 0] = rel_future * np.exp(-z0) * s74j
            Nr[:, j + 1, 1:] = (1.0 - L[:, :na - 1]) * Nr[:, j, :na - 1] \
                * np.exp(-za[:, :na - 1])
    return R, Csum
