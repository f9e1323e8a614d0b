"""Numba-jitted hot kernels: trajectory evaluation, likelihood sums,
log-posterior, forward projection.

Scalar-loop implementations; `kernels_numpy` carries the vectorized numpy
twins with identical signatures and math. Everything here is a pure function
of its array inputs (all randomness is drawn outside and passed in), so
results are bit-reproducible and safe to call from any thread.

Array conventions (0-based everywhere):
  ns, ny, na, nf = stocks, years, sea-age classes (1..A_max), fisheries
  F, M           : (ny, na+1) mortality grids; column 0 is the post-smolt
                   sea year (age 0), columns 1..na are sea ages 1..A_max
  z_r            : (ns, ny - T); z_r[i, j] perturbs R[i, j + T]
  z_n            : (ns, ny - 1, na); z_n[i, t, a] perturbs the transition
                   into year t+1, destination age index a
  z_s            : (ns, ny, na)
Process errors are mean-one lognormal: eps = exp(sig * z - sig^2 / 2).
M74 survival s74[t] multiplies the smolt -> post-smolt transition of year t;
for the Baranov catch split it is folded into age-0 natural mortality as
M_eff = M[t, 0] - log(s74[t]).
"""

import math

import numpy as np
from numba import njit

LOG_2PI = math.log(2.0 * math.pi)

# prior kinds for logprior_core
PRIOR_SKIP = -1
PRIOR_NORMAL = 0
PRIOR_BETA_LOGIT = 1
PRIOR_HALFNORMAL_LOG = 2


@njit(cache=True)
def bh_batch(eggs, alpha, beta):
    out = np.empty(eggs.shape[0])
    for k in range(eggs.shape[0]):
        out[k] = eggs[k] / (alpha[k] + beta[k] * eggs[k])
    return out


@njit(cache=True)
def survival_batch(n, f, m, eps):
    out = np.empty(n.shape[0])
    for k in range(n.shape[0]):
        out[k] = n[k] * math.exp(-f[k] - m[k]) * eps[k]
    return out


@njit(cache=True)
def spawners_batch(n, mat, f, m, eps):
    out = np.empty(n.shape[0])
    for k in range(n.shape[0]):
        out[k] = mat[k] * n[k] * math.exp(-f[k] - m[k]) * eps[k]
    return out


@njit(cache=True)
def eggs_batch(spawners, fec, female_prop):
    nrow = spawners.shape[0]
    na = spawners.shape[1]
    out = np.zeros(nrow)
    for k in range(nrow):
        tot = 0.0
        for a in range(na):
            tot += female_prop * fec[a] * spawners[k, a]
        out[k] = tot
    return out


@njit(cache=True)
def baranov_batch(n, f, m):
    out = np.empty(n.shape[0])
    for k in range(n.shape[0]):
        z = f[k] + m[k]
        if z <= 0.0 or f[k] <= 0.0:
            out[k] = 0.0
        else:
            out[k] = (f[k] / z) * (1.0 - math.exp(-z)) * n[k]
    return out


@njit(cache=True)
def traj_core(alpha, beta, F, M, L, s74, sig_r, sig_n, sig_s,
              female_prop, fec, r_seed, n_init, z_r, z_n, z_s, tdelay):
    ns = z_s.shape[0]
    ny = z_s.shape[1]
    na = z_s.shape[2]
    R = np.zeros((ns, ny))
    N = np.zeros((ns, ny, na))
    S = np.zeros((ns, ny, na))
    O = np.zeros((ns, ny))
    hr = 0.5 * sig_r * sig_r
    hn = 0.5 * sig_n * sig_n
    hs = 0.5 * sig_s * sig_s
    for i in range(ns):
        for t in range(tdelay):
            R[i, t] = r_seed[i, t]
        for a in range(na):
            N[i, 0, a] = n_init[i, a]
    for i in range(ns):
        for t in range(ny):
            tot = 0.0
            for a in range(na):
                z = F[t, a + 1] + M[t, a + 1]
                sp = L[a] * N[i, t, a] * math.exp(-z) \
                    * math.exp(sig_s * z_s[i, t, a] - hs)
                S[i, t, a] = sp
                tot += female_prop * fec[a] * sp
            O[i, t] = tot
            if t + tdelay < ny:
                R[i, t + tdelay] = tot / (alpha[i] + beta[i] * tot) \
                    * math.exp(sig_r * z_r[i, t] - hr)
            if t + 1 < ny:
                z0 = F[t, 0] + M[t, 0]
                N[i, t + 1, 0] = R[i, t] * math.exp(-z0) * s74[t] \
                    * math.exp(sig_n * z_n[i, t, 0] - hn)
                for a in range(na - 1):
                    z = F[t, a + 1] + M[t, a + 1]
                    N[i, t + 1, a + 1] = (1.0 - L[a]) * N[i, t, a] \
                        * math.exp(-z) \
                        * math.exp(sig_n * z_n[i, t, a + 1] - hn)
    return R, N, S, O


@njit(cache=True)
def reared_core(releases, F, M, L, s74):
    ny = releases.shape[0]
    na = L.shape[0]
    Nr = np.zeros((ny, na))
    for t in range(ny - 1):
        z0 = F[t, 0] + M[t, 0]
        Nr[t + 1, 0] = releases[t] * math.exp(-z0) * s74[t]
        for a in range(na - 1):
            z = F[t, a + 1] + M[t, a + 1]
            Nr[t + 1, a + 1] = (1.0 - L[a]) * Nr[t, a] * math.exp(-z)
    return Nr


@njit(cache=True)
def fishing_mortality_grid(q, effort, sel):
    nf = effort.shape[0]
    ny = effort.shape[1]
    ncol = sel.shape[1]
    Ff = np.zeros((nf, ny, ncol))
    Ftot = np.zeros((ny, ncol))
    for f in range(nf):
        for t in range(ny):
            for c in range(ncol):
                v = q[f] * effort[f, t] * sel[f, c]
                Ff[f, t, c] = v
                Ftot[t, c] += v
    return Ff, Ftot


@njit(cache=True)
def catch_grid(n_sea_tot, age0_tot, Ff, Ftot, M, s74):
    # n_sea_tot: (ny, na) wild+reared abundance at sea ages 1..A_max;
    # age0_tot: (ny,) abundance entering the post-smolt year.
    nf = Ff.shape[0]
    ny = Ff.shape[1]
    na = n_sea_tot.shape[1]
    C = np.zeros((nf, ny))
    for f in range(nf):
        for t in range(ny):
            tot = 0.0
            if s74[t] > 0.0:
                z0 = Ftot[t, 0] + M[t, 0] - math.log(s74[t])
                if z0 > 0.0 and Ff[f, t, 0] > 0.0:
                    tot += (Ff[f, t, 0] / z0) * (1.0 - math.exp(-z0)) \
                        * age0_tot[t]
            for a in range(na):
                z = Ftot[t, a + 1] + M[t, a + 1]
                if z > 0.0 and Ff[f, t, a + 1] > 0.0:
                    tot += (Ff[f, t, a + 1] / z) * (1.0 - math.exp(-z)) \
                        * n_sea_tot[t, a]
            C[f, t] = tot
    return C


@njit(cache=True)
def lognormal_obs_loglik(log_obs, expected, sig):
    # observation mean equals `expected`: log_obs ~ N(log expected - sig^2/2, sig)
    if expected <= 0.0 or not math.isfinite(expected):
        return -np.inf
    mu = math.log(expected) - 0.5 * sig * sig
    r = (log_obs - mu) / sig
    return -0.5 * r * r - math.log(sig) - log_obs - 0.5 * LOG_2PI


@njit(cache=True)
def catch_loglik(C, cat_f, cat_t, cat_logobs, cat_sig):
    lp = 0.0
    for k in range(cat_f.shape[0]):
        lp += lognormal_obs_loglik(cat_logobs[k], C[cat_f[k], cat_t[k]],
                                   cat_sig[k])
        if lp == -np.inf:
            return -np.inf
    return lp


@njit(cache=True)
def spawner_loglik(S, sp_i, sp_t, sp_logobs, sp_sig):
    na = S.shape[2]
    lp = 0.0
    for k in range(sp_i.shape[0]):
        tot = 0.0
        for a in range(na):
            tot += S[sp_i[k], sp_t[k], a]
        lp += lognormal_obs_loglik(sp_logobs[k], tot, sp_sig[k])
        if lp == -np.inf:
            return -np.inf
    return lp


@njit(cache=True)
def smolt_approx_loglik(R, sm_i, sm_t, sm_mu, sm_sd):
    lp = 0.0
    for k in range(sm_i.shape[0]):
        r = R[sm_i[k], sm_t[k]]
        if r <= 0.0:
            return -np.inf
        d = (math.log(r) - sm_mu[k]) / sm_sd[k]
        lp += -0.5 * d * d - math.log(sm_sd[k]) - 0.5 * LOG_2PI
    return lp


@njit(cache=True)
def tag_loglik(tag_rel, tag_m, tag_rec, lam, Ff, Ftot, M, L, s74):
    # Multinomial over (fishery, year) recovery cells plus a never-seen cell
    # that absorbs natural deaths, non-reporting and survival past the horizon.
    nc = tag_rel.shape[0]
    nf = Ff.shape[0]
    ny = Ff.shape[1]
    na = L.shape[0]
    lp = 0.0
    for k in range(nc):
        t0 = tag_rel[k]
        m = tag_m[k]
        frac = 1.0
        seen = 0.0
        rec_tot = 0.0
        lfact = 0.0
        for t in range(t0, ny):
            a = t - t0  # sea age during year t
            if a > na:
                break
            if a == 0:
                if s74[t] <= 0.0:
                    zt = np.inf
                else:
                    zt = Ftot[t, 0] + M[t, 0] - math.log(s74[t])
                col = 0
            else:
                zt = Ftot[t, a] + M[t, a]
                col = a
            for f in range(nf):
                if math.isinf(zt) or zt <= 0.0:
                    p = 0.0
                else:
                    p = frac * (Ff[f, t, col] / zt) \
                        * (1.0 - math.exp(-zt)) * lam[f]
                r = tag_rec[k, f, t]
                if r > 0.0:
                    if p <= 0.0:
                        return -np.inf
                    lp += r * math.log(p)
                    lfact += math.lgamma(r + 1.0)
                    rec_tot += r
                seen += p
            if math.isinf(zt):
                frac = 0.0
            else:
                frac *= math.exp(-zt)
            if a >= 1:
                frac *= 1.0 - L[a - 1]
            if frac <= 0.0:
                break
        never = 1.0 - seen
        if never <= 0.0:
            return -np.inf
        lp += (m - rec_tot) * math.log(never)
        lp += math.lgamma(m + 1.0) - lfact - math.lgamma(m - rec_tot + 1.0)
    return lp


@njit(cache=True)
def logprior_core(x, pk, pp1, pp2,
                  pr_ia, pr_ib, pr_mu_a, pr_mu_b, pr_sd_a, pr_sd_b, pr_rho):
    lp = 0.0
    for k in range(x.shape[0]):
        kind = pk[k]
        if kind == PRIOR_NORMAL:
            r = (x[k] - pp1[k]) / pp2[k]
            lp += -0.5 * r * r - math.log(pp2[k]) - 0.5 * LOG_2PI
        elif kind == PRIOR_BETA_LOGIT:
            # Beta(a, b) on expit(x), jacobian folded in:
            # a*log(s) + b*log(1-s) - lbeta(a, b)
            a = pp1[k]
            b = pp2[k]
            if x[k] >= 0.0:
                log_s = -math.log1p(math.exp(-x[k]))
                log_1ms = -x[k] + log_s
            else:
                log_1ms = -math.log1p(math.exp(x[k]))
                log_s = x[k] + log_1ms
            lp += a * log_s + b * log_1ms \
                - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
        elif kind == PRIOR_HALFNORMAL_LOG:
            # half-normal(scale) on exp(x), jacobian exp(x)
            s = pp1[k]
            v = math.exp(x[k])
            lp += 0.5 * math.log(2.0 / math.pi) - math.log(s) \
                - 0.5 * (v / s) ** 2 + x[k]
        # PRIOR_SKIP: handled by a pair entry below
    for j in range(pr_ia.shape[0]):
        xa = x[pr_ia[j]]
        xb = x[pr_ib[j]]
        csd = pr_sd_a[j] * math.sqrt(1.0 - pr_rho[j] * pr_rho[j])
        cmu = pr_mu_a[j] + pr_rho[j] * (pr_sd_a[j] / pr_sd_b[j]) \
            * (xb - pr_mu_b[j])
        r = (xa - cmu) / csd
        lp += -0.5 * r * r - math.log(csd) - 0.5 * LOG_2PI
    return lp


@njit(cache=True)
def _expit(v):
    if v >= 0.0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


@njit(cache=True)
def unpack_core(x, dims, off):
    # dims = (ns, ny, na, nf, tdelay); off = offsets of the 12 blocks in the
    # sampling vector (alpha, beta, q, L, M, sig, s74, rseed, ninit, zr, zn, zs)
    ns, ny, na, nf, tdelay = dims[0], dims[1], dims[2], dims[3], dims[4]
    alpha = np.exp(x[off[0]:off[0] + ns])
    beta = np.exp(x[off[1]:off[1] + ns])
    q = np.exp(x[off[2]:off[2] + nf])
    L = np.empty(na)
    for a in range(na - 1):
        L[a] = _expit(x[off[3] + a])
    L[na - 1] = 1.0
    m0 = math.exp(x[off[4]])
    mad = math.exp(x[off[4] + 1])
    sig_r = math.exp(x[off[5]])
    sig_n = math.exp(x[off[5] + 1])
    sig_s = math.exp(x[off[5] + 2])
    s74 = np.empty(ny)
    for t in range(ny):
        s74[t] = _expit(x[off[6] + t])
    r_seed = np.exp(x[off[7]:off[7] + ns * tdelay]).reshape(ns, tdelay)
    n_init = np.exp(x[off[8]:off[8] + ns * na]).reshape(ns, na)
    z_r = x[off[9]:off[9] + ns * (ny - tdelay)].reshape(ns, ny - tdelay)
    z_n = x[off[10]:off[10] + ns * (ny - 1) * na].reshape(ns, ny - 1, na)
    z_s = x[off[11]:off[11] + ns * ny * na].reshape(ns, ny, na)
    return alpha, beta, q, L, m0, mad, sig_r, sig_n, sig_s, s74, \
        r_seed, n_init, z_r, z_n, z_s


@njit(cache=True)
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
    ny = dims[1]
    na = dims[2]
    tdelay = dims[4]
    M = np.empty((ny, na + 1))
    for t in range(ny):
        M[t, 0] = m0
        for a in range(na):
            M[t, a + 1] = mad
    Ff, Ftot = fishing_mortality_grid(q, effort, sel)
    R, N, S, O = traj_core(alpha, beta, Ftot, M, L, s74, sig_r, sig_n, sig_s,
                           female_prop, fec, r_seed, n_init, z_r, z_n, z_s,
                           tdelay)
    Nr = reared_core(releases, Ftot, M, L, s74)
    ns = dims[0]
    n_tot = np.empty((ny, na))
    age0 = np.empty(ny)
    for t in range(ny):
        age0[t] = releases[t]
        for a in range(na):
            tot = Nr[t, a]
            for i in range(ns):
                tot += N[i, t, a]
            n_tot[t, a] = tot
        for i in range(ns):
            age0[t] += R[i, t]
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


@njit(cache=True)
def project_core(alpha, beta, q, L, m0, mad, sig_r, sig_n, sig_s,
                 s74_last, s74_fut,
                 n_last, r_last, o_tail, nr_last, rel_last, rel_future,
                 effort_last, effort_fut, sel, fec, female_prop,
                 z_r, z_n, z_s, tdelay):
    # One forward path per posterior draw. Year index j = 0..H-1 maps to
    # calendar year ny + j; the transition into year ny uses the last fitted
    # year's mortality (policy effort applies from year ny on).
    nd = alpha.shape[0]
    ns = n_last.shape[1]
    na = n_last.shape[2]
    nf = effort_fut.shape[0]
    H = effort_fut.shape[1]
    R = np.zeros((nd, ns, H))
    Csum = np.zeros((nd, nf, H))
    for d in range(nd):
        hr = 0.5 * sig_r[d] * sig_r[d]
        hn = 0.5 * sig_n[d] * sig_n[d]
        hs = 0.5 * sig_s[d] * sig_s[d]
        # per-draw mortality grids: row 0 = last fitted year, rows 1..H future
        F = np.zeros((H + 1, na + 1))
        Ffish = np.zeros((nf, H + 1, na + 1))
        for f in range(nf):
            for c in range(na + 1):
                v = q[d, f] * effort_last[f] * sel[f, c]
                Ffish[f, 0, c] = v
                F[0, c] += v
            for j in range(H):
                for c in range(na + 1):
                    v = q[d, f] * effort_fut[f, j] * sel[f, c]
                    Ffish[f, j + 1, c] = v
                    F[j + 1, c] += v
        N = np.zeros((ns, H, na))
        Nr = np.zeros((H, na))
        Ocur = np.zeros((ns, H))
        # transition from the last fitted year into projection year 0
        for i in range(ns):
            z0 = F[0, 0] + m0[d]
            N[i, 0, 0] = r_last[d, i] * math.exp(-z0) * s74_last[d] \
                * math.exp(sig_n[d] * z_n[d, 0, i, 0] - hn)
            for a in range(na - 1):
                z = F[0, a + 1] + mad[d]
                N[i, 0, a + 1] = (1.0 - L[d, a]) * n_last[d, i, a] \
                    * math.exp(-z) \
                    * math.exp(sig_n[d] * z_n[d, 0, i, a + 1] - hn)
        z0 = F[0, 0] + m0[d]
        Nr[0, 0] = rel_last * math.exp(-z0) * s74_last[d]
        for a in range(na - 1):
            z = F[0, a + 1] + mad[d]
            Nr[0, a + 1] = (1.0 - L[d, a]) * nr_last[d, a] * math.exp(-z)
        for j in range(H):
            s74j = s74_fut[d, j]
            for i in range(ns):
                # recruits: egg cohorts tdelay years back (fitted tail or
                # projected), with fresh process error
                if j < tdelay:
                    eggs = o_tail[d, i, j]
                else:
                    eggs = Ocur[i, j - tdelay]
                R[d, i, j] = eggs / (alpha[d, i] + beta[d, i] * eggs) \
                    * math.exp(sig_r[d] * z_r[d, j, i] - hr)
                tot = 0.0
                for a in range(na):
                    z = F[j + 1, a + 1] + mad[d]
                    sp = L[d, a] * N[i, j, a] * math.exp(-z) \
                        * math.exp(sig_s[d] * z_s[d, j, i, a] - hs)
                    tot += female_prop * fec[a] * sp
                Ocur[i, j] = tot
            # catch in projection year j (policy mortality, wild + reared)
            for f in range(nf):
                tot = 0.0
                if s74j > 0.0:
                    zc = F[j + 1, 0] + m0[d] - math.log(s74j)
                    if zc > 0.0 and Ffish[f, j + 1, 0] > 0.0:
                        a0 = rel_future
                        for i in range(ns):
                            a0 += R[d, i, j]
                        tot += (Ffish[f, j + 1, 0] / zc) \
                            * (1.0 - math.exp(-zc)) * a0
                for a in range(na):
                    zc = F[j + 1, a + 1] + mad[d]
                    if zc > 0.0 and Ffish[f, j + 1, a + 1] > 0.0:
                        nsea = Nr[j, a]
                        for i in range(ns):
                            nsea += N[i, j, a]
                        tot += (Ffish[f, j + 1, a + 1] / zc) \
                            * (1.0 - math.exp(-zc)) * nsea
                Csum[d, f, j] = tot
            if j + 1 < H:
                for i in range(ns):
                    z0 = F[j + 1, 0] + m0[d]
                    N[i, j + 1, 0] = R[d, i, j] * math.exp(-z0) * s74j \
                        * math.exp(sig_n[d] * z_n[d, j + 1, i, 0] - hn)
                    for a in range(na - 1):
                        z = F[j + 1, a + 1] + mad[d]
                        N[i, j + 1, a + 1] = (1.0 - L[d, a]) * N[i, j, a] \
                            * math.exp(-z) \
                            * math.exp(sig_n[d] * z_n[d, j + 1, i, a + 1] - hn)
                z0 = F[j + 1, 0] + m0[d]
                Nr[j + 1, 0] = rel_future * math.exp(-z0) * s74j
                for a in range(na - 1):
                    z = F[j + 1, a + 1] + mad[d]
                    Nr[j + 1, a + 1] = (1.0 - L[d, a]) * Nr[j, a] \
                        * math.exp(-z)
    return R, Csum
