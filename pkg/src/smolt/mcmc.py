"""Blockwise adaptive random-walk Metropolis with convergence diagnostics.

The sampler is generic: it sees only a log-density callable, an initial
point, and a list of coordinate blocks. Two move types:

  * random-walk blocks: Gaussian proposals, per-coordinate spreads learned
    from the warmup sample, a single scalar step per block tuned by
    Robbins-Monro toward a dimension-dependent acceptance target;
  * scale-ride blocks: one log-scale coordinate moves by delta while its
    riding latents are multiplied by exp(-delta), keeping scale * latent
    products invariant. The move is deterministic given delta, so acceptance
    carries the Jacobian term -delta * len(riders).

Adaptation runs during warmup only; afterwards every tuning quantity is
frozen, so the post-warmup kernel is a fixed valid MH kernel. All
randomness comes from one numpy Generator, giving bit-identical chains for
identical seeds and inputs.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError


@dataclass
class Block:
    """One update unit. `idx` are the proposed coordinates; if `ride` is
    set the block is a scale-ride move and `idx` must be a single
    coordinate. `full_cov` blocks learn a dense proposal covariance during
    warmup (only sensible for small, strongly correlated blocks)."""

    name: str
    idx: np.ndarray
    ride: np.ndarray = None
    step: float = 0.0  # 0 means: pick the default for the dimension
    full_cov: bool = False

    def __post_init__(self):
        self.idx = np.asarray(self.idx, dtype=np.int64)
        if self.idx.ndim != 1 or self.idx.size == 0:
            raise ValidationError(f"block {self.name}: idx must be 1-D, nonempty")
        if self.ride is not None:
            self.ride = np.asarray(self.ride, dtype=np.int64)
            if self.idx.size != 1:
                raise ValidationError(
                    f"block {self.name}: scale-ride needs a single scale coord")
            if self.full_cov:
                raise ValidationError(
                    f"block {self.name}: scale-ride cannot use full_cov")
        if self.full_cov and self.idx.size > 32:
            raise ValidationError(
                f"block {self.name}: full_cov limited to 32 coordinates")
        if self.step == 0.0:
            self.step = 2.38 / math.sqrt(self.idx.size) if self.ride is None \
                else 0.3


def acceptance_target(dim):
    # 1-D moves mix best near 0.44, high-dimensional ones near 0.234
    if dim <= 1:
        return 0.44
    if dim <= 4:
        return 0.35
    return 0.234


@dataclass
class PosteriorChain:
    """Post-warmup draws of one chain plus tuning/acceptance bookkeeping."""

    draws: np.ndarray      # (n_kept, d)
    logposts: np.ndarray   # (n_kept,)
    block_names: list
    block_accept: np.ndarray
    block_step: np.ndarray
    warmup: int
    thin: int
    n_iter: int

    @property
    def n_kept(self):
        return self.draws.shape[0]

    def accept_table(self):
        return {name: float(rate) for name, rate
                in zip(self.block_names, self.block_accept)}


def run_chain(logpost, x0, blocks, *, n_iter, warmup, rng, thin=1,
              sd_floor=1e-4, adapt_every=50) -> PosteriorChain:
    """Run one chain. `rng` is a numpy Generator; pass a freshly seeded one
    per chain. Draws are stored after warmup, every `thin` iterations."""
    if not isinstance(rng, np.random.Generator):
        raise ValidationError("run_chain: rng must be a numpy Generator")
    if not 0 < warmup < n_iter:
        raise ValidationError("run_chain: need 0 < warmup < n_iter")
    x = np.array(x0, dtype=float).copy()
    d = x.shape[0]
    for blk in blocks:
        hi = max(int(blk.idx.max()), int(blk.ride.max()) if blk.ride is not None
                 and blk.ride.size else 0)
        if hi >= d:
            raise ValidationError(f"block {blk.name}: index out of range")
    lp = float(logpost(x))
    if not math.isfinite(lp):
        raise DomainError("run_chain: log posterior not finite at x0")
    nb = len(blocks)
    log_steps = np.array([math.log(b.step) for b in blocks])
    targets = np.array([acceptance_target(b.idx.size) if b.ride is None
                        else 0.44 for b in blocks])
    sd_vecs = [np.ones(b.idx.size) for b in blocks]
    chols = [np.eye(b.idx.size) if b.full_cov else None for b in blocks]
    cov_mean = [np.zeros(b.idx.size) if b.full_cov else None for b in blocks]
    cov_m2 = [np.zeros((b.idx.size, b.idx.size)) if b.full_cov else None
              for b in blocks]
    # Welford accumulators over warmup states, for per-coordinate spreads
    w_count = 0
    w_mean = np.zeros(d)
    w_m2 = np.zeros(d)
    acc_sum = np.zeros(nb)
    acc_n = np.zeros(nb)
    n_kept = (n_iter - warmup + thin - 1) // thin
    draws = np.empty((n_kept, d))
    lps = np.empty(n_kept)
    kept = 0
    for it in range(n_iter):
        in_warmup = it < warmup
        for bi in range(nb):
            blk = blocks[bi]
            step = math.exp(log_steps[bi])
            x_new = x.copy()
            if blk.ride is None:
                z = rng.standard_normal(blk.idx.size)
                if blk.full_cov:
                    x_new[blk.idx] += step * (chols[bi] @ z)
                else:
                    x_new[blk.idx] += step * sd_vecs[bi] * z
                log_jac = 0.0
            else:
                delta = step * rng.standard_normal()
                x_new[blk.idx[0]] += delta
                x_new[blk.ride] *= math.exp(-delta)
                log_jac = -delta * blk.ride.size
            lp_new = float(logpost(x_new))
            log_ratio = lp_new - lp + log_jac
            acc_prob = 1.0 if log_ratio >= 0 else \
                (math.exp(log_ratio) if log_ratio > -745.0 else 0.0)
            if acc_prob == 1.0 or rng.random() < acc_prob:
                x = x_new
                lp = lp_new
            if in_warmup:
                gamma = (it + 10.0) ** -0.6
                log_steps[bi] += gamma * (acc_prob - targets[bi])
            else:
                acc_sum[bi] += acc_prob
                acc_n[bi] += 1.0
        if in_warmup:
            w_count += 1
            delta = x - w_mean
            w_mean += delta / w_count
            w_m2 += delta * (x - w_mean)
            for bi in range(nb):
                if blocks[bi].full_cov:
                    xb = x[blocks[bi].idx]
                    db = xb - cov_mean[bi]
                    cov_mean[bi] += db / w_count
                    cov_m2[bi] += np.outer(db, xb - cov_mean[bi])
            if w_count >= 100 and it % adapt_every == 0:
                sd_full = np.sqrt(np.maximum(w_m2 / (w_count - 1),
                                             sd_floor ** 2))
                for bi in range(nb):
                    blk = blocks[bi]
                    if blk.ride is not None:
                        continue
                    if blk.full_cov:
                        k = blk.idx.size
                        cov = cov_m2[bi] / (w_count - 1)
                        jit = max(np.trace(cov) / k, sd_floor ** 2) * 1e-6 \
                            + sd_floor ** 2
                        try:
                            chols[bi] = np.linalg.cholesky(
                                cov + jit * np.eye(k))
                        except np.linalg.LinAlgError:
                            pass  # keep the previous factor
                    else:
                        sd_vecs[bi] = sd_full[blk.idx]
        else:
            if (it - warmup) % thin == 0:
                draws[kept] = x
                lps[kept] = lp
                kept += 1
    return PosteriorChain(
        draws=draws[:kept], logposts=lps[:kept],
        block_names=[b.name for b in blocks],
        block_accept=acc_sum / np.maximum(acc_n, 1.0),
        block_step=np.exp(log_steps),
        warmup=warmup, thin=thin, n_iter=n_iter)


# -- diagnostics -------------------------------------------------------------

def _stack(chains):
    if isinstance(chains, np.ndarray):
        arr = chains
        if arr.ndim == 2:
            arr = arr[None, :, :]
    else:
        arr = np.stack([c.draws if isinstance(c, PosteriorChain) else c
                        for c in chains])
    if arr.ndim != 3 or arr.shape[1] < 4:
        raise ValidationError("diagnostics: need (chains, draws >= 4, dims)")
    return arr


def split_rhat(chains):
    """Split R-hat per dimension. Each chain is halved, so m chains give 2m
    sequences; constant dimensions report exactly 1."""
    arr = _stack(chains)
    m, n, d = arr.shape
    half = n // 2
    seqs = np.concatenate([arr[:, :half, :], arr[:, half:2 * half, :]],
                          axis=0)  # (2m, half, d)
    means = seqs.mean(axis=1)
    vars_ = seqs.var(axis=1, ddof=1)
    W = vars_.mean(axis=0)
    B = half * means.var(axis=0, ddof=1)
    out = np.ones(d)
    ok = W > 0
    var_plus = ((half - 1) / half) * W[ok] + B[ok] / half
    out[ok] = np.sqrt(var_plus / W[ok])
    return out


def _autocov_fft(x):
    # x: (m, n, k) demeaned per chain; biased autocovariance along axis 1
    m, n, k = x.shape
    nfft = 1
    while nfft < 2 * n:
        nfft *= 2
    f = np.fft.rfft(x, n=nfft, axis=1)
    ac = np.fft.irfft(f * np.conj(f), n=nfft, axis=1)[:, :n, :].real
    return ac / n


def ess(chains, dims=None, chunk=128):
    """Effective sample size per dimension, Geyer initial-monotone pairwise
    estimator pooled across chains."""
    arr = _stack(chains)
    m, n, d = arr.shape
    if dims is None:
        dims = np.arange(d)
    dims = np.asarray(dims, dtype=np.int64)
    out = np.empty(dims.size)
    for lo in range(0, dims.size, chunk):
        sel = dims[lo:lo + chunk]
        x = arr[:, :, sel]
        ch_mean = x.mean(axis=1, keepdims=True)
        ch_var = x.var(axis=1, ddof=1)          # (m, k)
        W = ch_var.mean(axis=0)
        B_over_n = x.mean(axis=1).var(axis=0, ddof=1) if m > 1 \
            else np.zeros(W.shape)
        var_plus = (n - 1) / n * W + B_over_n
        ac = _autocov_fft(x - ch_mean).mean(axis=0)   # (n, k)
        k = sel.size
        for j in range(k):
            if var_plus[j] <= 0:
                out[lo + j] = m * n
                continue
            rho = 1.0 - (W[j] - ac[:, j]) / var_plus[j]
            rho[0] = 1.0
            # pairwise sums; stop at the first nonpositive pair, enforce
            # monotone nonincreasing
            tau = 0.0
            prev = np.inf
            t = 0
            max_pairs = (n - 1) // 2
            for p in range(max_pairs):
                pair = rho[2 * p] + rho[2 * p + 1]
                if pair <= 0:
                    break
                pair = min(pair, prev)
                tau += pair
                prev = pair
                t += 1
            tau = max(2.0 * tau - 1.0, 1.0 / (m * n))
            out[lo + j] = m * n / tau
    return out


def mcse_mean(chains, dims=None):
    """Monte Carlo standard error of the posterior mean per dimension."""
    arr = _stack(chains)
    m, n, d = arr.shape
    if dims is None:
        dims = np.arange(d)
    dims = np.asarray(dims, dtype=np.int64)
    flat = arr.reshape(m * n, d)[:, dims]
    sd = flat.std(axis=0, ddof=1)
    return sd / np.sqrt(ess(arr, dims=dims))


@dataclass
class Diagnostics:
    rhat: np.ndarray
    ess: np.ndarray
    n_chains: int
    n_draws: int
    max_rhat: float = field(init=False)
    min_ess: float = field(init=False)

    def __post_init__(self):
        self.max_rhat = float(np.max(self.rhat))
        self.min_ess = float(np.min(self.ess))

    def converged(self, rhat_limit=1.05):
        return self.max_rhat <= rhat_limit


def diagnose(chains, dims=None) -> Diagnostics:
    arr = _stack(chains)
    rh = split_rhat(arr)
    if dims is not None:
        rh = rh[np.asarray(dims, dtype=np.int64)]
    return Diagnostics(rhat=rh, ess=ess(arr, dims=dims),
                       n_chains=arr.shape[0], n_draws=arr.shape[1])
