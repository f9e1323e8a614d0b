"""Life-history model assembly: priors to kernel arrays, the jitted
log-posterior closure, sampler blocks, initialization, fitting, and
posterior reconstruction of population trajectories.

The sampling vector layout comes from ParameterLayout; every prior is
expressed in one of the kernel's three univariate families (normal on the
transformed scale, Beta through a logit, half-normal through a log) plus
bivariate normal conditionals tying each stock's log alpha to its log beta
when an external stock-recruit hierarchy is supplied.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._backend import BACKEND, K
from .errors import ConvergenceError, DomainError, ValidationError
from .likelihoods import ObservationPack, pack_observations
from .mcmc import Block, PosteriorChain, diagnose, run_chain
from .params import BLOCK_NAMES, ParameterLayout, year_block_indices

PK_SKIP = -1
PK_NORMAL = 0
PK_BETA_LOGIT = 1
PK_HALFNORMAL_LOG = 2


@dataclass(frozen=True)
class PriorConfig:
    """Spread settings for priors not supplied by an upstream stage."""

    q_sd: float = 0.5
    m_sd: float = 0.25
    sigma_scale: float = 0.5
    alpha_mu: float = math.log(50.0)  # eggs per smolt at low density
    alpha_sd: float = 1.5
    beta_sd: float = 1.5
    seed_sd: float = 1.0
    init_sd: float = 1.0
    maturation_a: float = 2.0
    maturation_b: float = 2.0


@dataclass
class ModelPriors:
    """Kernel-ready prior arrays over the flat parameter vector."""

    pk: np.ndarray
    pp1: np.ndarray
    pp2: np.ndarray
    pair_ia: np.ndarray
    pair_ib: np.ndarray
    pair_mu_a: np.ndarray
    pair_mu_b: np.ndarray
    pair_sd_a: np.ndarray
    pair_sd_b: np.ndarray
    pair_rho: np.ndarray

    def args(self):
        return (self.pk, self.pp1, self.pp2, self.pair_ia, self.pair_ib,
                self.pair_mu_a, self.pair_mu_b, self.pair_sd_a,
                self.pair_sd_b, self.pair_rho)

    def center(self):
        """Prior central point on the sampling scale, used to seed chains."""
        x = np.zeros(self.pk.shape[0])
        for k in range(x.size):
            if self.pk[k] == PK_NORMAL:
                x[k] = self.pp1[k]
            elif self.pk[k] == PK_BETA_LOGIT:
                x[k] = special.logit(self.pp1[k] / (self.pp1[k] + self.pp2[k]))
            elif self.pk[k] == PK_HALFNORMAL_LOG:
                x[k] = math.log(self.pp1[k] * 0.6)
        for j in range(self.pair_ia.size):
            xb = x[self.pair_ib[j]]
            x[self.pair_ia[j]] = self.pair_mu_a[j] + self.pair_rho[j] \
                * (self.pair_sd_a[j] / self.pair_sd_b[j]) \
                * (xb - self.pair_mu_b[j])
        return x


def _smolt_scale_guesses(dataset, smolt_approx):
    """Rough per-stock log smolt scale: river-stage output where available,
    habitat-area scaling of the cross-stock mean otherwise, a density
    heuristic when no river data exists at all."""
    areas = {s.id: s.habitat_area for s in dataset.stocks}
    known = {}
    for rec in smolt_approx or []:
        known.setdefault(rec.stock, []).append(rec.mu)
    known = {s: float(np.mean(v)) for s, v in known.items()}
    out = {}
    if known:
        base = float(np.mean(list(known.values())))
        base_la = float(np.mean([math.log(areas[s]) for s in known]))
    for sid in dataset.stock_ids:
        if sid in known:
            out[sid] = known[sid]
        elif known:
            out[sid] = base + math.log(areas[sid]) - base_la
        else:
            out[sid] = math.log(30.0 * areas[sid])
    return out


def build_priors(dataset, layout: ParameterLayout, smolt_approx=None,
                 capacity_priors=None, sr_hyper=None, m74_prior=None,
                 config: PriorConfig = PriorConfig()) -> ModelPriors:
    """Assemble prior arrays.

    capacity_priors: {stock_id: NormalPrior on log capacity} from expert
    elicitation; sr_hyper: SRHyperPrior from external stocks; m74_prior:
    M74SeriesPrior. Missing stages fall back to the documented defaults in
    `config`.
    """
    d = layout.size
    pk = np.full(d, PK_NORMAL, dtype=np.int64)
    pp1 = np.zeros(d)
    pp2 = np.ones(d)
    pairs = []
    guesses = _smolt_scale_guesses(dataset, smolt_approx)
    cap_by_stock = dict(capacity_priors or {})
    cond = sr_hyper.conditional_alpha_given_beta() if sr_hyper else None

    sl = layout.slice_of("beta")
    for i, sid in enumerate(dataset.stock_ids):
        k = sl.start + i
        if sid in cap_by_stock:
            cp = cap_by_stock[sid]
            pp1[k], pp2[k] = -cp.mu, cp.sd  # log beta = -log capacity
        elif cond is not None:
            pp1[k], pp2[k] = cond[1], cond[3]
        else:
            pp1[k] = -(guesses[sid] + math.log(2.0))
            pp2[k] = config.beta_sd
    sl = layout.slice_of("alpha")
    for i in range(layout.ns):
        k = sl.start + i
        if cond is not None:
            pk[k] = PK_SKIP
            pairs.append((k, layout.slice_of("beta").start + i) + cond)
        else:
            pp1[k], pp2[k] = config.alpha_mu, config.alpha_sd
    sl = layout.slice_of("q")
    for f, fdef in enumerate(dataset.fisheries):
        pp1[sl.start + f] = math.log(fdef.q)
        pp2[sl.start + f] = config.q_sd
    sl = layout.slice_of("maturation")
    pk[sl] = PK_BETA_LOGIT
    pp1[sl] = config.maturation_a
    pp2[sl] = config.maturation_b
    sl = layout.slice_of("mortality")
    pp1[sl.start] = math.log(dataset.m_post_smolt)
    pp1[sl.start + 1] = math.log(dataset.m_adult)
    pp2[sl.start:sl.stop] = config.m_sd
    sl = layout.slice_of("sigma")
    pk[sl] = PK_HALFNORMAL_LOG
    pp1[sl] = config.sigma_scale
    sl = layout.slice_of("s74")
    pk[sl] = PK_BETA_LOGIT
    if m74_prior is not None:
        a, b = m74_prior.beta_params()
        if a.shape[0] != layout.ny:
            raise ValidationError("m74 prior length does not match years")
        pp1[sl], pp2[sl] = a, b
    else:
        pp1[sl], pp2[sl] = 2.0, 2.0
    # pre-model smolt years and first-year sea abundance: lognormal around
    # the data-driven scale guess, decayed through rough survival for ages
    sl = layout.slice_of("r_seed")
    for i, sid in enumerate(dataset.stock_ids):
        pp1[sl.start + i * layout.tdelay:
            sl.start + (i + 1) * layout.tdelay] = guesses[sid]
    pp2[sl] = config.seed_sd
    sl = layout.slice_of("n_init")
    mat_guess = (np.arange(1, layout.na + 1)) / (layout.na + 1.0)
    for i, sid in enumerate(dataset.stock_ids):
        n = guesses[sid] - dataset.m_post_smolt + math.log(0.85)
        for a in range(layout.na):
            pp1[sl.start + i * layout.na + a] = n
            n += math.log(1.0 - mat_guess[a]) - dataset.m_adult
    pp2[sl] = config.init_sd
    # z blocks keep the standard-normal default (pp1 0, pp2 1)
    npairs = len(pairs)
    return ModelPriors(
        pk=pk, pp1=pp1, pp2=pp2,
        pair_ia=np.array([p[0] for p in pairs], dtype=np.int64),
        pair_ib=np.array([p[1] for p in pairs], dtype=np.int64),
        pair_mu_a=np.array([p[2] for p in pairs], dtype=float),
        pair_mu_b=np.array([p[3] for p in pairs], dtype=float),
        pair_sd_a=np.array([p[4] for p in pairs], dtype=float),
        pair_sd_b=np.array([p[5] for p in pairs], dtype=float),
        pair_rho=np.array([p[6] for p in pairs], dtype=float)) \
        if npairs else ModelPriors(
            pk=pk, pp1=pp1, pp2=pp2,
            pair_ia=np.zeros(0, dtype=np.int64),
            pair_ib=np.zeros(0, dtype=np.int64),
            pair_mu_a=np.zeros(0), pair_mu_b=np.zeros(0),
            pair_sd_a=np.ones(0), pair_sd_b=np.ones(0),
            pair_rho=np.zeros(0))


@dataclass
class PosteriorFit:
    """Chains from one fit, with the layout needed to interpret them."""

    chains: list
    layout: ParameterLayout
    seed: int
    backend: str

    def draw_matrix(self):
        return np.stack([c.draws for c in self.chains])

    def flat(self):
        m = self.draw_matrix()
        return m.reshape(-1, m.shape[-1])

    def diagnostics(self, dims=None):
        return diagnose(self.draw_matrix(), dims=dims)

    def block_slice(self, name):
        return self.layout.slice_of(name)


class LifeHistoryModel:
    """Posterior for one assessment dataset.

    Build with `build_model`; `fit` runs chains sequentially (single CPU)
    with per-chain child seeds from one SeedSequence.
    """

    def __init__(self, dataset, layout, priors, pack: ObservationPack):
        self.dataset = dataset
        self.layout = layout
        self.priors = priors
        self.pack = pack
        self._args = (
            layout.dims, layout.offsets, *priors.args(),
            np.ascontiguousarray(pack.effort),
            np.ascontiguousarray(pack.selectivity),
            np.ascontiguousarray(dataset.fecundity, dtype=float),
            float(dataset.female_prop),
            np.ascontiguousarray(pack.releases),
            pack.cat_f, pack.cat_t, pack.cat_logobs, pack.cat_sig,
            pack.tag_rel, pack.tag_m, pack.tag_rec, pack.reporting_rates,
            pack.sp_i, pack.sp_t, pack.sp_logobs, pack.sp_sig,
            pack.sm_i, pack.sm_t, pack.sm_mu, pack.sm_sd)

    def logpost(self, x):
        return K.logpost_core(np.ascontiguousarray(x, dtype=float),
                              *self._args)

    def param_names(self):
        names = []
        lay = self.layout
        sizes = lay.block_sizes()
        for name in BLOCK_NAMES:
            for k in range(sizes[name]):
                names.append(f"{name}[{k}]")
        return names

    def scalar_dims(self):
        """Indices of the non-latent blocks (everything except z arrays)."""
        idx = []
        for name in BLOCK_NAMES:
            if not name.startswith("z_"):
                s = self.layout.slice_of(name)
                idx.extend(range(s.start, s.stop))
        return np.asarray(idx, dtype=np.int64)

    def make_blocks(self):
        # catchabilities correlate strongly with mortality through the catch
        # equation, and each stock's (alpha, beta) and early-state coords
        # are mutually correlated: those get dense proposal covariances
        lay = self.layout
        blocks = []
        a0 = lay.slice_of("alpha").start
        b0 = lay.slice_of("beta").start
        for i in range(lay.ns):
            blocks.append(Block(f"sr[{i}]", np.array([a0 + i, b0 + i]),
                                full_cov=True))
        blocks.append(Block("fleet", np.concatenate(
            [lay.indices_of("q"), lay.indices_of("mortality")]),
            full_cov=True))
        blocks.append(Block("maturation", lay.indices_of("maturation"),
                            full_cov=True))
        sig = lay.slice_of("sigma").start
        rides = [lay.indices_of("z_r"), lay.indices_of("z_n"),
                 lay.indices_of("z_s")]
        for j, tag in enumerate(("r", "n", "s")):
            blocks.append(Block(f"sigma_{tag}", np.array([sig + j])))
            blocks.append(Block(f"sigma_{tag}.ride", np.array([sig + j]),
                                ride=rides[j]))
        blocks.append(Block("s74", lay.indices_of("s74")))
        rs = lay.slice_of("r_seed").start
        ni = lay.slice_of("n_init").start
        for i in range(lay.ns):
            idx = np.concatenate([
                np.arange(rs + i * lay.tdelay, rs + (i + 1) * lay.tdelay),
                np.arange(ni + i * lay.na, ni + (i + 1) * lay.na)])
            blocks.append(Block(f"start[{i}]", idx, full_cov=True))
        zr_n = lay.ny - lay.tdelay
        for j, idx in enumerate(year_block_indices(lay)):
            if j < zr_n:
                name = f"z_r.y{j}"
            elif j < zr_n + lay.ny - 1:
                name = f"z_n.y{j - zr_n}"
            else:
                name = f"z_s.y{j - zr_n - (lay.ny - 1)}"
            blocks.append(Block(name, idx))
        return blocks

    def initial_point(self, rng=None, jitter=0.1):
        """Prior center, optionally jittered for chain dispersion. Latents
        start near zero so the first trajectory stays in a sane range."""
        x = self.priors.center()
        if rng is not None:
            scal = self.scalar_dims()
            x[scal] += jitter * rng.standard_normal(scal.size)
            for name in ("z_r", "z_n", "z_s"):
                s = self.layout.slice_of(name)
                x[s] += (0.3 * jitter) * rng.standard_normal(s.stop - s.start)
        lp = self.logpost(x)
        if not math.isfinite(lp):
            raise DomainError("initial point has non-finite log posterior")
        return x

    def fit(self, *, n_chains=4, n_iter=4000, warmup=None, seed=0, thin=1,
            check_rhat=None) -> PosteriorFit:
        warmup = n_iter // 2 if warmup is None else warmup
        blocks = self.make_blocks()
        chains = []
        root = np.random.SeedSequence(seed)
        for c, child in enumerate(root.spawn(n_chains)):
            rng = np.random.Generator(np.random.PCG64(child))
            x0 = self.initial_point(rng=rng)
            chains.append(run_chain(self.logpost, x0, blocks,
                                    n_iter=n_iter, warmup=warmup, rng=rng,
                                    thin=thin))
        fit = PosteriorFit(chains=chains, layout=self.layout, seed=seed,
                           backend=BACKEND)
        if check_rhat is not None:
            diag = fit.diagnostics()
            if diag.max_rhat > check_rhat:
                worst = int(np.argmax(diag.rhat))
                raise ConvergenceError(
                    f"max split R-hat {diag.max_rhat:.3f} > {check_rhat} "
                    f"at {self.param_names()[worst]}",
                    stage="life-history",
                    details={"max_rhat": diag.max_rhat, "dim": worst})
        return fit

    # -- posterior reconstruction ----------------------------------------

    def _draws_2d(self, draws):
        """Accept a single draw, a (nd, d) matrix, or stacked chains."""
        draws = np.asarray(draws, dtype=float)
        if draws.ndim == 1:
            draws = draws[None, :]
        elif draws.ndim == 3:
            draws = draws.reshape(-1, draws.shape[-1])
        if draws.ndim != 2 or draws.shape[1] != self.layout.size:
            raise ValidationError(
                f"draws must have {self.layout.size} columns, "
                f"got shape {draws.shape}")
        return draws

    def trajectories(self, draws):
        """Latent states for each draw: R (nd, ns, ny), N, S, O."""
        draws = self._draws_2d(draws)
        nd = draws.shape[0]
        lay = self.layout
        dims, off = lay.dims, lay.offsets
        R = np.empty((nd, lay.ns, lay.ny))
        N = np.empty((nd, lay.ns, lay.ny, lay.na))
        S = np.empty((nd, lay.ns, lay.ny, lay.na))
        O = np.empty((nd, lay.ns, lay.ny))
        fec = np.ascontiguousarray(self.dataset.fecundity, dtype=float)
        fp = float(self.dataset.female_prop)
        for k in range(nd):
            (alpha, beta, q, L, m0, mad, sig_r, sig_n, sig_s, s74,
             r_seed, n_init, z_r, z_n, z_s) = K.unpack_core(
                np.ascontiguousarray(draws[k]), dims, off)
            M = np.empty((lay.ny, lay.na + 1))
            M[:, 0] = m0
            M[:, 1:] = mad
            _, Ftot = K.fishing_mortality_grid(q, self.pack.effort,
                                               self.pack.selectivity)
            R[k], N[k], S[k], O[k] = K.traj_core(
                alpha, beta, Ftot, M, L, s74, sig_r, sig_n, sig_s,
                fp, fec, r_seed, n_init, z_r, z_n, z_s, lay.tdelay)
        return {"R": R, "N": N, "S": S, "O": O}

    def projection_state(self, draws):
        """Everything `decisions.project` needs about the end of the fitted
        window, per draw."""
        draws = self._draws_2d(draws)
        nd = draws.shape[0]
        lay = self.layout
        dims, off = lay.dims, lay.offsets
        T = lay.tdelay
        ny = lay.ny
        state = {
            "alpha": np.empty((nd, lay.ns)), "beta": np.empty((nd, lay.ns)),
            "q": np.empty((nd, lay.nf)), "L": np.empty((nd, lay.na)),
            "m0": np.empty(nd), "mad": np.empty(nd),
            "sig_r": np.empty(nd), "sig_n": np.empty(nd),
            "sig_s": np.empty(nd),
            "s74_last": np.empty(nd), "s74_fitted": np.empty((nd, ny)),
            "n_last": np.empty((nd, lay.ns, lay.na)),
            "r_last": np.empty((nd, lay.ns)),
            "o_tail": np.empty((nd, lay.ns, T)),
            "nr_last": np.empty((nd, lay.na)),
        }
        fec = np.ascontiguousarray(self.dataset.fecundity, dtype=float)
        fp = float(self.dataset.female_prop)
        for k in range(nd):
            (alpha, beta, q, L, m0, mad, sig_r, sig_n, sig_s, s74,
             r_seed, n_init, z_r, z_n, z_s) = K.unpack_core(
                np.ascontiguousarray(draws[k]), dims, off)
            M = np.empty((ny, lay.na + 1))
            M[:, 0] = m0
            M[:, 1:] = mad
            _, Ftot = K.fishing_mortality_grid(q, self.pack.effort,
                                               self.pack.selectivity)
            R, N, S, O = K.traj_core(
                alpha, beta, Ftot, M, L, s74, sig_r, sig_n, sig_s,
                fp, fec, r_seed, n_init, z_r, z_n, z_s, T)
            Nr = K.reared_core(self.pack.releases, Ftot, M, L, s74)
            state["alpha"][k] = alpha
            state["beta"][k] = beta
            state["q"][k] = q
            state["L"][k] = L
            state["m0"][k] = m0
            state["mad"][k] = mad
            state["sig_r"][k] = sig_r
            state["sig_n"][k] = sig_n
            state["sig_s"][k] = sig_s
            state["s74_last"][k] = s74[ny - 1]
            state["s74_fitted"][k] = s74
            state["n_last"][k] = N[:, ny - 1, :]
            state["r_last"][k] = R[:, ny - 1]
            state["o_tail"][k] = O[:, ny - T:]
            state["nr_last"][k] = Nr[ny - 1, :]
        state["effort_last"] = np.ascontiguousarray(
            self.pack.effort[:, ny - 1])
        state["selectivity"] = self.pack.selectivity
        state["fecundity"] = fec
        state["female_prop"] = fp
        state["rel_last"] = float(self.pack.releases[ny - 1])
        state["stock_ids"] = list(self.dataset.stock_ids)
        state["fishery_ids"] = list(self.dataset.fishery_ids)
        return state


def build_model(dataset, smolt_approx=None, capacity_priors=None,
                sr_hyper=None, m74_prior=None,
                config: PriorConfig = PriorConfig()) -> LifeHistoryModel:
    dataset.validate()
    layout = ParameterLayout(ns=len(dataset.stocks), ny=dataset.n_years,
                             na=dataset.max_sea_age,
                             nf=len(dataset.fisheries),
                             tdelay=dataset.smolt_delay)
    priors = build_priors(dataset, layout, smolt_approx=smolt_approx,
                          capacity_priors=capacity_priors, sr_hyper=sr_hyper,
                          m74_prior=m74_prior, config=config)
    pack = pack_observations(dataset, smolt_approx=smolt_approx)
    return LifeHistoryModel(dataset, layout, priors, pack)
