"""Flat parameter vector layout shared by the sampler and the jitted
log-posterior.

Twelve blocks in fixed order; positives are sampled on the log scale,
probabilities on the logit scale, process-error innovations untransformed:

    alpha, beta      (ns,)      log      stock-recruit parameters
    q                (nf,)      log      catchabilities
    maturation       (na-1,)    logit    last sea age matures with prob 1
    mortality        (2,)       log      post-smolt and adult M
    sigma            (3,)       log      process sd (smolt, sea, spawner)
    s74              (ny,)      logit    annual egg-survival factor
    r_seed           (ns*T,)    log      pre-model smolt years
    n_init           (ns*na,)   log      first-year sea abundance
    z_r, z_n, z_s    latent innovations, standard-normal a priori

pack/unpack round-trip to ~1e-12 (exp/log and expit/logit are not exact
inverses in floating point).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, ValidationError

BLOCK_NAMES = ("alpha", "beta", "q", "maturation", "mortality", "sigma",
               "s74", "r_seed", "n_init", "z_r", "z_n", "z_s")


def _logit(p):
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0) or np.any(p >= 1):
        raise DomainError("logit: argument outside (0, 1)")
    return special.logit(p)


def _log(v):
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise DomainError("log transform: argument must be > 0")
    return np.log(v)


@dataclass(frozen=True)
class ParameterLayout:
    """Index arithmetic for the sampling vector; dims are
    (stocks, years, sea ages, fisheries, smolt delay)."""

    ns: int
    ny: int
    na: int
    nf: int
    tdelay: int

    def __post_init__(self):
        if min(self.ns, self.nf) < 1 or self.na < 2:
            raise ValidationError("layout: need >= 1 stock/fishery, >= 2 ages")
        if not 1 <= self.tdelay < self.ny:
            raise ValidationError("layout: need 1 <= tdelay < ny")

    @property
    def dims(self):
        return np.array([self.ns, self.ny, self.na, self.nf, self.tdelay],
                        dtype=np.int64)

    def block_sizes(self):
        ns, ny, na, nf, T = self.ns, self.ny, self.na, self.nf, self.tdelay
        return {
            "alpha": ns, "beta": ns, "q": nf, "maturation": na - 1,
            "mortality": 2, "sigma": 3, "s74": ny,
            "r_seed": ns * T, "n_init": ns * na,
            "z_r": ns * (ny - T), "z_n": ns * (ny - 1) * na,
            "z_s": ns * ny * na,
        }

    @property
    def offsets(self):
        sizes = self.block_sizes()
        off = np.zeros(len(BLOCK_NAMES), dtype=np.int64)
        pos = 0
        for k, name in enumerate(BLOCK_NAMES):
            off[k] = pos
            pos += sizes[name]
        return off

    @property
    def size(self):
        return int(sum(self.block_sizes().values()))

    def slice_of(self, name):
        if name not in BLOCK_NAMES:
            raise ValidationError(f"unknown block {name!r}")
        off = self.offsets
        k = BLOCK_NAMES.index(name)
        return slice(int(off[k]), int(off[k]) + self.block_sizes()[name])

    def indices_of(self, name):
        s = self.slice_of(name)
        return np.arange(s.start, s.stop, dtype=np.int64)

    # -- natural <-> sampling scale ---------------------------------------

    def pack(self, values: dict) -> np.ndarray:
        """Natural-scale dict -> flat sampling vector. `maturation` takes the
        full (na,) vector and checks the last entry is 1."""
        missing = set(BLOCK_NAMES) - set(values)
        if missing:
            raise ValidationError(f"pack: missing blocks {sorted(missing)}")
        x = np.empty(self.size)
        mat = np.asarray(values["maturation"], dtype=float)
        if mat.shape != (self.na,) or mat[-1] != 1.0:
            raise ValidationError("pack: maturation must be (na,) ending in 1")
        put = {
            "alpha": _log(values["alpha"]),
            "beta": _log(values["beta"]),
            "q": _log(values["q"]),
            "maturation": _logit(mat[:-1]),
            "mortality": _log(values["mortality"]),
            "sigma": _log(values["sigma"]),
            "s74": _logit(values["s74"]),
            "r_seed": _log(values["r_seed"]).ravel(),
            "n_init": _log(values["n_init"]).ravel(),
            "z_r": np.asarray(values["z_r"], dtype=float).ravel(),
            "z_n": np.asarray(values["z_n"], dtype=float).ravel(),
            "z_s": np.asarray(values["z_s"], dtype=float).ravel(),
        }
        sizes = self.block_sizes()
        for name in BLOCK_NAMES:
            arr = np.asarray(put[name], dtype=float).ravel()
            if arr.size != sizes[name]:
                raise ValidationError(
                    f"pack: block {name} has size {arr.size}, "
                    f"expected {sizes[name]}")
            x[self.slice_of(name)] = arr
        return x

    def unpack(self, x: np.ndarray) -> dict:
        """Flat vector -> natural-scale dict (maturation padded with the
        fixed 1, latents reshaped)."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise ValidationError(
                f"unpack: expected shape ({self.size},), got {x.shape}")
        ns, ny, na, T = self.ns, self.ny, self.na, self.tdelay
        g = lambda name: x[self.slice_of(name)]
        mat = np.empty(na)
        mat[:-1] = special.expit(g("maturation"))
        mat[-1] = 1.0
        return {
            "alpha": np.exp(g("alpha")),
            "beta": np.exp(g("beta")),
            "q": np.exp(g("q")),
            "maturation": mat,
            "mortality": np.exp(g("mortality")),
            "sigma": np.exp(g("sigma")),
            "s74": special.expit(g("s74")),
            "r_seed": np.exp(g("r_seed")).reshape(ns, T),
            "n_init": np.exp(g("n_init")).reshape(ns, na),
            "z_r": g("z_r").reshape(ns, ny - T).copy(),
            "z_n": g("z_n").reshape(ns, ny - 1, na).copy(),
            "z_s": g("z_s").reshape(ns, ny, na).copy(),
        }

    def describe(self):
        """Stable (name, start, size) triples, for manifests and summaries."""
        off = self.offsets
        sizes = self.block_sizes()
        return [(name, int(off[k]), sizes[name])
                for k, name in enumerate(BLOCK_NAMES)]


def year_block_indices(layout: ParameterLayout):
    """Sampler blocks for the latent innovations, grouped by year across
    stocks and destinations: one block per recruitment year, one per
    transition year, one per spawning year."""
    ns, ny, na, T = layout.ns, layout.ny, layout.na, layout.tdelay
    blocks = []
    zr = layout.indices_of("z_r").reshape(ns, ny - T)
    for j in range(ny - T):
        blocks.append(np.ascontiguousarray(zr[:, j]))
    zn = layout.indices_of("z_n").reshape(ns, ny - 1, na)
    for t in range(ny - 1):
        blocks.append(np.ascontiguousarray(zn[:, t, :].ravel()))
    zs = layout.indices_of("z_s").reshape(ns, ny, na)
    for t in range(ny):
        blocks.append(np.ascontiguousarray(zs[:, t, :].ravel()))
    return blocks
