"""Parameter vector layout: packing, unpacking and block bookkeeping."""

import numpy as np
import pytest

from smolt._backend import K
from smolt.errors import DomainError, ValidationError
from smolt.params import BLOCK_NAMES, ParameterLayout, year_block_indices


@pytest.fixture
def layout():
    return ParameterLayout(ns=3, ny=10, na=4, nf=2, tdelay=2)


def natural_values(layout, seed=0):
    r = np.random.default_rng(seed)
    ns, ny, na, nf, T = (layout.ns, layout.ny, layout.na, layout.nf,
                         layout.tdelay)
    L = np.sort(r.uniform(0.1, 0.9, na))
    L[-1] = 1.0
    return {
        "alpha": r.uniform(10, 100, ns),
        "beta": 1.0 / r.uniform(1e4, 1e6, ns),
        "q": r.uniform(0.005, 0.05, nf),
        "maturation": L,
        "mortality": np.array([r.uniform(0.5, 1.5), r.uniform(0.05, 0.3)]),
        "sigma": r.uniform(0.05, 0.5, 3),
        "s74": r.uniform(0.2, 0.95, ny),
        "r_seed": r.uniform(1e3, 1e5, (ns, T)),
        "n_init": r.uniform(1e2, 1e4, (ns, na)),
        "z_r": r.standard_normal((ns, ny - T)),
        "z_n": r.standard_normal((ns, ny - 1, na)),
        "z_s": r.standard_normal((ns, ny, na)),
    }


class TestLayout:
    def test_block_sizes_partition_the_vector(self, layout):
        sizes = layout.block_sizes()
        assert sum(sizes.values()) == layout.size
        assert set(sizes) == set(BLOCK_NAMES)
        seen = np.zeros(layout.size, dtype=bool)
        for name in BLOCK_NAMES:
            idx = layout.indices_of(name)
            assert not seen[idx].any()
            seen[idx] = True
        assert seen.all()

    def test_slices_agree_with_indices(self, layout):
        for name in BLOCK_NAMES:
            sl = layout.slice_of(name)
            np.testing.assert_array_equal(np.arange(layout.size)[sl],
                                          layout.indices_of(name))

    def test_pack_unpack_round_trip(self, layout):
        vals = natural_values(layout, seed=1)
        x = layout.pack(vals)
        assert x.shape == (layout.size,)
        back = layout.unpack(x)
        for name, v in vals.items():
            np.testing.assert_allclose(back[name], v, rtol=1e-12,
                                       err_msg=name)

    def test_unpack_matches_kernel_unpack(self, layout):
        vals = natural_values(layout, seed=2)
        x = layout.pack(vals)
        (alpha, beta, q, L, m0, mad, sig_r, sig_n, sig_s, s74,
         r_seed, n_init, z_r, z_n, z_s) = K.unpack_core(
            x, layout.dims, layout.offsets)
        py = layout.unpack(x)
        np.testing.assert_allclose(alpha, py["alpha"], rtol=1e-12)
        np.testing.assert_allclose(beta, py["beta"], rtol=1e-12)
        np.testing.assert_allclose(q, py["q"], rtol=1e-12)
        np.testing.assert_allclose(L, py["maturation"], rtol=1e-12)
        np.testing.assert_allclose([m0, mad], py["mortality"], rtol=1e-12)
        np.testing.assert_allclose([sig_r, sig_n, sig_s], py["sigma"],
                                   rtol=1e-12)
        np.testing.assert_allclose(s74, py["s74"], rtol=1e-12)
        np.testing.assert_allclose(r_seed, py["r_seed"], rtol=1e-12)
        np.testing.assert_allclose(n_init, py["n_init"], rtol=1e-12)
        np.testing.assert_allclose(z_r, py["z_r"], rtol=1e-12)
        np.testing.assert_allclose(z_n, py["z_n"], rtol=1e-12)
        np.testing.assert_allclose(z_s, py["z_s"], rtol=1e-12)

    def test_maturation_final_age_is_pinned(self, layout):
        vals = natural_values(layout, seed=3)
        x = layout.pack(vals)
        back = layout.unpack(x)
        assert back["maturation"][-1] == 1.0
        # the sampling vector has no coordinate for the pinned entry
        assert layout.block_sizes()["maturation"] == layout.na - 1

    def test_pack_rejects_out_of_range_values(self, layout):
        vals = natural_values(layout, seed=4)
        vals["s74"] = np.full(layout.ny, 1.5)
        with pytest.raises(DomainError):
            layout.pack(vals)
        vals = natural_values(layout, seed=4)
        vals["alpha"] = -np.abs(vals["alpha"])
        with pytest.raises(DomainError):
            layout.pack(vals)

    def test_describe_covers_the_vector_contiguously(self, layout):
        triples = layout.describe()
        assert [t[0] for t in triples] == list(BLOCK_NAMES)
        cursor = 0
        for name, start, size in triples:
            assert start == cursor
            cursor += size
        assert cursor == layout.size

    def test_year_blocks_partition_the_latent_coordinates(self, layout):
        blocks = year_block_indices(layout)
        z_all = np.concatenate([layout.indices_of(n)
                                for n in ("z_r", "z_n", "z_s")])
        got = np.concatenate(blocks)
        assert np.array_equal(np.sort(got), np.sort(z_all))

    def test_degenerate_dimensions_rejected(self):
        with pytest.raises(ValidationError):
            ParameterLayout(ns=0, ny=5, na=2, nf=1, tdelay=1)
        with pytest.raises(ValidationError):
            ParameterLayout(ns=1, ny=2, na=2, nf=1, tdelay=2)
