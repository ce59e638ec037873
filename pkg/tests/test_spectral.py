import math

import numpy as np
import pytest

from critlab.core import Dimension, RadialGrid
from critlab.spectral import (SectorOperator, assemble_sector,
                              assemble_sector_raw, lowest_eigs,
                              spectral_certificate, sturm_count_below)

D3, D4 = Dimension(3), Dimension(4)

# first two positive roots of tan x = x (Dirichlet spectrum of the
# free k=1 radial operator on an interval, textbook values)
TAN_ROOTS = (4.493409457909064, 7.725251836937707)


class TestAssembly:
    def test_free_operator_k0_d3(self):
        L, n, omega = 10.0, 4096, 2.0
        grid = RadialGrid(L, n)
        op = assemble_sector_raw(D3, omega, None, np.zeros(n + 1), grid, 0)
        spec = lowest_eigs(op, 3)
        for j, lam in enumerate(spec.eigenvalues, start=1):
            assert lam == pytest.approx((j * math.pi / L) ** 2 + omega,
                                        rel=5e-6)

    def test_free_operator_k1_d3(self):
        """k=1 free spectrum sits at the roots of tan x = x."""
        L, n, omega = 10.0, 8192, 2.0
        grid = RadialGrid(L, n)
        op = assemble_sector_raw(D3, omega, None, np.zeros(n + 1), grid, 1)
        spec = lowest_eigs(op, 2)
        for lam, x in zip(spec.eigenvalues, TAN_ROOTS):
            assert lam == pytest.approx((x / L) ** 2 + omega, rel=5e-6)

    def test_centrifugal_terms_d3(self, sweep_d3):
        gs = sweep_d3[100.0][0]
        grid = RadialGrid(200.0, 2 ** 12)
        nodes = grid.nodes()[1:-1]
        op0 = assemble_sector(gs, 0, grid)
        op1 = assemble_sector(gs, 1, grid)
        # d=3: (d-1)(d-3)/4 = 0, so k=0 adds nothing and k=1 adds 2/r^2
        diff = op1.diag - op0.diag
        assert np.allclose(diff, 2.0 / nodes ** 2, rtol=1e-13)

    def test_free_eigenvalue_floor(self):
        """With no potential well every eigenvalue sits above omega."""
        grid = RadialGrid(10.0, 1024)
        op = assemble_sector_raw(D4, 3.0, None, np.zeros(1025), grid, 0)
        spec = lowest_eigs(op, 4)
        assert np.all(spec.eigenvalues > 3.0)
        assert spec.negative_count == 0

    def test_grid_guard(self, sweep_d3):
        gs = sweep_d3[100.0][0]
        with pytest.raises(ValueError):
            assemble_sector(gs, 0, RadialGrid(400.0, 256))


class TestEigsolver:
    def test_diagonal_matrix(self):
        diag = np.array([3.0, -1.0, 2.0, 7.0, 0.5])
        op = SectorOperator(k=0, grid=RadialGrid(1.0, 6), diag=diag,
                            offdiag=np.zeros(4), omega=1.0, dim=D3,
                            scale_factor=1.0, s_floor=1.0)
        spec = lowest_eigs(op, 5)
        assert np.allclose(spec.eigenvalues, np.sort(diag))
        assert spec.negative_count == 1

    def test_negative_count_matches_list(self, ref_cert):
        for (_, k), sector in ref_cert.sectors.items():
            assert sector.negative_count == int(np.sum(sector.eigenvalues < 0))

    def test_sturm_shift_recount(self, sweep_d3):
        """Count below 0 equals count below -1e-14 plus listed band modes."""
        gs = sweep_d3[100.0][0]
        for k in (0, 1, 2):
            op = assemble_sector(gs, k, RadialGrid(400.0, 2 ** 12))
            c0 = sturm_count_below(op.diag, op.offdiag, 0.0)
            cm = sturm_count_below(op.diag, op.offdiag, -1e-14)
            spec = lowest_eigs(op, 5)
            band = int(np.sum((spec.eigenvalues >= -1e-14)
                              & (spec.eigenvalues < 0.0)))
            assert c0 == cm + band

    def test_eigenvector_residuals(self, ref_cert):
        for sector in ref_cert.sectors.values():
            norm = 2.0 / (ref_cert.r_max / max(ref_cert.ladder_ns)) ** 2
            assert sector.max_residual < 1e-8 * norm

    def test_near_zero_capture(self, sweep_d3):
        gs = sweep_d3[100.0][0]
        op = assemble_sector(gs, 1, RadialGrid(400.0, 2 ** 13))
        spec = lowest_eigs(op, 3, near_zero_cut=1e-3)
        assert spec.near_zero is not None
        val, vec = spec.near_zero
        assert abs(val) < 1e-3
        assert vec.shape == (2 ** 13 - 1,)

    def test_raw_scaling(self, ref_cert):
        sector = ref_cert.sectors[(ref_cert.ladder_ns[-1], 0)]
        assert np.allclose(sector.raw_eigenvalues(),
                           ref_cert.scale_factor * sector.eigenvalues)

    def test_bad_request(self, sweep_d3):
        gs = sweep_d3[100.0][0]
        op = assemble_sector(gs, 0, RadialGrid(400.0, 2 ** 10))
        with pytest.raises(ValueError):
            lowest_eigs(op, 0)


class TestWeyl:
    def test_matrix_level_monotonicity(self, ref_cert):
        """Sectors differ by a positive diagonal: every eigenvalue climbs."""
        fine = ref_cert.ladder_ns[-1]
        for k in (0, 1):
            lo = ref_cert.sectors[(fine, k)].eigenvalues
            hi = ref_cert.sectors[(fine, k + 1)].eigenvalues
            assert np.all(hi > lo)


class TestCertificate:
    def test_reference_case_passes(self, ref_cert):
        assert ref_cert.status == "pass"
        assert all(v == "pass" for v in ref_cert.verdicts.values()), \
            ref_cert.verdicts

    def test_negative_counts(self, ref_cert):
        assert ref_cert.details["k0_negative_counts"] == [1, 1]

    def test_kernel_ladder(self, ref_cert):
        ratios = ref_cert.details["k1_shrink_ratios"]
        assert all(2.0 <= r <= 8.0 for r in ratios)
        assert ref_cert.details["k1_alignment"] >= 0.999

    def test_state_pairing_negative(self, ref_cert):
        assert ref_cert.details["state_pairing"] < 0.0

    def test_form_floor(self, ref_cert):
        assert ref_cert.details["min_projected_rayleigh"] >= -1e-6

    def test_requires_ladder(self, sweep_d3):
        gs = sweep_d3[100.0][0]
        with pytest.raises(ValueError):
            spectral_certificate(gs, k_max=2, ladder_ns=(2 ** 12,))
        with pytest.raises(ValueError):
            spectral_certificate(gs, k_max=1)

    def test_seed_reproducible(self, sweep_d3):
        gs = sweep_d3[100.0][0]
        a = spectral_certificate(gs, ladder_ns=(2 ** 11, 2 ** 12), seed=7)
        b = spectral_certificate(gs, ladder_ns=(2 ** 11, 2 ** 12), seed=7)
        assert a.details["min_projected_rayleigh"] == \
            b.details["min_projected_rayleigh"]
