import dataclasses
import warnings

import numpy as np
import pytest

from rewlab.bipartite import DensityMatrix, is_ppt, partial_transpose
from rewlab.errors import DegenerateParameters, InvalidInput, NotApplicable, NotAProjector
from rewlab.linalg import inertia, max_abs, real_imag_split, schmidt
from rewlab.seesaw import min_product_expectation
from rewlab.states import (
    Rank4Params,
    bell_phase_state,
    bell_phase_vector,
    dephase_upb,
    diagonal_realpart_pattern,
    h_counterexample,
    quqart_pair,
    quqart_unnormalized,
    rank4_state,
    support_reduce,
    upb_family,
    upb_state,
    witness_theta,
)

from oracles import pt_loops, random_density


def ket(i, j, n=4):
    v = np.zeros(n * n)
    v[i * n + j] = 1
    return v


def proj(v):
    return np.outer(v, np.conj(v))


class TestBell:
    def test_theta_zero_real(self):
        rho = bell_phase_state(0)
        assert rho.is_real

    def test_half_pi_real_part(self):
        re = bell_phase_state(np.pi / 2).mat.real
        np.testing.assert_allclose(re, np.diag([0.5, 0, 0, 0.5]), atol=1e-16)

    @pytest.mark.parametrize("theta", [0, 0.3, 1, np.pi / 2, 4])
    def test_schmidt(self, theta):
        sf = schmidt(bell_phase_vector(theta), (2, 2))
        np.testing.assert_allclose(sf.coefficients, [2**-0.5, 2**-0.5], atol=1e-15)


class TestWitnessTheta:
    def test_inertia_zero(self):
        assert inertia(witness_theta(0).mat) == (1, 0, 3)

    def test_half_pi_real_part_is_separable_state(self):
        wp = witness_theta(np.pi / 2).mat.real
        np.testing.assert_allclose(wp, np.diag([0.5, 0, 0, 0.5]), atol=1e-16)

    def test_pi_third_spectrum(self):
        w = np.linalg.eigvalsh(witness_theta(np.pi / 3).mat.real)
        np.testing.assert_allclose(w, [-0.25, 0.25, 0.5, 0.5], atol=1e-14)


class TestH:
    def test_inertia(self):
        assert inertia(h_counterexample().mat) == (2, 0, 2)

    def test_real_part(self):
        plus, _ = real_imag_split(h_counterexample().mat)
        v = bell_phase_vector(0)
        np.testing.assert_allclose(plus, pt_loops(proj(v), (2, 2)).real, atol=1e-14)

    def test_not_a_witness(self):
        assert min_product_expectation(h_counterexample(), restarts=32).value < -1e-3


def upb_oracle(ga, ta, pa, gb, tb, pb):
    """Transcription of the five product vectors, entry by entry."""
    def side(g, t, p):
        n = np.sqrt(np.cos(g) ** 2 + np.sin(g) ** 2 * np.cos(t) ** 2)
        e = np.exp(1j * p)
        return n, [np.array([1, 0, 0]), np.array([0, 1, 0]),
                   np.array([np.cos(t), 0, np.sin(t)]),
                   np.array([np.sin(g) * np.sin(t), np.cos(g) * e, -np.sin(g) * np.cos(t)]),
                   np.array([0, np.sin(g) * np.cos(t) * e, np.cos(g)]) / n]
    na, (a0, a1, a2, a3, a4) = side(ga, ta, pa)
    nb, (b2, b0, b3, b1, b4) = side(gb, tb, pb)
    return na, nb, [a0, a1, a2, a3, a4], [b0, b1, b2, b3, b4]


class TestUpb:
    def test_matches_transcription(self, upb_angles):
        fam = upb_family(*upb_angles)
        na, nb, al, be = upb_oracle(*upb_angles)
        assert fam.n_a == pytest.approx(na, abs=1e-14) and fam.n_b == pytest.approx(nb, abs=1e-14)
        np.testing.assert_allclose(fam.alphas, al, atol=1e-15)
        np.testing.assert_allclose(fam.betas, be, atol=1e-15)

    def test_unit_norms(self, rng):
        for _ in range(10):
            fam = upb_family(*rng.uniform(0.1, 1.4, size=6))
            np.testing.assert_allclose(np.linalg.norm(fam.alphas, axis=1), 1, atol=1e-14)
            np.testing.assert_allclose(np.linalg.norm(fam.betas, axis=1), 1, atol=1e-14)

    def test_real_without_phases(self):
        fam = upb_family(0.5, 0.9, 0.0, 0.7, 0.3, 0.0)
        assert max_abs(fam.alphas.imag) == 0 and max_abs(fam.betas.imag) == 0

    def test_state(self, upb_angles):
        fam = upb_family(*upb_angles)
        rho = upb_state(fam)
        assert is_ppt(rho).ppt
        assert np.linalg.matrix_rank(rho.mat, tol=1e-10) == 4
        vs = fam.product_vectors()
        assert max_abs(rho.mat @ vs.T) < 1e-14
        w, v = np.linalg.eigh(rho.mat)
        kernel = v[:, w < 1e-10]
        assert kernel.shape[1] == 5
        # the five product vectors span the kernel
        assert np.linalg.matrix_rank(np.hstack([kernel, vs.T]), tol=1e-10) == 5

    def test_broken_family(self, upb_angles):
        fam = upb_family(*upb_angles)
        bad = fam.alphas.copy()
        bad[2] = np.array([1, 1, 0]) / np.sqrt(2)
        with pytest.raises(NotAProjector):
            upb_state(dataclasses.replace(fam, alphas=bad))

    def test_degenerate(self):
        with pytest.warns(RuntimeWarning):
            with pytest.raises(DegenerateParameters):
                upb_family(np.pi / 2, np.pi / 2, 0.1, 0.3, 0.3, 0.1)

    def test_degenerate_angle_warns(self):
        with pytest.warns(RuntimeWarning):
            upb_family(0.0, 0.5, 0.1, 0.3, 0.3, 0.1)

    def test_generic_angles_do_not_warn(self, upb_angles):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            upb_family(*upb_angles)

    def test_dephase(self, upb_angles):
        d_a, d_b, sigma = dephase_upb(upb_family(*upb_angles))
        assert sigma.is_real
        np.testing.assert_allclose(np.diag(d_a), [1, np.exp(-1j * np.pi / 7), 1])
        x = np.kron(d_a, d_b)
        rho = upb_state(upb_family(*upb_angles))
        assert max_abs(x @ rho.mat @ x.conj().T - sigma.mat) < 1e-12

    def test_dephase_without_phases(self):
        d_a, d_b, _ = dephase_upb(upb_family(0.5, 0.9, 0.0, 0.7, 0.3, 0.0))
        np.testing.assert_array_equal(d_a, np.eye(3))
        np.testing.assert_array_equal(d_b, np.eye(3))


class TestRank4:
    def test_unit_parameters(self):
        s = rank4_state(a=1, b=1, c=1, d=1)
        assert s.is_real
        np.testing.assert_array_equal(s.mat, s.mat.T)
        assert np.linalg.matrix_rank(s.mat, tol=1e-10) == 4
        assert max_abs(partial_transpose(s).mat - s.mat) < 1e-12

    def test_random_draws(self, rng):
        worst = 0.0
        for vals in rng.uniform(0.2, 5, size=(20, 4)):
            s = rank4_state(Rank4Params(*vals))
            assert max_abs(s.mat.imag) == 0
            assert s.min_eig() > -1e-12
            assert np.linalg.matrix_rank(s.mat, tol=1e-10) == 4
            worst = max(worst, max_abs(partial_transpose(s).mat - s.mat))
        assert worst < 1e-12, f"rank-4 family deviates from Gamma-invariance by {worst:.2e}"

    @pytest.mark.parametrize("bad", [dict(a=0, b=1, c=1, d=1), dict(a=1, b=-2, c=1, d=1),
                                     dict(a=1, b=1, c=float("nan"), d=1)])
    def test_invalid(self, bad):
        with pytest.raises(InvalidInput):
            rank4_state(**bad)


def quqart_real_part_decomposition():
    plus = np.array([1, 1, 0, 0]) / np.sqrt(2)
    minus = np.array([1, -1, 0, 0]) / np.sqrt(2)
    out = 2 * proj(np.kron(plus, plus)) + 2 * proj(np.kron(minus, minus))
    for i, j in [(2, 2), (0, 2), (2, 0), (1, 2), (2, 1), (3, 3), (0, 3), (3, 0), (1, 3), (3, 1)]:
        out = out + proj(ket(i, j))
    return out / 14


class TestQuqart:
    def test_rho(self):
        rho, _, _ = quqart_pair()
        assert rho.norm_factor == 14
        assert max_abs(rho.mat.imag) == 0
        assert rho.ppt.min_eigenvalue >= -1e-10

    def test_raw_matrix(self):
        r = (proj(ket(0, 0) + ket(1, 1) + ket(2, 2)) + proj(ket(0, 1) + ket(1, 0) + ket(3, 3))
             + sum(proj(ket(i, j)) for i, j in [(0, 2), (2, 0), (1, 2), (2, 1),
                                               (0, 3), (3, 0), (1, 3), (3, 1)]))
        np.testing.assert_array_equal(quqart_unnormalized(), r)

    def test_sigma_real_part(self):
        _, sigma, _ = quqart_pair()
        assert max_abs(sigma.mat.real - quqart_real_part_decomposition()) < 1e-14
        assert max_abs(sigma.mat.imag) > 0.01

    def test_lu_relation(self):
        rho, sigma, lu = quqart_pair()
        np.testing.assert_allclose(lu.apply(rho).mat, sigma.mat, atol=1e-15)
        np.testing.assert_allclose(sigma.eigvalsh(), rho.eigvalsh(), atol=1e-14)
        assert is_ppt(sigma).ppt


class TestSupportReduce:
    def test_full_rank_is_identity(self, rng):
        rho = DensityMatrix(random_density(9, rng), (3, 3))
        red = support_reduce(rho)
        assert (red.p, red.q) == (3, 3)
        assert max_abs(red.reconstruct().mat - rho.mat) < 1e-12

    def test_embedded_bell(self):
        v = np.zeros(9, dtype=complex)
        v[0] = v[4] = 2**-0.5
        red = support_reduce(DensityMatrix(proj(v), (3, 3)))
        assert (red.p, red.q) == (2, 2)
        assert max_abs(red.reconstruct().mat - proj(v)) < 1e-12

    def test_engineered_rank_deficiency(self, rng):
        o = np.linalg.qr(rng.normal(size=(4, 4)))[0]
        iso = o[:, :2]
        for _ in range(5):
            small = random_density(2 * 3, rng)
            x = np.kron(iso, np.eye(3))
            rho = DensityMatrix(x @ small @ x.T, (4, 3))
            red = support_reduce(rho)
            assert (red.p, red.q) == (2, 3)
            assert not np.iscomplexobj(red.iso_a)
            assert max_abs(red.reconstruct().mat - rho.mat) < 1e-10


class TestDiagonalPattern:
    def test_diagonal_separable(self):
        rho = DensityMatrix(np.diag([0.5, 0, 0, 0, 0.3, 0, 0, 0, 0.2]), (3, 3))
        rep = diagonal_realpart_pattern(rho)
        assert rep.permutation_form and rep.permutation_residual == 0 and rep.holds

    def test_phases_cannot_survive(self):
        p = np.diag([0.5, 0, 0, 0, 0.3, 0, 0, 0, 0.2]).astype(complex)
        p[0, 4], p[4, 0] = 0.1j, -0.1j
        with pytest.raises(NotApplicable):
            diagonal_realpart_pattern(DensityMatrix(p, (3, 3)))

    def test_zero_weight_forces_zeros(self, rng):
        w = rng.uniform(0.05, 1, size=9)
        w[1 * 3 + 2] = 0
        mat = np.diag(w).astype(complex)
        # imaginary coherences between B levels 0 and 1 for fixed A survive Gamma
        for x in range(3):
            i, j = 3 * x, 3 * x + 1
            k = 0.5 * np.sqrt(w[i] * w[j])
            mat[i, j], mat[j, i] = 1j * k, -1j * k
        rho = DensityMatrix(mat, (3, 3))
        rep = diagonal_realpart_pattern(rho)
        assert (1, 2) in rep.zero_positions and rep.holds
        assert not rep.permutation_form
        t = rho.tensor()
        assert max_abs(t[1, 2]) == 0 and max_abs(t[:, :, 1, 2]) == 0

    def test_non_diagonal_rejected(self, rng):
        with pytest.raises(NotApplicable):
            diagonal_realpart_pattern(DensityMatrix(random_density(4, rng), (2, 2)))
