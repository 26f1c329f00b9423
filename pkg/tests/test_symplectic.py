import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussassist.symplectic import (
    InvalidQcmError,
    Layout,
    convert_layout,
    euler_compose,
    euler_decompose,
    is_pure,
    is_symplectic,
    is_valid_qcm,
    make_omega,
    random_orthogonal_symplectic,
    random_qcm,
    random_symplectic,
    require_qcm,
    schur_complement,
    symplectic_eigenvalues,
    williamson,
)
from gaussassist.gaussian_ops import tmsv

from conftest import assert_psd

seeds = st.integers(min_value=0, max_value=2**32 - 1)
modes = st.integers(min_value=1, max_value=4)


class TestOmega:
    def test_one_mode(self):
        np.testing.assert_array_equal(make_omega(1), [[0, 1], [-1, 0]])

    def test_two_modes_xxpp(self):
        expected = [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]]
        np.testing.assert_array_equal(make_omega(2, Layout.XXPP), expected)

    def test_two_modes_xpxp(self):
        j = np.array([[0, 1], [-1, 0]])
        expected = np.block([[j, np.zeros((2, 2))], [np.zeros((2, 2)), j]])
        np.testing.assert_array_equal(make_omega(2, Layout.XPXP), expected)

    @pytest.mark.parametrize("layout", list(Layout))
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_square_and_antisymmetry(self, n, layout):
        om = make_omega(n, layout)
        np.testing.assert_array_equal(om @ om, -np.eye(2 * n))
        np.testing.assert_array_equal(om.T, -om)

    def test_layouts_related_by_conversion(self):
        np.testing.assert_array_equal(convert_layout(make_omega(3), Layout.XXPP, Layout.XPXP), make_omega(3, Layout.XPXP))


class TestConvertLayout:
    def test_identity_fixed(self):
        np.testing.assert_array_equal(convert_layout(np.eye(6), "xxpp", "xpxp"), np.eye(6))

    def test_one_mode_is_trivial(self):
        np.testing.assert_array_equal(convert_layout(np.diag([2.0, 3.0]), "xxpp", "xpxp"), np.diag([2.0, 3.0]))

    @given(seeds, modes)
    def test_involution_and_spectrum(self, seed, n):
        v = random_qcm(n, seed)
        w = convert_layout(v, Layout.XXPP, Layout.XPXP)
        np.testing.assert_array_equal(convert_layout(w, Layout.XPXP, Layout.XXPP), v)
        omega_xpxp = make_omega(n, Layout.XPXP)
        nu = np.sort(np.abs(np.linalg.eigvals(1j * omega_xpxp @ w)))[::2][::-1]
        np.testing.assert_allclose(nu, symplectic_eigenvalues(v), rtol=1e-8)

    def test_vector_conversion(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        np.testing.assert_array_equal(convert_layout(x, "xxpp", "xpxp"), [1.0, 3.0, 2.0, 4.0])


class TestSymplecticEigenvalues:
    def test_one_mode_is_root_det(self):
        np.testing.assert_allclose(symplectic_eigenvalues(np.diag([2.0, 3.0])), [np.sqrt(6)])

    def test_vacuum(self):
        np.testing.assert_allclose(symplectic_eigenvalues(np.eye(6)), np.ones(3))

    def test_tmsv_is_pure(self):
        np.testing.assert_allclose(symplectic_eigenvalues(tmsv(2.0)), [1.0, 1.0], atol=1e-12)

    def test_descending(self):
        nu = symplectic_eigenvalues(random_qcm(4, 3))
        assert np.all(np.diff(nu) <= 0)

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError):
            symplectic_eigenvalues(np.diag([1.0, -1.0]))

    @given(seeds, seeds, modes)
    def test_congruence_invariance(self, s1, s2, n):
        v = random_qcm(n, s1)
        s = random_symplectic(n, s2)
        np.testing.assert_allclose(symplectic_eigenvalues(s @ v @ s.T), symplectic_eigenvalues(v), rtol=1e-8)

    @given(seeds, modes)
    def test_monotone_under_loewner_order(self, seed, n):
        rng = np.random.default_rng(seed)
        b = random_qcm(n, seed)
        g = rng.normal(size=(2 * n, 2 * n))
        a = b + g @ g.T
        assert np.all(symplectic_eigenvalues(a) >= symplectic_eigenvalues(b) - 1e-8)

    @given(seeds, modes)
    def test_matches_moduli_of_i_omega_v(self, seed, n):
        v = random_qcm(n, seed)
        ev = np.sort(np.abs(np.linalg.eigvals(1j * make_omega(n) @ v)))[::-1]
        np.testing.assert_allclose(ev[::2], symplectic_eigenvalues(v), rtol=1e-8)


class TestWilliamson:
    def test_already_normal(self):
        w = williamson(np.diag([2.0, 2.0]))
        np.testing.assert_allclose(w.nu, [2.0])
        np.testing.assert_allclose(np.abs(w.s), np.eye(2), atol=1e-12)

    def test_thermal_gives_orthogonal_s(self):
        w = williamson(3.0 * np.eye(4))
        np.testing.assert_allclose(w.nu, [3.0, 3.0])
        np.testing.assert_allclose(w.s @ w.s.T, np.eye(4), atol=1e-10)

    def test_recovers_constructed_spectrum(self):
        s0 = random_symplectic(2, 11)
        d = np.diag([1.5, 2.5, 1.5, 2.5])
        w = williamson(s0 @ d @ s0.T)
        np.testing.assert_allclose(w.nu, [2.5, 1.5], rtol=1e-9)

    def test_round_trip_many(self):
        for seed in range(200):
            n = 1 + seed % 4
            v = random_qcm(n, seed)
            w = williamson(v)
            assert is_symplectic(w.s, 1e-9)
            scale = np.linalg.norm(v)
            assert np.linalg.norm(w.reconstruct() - v) <= 1e-9 * scale
            assert np.all(w.nu >= 1 - 1e-9)

    def test_degenerate_spectrum(self):
        v = random_orthogonal_symplectic(3, 5) @ (2.0 * np.eye(6)) @ random_orthogonal_symplectic(3, 5).T
        w = williamson(v)
        np.testing.assert_allclose(w.reconstruct(), v, atol=1e-9)


class TestValidity:
    def test_below_vacuum(self):
        ok, nu = is_valid_qcm(0.5 * np.eye(2))
        assert not ok and nu == pytest.approx(0.5)

    def test_pure_squeezed(self):
        ok, nu = is_valid_qcm(np.diag([2.0, 0.5]))
        assert ok and nu == pytest.approx(1.0)

    def test_witness_root_det(self):
        ok, nu = is_valid_qcm(np.diag([2.0, 0.4]))
        assert not ok and nu == pytest.approx(np.sqrt(0.8))

    def test_not_positive_definite(self):
        assert is_valid_qcm(np.diag([1.0, -1.0])) == (False, 0.0)

    def test_require_qcm_raises(self):
        with pytest.raises(InvalidQcmError):
            require_qcm(0.5 * np.eye(2))

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            is_valid_qcm(np.array([[1.0, 1.0], [0.0, 1.0]]))

    @pytest.mark.parametrize("v, pure", [(np.eye(2), True), (tmsv(3.0), True), (2.0 * np.eye(2), False)])
    def test_is_pure(self, v, pure):
        assert is_pure(v) is pure

    @given(seeds, modes)
    def test_pure_iff_symplectic(self, seed, n):
        s = random_symplectic(n, seed)
        tau = s @ s.T
        assert is_pure(tau) and is_symplectic(tau, 1e-7)
        assert np.linalg.det(tau) == pytest.approx(1.0, rel=1e-6)

    @given(seeds)
    def test_pure_one_mode_reciprocal_spectrum(self, seed):
        s = random_symplectic(1, seed)
        lo, hi = np.linalg.eigvalsh(s @ s.T)
        assert lo * hi == pytest.approx(1.0, rel=1e-9)


class TestEuler:
    def test_identity(self):
        e = euler_decompose(np.eye(4))
        np.testing.assert_allclose(e.z, [1.0, 1.0])
        np.testing.assert_allclose(e.k1 @ e.k2, np.eye(4), atol=1e-12)

    def test_diagonal_squeezer(self):
        e = euler_decompose(np.diag([2.0, 0.5]))
        np.testing.assert_allclose(e.z, [2.0])
        np.testing.assert_allclose(np.abs(e.k1 @ e.k2), np.eye(2), atol=1e-12)

    @given(seeds, modes)
    def test_round_trip(self, seed, n):
        s = random_symplectic(n, seed)
        e = euler_decompose(s)
        np.testing.assert_allclose(euler_compose(e.k1, e.z, e.k2), s, atol=1e-9 * np.linalg.norm(s))
        assert np.all(e.z >= 1)
        for k in (e.k1, e.k2):
            assert is_symplectic(k, 1e-9)
            np.testing.assert_allclose(k @ k.T, np.eye(2 * n), atol=1e-9)

    def test_rejects_non_symplectic(self):
        with pytest.raises(ValueError):
            euler_decompose(np.diag([2.0, 2.0]))


class TestRandom:
    def test_deterministic(self):
        np.testing.assert_array_equal(random_symplectic(1, 7), random_symplectic(1, 7))
        np.testing.assert_array_equal(random_qcm(2, 7), random_qcm(2, 7))

    @given(seeds)
    def test_random_qcm_valid_with_bounded_spectrum(self, seed):
        v = random_qcm(2, seed, nu_bound=3)
        assert is_valid_qcm(v)[0]
        assert symplectic_eigenvalues(v)[0] <= 3 + 1e-9

    def test_no_squeezing_is_orthogonal(self):
        s = random_symplectic(3, 4, squeeze_bound=1)
        np.testing.assert_allclose(s @ s.T, np.eye(6), atol=1e-12)

    @given(seeds, modes)
    def test_symplectic(self, seed, n):
        s = random_symplectic(n, seed)
        assert is_symplectic(s, 1e-8)
        assert np.linalg.det(s) == pytest.approx(1.0, rel=1e-8)


class TestSchurComplement:
    def test_two_by_two(self):
        np.testing.assert_allclose(schur_complement(np.array([[2.0, 1.0], [1.0, 2.0]]), [0]), [[1.5]])

    def test_block_diagonal(self):
        a = np.array([[2.0, 0.3], [0.3, 1.0]])
        m = np.block([[a, np.zeros((2, 2))], [np.zeros((2, 2)), 5 * np.eye(2)]])
        np.testing.assert_allclose(schur_complement(m, [0, 1]), a)

    def test_singular_needs_fallback(self):
        m = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(np.linalg.LinAlgError):
            schur_complement(m, [0])
        with pytest.warns(RuntimeWarning, match="pseudo-inverse"):
            out = schur_complement(m, [0], pinv_fallback=True)
        np.testing.assert_allclose(out, [[1.0]])

    @given(seeds)
    def test_monotone(self, seed):
        rng = np.random.default_rng(seed)
        g = rng.normal(size=(4, 4))
        small = g @ g.T + 0.1 * np.eye(4)
        h = rng.normal(size=(4, 4))
        big = small + h @ h.T
        assert_psd(schur_complement(big, [0, 1]) - schur_complement(small, [0, 1]))

    @given(seeds)
    def test_weyl_monotonicity(self, seed):
        rng = np.random.default_rng(seed)
        g, h = rng.normal(size=(2, 5, 5))
        b = g @ g.T
        a = b + h @ h.T
        assert np.all(np.linalg.eigvalsh(a) >= np.linalg.eigvalsh(b) - 1e-10)
