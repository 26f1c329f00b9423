import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussassist import entanglement as ent
from gaussassist.entanglement import S1, S2, GlemsParams, LogBase, MonotoneF, MonotoneKind
from gaussassist.gaussian_ops import Partition, apply_symplectic, direct_sum, purify, rotation, squeezer, tmsv
from gaussassist.squeezing import pure_lower_bound
from gaussassist.symplectic import (
    make_omega,
    random_qcm,
    random_symplectic,
    symplectic_eigenvalues,
    williamson,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
AB = Partition.split(1, 1)


def s1_reference(nu):
    if nu == 1:
        return 0.0
    return (nu + 1) / 2 * math.log((nu + 1) / 2) - (nu - 1) / 2 * math.log((nu - 1) / 2)


def random_glems(rng):
    a, b = rng.uniform(1.0, 4.0, size=2)
    lo, hi = abs(a - b) + 1, a + b - 1
    return GlemsParams(a, b, rng.uniform(lo, hi))


def local_symplectic(seed):
    rng = np.random.default_rng(seed)
    s_a = rotation(rng.uniform(0, 2 * np.pi)) @ squeezer(rng.uniform(1, 2)) @ rotation(rng.uniform(0, 2 * np.pi))
    s_b = rotation(rng.uniform(0, 2 * np.pi)) @ squeezer(rng.uniform(1, 2))
    return direct_sum(s_a, s_b)


class TestMonotoneF:
    def test_s2_at_one(self):
        assert ent.monotone_f(1.0, S2) == 0.0

    def test_s1_reference_value(self):
        assert ent.monotone_f(2.0, S1) == pytest.approx(0.954771252442, abs=1e-9)

    @given(st.floats(1.0, 1e4))
    def test_s1_formula(self, nu):
        assert ent.monotone_f(nu, S1) == pytest.approx(s1_reference(nu), rel=1e-12, abs=1e-14)

    @given(st.floats(1.0, 50.0), st.floats(1.0, 50.0))
    def test_concave_midpoint(self, x, y):
        for f in (S1, S2):
            mid = f(0.5 * (x + y))
            assert mid >= 0.5 * (f(x) + f(y)) - 1e-12

    @given(st.floats(1.0, 50.0), st.floats(0.0, 10.0))
    def test_non_decreasing(self, x, dx):
        for f in (S1, S2):
            assert f(x + dx) >= f(x) - 1e-12

    def test_base2(self):
        f = MonotoneF(MonotoneKind.RENYI2_S2, LogBase.BASE2)
        assert f(4.0) == pytest.approx(2.0)

    def test_below_one_rejected(self):
        with pytest.raises(ValueError):
            ent.monotone_f(0.5, S2)

    def test_table(self):
        f = MonotoneF(MonotoneKind.TABLE, knots=((1, 0), (2, 1), (4, 1.5)))
        assert f(1.5) == pytest.approx(0.5)
        assert f(10.0) == pytest.approx(1.5)
        assert f.concave

    @pytest.mark.parametrize(
        "knots",
        [((1, 0),), ((1, 0.1), (2, 1)), ((1, 0), (1, 1)), ((1, 0), (2, 1), (3, 0.5))],
    )
    def test_bad_tables(self, knots):
        with pytest.raises(ValueError):
            MonotoneF(MonotoneKind.TABLE, knots=knots)

    def test_convex_table_refused_by_bound(self):
        f = MonotoneF(MonotoneKind.TABLE, knots=((1, 0), (2, 0.1), (3, 2)))
        assert not f.concave
        with pytest.raises(ValueError, match="concave"):
            ent.assist_upper_bound(np.eye(4), AB, f)


class TestPureEntanglement:
    def test_product_is_zero(self):
        tau = direct_sum(np.diag([3.0, 1 / 3]), np.eye(2))
        assert ent.pure_entanglement(tau, AB, S1) == pytest.approx(0.0, abs=1e-12)

    def test_tmsv_s2(self):
        assert ent.pure_entanglement(tmsv(3.0), AB, S2) == pytest.approx(math.log(3))

    @given(seeds, seeds)
    def test_symmetric_and_additive(self, s1, s2):
        t1 = purify(random_qcm(1, s1))
        t2 = purify(random_qcm(1, s2))
        e1 = ent.pure_entanglement(t1, AB, S1)
        assert ent.pure_entanglement(t1, Partition.split(1, 1, labels=["B", "A"]), S1) == pytest.approx(e1)
        assert ent.pure_entanglement(t1, Partition(((1,), (0,))), S1) == pytest.approx(e1, rel=1e-8)
        both = direct_sum(t1, t2)
        # modes 0, 1 from t1 and 2, 3 from t2; A holds mode 0 of each copy
        part = Partition(((0, 2), (1, 3)))
        e2 = ent.pure_entanglement(t2, AB, S1)
        assert ent.pure_entanglement(both, part, S1) == pytest.approx(e1 + e2, rel=1e-8)

    def test_impure_rejected(self):
        with pytest.raises(ValueError, match="pure"):
            ent.pure_entanglement(2 * np.eye(4), AB)


class TestStandardForm:
    def test_tmsv(self):
        sf = ent.standard_form(tmsv(2.0))
        assert (sf.a, sf.b) == pytest.approx((2.0, 2.0))
        assert sf.k_x == pytest.approx(math.sqrt(3))
        assert sf.k_p == pytest.approx(-math.sqrt(3))

    def test_product(self):
        sf = ent.standard_form(direct_sum(np.diag([2.0, 3.0]), 2 * np.eye(2)))
        assert (sf.k_x, sf.k_p) == pytest.approx((0.0, 0.0), abs=1e-7)

    @given(seeds)
    def test_round_trip_under_local_symplectics(self, seed):
        p = random_glems(np.random.default_rng(seed))
        sf = p.standard_form()
        v = apply_symplectic(local_symplectic(seed), sf.matrix())
        got = ent.standard_form(v)
        assert (got.a, got.b) == pytest.approx((sf.a, sf.b), abs=1e-8)
        assert abs(got.k_x) == pytest.approx(abs(sf.k_x), abs=1e-7)
        assert abs(got.k_p) == pytest.approx(abs(sf.k_p), abs=1e-7)
        assert np.linalg.det(got.matrix()) == pytest.approx(np.linalg.det(v), rel=1e-8)

    def test_two_modes_only(self):
        with pytest.raises(ValueError):
            ent.standard_form(np.eye(2))


class TestProduct:
    @pytest.mark.parametrize("b", [1.0, 2.0, 7.5])
    def test_vacuum_side(self, b):
        assert ent.assist_product(1.0, b, S1) == pytest.approx(0.0, abs=1e-15)

    def test_equal_sides_match_thermal(self):
        assert ent.assist_product(3.0, 3.0, S1) == pytest.approx(ent.assist_thermal(3.0, 1, S1))

    def test_reference_value(self):
        assert ent.assist_product(2.0, 3.0, S2) == pytest.approx(math.log(1.4))
        assert math.log(1.4) == pytest.approx(0.336472, abs=1e-6)

    def test_optimal_tmsv_is_feasible(self):
        a, b = 2.0, 3.0
        c = (a * b + 1) / (a + b)
        gap = direct_sum(a * np.eye(2), b * np.eye(2)) - tmsv(c)
        assert np.linalg.eigvalsh(gap)[0] >= -1e-12
        gap = direct_sum(a * np.eye(2), b * np.eye(2)) - tmsv(c + 1e-3)
        assert np.linalg.eigvalsh(gap)[0] < 0


class TestGlems:
    def test_pure_boundary_correlations(self):
        kx, kp = ent.glems_correlations(GlemsParams(2, 2, 1))
        assert (kx, kp) == pytest.approx((math.sqrt(3), -math.sqrt(3)))

    def test_mixed_reference(self):
        p = GlemsParams(2, 2, 2)
        kx, kp = p.correlations()
        assert kx == pytest.approx(1.655869, abs=1e-6)
        assert kp == pytest.approx(-0.905869, abs=1e-6)
        assert (4 - kx**2) * (4 - kp**2) == pytest.approx(4.0, abs=1e-9)

    def test_exact_m0_and_nu_star(self):
        p = GlemsParams(2, 2, 2)
        assert ent.glems_m(0.0, p.standard_form()) == pytest.approx(3.1794016343, abs=1e-9)
        assert ent.glems_nu_star(p) == pytest.approx(1.7830876687, abs=1e-9)
        assert ent.glems_nu_star(p, literal_mode=True) == pytest.approx(3.1794016343, abs=1e-9)

    def test_outside_window(self):
        with pytest.raises(ValueError):
            GlemsParams(2, 2, 4)
        with pytest.raises(ValueError):
            GlemsParams(3, 1, 1.5)

    @given(seeds)
    def test_correlations_reproduce_g(self, seed):
        p = random_glems(np.random.default_rng(seed))
        kx, kp = p.correlations()
        ab = p.a * p.b
        assert math.sqrt((ab - kx**2) * (ab - kp**2)) == pytest.approx(p.g, abs=1e-9)
        assert kx >= abs(kp) - 1e-12

    @given(seeds)
    def test_spectrum_is_one_and_g(self, seed):
        p = random_glems(np.random.default_rng(seed))
        nu = symplectic_eigenvalues(p.matrix())
        np.testing.assert_allclose(nu, sorted([1.0, p.g], reverse=True), atol=1e-8)

    def test_m0_closed_form(self):
        sf = GlemsParams(2.5, 1.7, 2.1).standard_form()
        assert ent.glems_m(0.0, sf) == pytest.approx(1 + sf.k_x**2 / (sf.a * sf.b - sf.k_x**2))

    @given(seeds)
    def test_theta_zero_is_grid_max(self, seed):
        sf = random_glems(np.random.default_rng(seed)).standard_form()
        grid = np.linspace(-np.pi, np.pi, 200)
        assert ent.glems_m(0.0, sf) >= np.max(ent.glems_m(grid, sf)) - 1e-12

    @given(seeds)
    def test_zero_beats_pi(self, seed):
        p = random_glems(np.random.default_rng(seed))
        sf = p.standard_form()
        ab = sf.a * sf.b
        w = ab - sf.k_p**2
        expected = (-sf.k_p**2 + sf.k_x**2 * w**2 / p.g**2) / w
        diff = ent.glems_m(0.0, sf) - ent.glems_m(np.pi, sf)
        assert diff == pytest.approx(expected, rel=1e-8, abs=1e-10)
        assert diff >= -1e-12

    def test_theta_star_is_stationary_when_present(self):
        found = 0
        rng = np.random.default_rng(3)
        for _ in range(200):
            sf = random_glems(rng).standard_form()
            th = ent.glems_theta_star(sf)
            if th is None:
                continue
            found += 1
            h = 1e-6
            slope = (ent.glems_m(th + h, sf) - ent.glems_m(th - h, sf)) / (2 * h)
            assert abs(slope) < 1e-5
        assert found > 0

    def test_pure_boundary_matches_own_entanglement(self):
        p = GlemsParams(2, 2, 1)
        assert ent.glems_nu_star(p) == pytest.approx(2.0)
        assert ent.assist_glems(p, S1) == pytest.approx(ent.pure_entanglement(p.matrix(), AB, S1))
        # the literal reading would give f(a^2) at the pure boundary
        assert ent.assist_glems(p, S1, literal_mode=True) == pytest.approx(ent.monotone_f(4.0, S1))

    def test_uncorrelated_gives_zero(self):
        p = GlemsParams(1.0, 2.0, 2.0)
        assert p.correlations()[0] == pytest.approx(0.0, abs=1e-12)
        assert ent.assist_glems(p, S1) == pytest.approx(0.0, abs=1e-12)


class TestUpperBound:
    @pytest.mark.parametrize("k", [1.0, 1.5, 2.0, 5.0])
    def test_thermal_is_tight(self, k):
        v = k * np.eye(4)
        assert ent.assist_upper_bound(v, AB, S1) == pytest.approx(ent.assist_thermal(k, 1, S1))

    @pytest.mark.parametrize("nu", [1.0, 2.0, 5.0])
    def test_pure_tmsv_below_bound(self, nu):
        assert ent.assist_upper_bound(tmsv(nu), AB, S1) >= ent.pure_entanglement(tmsv(nu), AB, S1) - 1e-12

    def test_smaller_party_counts(self):
        v = 2 * np.eye(6)
        assert ent.assist_upper_bound(v, Partition.split(1, 2), S2) == pytest.approx(math.log(1.25))

    @given(seeds, st.integers(0, 3))
    def test_pure_states_below_v_respect_bound(self, seed, idx):
        v = random_qcm(2, seed)
        w, u = np.linalg.eigh(v)
        tau = pure_lower_bound(v, u[:, idx]).tau
        for f in (S1, S2):
            assert ent.pure_entanglement(tau, AB, f) <= ent.assist_upper_bound(v, AB, f) + 1e-8


class TestGap:
    def test_k_one(self):
        r = ent.nongaussian_gap(1.0)
        assert (r.gauss, r.nongauss) == (0.0, 0.0)
        assert math.isnan(r.ratio)

    def test_large_k_approaches_log_two(self):
        assert ent.nongaussian_gap(100.0).diff == pytest.approx(math.log(2), abs=0.01)

    def test_base2_limit_is_one_bit(self):
        assert ent.nongaussian_gap(1e4, log_base=LogBase.BASE2).diff == pytest.approx(1.0, abs=1e-3)

    def test_ratio_diverges_near_one(self):
        assert ent.nongaussian_gap(1.001).ratio > 100

    @given(st.floats(1.0001, 1e3))
    def test_gaussian_never_exceeds_unrestricted(self, k):
        r = ent.nongaussian_gap(k)
        assert r.gauss <= r.nongauss + 1e-12

    def test_thermal_n(self):
        assert ent.assist_thermal(2.0, 3, S2) == pytest.approx(3 * math.log(1.25))


class TestSymplecticExtension:
    def test_delta_s(self):
        a = np.diag([1.0, 2.0, 3.0, 4.0])
        np.testing.assert_allclose(ent.delta_s(a), np.diag([2.0, 3.0]))

    def test_williamson_form_fixed_point(self):
        d = np.array([1.5, 3.0])
        a = np.diag(np.concatenate([d, d]))
        assert np.sum(S1(np.diag(ent.delta_s(a)))) == pytest.approx(ent.symplectic_extension_F(a, S1))

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_thermal_s2(self, n):
        assert ent.symplectic_extension_F(2.5 * np.eye(2 * n), S2) == pytest.approx(n * math.log(2.5))

    @given(seeds, seeds)
    def test_concavity(self, s1, s2):
        a, b = random_qcm(2, s1), random_qcm(2, s2)
        for f in (S1, S2):
            mid = ent.symplectic_extension_F(0.5 * (a + b), f)
            avg = 0.5 * (ent.symplectic_extension_F(a, f) + ent.symplectic_extension_F(b, f))
            assert mid >= avg - 1e-8

    @given(seeds)
    def test_monotone(self, seed):
        rng = np.random.default_rng(seed)
        b = random_qcm(2, seed)
        g = rng.normal(size=(4, 4))
        a = b + g @ g.T
        for f in (S1, S2):
            assert ent.symplectic_extension_F(a, f) >= ent.symplectic_extension_F(b, f) - 1e-8

    @given(seeds)
    def test_omega_conjugation(self, seed):
        tau = random_qcm(2, seed)
        om = make_omega(2)
        for f in (S1, S2):
            assert ent.symplectic_extension_F(om @ tau @ om.T, f) == pytest.approx(ent.symplectic_extension_F(tau, f))

    def test_variational_probe_williamson(self):
        d = np.diag([2.0, 1.2, 2.0, 1.2])
        rec = ent.f_variational_probe(d, S1, trials=50)
        assert rec.equality_gap == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("seed", range(3))
    def test_variational_probe_random(self, seed):
        a = random_qcm(2, seed)
        rec = ent.f_variational_probe(a, S1, trials=500, rng_seed=seed)
        assert rec.sampled_min >= rec.F_value - 1e-9
        assert abs(rec.equality_gap) <= 1e-9

    def test_mtilde_trivial(self):
        np.testing.assert_allclose(ent.mtilde(rotation(0.7)), [[1.0]])
        np.testing.assert_allclose(ent.mtilde(np.eye(6)), np.eye(3))

    @given(seeds, st.integers(1, 3))
    def test_mtilde_superstochastic_and_diag_identity(self, seed, n):
        m = random_symplectic(n, seed)
        mt = ent.mtilde(m)
        assert ent.is_doubly_superstochastic(mt, 1e-9)
        nu = 1 + np.random.default_rng(seed).uniform(0, 3, size=n)
        a = np.diag(np.concatenate([nu, nu]))
        np.testing.assert_allclose(np.diag(ent.delta_s(m @ a @ m.T)), mt @ nu, rtol=1e-10)

    def test_local_nu(self):
        np.testing.assert_allclose(ent.local_nu(tmsv(3.0), [1]), [3.0])
        w = williamson(random_qcm(1, 0))
        assert ent.local_nu(purify(random_qcm(1, 0)), [0])[0] == pytest.approx(w.nu[0])
