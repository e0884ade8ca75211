import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stromasim.materials import (CollagenParams, CrosslinkParams,
                                 MatrixParams, apply_damage, collagen_law,
                                 collagen_response, crosslink_law,
                                 crosslink_peak_stretch, crosslink_response,
                                 matrix_energy_stress, matrix_second_pk,
                                 mr_energy_stress_from_c)

stretches = st.floats(min_value=0.7, max_value=1.3)


def _fd(fn, x, h=1e-6):
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


class TestCollagen:
    def test_reference_state(self):
        r = collagen_response(1.0, CollagenParams())
        assert r.psi == 0.0
        assert r.p == 0.0
        assert r.stiff == pytest.approx(1.8)  # k1 at lam = 1

    @given(lam=stretches)
    @settings(max_examples=200, deadline=None)
    def test_energy_stress_stiffness_consistent(self, lam):
        p = CollagenParams()
        r = collagen_response(lam, p)
        assert r.p == pytest.approx(
            _fd(lambda x: collagen_law(x, p.k1, p.k2)[0], lam), rel=1e-5,
            abs=1e-10)
        assert r.stiff == pytest.approx(
            _fd(lambda x: collagen_law(x, p.k1, p.k2)[1], lam), rel=1e-5,
            abs=1e-10)

    @given(lam=stretches)
    @settings(max_examples=100, deadline=None)
    def test_signs(self, lam):
        r = collagen_response(lam, CollagenParams())
        assert r.psi >= 0.0
        assert np.sign(r.p) == np.sign(lam - 1.0)

    def test_linear_limit(self):
        # k2 -> 0 reduces to the linear fibril law P = k1 (lam - 1)
        r = collagen_response(1.1, CollagenParams(k1=1.8, k2=1e-12))
        assert r.p == pytest.approx(1.8 * 0.1, rel=1e-6)


class TestCrosslink:
    def test_equilibrium_spacing(self):
        p = CrosslinkParams()
        r = crosslink_response(1.0, p)
        assert r.psi == pytest.approx(-p.eps)  # well depth at lam = 1
        assert r.p == pytest.approx(0.0, abs=1e-15)
        assert r.stiff > 0.0

    @given(lam=stretches)
    @settings(max_examples=200, deadline=None)
    def test_energy_stress_stiffness_consistent(self, lam):
        p = CrosslinkParams()
        r = crosslink_response(lam, p)
        assert r.p == pytest.approx(
            _fd(lambda x: crosslink_law(x, p.eps, p.a)[0], lam), rel=1e-5,
            abs=1e-10)
        assert r.stiff == pytest.approx(
            _fd(lambda x: crosslink_law(x, p.eps, p.a)[1], lam), rel=1e-5,
            abs=1e-10)

    def test_repulsion_attraction(self):
        p = CrosslinkParams()
        assert crosslink_response(0.95, p).p < 0.0   # repulsive
        assert crosslink_response(1.05, p).p > 0.0   # attractive

    def test_peak_is_stationary_point_of_stress(self):
        p = CrosslinkParams()
        lam_star = crosslink_peak_stretch(p)
        assert lam_star == pytest.approx(((2 * p.a + 1)
                                          / (p.a + 1))**(1 / p.a))
        assert crosslink_law(lam_star, p.eps, p.a)[2] == pytest.approx(
            0.0, abs=1e-12)
        # softening (negative stiffness) beyond the peak
        assert crosslink_law(lam_star + 0.02, p.eps, p.a)[2] < 0.0


class TestMatrix:
    def test_stress_free_reference(self):
        e, s = matrix_energy_stress(np.eye(3), MatrixParams())
        assert e == pytest.approx(0.0, abs=1e-15)
        assert np.allclose(s, 0.0, atol=1e-14)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_stress_symmetric_energy_frame_invariant(self, seed):
        rng = np.random.default_rng(seed)
        f = np.eye(3) + 0.1 * rng.standard_normal((3, 3))
        if np.linalg.det(f) <= 0.1:
            return
        p = MatrixParams()
        e0, s = matrix_energy_stress(f, p)
        assert np.allclose(s, s.T, atol=1e-12)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        if np.linalg.det(q) < 0:
            q[:, 0] *= -1.0
        e1, _ = matrix_energy_stress(q @ f, p)
        assert e1 == pytest.approx(e0, rel=1e-10, abs=1e-14)

    def test_second_pk_matches_c_form(self):
        rng = np.random.default_rng(7)
        f = np.eye(3) + 0.08 * rng.standard_normal((3, 3))
        p = MatrixParams()
        c = f.T @ f
        _, s1 = matrix_energy_stress(f, p)
        _, s2 = matrix_second_pk(c, p)
        assert np.allclose(s1, s2, atol=1e-12)
        j = np.sqrt(np.linalg.det(c))
        _, s3 = mr_energy_stress_from_c(c, j, p.mu1, p.mu2, p.k_bulk)
        assert np.allclose(s1, s3, atol=1e-12)

    def test_stress_is_energy_gradient(self):
        # S = 2 dPsi/dC by componentwise central differences
        rng = np.random.default_rng(8)
        f = np.eye(3) + 0.08 * rng.standard_normal((3, 3))
        c = f.T @ f
        p = MatrixParams()
        _, s = matrix_second_pk(c, p)
        h = 1e-7
        for i in range(3):
            for jx in range(i, 3):
                dc = np.zeros((3, 3))
                dc[i, jx] = dc[jx, i] = h
                ep = mr_energy_stress_from_c(
                    c + dc, np.sqrt(np.linalg.det(c + dc)),
                    p.mu1, p.mu2, p.k_bulk)[0]
                em = mr_energy_stress_from_c(
                    c - dc, np.sqrt(np.linalg.det(c - dc)),
                    p.mu1, p.mu2, p.k_bulk)[0]
                g = (ep - em) / (2.0 * h)
                # dPsi = (S/2) : dC, so the symmetric probe returns S_ii/2
                # on the diagonal and S_ij off it
                expect = s[i, jx] / 2.0 if i == jx else s[i, jx]
                assert g == pytest.approx(expect, rel=2e-5, abs=1e-10)

    def test_volumetric_penalty(self):
        p = MatrixParams()
        e_comp, _ = matrix_energy_stress(0.95 * np.eye(3), p)
        e_exp, _ = matrix_energy_stress(1.05 * np.eye(3), p)
        assert e_comp > 0.0 and e_exp > 0.0


class TestValidationAndDamage:
    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            CollagenParams(k1=-1.0)
        with pytest.raises(ValueError):
            CrosslinkParams(eps=-0.01)
        with pytest.raises(ValueError):
            MatrixParams(k_bulk=0.0)
        with pytest.raises(ValueError):
            collagen_response(-0.1, CollagenParams())

    def test_apply_damage_scales_prefactors_only(self):
        c = apply_damage(CollagenParams(), 0.25)
        assert c.k1 == pytest.approx(0.75 * 1.8)
        assert c.k2 == 4000.0
        x = apply_damage(CrosslinkParams(), 0.5)
        assert x.eps == pytest.approx(0.005)
        assert x.a == 6.0
        m = apply_damage(MatrixParams(), 0.5)
        assert m.mu1 == pytest.approx(0.00075)
        assert m.mu2 == pytest.approx(-0.0007)
        assert m.k_bulk == 5.0  # volumetric penalty is not a stiffness

    def test_full_damage_rejected_or_zero(self):
        c = apply_damage(CollagenParams(), 1.0)
        assert c.k1 == 0.0
