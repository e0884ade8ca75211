import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stromasim.materials import MatrixParams
from stromasim.variance import (FibrilFamily, default_families,
                                family_tensors, kappa_from_vonmises,
                                structure_tensors, theta_moments,
                                variance_energy_stress, variance_eval,
                                variance_material_fn, vonmises_b_from_kappa)
from stromasim.verification import _brute_tensors


def _random_cbar(rng, scale=0.08):
    g = np.eye(3) + scale * rng.standard_normal((3, 3))
    c = g.T @ g
    return c / np.linalg.det(c)**(1.0 / 3.0)


class TestDispersion:
    def test_isotropic_limit(self):
        assert kappa_from_vonmises(0.0) == pytest.approx(1.0 / 3.0,
                                                         abs=1e-8)

    def test_kappa_monotone_decreasing_in_b(self):
        b = np.linspace(0.0, 30.0, 40)
        k = np.array([kappa_from_vonmises(x) for x in b])
        assert np.all(np.diff(k) < 0.0)
        assert k[-1] > 0.0

    @given(b=st.floats(min_value=0.01, max_value=50.0))
    @settings(max_examples=30, deadline=None)
    def test_b_kappa_round_trip(self, b):
        assert vonmises_b_from_kappa(kappa_from_vonmises(b)) == \
            pytest.approx(b, rel=1e-6, abs=1e-8)

    def test_theta_moments_bounds(self):
        m2, m4 = theta_moments(np.array([0.0, 1.0, 10.0]))
        assert np.all((0.0 < m4) & (m4 <= m2) & (m2 < 1.0))
        # b = 0 is the uniform sphere: <cos^2> = 1/3, <cos^4> = 1/5
        assert m2[0] == pytest.approx(1.0 / 3.0, abs=1e-10)
        assert m4[0] == pytest.approx(1.0 / 5.0, abs=1e-10)


class TestStructureTensors:
    def test_trace_and_symmetry(self):
        for b in (0.0, 0.5, 3.0, 20.0):
            h, q = family_tensors((1.0, 0.0, 0.0), b)
            assert np.trace(h) == pytest.approx(1.0, abs=1e-12)
            assert np.allclose(h, h.T)
            # Q is totally symmetric and contracts to H
            assert np.allclose(q, q.transpose(1, 0, 2, 3))
            assert np.allclose(q, q.transpose(2, 3, 0, 1))
            assert np.allclose(np.einsum("iikl->kl", q), h, atol=1e-12)

    def test_matches_brute_force_quadrature(self):
        for b in (0.4, 2.0, 8.0):
            hb, qb = _brute_tensors((1.0, 0.0, 0.0), b)
            hc, qc = family_tensors((1.0, 0.0, 0.0), b)
            assert np.allclose(hb, hc, atol=1e-10)
            assert np.allclose(qb, qc, atol=1e-10)

    def test_oblique_direction(self):
        a0 = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)
        hb, qb = _brute_tensors(a0, 2.5)
        hc, qc = family_tensors(a0, 2.5)
        assert np.allclose(hb, hc, atol=1e-10)
        assert np.allclose(qb, qc, atol=1e-10)


class TestVarianceEval:
    def test_sigma2_zero_at_identity(self):
        fam = FibrilFamily(k1m=0.2, k2m=510.0, a0=(1, 0, 0), b=3.0)
        ev = variance_eval(np.eye(3), fam)
        assert ev.sigma2 == pytest.approx(0.0, abs=1e-12)
        assert ev.i4star == pytest.approx(1.0, abs=1e-12)

    def test_sigma2_vanishes_in_aligned_limit(self):
        rng = np.random.default_rng(0)
        fam = FibrilFamily(k1m=0.2, k2m=510.0, a0=(1, 0, 0), b=5e3)
        c = _random_cbar(rng)
        ev = variance_eval(c, fam)
        assert abs(ev.sigma2) < 1e-4

    @given(seed=st.integers(0, 10_000), b=st.floats(0.1, 20.0))
    @settings(max_examples=50, deadline=None)
    def test_sigma2_nonnegative(self, seed, b):
        # sigma^2 is the orientation variance of a . C a, so >= 0
        rng = np.random.default_rng(seed)
        fam = FibrilFamily(k1m=0.2, k2m=510.0, a0=(0, 1, 0), b=b)
        ev = variance_eval(_random_cbar(rng, 0.15), fam)
        assert ev.sigma2 >= -1e-12

    def test_kappa_and_b_are_exclusive(self):
        with pytest.raises(ValueError):
            FibrilFamily(k1m=0.2, k2m=510.0, a0=(1, 0, 0))
        with pytest.raises(ValueError):
            FibrilFamily(k1m=0.2, k2m=510.0, a0=(1, 0, 0), b=1.0,
                         kappa=0.2)


class TestEnergyStress:
    def test_stress_free_reference(self):
        e, s = variance_energy_stress(np.eye(3), 1.0, default_families(),
                                      MatrixParams())
        assert np.allclose(s, 0.0, atol=1e-8)

    def test_stress_is_energy_gradient(self):
        rng = np.random.default_rng(1)
        g = np.eye(3) + 0.05 * rng.standard_normal((3, 3))
        c = g.T @ g
        fams = default_families(b_nt=2.0, b_si=4.0)
        mat = MatrixParams()

        def energy(cm):
            jm = np.sqrt(np.linalg.det(cm))
            return float(variance_energy_stress(cm, jm, fams, mat)[0])

        _, s = variance_energy_stress(c, np.sqrt(np.linalg.det(c)), fams,
                                      mat)
        h = 1e-6
        for i in range(3):
            for j in range(i, 3):
                dc = np.zeros((3, 3))
                dc[i, j] = dc[j, i] = h
                g_fd = (energy(c + dc) - energy(c - dc)) / (2.0 * h)
                expect = s[i, j] / 2.0 if i == j else s[i, j]
                assert g_fd == pytest.approx(expect, rel=5e-4, abs=1e-9)

    def test_material_fn_matches_direct_evaluation(self):
        rng = np.random.default_rng(2)
        fams = default_families(b_nt=3.0, b_si=3.0)
        mat = MatrixParams()
        fn = variance_material_fn(fams, mat)
        g = np.eye(3) + 0.04 * rng.standard_normal((2, 4, 3, 3))
        c = np.einsum("...ji,...jk->...ik", g, g)
        j = np.sqrt(np.linalg.det(c))
        e1, s1 = fn(c, j)
        e2, s2 = variance_energy_stress(c, j, fams, mat)
        assert np.allclose(e1, e2, rtol=1e-12)
        assert np.allclose(s1, s2, rtol=1e-12)

    def test_higher_dispersion_softens_aligned_stretch(self):
        # uniaxial stretch along the family axis: concentrating the
        # fibrils (higher b) stiffens the response
        c = np.diag([1.1**2, 1.0 / 1.1, 1.0 / 1.1])
        out = []
        for b in (0.5, 2.0, 8.0):
            fam = [FibrilFamily(k1m=0.2, k2m=510.0, a0=(1, 0, 0), b=b)]
            e, _ = variance_energy_stress(c, 1.0, fam, MatrixParams())
            out.append(float(e))
        assert out[0] < out[1] < out[2]


def test_structure_tensors_from_kappa():
    fam = FibrilFamily(k1m=0.2, k2m=510.0, a0=(0, 0, 1), kappa=0.2)
    h, _ = structure_tensors(fam)
    expect = 0.2 * np.eye(3)
    expect[2, 2] += 1.0 - 3 * 0.2
    assert np.allclose(h, expect, atol=1e-10)
