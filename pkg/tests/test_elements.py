import numpy as np
import pytest

from stromasim.elements import (hex_lumped_mass, hex_precompute,
                                pressure_nodal_forces, truss_eval)
from stromasim.materials import CollagenParams, CrosslinkParams
from stromasim.verification import (check_hex_patch_test,
                                    check_hex_rotation_invariance,
                                    check_hex_tangent_fd,
                                    check_pressure_resultant,
                                    check_truss_tangent_fd)

UNIT_HEX = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                     [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]],
                    dtype=float)


class TestTruss:
    def test_axial_stretch_forces(self):
        # a truss along x stretched by 10% pulls its ends together
        ref = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        cur = np.array([[0.0, 0.0, 0.0], [2.2, 0.0, 0.0]])
        ev = truss_eval(ref, cur, CollagenParams(), area=0.5)
        assert ev.t_b[0] > 0.0
        assert np.allclose(ev.t_a, -ev.t_b)
        assert ev.t_b[1] == ev.t_b[2] == 0.0

    def test_rigid_translation_is_force_free(self):
        ref = np.array([[0.0, 0.0, 0.0], [1.0, 0.5, -0.3]])
        cur = ref + np.array([0.7, -0.2, 1.1])
        for law in (CollagenParams(), CrosslinkParams()):
            ev = truss_eval(ref, cur, law, area=1.0)
            assert np.allclose(ev.t_b, 0.0, atol=1e-14)

    def test_tangent_vs_fd(self):
        r = check_truss_tangent_fd(n=1000)
        assert r.passed, r.detail

    def test_degenerate_configurations_rejected(self):
        ref = np.zeros((2, 3))
        with pytest.raises(ValueError):
            truss_eval(ref, UNIT_HEX[:2], CollagenParams(), 1.0)
        ref = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        with pytest.raises(ValueError):
            truss_eval(ref, np.zeros((2, 3)), CollagenParams(), 1.0)


class TestHex:
    def test_patch_test(self):
        r = check_hex_patch_test()
        assert r.passed, r.detail

    def test_tangent_vs_fd(self):
        r = check_hex_tangent_fd()
        assert r.passed, r.detail

    def test_rotation_invariance(self):
        r = check_hex_rotation_invariance()
        assert r.passed, r.detail

    def test_precompute_volume(self):
        pre = hex_precompute(2.0 * UNIT_HEX)
        assert pre.volume[0] == pytest.approx(8.0)
        assert pre.wdet.sum() == pytest.approx(8.0)

    def test_lumped_mass_partition_of_unity(self):
        m = hex_lumped_mass(3.0 * UNIT_HEX, rho=2.0)
        assert m.sum() == pytest.approx(2.0 * 27.0)
        assert np.all(m > 0.0)


class TestPressure:
    def test_flat_facet_exact(self):
        facet = np.array([[0, 0, 0], [2, 0, 0], [2, 2, 0], [0, 2, 0]],
                         dtype=float)
        p = 0.01
        f = pressure_nodal_forces(facet, p)
        # uniform pressure on a flat 2x2 facet: total p*4 along +z,
        # shared equally by the four nodes
        assert np.allclose(f.sum(axis=-2), [0.0, 0.0, p * 4.0], atol=1e-14)
        assert np.allclose(f[..., 2], p, atol=1e-14)

    def test_resultant_vs_triangulated_oracle(self):
        r = check_pressure_resultant()
        assert r.passed, r.detail
