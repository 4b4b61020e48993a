import numpy as np
import numpy.testing as npt
import pytest

from gempic.config import DOMAIN_L
from gempic.mapping import (
    MapFamily,
    MappingParameterError,
    builtin_map,
    piola_contravariant,
    piola_covariant,
)

from conftest import MAP_NAMES, make_map


def fd_jacobian(mapping, xi, h=1e-6):
    out = np.zeros((3, 3))
    for j in range(3):
        dp = xi.copy()
        dm = xi.copy()
        dp[j] += h
        dm[j] -= h
        out[:, j] = (mapping.eval(dp) - mapping.eval(dm)) / (2 * h)
    return out


class TestFamilies:
    def test_cartesian_scaling(self):
        m = make_map("cartesian")
        met = m.metric_at(np.array([0.3, 0.7, 0.1]))
        npt.assert_allclose(met.df, np.diag([DOMAIN_L] * 3), atol=0)
        assert met.det == pytest.approx(DOMAIN_L**3, rel=1e-15)
        npt.assert_allclose(met.n, np.diag([1 / DOMAIN_L] * 3), rtol=1e-15)

    def test_cylindrical_determinant(self):
        m = builtin_map("cylindrical", r0=0.5, lr=1.0, lz=1.0)
        met = m.metric_at(np.array([0.5, 0.0, 0.0]))
        # analytic: J = 2 pi Lr Lz (r0 + Lr xi1) = 2 pi at xi1 = 0.5
        assert met.det == pytest.approx(2 * np.pi, rel=1e-14)
        fd = fd_jacobian(m, np.array([0.5, 0.0, 0.0]))
        npt.assert_allclose(met.df, fd, atol=1e-6)

    def test_cylindrical_point(self):
        m = builtin_map("cylindrical", r0=0.5, lr=1.0, lz=1.0)
        x = m.eval(np.array([1.0, 0.25, 0.0]))
        npt.assert_allclose(x, [0.0, 1.5, 0.0], atol=1e-15)

    def test_distorted_boundary_undistorted(self):
        m = builtin_map(
            "distorted", lx=1.0, ly=1.0, lz=1.0, lp=2 * np.pi, eps=0.05
        )
        for xi2 in (0.1, 0.5, 0.9):
            x = m.eval(np.array([0.0, xi2, 0.3]))
            assert x[0] == 0.0

    def test_distorted_eps0_equals_cartesian(self):
        mc = builtin_map("cartesian", lx=2.0, ly=3.0, lz=4.0)
        md = builtin_map("distorted", lx=2.0, ly=3.0, lz=4.0, lp=np.pi / 2, eps=0.0)
        rng = np.random.default_rng(0)
        for _ in range(20):
            xi = rng.random(3)
            npt.assert_array_equal(mc.eval(xi), md.eval(xi))
            # off-diagonal entries may differ by signed zeros only
            npt.assert_allclose(md.jacobian(xi), mc.jacobian(xi), atol=0)

    def test_elliptical_traces_ellipse(self):
        r0 = 0.05
        m = builtin_map("elliptical", r0=r0, lr=2.0, lz=1.0)
        xi1 = 0.4
        a = 2.0 * np.cosh(xi1 + r0)
        b = 2.0 * np.sinh(xi1 + r0)
        for xi2 in np.linspace(0, 1, 7):
            x = m.eval(np.array([xi1, xi2, 0.0]))
            assert (x[0] / a) ** 2 + (x[1] / b) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_pole_parameter_rejected(self):
        for fam in ("cylindrical", "elliptical"):
            with pytest.raises(MappingParameterError):
                builtin_map(fam, r0=0.0, lr=1.0, lz=1.0)
            with pytest.raises(MappingParameterError):
                builtin_map(fam, r0=-0.2, lr=1.0, lz=1.0)

    def test_periodicity_in_angle(self):
        m = make_map("cylindrical")
        xi = np.array([0.4, 0.3, 0.6])
        shifted = xi + np.array([0.0, 1.0, 0.0])
        npt.assert_allclose(m.eval(xi), m.eval(shifted), atol=1e-12)


class TestMetric:
    @pytest.mark.parametrize("name", MAP_NAMES)
    def test_fd_jacobian_agreement(self, name, rng):
        m = make_map(name)
        for _ in range(50):
            xi = rng.random(3)
            npt.assert_allclose(
                m.jacobian(xi), fd_jacobian(m, xi), atol=1e-6 * DOMAIN_L
            )

    def test_basis_identities(self, any_map, rng):
        """Covariant/contravariant relations: n_i = t_j x t_k / J and duals."""
        for _ in range(20):
            xi = rng.random(3)
            met = any_map.metric_at(xi)
            t, n, J = met.df, met.n, met.det
            for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
                npt.assert_allclose(n[:, i], np.cross(t[:, j], t[:, k]) / J,
                                    atol=1e-12)
                npt.assert_allclose(np.cross(n[:, j], n[:, k]), t[:, i] / J,
                                    atol=1e-12)

    def test_metric_consistency(self, any_map, rng):
        for _ in range(20):
            xi = rng.random(3)
            met = any_map.metric_at(xi)
            npt.assert_allclose(met.n.T @ met.n, met.g_inv, atol=1e-12)
            npt.assert_allclose(met.g, met.df.T @ met.df, atol=1e-12)

    def test_scalar_triple_product_permutes(self, rng):
        for _ in range(20):
            a, b, c = rng.standard_normal((3, 3))
            lhs = np.cross(a, b) @ c
            rhs = np.cross(b, c) @ a
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


class TestPiola:
    def test_identity_map(self):
        m = builtin_map("cartesian", lx=1.0, ly=1.0, lz=1.0)
        met = m.metric_at(np.array([0.2, 0.5, 0.8]))
        npt.assert_allclose(piola_covariant(met, np.array([1.0, 2.0, 3.0])),
                            [1, 2, 3], atol=0)
        npt.assert_allclose(piola_contravariant(met, np.array([0.0, 1.0, 0.0])),
                            [0, 1, 0], atol=0)

    def test_diagonal_map_scaling(self):
        m = builtin_map("cartesian", lx=2.0, ly=3.0, lz=5.0)
        met = m.metric_at(np.array([0.2, 0.5, 0.8]))
        npt.assert_allclose(
            piola_covariant(met, np.array([1.0, 1.0, 1.0])),
            [1 / 2, 1 / 3, 1 / 5],
            rtol=1e-15,
        )
        npt.assert_allclose(
            piola_contravariant(met, np.array([1.0, 0.0, 0.0])),
            [2 / 30, 0, 0],
            rtol=1e-15,
        )

    def test_round_trips(self, any_map, rng):
        for _ in range(10):
            xi = rng.random(3)
            met = any_map.metric_at(xi)
            e = rng.standard_normal(3)
            back = met.df.T @ piola_covariant(met, e)
            npt.assert_allclose(back, e, atol=1e-12)
            b = rng.standard_normal(3)
            back = np.linalg.solve(met.df, piola_contravariant(met, b)) * met.det
            npt.assert_allclose(back, b, atol=1e-12)


def test_volume_matches_analytic():
    m = builtin_map("cylindrical", r0=0.5, lr=1.0, lz=2.0)
    # pi (R^2 - r0^2) Lz with R = 1.5
    expected = np.pi * (1.5**2 - 0.5**2) * 2.0
    assert m.volume() == pytest.approx(expected, rel=1e-12)
