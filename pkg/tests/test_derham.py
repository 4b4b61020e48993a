import numpy as np
import numpy.testing as npt
import pytest

from gempic.derham import ShapeError, build_sequence


class TestDimensions:
    def test_unconstrained_counts(self):
        seq = build_sequence(3, (8, 8, 8), pec=False)
        assert seq.dof_count(0) == 11 * 8 * 8
        # padded zero slot removed from every lower-degree clamped factor
        shapes = seq.component_shapes(1)
        assert shapes[0] == (10, 8, 8)
        assert shapes[1] == (11, 8, 8)
        assert shapes[2] == (11, 8, 8)

    def test_pec_counts(self):
        seq = build_sequence(3, (8, 8, 8), pec=True)
        # clamped degree-p factor loses its two wall functions
        assert seq.component_shapes(0)[0] == (9, 8, 8)
        shapes1 = seq.component_shapes(1)
        assert shapes1[0] == (10, 8, 8)
        assert shapes1[1] == (9, 8, 8)
        assert shapes1[2] == (9, 8, 8)
        shapes2 = seq.component_shapes(2)
        assert shapes2[0] == (9, 8, 8)
        assert shapes2[1] == (10, 8, 8)
        assert shapes2[2] == (10, 8, 8)
        assert seq.component_shapes(3)[0] == (10, 8, 8)


class TestExactness:
    @pytest.mark.parametrize("p", [1, 2, 3])
    @pytest.mark.parametrize("pec", [False, True])
    def test_cg_and_dc_vanish(self, p, pec, rng):
        # cancellation residue is relative to the intermediate's magnitude
        seq = build_sequence(p, (4, 5, 6), pec)
        for _ in range(25):
            x = rng.standard_normal(seq.dof_count(0))
            y = rng.standard_normal(seq.dof_count(1))
            gx = seq.apply_G(x)
            cy = seq.apply_C(y)
            assert np.abs(seq.apply_C(gx)).max() <= 1e-13 * max(
                1.0, np.abs(gx).max()
            )
            assert np.abs(seq.apply_D(cy)).max() <= 1e-13 * max(
                1.0, np.abs(cy).max()
            )

    def test_gradient_of_constant_vanishes(self):
        seq = build_sequence(2, (4, 4, 4), pec=False)
        ones = np.ones(seq.dof_count(0))
        npt.assert_array_equal(seq.apply_G(ones), np.zeros(seq.dof_count(1)))

    def test_transposes_are_adjoint(self, rng):
        seq = build_sequence(2, (4, 4, 4), pec=True)
        x = rng.standard_normal(seq.dof_count(0))
        y = rng.standard_normal(seq.dof_count(1))
        z = rng.standard_normal(seq.dof_count(2))
        assert seq.apply_G(x) @ y == pytest.approx(x @ seq.apply_G_transpose(y),
                                                   rel=1e-13)
        assert seq.apply_C(y) @ z == pytest.approx(y @ seq.apply_C_transpose(z),
                                                   rel=1e-13)


class TestCommutingDiagram:
    @pytest.mark.parametrize("pec", [False, True])
    def test_pointwise_derivatives(self, pec, rng):
        seq = build_sequence(3, (4, 4, 4), pec)
        phi = rng.standard_normal(seq.dof_count(0))
        a = rng.standard_normal(seq.dof_count(1))
        b = rng.standard_normal(seq.dof_count(2))
        gphi = seq.apply_G(phi)
        ca = seq.apply_C(a)
        db = seq.apply_D(b)
        pts = list(rng.random((20, 3)))
        # include wall points: the diagram must hold there under constraints
        pts += [np.array([0.0, 0.3, 0.7]), np.array([1.0, 0.6, 0.2])]
        for xi in pts:
            npt.assert_allclose(
                seq.eval_form_gradient(phi, xi), seq.eval_form(1, gphi, xi),
                atol=1e-12,
            )
            npt.assert_allclose(
                seq.eval_form_curl(a, xi), seq.eval_form(2, ca, xi), atol=1e-12
            )
            assert seq.eval_form_divergence(b, xi) == pytest.approx(
                seq.eval_form(3, db, xi), abs=1e-12
            )


class TestConstrainedTraces:
    def test_tangential_electric_vanishes(self, rng):
        seq = build_sequence(2, (4, 4, 4), pec=True)
        a = rng.standard_normal(seq.dof_count(1))
        for x1 in (0.0, 1.0):
            for _ in range(5):
                xi = np.array([x1, rng.random(), rng.random()])
                v = seq.eval_form(1, a, xi)
                assert v[1] == 0.0 and v[2] == 0.0

    def test_normal_magnetic_vanishes(self, rng):
        seq = build_sequence(2, (4, 4, 4), pec=True)
        b = rng.standard_normal(seq.dof_count(2))
        for x1 in (0.0, 1.0):
            xi = np.array([x1, rng.random(), rng.random()])
            assert seq.eval_form(2, b, xi)[0] == 0.0

    def test_curl_potential_keeps_normal_trace_zero(self, rng):
        seq = build_sequence(3, (4, 4, 4), pec=True)
        a = rng.standard_normal(seq.dof_count(1))
        b = seq.apply_C(a)
        for x1 in (0.0, 1.0):
            for _ in range(5):
                xi = np.array([x1, rng.random(), rng.random()])
                assert seq.eval_form(2, b, xi)[0] == 0.0


class TestEmbedRestrict:
    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_restrict_embed_identity(self, k, rng):
        seq = build_sequence(2, (4, 4, 4), pec=True)
        x = rng.standard_normal(seq.dof_count(k))
        npt.assert_array_equal(seq.restrict(k, seq.embed(k, x)), x)

    def test_zero_round_trip(self):
        seq = build_sequence(2, (4, 4, 4), pec=True)
        z = seq.zeros(1)
        npt.assert_array_equal(seq.restrict(1, seq.embed(1, z)), z)

    def test_shape_errors(self):
        seq = build_sequence(2, (4, 4, 4), pec=True)
        with pytest.raises(ShapeError):
            seq.apply_G(np.zeros(seq.dof_count(0) + 1))
        with pytest.raises(ShapeError):
            seq.eval_form(2, np.zeros(3), np.array([0.5, 0.5, 0.5]))


def test_partition_of_unity_evaluation():
    seq = build_sequence(2, (4, 4, 4), pec=False)
    ones = np.ones(seq.dof_count(0))
    rng = np.random.default_rng(1)
    for _ in range(10):
        assert seq.eval_form(0, ones, rng.random(3)) == pytest.approx(
            1.0, abs=1e-13
        )
