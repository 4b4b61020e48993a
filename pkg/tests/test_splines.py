import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gempic.splines import (
    Boundary,
    DomainError,
    ParameterError,
    build_basis,
    derivative_matrix,
    eval_basis,
    eval_basis_derivative,
    eval_basis_lower_degree,
    greville_points,
)


def cox_de_boor(knots, j, p, x):
    """Literal recursion-by-definition reference (slow, test oracle)."""
    if p == 0:
        return 1.0 if knots[j] <= x < knots[j + 1] else 0.0
    left = 0.0
    if knots[j + p] > knots[j]:
        left = (x - knots[j]) / (knots[j + p] - knots[j]) * cox_de_boor(
            knots, j, p - 1, x
        )
    right = 0.0
    if knots[j + p + 1] > knots[j + 1]:
        right = (knots[j + p + 1] - x) / (knots[j + p + 1] - knots[j + 1]) * (
            cox_de_boor(knots, j + 1, p - 1, x)
        )
    return left + right


def global_values(basis, x):
    """Dense vector of all basis values at x."""
    out = np.zeros(basis.n_basis)
    first, vals = eval_basis(basis, x)
    idx = first + np.arange(len(vals))
    if basis.boundary is Boundary.PERIODIC:
        idx = np.mod(idx, basis.n_basis)
    out[idx] += vals
    return out


def global_lower_values(basis, x):
    out = np.zeros(basis.n_padded_lower)
    first, vals = eval_basis_lower_degree(basis, x)
    idx = first + np.arange(len(vals))
    if basis.boundary is Boundary.PERIODIC:
        idx = np.mod(idx, basis.n_basis)
    out[idx] += vals
    return out


class TestConstruction:
    def test_clamped_knots_p2(self):
        b = build_basis(2, 4, Boundary.CLAMPED)
        npt.assert_allclose(
            b.knots, [0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1], atol=0
        )
        assert b.n_basis == 6

    def test_clamped_knots_p1(self):
        b = build_basis(1, 2, Boundary.CLAMPED)
        npt.assert_allclose(b.knots, [0, 0, 0.5, 1, 1], atol=0)
        assert b.n_basis == 3

    def test_periodic_counts(self):
        b = build_basis(2, 4, Boundary.PERIODIC)
        assert b.n_basis == 4
        # knots wrap with period 1: uniform spacing through the seam
        npt.assert_allclose(np.diff(b.knots), 0.25, atol=0)

    @pytest.mark.parametrize("p,n", [(0, 4), (-1, 4), (2, 2), (3, 3)])
    def test_invalid_parameters(self, p, n):
        with pytest.raises(ParameterError):
            build_basis(p, n, Boundary.CLAMPED)


class TestEvaluation:
    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_clamped_endpoint_interpolation(self, p):
        b = build_basis(p, 5, Boundary.CLAMPED)
        v0 = global_values(b, 0.0)
        v1 = global_values(b, 1.0)
        npt.assert_array_equal(v0, np.eye(b.n_basis)[0])
        npt.assert_array_equal(v1, np.eye(b.n_basis)[-1])

    @pytest.mark.parametrize("boundary", [Boundary.CLAMPED, Boundary.PERIODIC])
    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_partition_of_unity(self, boundary, p, rng):
        b = build_basis(p, 8, boundary)
        for x in rng.random(100):
            _, vals = eval_basis(b, float(x))
            assert abs(vals.sum() - 1.0) <= 1e-13

    def test_outside_domain_raises(self):
        b = build_basis(2, 4, Boundary.CLAMPED)
        with pytest.raises(DomainError):
            eval_basis(b, 1.2)
        with pytest.raises(DomainError):
            eval_basis_lower_degree(b, -0.1)

    @pytest.mark.parametrize("boundary", [Boundary.CLAMPED, Boundary.PERIODIC])
    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_matches_literal_recursion(self, boundary, p, rng):
        b = build_basis(p, 6, boundary)
        for x in rng.random(25):
            dense = global_values(b, float(x))
            if boundary is Boundary.CLAMPED:
                ref = np.array(
                    [cox_de_boor(b.knots, j, p, float(x)) for j in range(b.n_basis)]
                )
            else:
                ref = np.zeros(b.n_basis)
                for j in range(len(b.knots) - p - 1):
                    ref[(j - p) % b.n_basis] += cox_de_boor(b.knots, j, p, float(x))
            npt.assert_allclose(dense, ref, atol=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(
        p=st.integers(min_value=1, max_value=4),
        n_extra=st.integers(min_value=0, max_value=6),
        periodic=st.booleans(),
        x=st.floats(min_value=0.0, max_value=1.0),
    )
    def test_partition_of_unity_property(self, p, n_extra, periodic, x):
        bnd = Boundary.PERIODIC if periodic else Boundary.CLAMPED
        b = build_basis(p, p + 1 + n_extra, bnd)
        _, vals = eval_basis(b, x)
        assert abs(vals.sum() - 1.0) <= 1e-12
        assert np.all(vals >= -1e-15)


class TestCompanionBasis:
    @pytest.mark.parametrize("p", [2, 3])
    def test_padded_slot_never_touched(self, p, rng):
        b = build_basis(p, 6, Boundary.CLAMPED)
        for x in rng.random(50):
            dense = global_lower_values(b, float(x))
            assert dense[0] == 0.0

    @pytest.mark.parametrize("boundary", [Boundary.CLAMPED, Boundary.PERIODIC])
    @pytest.mark.parametrize("p", [2, 3])
    def test_interior_partition_of_unity(self, boundary, p, rng):
        b = build_basis(p, 8, boundary)
        for x in rng.random(100):
            _, vals = eval_basis_lower_degree(b, float(x))
            assert abs(vals.sum() - 1.0) <= 1e-13


class TestDerivativeMatrix:
    def test_periodic_circulant(self):
        b = build_basis(2, 5, Boundary.PERIODIC)
        d = derivative_matrix(b).toarray()
        expected = np.zeros((5, 5))
        for j in range(5):
            expected[j, j] = 5.0
            expected[(j + 1) % 5, j] = -5.0
        npt.assert_array_equal(d, expected)
        npt.assert_array_equal(d.sum(axis=1), np.zeros(5))

    def test_clamped_structure(self):
        p, n = 2, 4
        b = build_basis(p, n, Boundary.CLAMPED)
        d = derivative_matrix(b).toarray()
        dx = 0.25
        npt.assert_array_equal(d[0], np.zeros(n + p))
        # second row carries the -p/1, p/1 boundary weights
        assert d[1, 0] == -p / dx
        assert d[1, 1] == p / dx
        # every later row sums to zero exactly (identical denominators)
        npt.assert_array_equal(d[1:].sum(axis=1), np.zeros(n + p - 1))

    @pytest.mark.parametrize("boundary", [Boundary.CLAMPED, Boundary.PERIODIC])
    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_finite_difference_oracle(self, boundary, p, rng):
        """Matrix-applied derivative matches centered differences of eval."""
        b = build_basis(p, 6, boundary)
        d = derivative_matrix(b).toarray()
        n = b.n_basis
        c = rng.standard_normal(n)
        h = 1e-5
        pts = []
        while len(pts) < 20:
            x = rng.random()
            # keep clear of the knots where low-degree derivatives jump
            if np.min(np.abs(x * 6 - np.round(x * 6))) > 1e-3 and h < x < 1 - h:
                pts.append(x)
        for x in pts:
            fd = (global_values(b, x + h) @ c - global_values(b, x - h) @ c) / (
                2 * h
            )
            mat = global_lower_values(b, x) @ (d @ c)
            assert abs(fd - mat) <= 1e-6

    @pytest.mark.parametrize("boundary", [Boundary.CLAMPED, Boundary.PERIODIC])
    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_matches_analytic_derivative(self, boundary, p, rng):
        """S^{p-1} . D c reproduces the derivative evaluation to 1e-12."""
        b = build_basis(p, 6, boundary)
        d = derivative_matrix(b).toarray()
        c = rng.standard_normal(b.n_basis)
        for x in rng.random(40):
            first, ders = eval_basis_derivative(b, float(x))
            idx = first + np.arange(len(ders))
            if boundary is Boundary.PERIODIC:
                idx = np.mod(idx, b.n_basis)
            analytic = ders @ c[idx]
            via_matrix = global_lower_values(b, float(x)) @ (d @ c)
            assert abs(analytic - via_matrix) <= 1e-12 * max(1.0, abs(analytic))


def test_greville_points_inside_domain():
    b = build_basis(3, 6, Boundary.CLAMPED)
    g = greville_points(b)
    assert len(g) == b.n_basis
    assert np.all((g >= 0) & (g <= 1))
    assert np.all(np.diff(g) > 0)
