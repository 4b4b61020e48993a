import numpy as np
import numpy.testing as npt
import pytest
from numpy.polynomial.legendre import leggauss

from gempic.assembly import (
    AssemblyError,
    assemble_boundary_matrices,
    assemble_mass,
    component_energy_quadrature,
    lumped_diagonal,
    project_rhs,
)
from gempic.derham import build_sequence
from gempic.mapping import builtin_map
from gempic.splines import Boundary, eval_basis, eval_basis_lower_degree

from conftest import MAP_NAMES, make_map


def dense_mass_oracle(seq, mapping, k, q):
    """Brute-force mass matrix: tabulate every active basis function at
    every global quadrature point and contract with the metric weights."""
    nodes, wts = leggauss(q)
    vals1d, pts, wq = {}, {}, {}
    for d, basis in enumerate(seq.bases):
        dx = basis.dx
        x = ((np.arange(basis.n_cells) * dx)[:, None]
             + (nodes[None, :] + 1) * 0.5 * dx).ravel()
        w = np.tile(wts * 0.5 * dx, basis.n_cells)
        pts[d], wq[d] = x, w
        for kind, ev in (("p", eval_basis), ("l", eval_basis_lower_degree)):
            n = seq.padded_shape[d] if d == 0 else basis.n_basis
            table = np.zeros((n, len(x)))
            for j, xx in enumerate(x):
                first, vv = ev(basis, xx)
                idx = first + np.arange(len(vv))
                if basis.boundary is Boundary.PERIODIC:
                    idx = np.mod(idx, basis.n_basis)
                table[idx, j] += vv
            vals1d[(d, kind)] = table
    x1, x2, x3 = np.meshgrid(pts[0], pts[1], pts[2], indexing="ij")
    xi = np.stack([x1.ravel(), x2.ravel(), x3.ravel()], axis=1)
    weights = np.einsum("a,b,c->abc", wq[0], wq[1], wq[2]).ravel()
    mets = [mapping.metric_at(pt) for pt in xi]
    absj = np.array([abs(m.det) for m in mets])
    gm = np.array([m.g for m in mets])
    gi = np.array([m.g_inv for m in mets])

    def phi(comp):
        v1 = vals1d[(0, comp.kinds[0])][comp.active1, :]
        v2 = vals1d[(1, comp.kinds[1])]
        v3 = vals1d[(2, comp.kinds[2])]
        return np.einsum("ia,jb,kc->ijkabc", v1, v2, v3,
                         optimize=True).reshape(
            v1.shape[0] * v2.shape[0] * v3.shape[0], -1
        )

    comps = seq._components[k]
    phis = [phi(c) for c in comps]
    blocks = [[None] * len(comps) for _ in comps]
    for ci in range(len(comps)):
        for cj in range(len(comps)):
            if k == 0:
                wgt = absj
            elif k == 1:
                wgt = gi[:, ci, cj] * absj
            elif k == 2:
                wgt = gm[:, ci, cj] / absj
            else:
                wgt = 1.0 / absj
            blocks[ci][cj] = (phis[ci] * (weights * wgt)[None, :]) @ phis[cj].T
    return np.block(blocks)


class TestMassOperators:
    @pytest.mark.parametrize("name", MAP_NAMES)
    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_matches_dense_oracle(self, name, k):
        mapping = make_map(name)
        seq = build_sequence(2, (4, 4, 4), pec=True)
        q = 2 * (seq.degree + 1)
        mass = assemble_mass(seq, mapping, k, q=q)
        oracle = dense_mass_oracle(seq, mapping, k, q)
        scale = np.abs(oracle).max()
        assert np.abs(mass.matrix.toarray() - oracle).max() <= 1e-10 * scale

    def test_cartesian_scales_unit_map(self):
        seq = build_sequence(2, (4, 4, 4), pec=False)
        unit = assemble_mass(seq, builtin_map("cartesian", lx=1, ly=1, lz=1), 0)
        scaled = assemble_mass(
            seq, builtin_map("cartesian", lx=2.0, ly=3.0, lz=0.5), 0
        )
        npt.assert_allclose(
            scaled.matrix.toarray(), 3.0 * unit.matrix.toarray(), rtol=1e-13
        )

    def test_quadrature_exactness_identity_map(self):
        seq = build_sequence(2, (4, 4, 4), pec=True)
        m = builtin_map("cartesian", lx=1.3, ly=0.9, lz=2.0)
        default = assemble_mass(seq, m, 1)
        refined = assemble_mass(seq, m, 1, q=2 * seq.degree + 2)
        scale = np.abs(refined.matrix.toarray()).max()
        assert (
            np.abs(default.matrix.toarray() - refined.matrix.toarray()).max()
            <= 1e-14 * scale
        )

    def test_symmetry_and_positivity(self, any_map, rng):
        seq = build_sequence(2, (4, 4, 4), pec=True)
        for k in range(4):
            mass = assemble_mass(seq, any_map, k)
            x = rng.standard_normal(mass.shape[0])
            y = rng.standard_normal(mass.shape[0])
            scale = max(1.0, abs(x @ mass.apply(y)))
            assert abs(x @ mass.apply(y) - y @ mass.apply(x)) <= 1e-13 * scale
            assert x @ mass.apply(x) > 0.0

    def test_spd_smallest_eigenvalue(self):
        seq = build_sequence(2, (4, 4, 4), pec=True)
        for k in range(4):
            mass = assemble_mass(seq, make_map("elliptical"), k)
            dense = mass.matrix.toarray()
            lam = np.linalg.eigvalsh(0.5 * (dense + dense.T)).min()
            assert lam > 0.0

    def test_low_quadrature_order_rejected(self):
        seq = build_sequence(2, (4, 4, 4), pec=True)
        with pytest.raises(AssemblyError):
            assemble_mass(seq, make_map("cartesian"), 0, q=2)

    def test_near_singular_jacobian_reported(self):
        seq = build_sequence(1, (4, 4, 4), pec=True)
        # pole-touching radius passes the r0 > 0 gate but degenerates |J|
        m = builtin_map("cylindrical", r0=1e-16, lr=1.0, lz=1.0)
        with pytest.raises(AssemblyError, match="xi"):
            assemble_mass(seq, m, 0)

    def test_coordinate_dump(self, tmp_path):
        seq = build_sequence(1, (2, 2, 2), pec=False)
        mass = assemble_mass(seq, make_map("cartesian"), 0)
        path = tmp_path / "m0.txt"
        mass.dump_coordinates(path)
        rows = np.loadtxt(path)
        rebuilt = np.zeros(mass.shape)
        for r, c, v in rows:
            rebuilt[int(r), int(c)] = v
        npt.assert_allclose(rebuilt, mass.matrix.toarray(), rtol=1e-15)


class TestLumping:
    def test_interior_row_sums_unit_map(self):
        seq = build_sequence(2, (5, 4, 4), pec=False)
        mass = assemble_mass(seq, builtin_map("cartesian", lx=1, ly=1, lz=1), 0)
        sums = lumped_diagonal(mass, floor=0.0)
        # interior rows integrate a full partition-of-unity patch
        interior = sums.reshape(7, 4, 4)[seq.degree : -seq.degree]
        npt.assert_allclose(interior, (1 / 5) * (1 / 4) * (1 / 4), rtol=1e-13)
        assert np.all(sums > 0)

    def test_floor_applies(self):
        seq = build_sequence(1, (2, 2, 2), pec=False)
        mass = assemble_mass(seq, make_map("cartesian"), 0)
        mass.matrix = mass.matrix.tolil()
        mass.matrix[0, :] = 0.0
        mass.matrix[0, 0] = -1.0
        mass.matrix = mass.matrix.tocsr()
        sums = lumped_diagonal(mass)
        floor = 1e-10 * mass.row_sums().max()
        assert sums[0] == floor

    def test_diagonal_strictly_positive(self, any_map):
        seq = build_sequence(2, (4, 4, 4), pec=True)
        for k in range(4):
            assert np.all(assemble_mass(seq, any_map, k).diagonal() > 0)


class TestBoundaryMatrices:
    @pytest.mark.parametrize("name", MAP_NAMES)
    def test_zero_under_wall_constraints(self, name):
        seq = build_sequence(2, (4, 4, 4), pec=True)
        mb0, mb1 = assemble_boundary_matrices(seq, make_map(name))
        assert mb0.nnz == 0
        assert mb1.nnz == 0

    def test_unconstrained_support_pattern(self):
        seq = build_sequence(2, (4, 4, 4), pec=False)
        mb0, mb1 = assemble_boundary_matrices(seq, make_map("cartesian"))
        # rows of M_b^0 with entries must involve wall-supported 0-forms
        rows = np.unique(mb0.tocoo().row)
        dir1 = rows // (4 * 4)
        n1p = seq.padded_shape[0]
        assert np.all((dir1 < seq.degree) | (dir1 >= n1p - seq.degree))
        # the first block row of M_b^1 vanishes identically
        n_comp1 = seq._components[1][0].size
        assert mb1[:n_comp1, :].nnz == 0

    def test_poynting_flux_oracle(self, rng):
        """e^T M_b^1 b reproduces the physical surface flux integral."""
        seq = build_sequence(2, (3, 3, 3), pec=False)
        mapping = make_map("distorted")
        e = rng.standard_normal(seq.dof_count(1))
        b = rng.standard_normal(seq.dof_count(2))
        _, mb1 = assemble_boundary_matrices(seq, mapping, q=6)
        nodes, wts = leggauss(6)
        total = 0.0
        for x1, outward in ((1.0, 1.0), (0.0, -1.0)):
            for c2 in range(3):
                for c3 in range(3):
                    for aa, wa in zip(nodes, wts):
                        for bb, wb in zip(nodes, wts):
                            x2 = (c2 + (aa + 1) / 2) / 3
                            x3 = (c3 + (bb + 1) / 2) / 3
                            xi = np.array([x1, x2, x3])
                            met = mapping.metric_at(xi)
                            ephys = met.n @ seq.eval_form(1, e, xi)
                            bphys = met.df @ seq.eval_form(2, b, xi) / met.det
                            nvec = outward * met.n[:, 0]
                            nhat = nvec / np.linalg.norm(nvec)
                            ds = np.linalg.norm(
                                np.cross(met.df[:, 1], met.df[:, 2])
                            )
                            total += (np.cross(ephys, bphys) @ nhat) * ds * (
                                wa / 6
                            ) * (wb / 6)
        assert -float(e @ (mb1 @ b)) == pytest.approx(total, rel=1e-12)


class TestProjection:
    def test_constant_zero_form_projection(self):
        seq = build_sequence(2, (4, 4, 4), pec=False)
        mapping = make_map("cylindrical")
        rhs = project_rhs(seq, mapping, 0, lambda x: np.ones(x.shape[0]))
        mass = assemble_mass(seq, mapping, 0, q=seq.degree + 2)
        coeff = np.linalg.solve(mass.matrix.toarray(), rhs)
        rng = np.random.default_rng(5)
        for _ in range(10):
            assert seq.eval_form(0, coeff, rng.random(3)) == pytest.approx(
                1.0, abs=1e-8
            )

    def test_one_form_projection_reproduces_field(self, rng):
        seq = build_sequence(3, (6, 6, 6), pec=False)
        mapping = builtin_map("cartesian", lx=2.0, ly=2.0, lz=2.0)

        def a_phys(x):
            out = np.zeros_like(x)
            out[:, 0] = np.sin(np.pi * x[:, 2])
            return out

        rhs = project_rhs(seq, mapping, 1, a_phys)
        mass = assemble_mass(seq, mapping, 1, q=seq.degree + 2)
        coeff = np.linalg.solve(mass.matrix.toarray(), rhs)
        for _ in range(10):
            xi = rng.random(3)
            met = mapping.metric_at(xi)
            logical = seq.eval_form(1, coeff, xi)
            phys = met.n @ logical
            expected = np.array([np.sin(np.pi * 2.0 * xi[2]), 0.0, 0.0])
            npt.assert_allclose(phys, expected, atol=2e-4)


def test_component_energy_matches_mass_energy(rng):
    """Summed per-component energies equal the quadratic-form energy."""
    seq = build_sequence(2, (4, 4, 4), pec=True)
    mapping = make_map("distorted")
    b = rng.standard_normal(seq.dof_count(2))
    comps = component_energy_quadrature(seq, mapping, 2, b, q=seq.degree + 3)
    mass = assemble_mass(seq, mapping, 2, q=seq.degree + 3)
    total = 0.5 * float(b @ mass.apply(b))
    assert comps.sum() == pytest.approx(total, rel=1e-10)
