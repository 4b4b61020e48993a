"""Quadrature assembly of metric-weighted mass and boundary matrices.

Mass matrices carry the map-dependent weights

* 0-forms: ``|J_F|``
* 1-forms: ``G_m^{-1} |J_F|`` (components couple off the identity map)
* 2-forms: ``G_m / |J_F|``
* 3-forms: ``1 / |J_F|``

assembled cell by cell with tensor Gauss-Legendre quadrature (``q = p + 1``
points per direction by default, exact for identity-map integrands). The
component coupling breaks Kronecker structure, so operators are stored as
banded sparse blocks over the active degrees of freedom.

Boundary matrices integrate over the two ``xi1`` faces; on conducting-wall
constrained spaces every integrand factor contains a removed boundary
function, so both come out identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss

from .derham import DeRhamSequence
from .mapping import Mapping
from .splines import Boundary, eval_basis, eval_basis_lower_degree


class AssemblyError(RuntimeError):
    """Raised when the map degenerates at a quadrature point."""


_MIN_JAC = 1e-12


# ---------------------------------------------------------------------------
# quadrature / basis tables
# ---------------------------------------------------------------------------


@dataclass
class DirectionTable:
    """Per-direction cell quadrature nodes and local basis values."""

    points: np.ndarray        # (n_cells, q)
    weights: np.ndarray       # (q,) already scaled by dx/2
    values: dict              # kind -> (n_cells, q, width)
    indices: dict             # kind -> (n_cells, width) padded global indices


def direction_tables(seq: DeRhamSequence, q: int) -> list[DirectionTable]:
    nodes, wts = leggauss(q)
    tables = []
    for d, basis in enumerate(seq.bases):
        dx = basis.dx
        n_cells = basis.n_cells
        pts = (np.arange(n_cells) * dx)[:, None] + (nodes[None, :] + 1.0) * 0.5 * dx
        w = wts * 0.5 * dx
        values, indices = {}, {}
        for kind, width, ev in (
            ("p", seq.degree + 1, eval_basis),
            ("l", seq.degree, eval_basis_lower_degree),
        ):
            vals = np.empty((n_cells, q, width))
            idx = np.empty((n_cells, width), dtype=np.int64)
            for c in range(n_cells):
                for g in range(q):
                    first, vv = ev(basis, pts[c, g])
                    vals[c, g, :] = vv
                loc = first + np.arange(width)
                if basis.boundary is Boundary.PERIODIC:
                    loc = np.mod(loc, basis.n_basis)
                idx[c] = loc
            values[kind] = vals
            indices[kind] = idx
        tables.append(DirectionTable(pts, w, values, indices))
    return tables


def metric_tables(mapping: Mapping, tables: list[DirectionTable]):
    """Batched metric quantities at all volume quadrature points.

    Returns (absJ, g, g_inv, df) with leading shape (n1, n2, n3, q, q, q).
    """
    p1, p2, p3 = (t.points for t in tables)
    x1 = p1[:, None, None, :, None, None]
    x2 = p2[None, :, None, None, :, None]
    x3 = p3[None, None, :, None, None, :]
    shape = np.broadcast_shapes(x1.shape, x2.shape, x3.shape)
    xi = np.stack(
        [
            np.broadcast_to(x1, shape).ravel(),
            np.broadcast_to(x2, shape).ravel(),
            np.broadcast_to(x3, shape).ravel(),
        ],
        axis=1,
    )
    df = jacobian_batch(mapping, xi)
    det = np.linalg.det(df)
    bad = np.abs(det) < _MIN_JAC
    if np.any(bad):
        j = int(np.argmax(bad))
        raise AssemblyError(
            f"near-singular Jacobian |J| = {abs(det[j]):.3e} at xi = {tuple(xi[j])}"
        )
    g = np.einsum("nki,nkj->nij", df, df)
    g_inv = np.linalg.inv(g)
    return (
        np.abs(det).reshape(shape),
        g.reshape(shape + (3, 3)),
        g_inv.reshape(shape + (3, 3)),
        df.reshape(shape + (3, 3)),
    )


def jacobian_batch(mapping: Mapping, xi: np.ndarray) -> np.ndarray:
    """Analytic DF at many points, shape (n, 3, 3)."""
    from .mapping import TWO_PI, MapFamily

    n = xi.shape[0]
    df = np.zeros((n, 3, 3))
    q = mapping.params
    x1, x2 = xi[:, 0], xi[:, 1]
    if mapping.family is MapFamily.CARTESIAN:
        df[:, 0, 0], df[:, 1, 1], df[:, 2, 2] = q[0], q[1], q[2]
    elif mapping.family is MapFamily.DISTORTED:
        lx, ly, lz, lp, eps = q
        s1, c1 = np.sin(lp * x1), np.cos(lp * x1)
        s2, c2 = np.sin(TWO_PI * x2), np.cos(TWO_PI * x2)
        d1 = eps * lp * c1 * s2
        d2 = eps * s1 * TWO_PI * c2
        df[:, 0, 0] = lx * (1.0 + d1)
        df[:, 0, 1] = lx * d2
        df[:, 1, 0] = ly * d1
        df[:, 1, 1] = ly * (1.0 + d2)
        df[:, 2, 2] = lz
    elif mapping.family is MapFamily.CYLINDRICAL:
        r0, lr, lz = q
        r = r0 + lr * x1
        s, c = np.sin(TWO_PI * x2), np.cos(TWO_PI * x2)
        df[:, 0, 0] = lr * c
        df[:, 0, 1] = -TWO_PI * r * s
        df[:, 1, 0] = lr * s
        df[:, 1, 1] = TWO_PI * r * c
        df[:, 2, 2] = lz
    else:
        r0, lr, lz = q
        ch, sh = np.cosh(x1 + r0), np.sinh(x1 + r0)
        s, c = np.sin(TWO_PI * x2), np.cos(TWO_PI * x2)
        df[:, 0, 0] = lr * sh * c
        df[:, 0, 1] = -TWO_PI * lr * ch * s
        df[:, 1, 0] = lr * ch * s
        df[:, 1, 1] = TWO_PI * lr * sh * c
        df[:, 2, 2] = lz
    return df


def map_points_batch(mapping: Mapping, xi: np.ndarray) -> np.ndarray:
    """F(xi) at many points, shape (n, 3)."""
    from .mapping import TWO_PI, MapFamily

    q = mapping.params
    x1, x2, x3 = xi[:, 0], xi[:, 1], xi[:, 2]
    if mapping.family is MapFamily.CARTESIAN:
        return np.column_stack([q[0] * x1, q[1] * x2, q[2] * x3])
    if mapping.family is MapFamily.DISTORTED:
        lx, ly, lz, lp, eps = q
        d = eps * np.sin(lp * x1) * np.sin(TWO_PI * x2)
        return np.column_stack([lx * (x1 + d), ly * (x2 + d), lz * x3])
    if mapping.family is MapFamily.CYLINDRICAL:
        r0, lr, lz = q
        r = r0 + lr * x1
        return np.column_stack(
            [r * np.cos(TWO_PI * x2), r * np.sin(TWO_PI * x2), lz * x3]
        )
    r0, lr, lz = q
    return np.column_stack(
        [
            lr * np.cosh(x1 + r0) * np.cos(TWO_PI * x2),
            lr * np.sinh(x1 + r0) * np.sin(TWO_PI * x2),
            lz * x3,
        ]
    )


# ---------------------------------------------------------------------------
# mass operators
# ---------------------------------------------------------------------------


@dataclass
class MassOperator:
    """Symmetric positive-definite mass operator on an active k-form space."""

    k: int
    matrix: sp.csr_matrix
    quad_order: int

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    __call__ = apply

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def dump_coordinates(self, path) -> None:
        """Text dump in (row, col, value) coordinate format for debugging."""
        coo = self.matrix.tocoo()
        with open(path, "w") as f:
            f.write(f"# mass k={self.k} shape={self.shape[0]}x{self.shape[1]}\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                f.write(f"{r} {c} {v:.17g}\n")


def _active_lookup(seq: DeRhamSequence, k: int) -> list[np.ndarray]:
    """Per component: padded (n1p, N2, N3) array of active ids or -1."""
    out = []
    for comp, shape in zip(seq._components[k], seq.component_shapes(k)):
        table = -np.ones(seq.padded_shape, dtype=np.int64)
        ids = np.arange(comp.size, dtype=np.int64).reshape(shape)
        table[comp.active1, :, :] = ids + comp.offset
        out.append(table)
    return out


def _component_block(tables, lookup_r, lookup_c, kinds_r, kinds_c, weight, shape):
    """Assemble the sparse block for one (row comp, col comp) pair."""
    B1r = tables[0].values[kinds_r[0]]
    B2r = tables[1].values[kinds_r[1]]
    B3r = tables[2].values[kinds_r[2]]
    B1c = tables[0].values[kinds_c[0]]
    B2c = tables[1].values[kinds_c[1]]
    B3c = tables[2].values[kinds_c[2]]
    w1 = tables[0].weights
    w2 = tables[1].weights
    w3 = tables[2].weights
    wq = weight * w1[None, None, None, :, None, None]
    wq = wq * w2[None, None, None, None, :, None]
    wq = wq * w3[None, None, None, None, None, :]

    s1 = np.einsum("aqi,aql,abcqrs->abcrsil", B1r, B1c, wq, optimize=True)
    s2 = np.einsum("brj,brm,abcrsil->abcsiljm", B2r, B2c, s1, optimize=True)
    loc = np.einsum("csk,csn,abcsiljm->abcijklmn", B3r, B3c, s2, optimize=True)

    i1r = tables[0].indices[kinds_r[0]]
    i2r = tables[1].indices[kinds_r[1]]
    i3r = tables[2].indices[kinds_r[2]]
    i1c = tables[0].indices[kinds_c[0]]
    i2c = tables[1].indices[kinds_c[1]]
    i3c = tables[2].indices[kinds_c[2]]

    rows = lookup_r[
        i1r[:, None, None, :, None, None],
        i2r[None, :, None, None, :, None],
        i3r[None, None, :, None, None, :],
    ]
    cols = lookup_c[
        i1c[:, None, None, :, None, None],
        i2c[None, :, None, None, :, None],
        i3c[None, None, :, None, None, :],
    ]
    na, nb, nc = loc.shape[:3]
    wr = loc.shape[3:6]
    wc = loc.shape[6:9]
    rows = np.broadcast_to(
        rows.reshape(na, nb, nc, *wr, 1, 1, 1), loc.shape
    ).ravel()
    cols = np.broadcast_to(
        cols.reshape(na, nb, nc, 1, 1, 1, *wc), loc.shape
    ).ravel()
    vals = loc.ravel()
    keep = (rows >= 0) & (cols >= 0)
    return sp.coo_matrix(
        (vals[keep], (rows[keep], cols[keep])), shape=shape
    ).tocsr()


def assemble_mass(
    seq: DeRhamSequence, mapping: Mapping, k: int, q: int | None = None
) -> MassOperator:
    """Assemble the metric-weighted mass operator for k-forms."""
    p = seq.degree
    if q is None:
        q = p + 1
    if q < p + 1:
        raise AssemblyError(f"quadrature order {q} < p+1 = {p + 1}")
    tables = direction_tables(seq, q)
    absj, g, g_inv, _ = metric_tables(mapping, tables)
    lookup = _active_lookup(seq, k)
    n = seq.dof_count(k)
    comps = seq._components[k]

    if k == 0:
        weightfn = lambda c, cc: absj
        pairs = [(0, 0)]
    elif k == 1:
        weightfn = lambda c, cc: g_inv[..., c, cc] * absj
        pairs = [(c, cc) for c in range(3) for cc in range(3)]
    elif k == 2:
        weightfn = lambda c, cc: g[..., c, cc] / absj
        pairs = [(c, cc) for c in range(3) for cc in range(3)]
    else:
        weightfn = lambda c, cc: 1.0 / absj
        pairs = [(0, 0)]

    mat = sp.csr_matrix((n, n))
    for c, cc in pairs:
        mat = mat + _component_block(
            tables,
            lookup[c],
            lookup[cc],
            comps[c].kinds,
            comps[cc].kinds,
            weightfn(c, cc),
            (n, n),
        )
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return MassOperator(k=k, matrix=mat, quad_order=q)


def lumped_diagonal(mass: MassOperator, floor: float | None = None) -> np.ndarray:
    """Row-sum lumping with a positive lower limit on each entry."""
    sums = mass.row_sums()
    if floor is None:
        floor = 1e-10 * sums.max()
    return np.maximum(sums, floor)


# ---------------------------------------------------------------------------
# boundary matrices
# ---------------------------------------------------------------------------


def _face_window(seq: DeRhamSequence, kind: str, xi1: float):
    """Direction-1 basis values at a wall; interpolatory, a single nonzero."""
    basis = seq.bases[0]
    ev = eval_basis if kind == "p" else eval_basis_lower_degree
    first, vals = ev(basis, xi1)
    return first + np.arange(len(vals)), vals


def assemble_boundary_matrices(
    seq: DeRhamSequence, mapping: Mapping, q: int | None = None
) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Face integrals over xi1 = 0, 1: returns (M_b^0, M_b^1).

    M_b^0 maps active 1-forms to active 0-forms (Gauss-law boundary term);
    M_b^1 maps active 2-forms to active 1-forms (Ampere boundary term, its
    first block row vanishes identically). Both are exactly zero on
    conducting-wall constrained spaces.
    """
    p = seq.degree
    if q is None:
        q = p + 1
    tables = direction_tables(seq, q)
    look0 = _active_lookup(seq, 0)
    look1 = _active_lookup(seq, 1)
    look2 = _active_lookup(seq, 2)
    comps0 = seq._components[0]
    comps1 = seq._components[1]
    comps2 = seq._components[2]

    n0, n1f, n2f = (seq.dof_count(k) for k in (0, 1, 2))
    mb0 = sp.coo_matrix((n0, n1f))
    mb1 = sp.coo_matrix((n1f, n2f))
    mb0_parts = []
    mb1_parts = []

    p2, p3 = tables[1].points, tables[2].points
    w2, w3 = tables[1].weights, tables[2].weights
    x2 = np.broadcast_to(p2[:, None, :, None], p2.shape[:1] + p3.shape[:1] + (q, q))
    x3 = np.broadcast_to(p3[None, :, None, :], x2.shape)

    for xi1, sign in ((1.0, +1.0), (0.0, -1.0)):
        pts = np.column_stack(
            [np.full(x2.size, xi1), x2.ravel(), x3.ravel()]
        )
        df = jacobian_batch(mapping, pts)
        det = np.linalg.det(df)
        ninv = np.linalg.inv(df).transpose(0, 2, 1)  # columns n_i
        shape4 = x2.shape

        def face_block(look_r, kinds_r, look_c, kinds_c, weight, shape):
            i1r, v1r = _face_window(seq, kinds_r[0], xi1)
            i1c, v1c = _face_window(seq, kinds_c[0], xi1)
            B2r = tables[1].values[kinds_r[1]]
            B3r = tables[2].values[kinds_r[2]]
            B2c = tables[1].values[kinds_c[1]]
            B3c = tables[2].values[kinds_c[2]]
            wq = weight.reshape(shape4) * w2[None, None, :, None] * w3[None, None, None, :]
            s1 = np.einsum("brj,brm,bcrs->bcsjm", B2r, B2c, wq, optimize=True)
            loc = np.einsum("csk,csn,bcsjm->bcjkmn", B3r, B3c, s1, optimize=True)
            # outer product with the two face windows in direction 1
            loc = np.einsum("i,l,bcjkmn->bcijklmn", v1r, v1c, loc, optimize=True)
            i2r, i3r = tables[1].indices[kinds_r[1]], tables[2].indices[kinds_r[2]]
            i2c, i3c = tables[1].indices[kinds_c[1]], tables[2].indices[kinds_c[2]]
            rows = look_r[
                i1r[None, None, :, None, None],
                i2r[:, None, None, :, None],
                i3r[None, :, None, None, :],
            ]
            cols = look_c[
                i1c[None, None, :, None, None],
                i2c[:, None, None, :, None],
                i3c[None, :, None, None, :],
            ]
            nb, nc = loc.shape[:2]
            rows = np.broadcast_to(
                rows.reshape(nb, nc, len(i1r), loc.shape[3], loc.shape[4], 1, 1, 1),
                loc.shape,
            ).ravel()
            cols = np.broadcast_to(
                cols.reshape(nb, nc, 1, 1, 1, len(i1c), loc.shape[6], loc.shape[7]),
                loc.shape,
            ).ravel()
            vals = loc.ravel()
            keep = (rows >= 0) & (cols >= 0) & (vals != 0.0)
            return sp.coo_matrix(
                (vals[keep], (rows[keep], cols[keep])), shape=shape
            )

        # 0-form boundary matrix: Lambda^0 (n1.n_c) Lambda^{1,c} |J|
        for c in range(3):
            w = (
                np.einsum("nk,nk->n", ninv[:, :, 0], ninv[:, :, c])
                * np.abs(det)
            )
            mb0_parts.append(
                sign
                * face_block(
                    look0[0], comps0[0].kinds, look1[c], comps1[c].kinds, w, (n0, n1f)
                )
            )
        # 1-form boundary matrix rows 2, 3 (0-based 1, 2)
        t = df  # columns are tangents t_i
        for cc in range(3):
            w_row2 = -np.einsum("nk,nk->n", t[:, :, 2], t[:, :, cc]) / det
            w_row3 = np.einsum("nk,nk->n", t[:, :, 1], t[:, :, cc]) / det
            mb1_parts.append(
                sign
                * face_block(
                    look1[1], comps1[1].kinds, look2[cc], comps2[cc].kinds,
                    w_row2, (n1f, n2f),
                )
            )
            mb1_parts.append(
                sign
                * face_block(
                    look1[2], comps1[2].kinds, look2[cc], comps2[cc].kinds,
                    w_row3, (n1f, n2f),
                )
            )

    for part in mb0_parts:
        mb0 = mb0 + part
    for part in mb1_parts:
        mb1 = mb1 + part
    return mb0.tocsr(), mb1.tocsr()


# ---------------------------------------------------------------------------
# load vectors (L2-projection right-hand sides, weighted charges)
# ---------------------------------------------------------------------------


def project_rhs(
    seq: DeRhamSequence,
    mapping: Mapping,
    k: int,
    fn,
    q: int | None = None,
) -> np.ndarray:
    """Load vector of the L2(Omega) pairing against a physical field.

    ``fn(x)`` takes physical points (n, 3) and returns field values: scalars
    (n,) for k = 0, 3 and vectors (n, 3) for k = 1, 2. The integrand applies
    the same metric weights as the corresponding mass matrix, so solving
    ``M_k c = project_rhs(...)`` yields the L2 projection onto the active
    space.
    """
    p = seq.degree
    if q is None:
        q = p + 2
    tables = direction_tables(seq, q)
    absj, g, g_inv, df = metric_tables(mapping, tables)
    shape = absj.shape
    p1, p2, p3 = (t.points for t in tables)
    xi = np.stack(
        [
            np.broadcast_to(p1[:, None, None, :, None, None], shape).ravel(),
            np.broadcast_to(p2[None, :, None, None, :, None], shape).ravel(),
            np.broadcast_to(p3[None, None, :, None, None, :], shape).ravel(),
        ],
        axis=1,
    )
    x = map_points_batch(mapping, xi)
    values = np.asarray(fn(x))

    comps = seq._components[k]
    lookup = _active_lookup(seq, k)
    out = np.zeros(seq.dof_count(k))

    if k in (0, 3):
        weight = absj if k == 0 else 1.0 / absj
        dens = [values.reshape(shape) * weight]
        targets = [0]
    else:
        dfl = df.reshape(-1, 3, 3)
        if k == 1:
            # logical proxy Etilde = DF^T E; metric weight G^{-1} |J|
            proxy = np.einsum("nji,nj->ni", dfl, values)
            dens = []
            for c in range(3):
                w = np.einsum(
                    "...cd,...d->...c", g_inv.reshape(-1, 3, 3), proxy
                )[:, c]
                dens.append((w * absj.ravel()).reshape(shape))
        else:
            # logical proxy Btilde = J DF^{-1} B; metric weight G / |J|
            det = np.linalg.det(dfl)
            proxy = np.einsum("nij,nj->ni", np.linalg.inv(dfl), values) * det[:, None]
            dens = []
            for c in range(3):
                w = np.einsum("...cd,...d->...c", g.reshape(-1, 3, 3), proxy)[:, c]
                dens.append((w / absj.ravel()).reshape(shape))
        targets = list(range(3))

    for c, density in zip(targets, dens):
        kinds = comps[c].kinds
        B1 = tables[0].values[kinds[0]]
        B2 = tables[1].values[kinds[1]]
        B3 = tables[2].values[kinds[2]]
        wq = density * tables[0].weights[None, None, None, :, None, None]
        wq = wq * tables[1].weights[None, None, None, None, :, None]
        wq = wq * tables[2].weights[None, None, None, None, None, :]
        s1 = np.einsum("aqi,abcqrs->abcrsi", B1, wq, optimize=True)
        s2 = np.einsum("brj,abcrsi->abcsij", B2, s1, optimize=True)
        loc = np.einsum("csk,abcsij->abcijk", B3, s2, optimize=True)
        i1 = tables[0].indices[kinds[0]]
        i2 = tables[1].indices[kinds[1]]
        i3 = tables[2].indices[kinds[2]]
        dest = lookup[c][
            i1[:, None, None, :, None, None],
            i2[None, :, None, None, :, None],
            i3[None, None, :, None, None, :],
        ]
        dest = np.broadcast_to(dest, loc.shape).ravel()
        vals = loc.ravel()
        keep = dest >= 0
        np.add.at(out, dest[keep], vals[keep])
    return out


class ComponentEnergyEvaluator:
    """Cached quadrature context for per-component physical field energies.

    Evaluates 0.5 * int |F_c(x)|^2 dx for each physical component of a
    discrete 1- or 2-form, pushing to the physical field with the matching
    Piola transform. Building the tables once makes the per-step cost a
    handful of einsums.
    """

    def __init__(self, seq: DeRhamSequence, mapping: Mapping, k: int,
                 q: int | None = None):
        if k not in (1, 2):
            raise ValueError("component energies defined for 1- and 2-forms")
        p = seq.degree
        if q is None:
            q = p + 1
        self.seq = seq
        self.k = k
        self.tables = direction_tables(seq, q)
        absj, g, g_inv, df = metric_tables(mapping, self.tables)
        self.shape = absj.shape
        dfl = df.reshape(-1, 3, 3)
        if k == 1:
            self.push = np.linalg.inv(dfl).transpose(0, 2, 1).copy()
        else:
            det = np.linalg.det(dfl)
            self.push = dfl / det[:, None, None]
        wq = absj * self.tables[0].weights[None, None, None, :, None, None]
        wq = wq * self.tables[1].weights[None, None, None, None, :, None]
        wq = wq * self.tables[2].weights[None, None, None, None, None, :]
        self.w = wq.ravel()
        self._blocks = []
        for comp in seq._components[k]:
            kinds = comp.kinds
            self._blocks.append(
                (
                    self.tables[0].values[kinds[0]],
                    self.tables[1].values[kinds[1]],
                    self.tables[2].values[kinds[2]],
                    self.tables[0].indices[kinds[0]],
                    self.tables[1].indices[kinds[1]],
                    self.tables[2].indices[kinds[2]],
                )
            )

    def __call__(self, vec: np.ndarray) -> np.ndarray:
        padded = self.seq.embed(self.k, vec)
        logical = np.empty(self.shape + (3,))
        for c, (arr, (B1, B2, B3, i1, i2, i3)) in enumerate(
            zip(padded, self._blocks)
        ):
            block = arr[
                i1[:, None, None, :, None, None],
                i2[None, :, None, None, :, None],
                i3[None, None, :, None, None, :],
            ]
            logical[..., c] = np.einsum(
                "abcijk,aqi,brj,csk->abcqrs", block, B1, B2, B3, optimize=True
            )
        vals = logical.reshape(-1, 3)
        phys = np.einsum("nij,nj->ni", self.push, vals)
        return 0.5 * np.array(
            [np.sum(self.w * phys[:, c] ** 2) for c in range(3)]
        )


def component_energy_quadrature(
    seq: DeRhamSequence,
    mapping: Mapping,
    k: int,
    vec: np.ndarray,
    q: int | None = None,
) -> np.ndarray:
    """One-shot wrapper around :class:`ComponentEnergyEvaluator`."""
    return ComponentEnergyEvaluator(seq, mapping, k, q)(vec)
