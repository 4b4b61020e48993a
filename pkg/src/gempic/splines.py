"""Uniform 1D B-spline bases with clamped or periodic boundaries.

Bases live on the unit logical interval split into ``N`` equal cells. The
clamped basis repeats the endpoint knots ``p+1`` times, giving ``N + p``
functions of degree ``p`` with interpolatory endpoints. The periodic basis
wraps the knot sequence with period 1 and has ``N`` functions.

Each basis carries a companion basis of degree ``p - 1`` used to express
derivatives in matrix-vector form: ``d/dxi S^p(xi) = S^{p-1}(xi) @ D``. For
the clamped case the companion vector is padded with a leading
identically-zero slot so the derivative matrix stays square ``(N+p)^2``;
its first row is zero.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class Boundary(enum.Enum):
    CLAMPED = "clamped"
    PERIODIC = "periodic"


class ParameterError(ValueError):
    """Invalid construction parameters."""


class DomainError(ValueError):
    """Evaluation point outside the unit interval."""


def _open_knots(p: int, n_cells: int) -> np.ndarray:
    """Open (clamped) knot vector on [0, 1] with endpoint multiplicity p+1."""
    interior = np.arange(1, n_cells) / n_cells
    return np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)])


def _periodic_knots(p: int, n_cells: int) -> np.ndarray:
    """Uniform knots extended periodically: t_i = (i - p) / N for i = 0..N+2p."""
    return (np.arange(-p, n_cells + p + 1)) / n_cells


@dataclass(frozen=True)
class SplineBasis1D:
    """Degree-``p`` B-spline basis on ``n_cells`` uniform cells of [0, 1]."""

    degree: int
    n_cells: int
    boundary: Boundary
    knots: np.ndarray = field(repr=False)
    n_basis: int

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def n_padded_lower(self) -> int:
        """Length of the padded companion (degree p-1) value vector."""
        return self.n_basis

    def __hash__(self):
        return hash((self.degree, self.n_cells, self.boundary))


def build_basis(p: int, n_cells: int, boundary: Boundary) -> SplineBasis1D:
    """Construct a uniform clamped or periodic basis.

    Raises :class:`ParameterError` for ``p < 1`` or ``n_cells < p + 1``.
    """
    if p < 1:
        raise ParameterError(f"spline degree must be >= 1, got {p}")
    if n_cells < p + 1:
        raise ParameterError(
            f"need at least p+1 = {p + 1} cells for degree {p}, got {n_cells}"
        )
    if boundary is Boundary.CLAMPED:
        knots = _open_knots(p, n_cells)
        n_basis = n_cells + p
    else:
        knots = _periodic_knots(p, n_cells)
        n_basis = n_cells
    return SplineBasis1D(p, n_cells, boundary, knots, n_basis)


def _check_point(xi: float) -> None:
    if not (0.0 <= xi <= 1.0):
        raise DomainError(f"evaluation point {xi} outside [0, 1]")


def _deboor_values(knots: np.ndarray, span: int, xi: float, q: int) -> np.ndarray:
    """Nonzero degree-q basis values at xi via the triangular de Boor scheme.

    ``span`` indexes the knot interval [knots[span], knots[span+1]) that
    contains xi. Returns the q+1 values of the functions with global
    indices span-q .. span (0-based over the given knot vector).
    """
    vals = np.zeros(q + 1)
    left = np.zeros(q + 1)
    right = np.zeros(q + 1)
    vals[0] = 1.0
    for j in range(1, q + 1):
        left[j] = xi - knots[span + 1 - j]
        right[j] = knots[span + j] - xi
        saved = 0.0
        for r in range(j):
            tmp = vals[r] / (right[r + 1] + left[j - r])
            vals[r] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        vals[j] = saved
    return vals


def _clamped_span(p: int, n_cells: int, xi: float) -> int:
    """Cell index of xi, with xi = 1 assigned to the closed last cell."""
    cell = int(xi * n_cells)
    return min(cell, n_cells - 1)


def eval_basis(basis: SplineBasis1D, xi: float) -> tuple[int, np.ndarray]:
    """Evaluate the p+1 basis functions that are nonzero at ``xi``.

    Returns ``(first_index, values)``: values[k] is the function with
    basis index ``first_index + k`` (periodic: modulo ``n_basis``).
    """
    _check_point(xi)
    p = basis.degree
    cell = _clamped_span(p, basis.n_cells, xi)
    span = cell + p  # knot-span index in either knot vector
    vals = _deboor_values(basis.knots, span, xi, p)
    # clamped: global first index = cell; periodic: cell - p modulo n_basis
    return (cell if basis.boundary is Boundary.CLAMPED else cell - p), vals


def eval_basis_lower_degree(basis: SplineBasis1D, xi: float) -> tuple[int, np.ndarray]:
    """Evaluate the degree-(p-1) companion basis at ``xi``.

    Clamped bases index into the padded companion vector (leading zero
    slot, then the N+p-1 genuine clamped splines of degree p-1), so the
    returned indices align with the rows of the derivative matrix.
    """
    _check_point(xi)
    q = basis.degree - 1
    cell = _clamped_span(basis.degree, basis.n_cells, xi)
    if basis.boundary is Boundary.CLAMPED:
        if q == 0:
            return cell + 1, np.array([1.0])
        knots = _open_knots(q, basis.n_cells)
        span = cell + q
        vals = _deboor_values(knots, span, xi, q)
        # companion function j (0-based over N+p-1) sits in padded slot j+1
        return span - q + 1, vals
    knots = _periodic_knots(q, basis.n_cells)
    span = cell + q
    vals = _deboor_values(knots, span, xi, q)
    return cell - q, vals


def eval_basis_derivative(basis: SplineBasis1D, xi: float) -> tuple[int, np.ndarray]:
    """First derivatives of the p+1 nonzero degree-p functions at ``xi``.

    Computed from the lower-degree values and the knot differences,
    independently of :func:`derivative_matrix` (useful as a cross-check).
    """
    _check_point(xi)
    p = basis.degree
    cell = _clamped_span(p, basis.n_cells, xi)
    knots = basis.knots
    span = cell + p
    if p == 1:
        low = np.array([1.0])
    else:
        # degree p-1 splines on the *same* knot vector; the ones hugging a
        # repeated end knot are identically zero and fall outside the window
        low = _deboor_values(knots, span, xi, p - 1)
    ders = np.zeros(p + 1)
    for k in range(p + 1):
        j = span - p + k
        d = 0.0
        w1 = knots[j + p] - knots[j]
        if w1 > 0.0 and k >= 1:
            d += p * low[k - 1] / w1
        w2 = knots[j + p + 1] - knots[j + 1]
        if w2 > 0.0 and k <= p - 1:
            d -= p * low[k] / w2
        ders[k] = d
    return (cell if basis.boundary is Boundary.CLAMPED else cell - p), ders


def derivative_matrix(basis: SplineBasis1D) -> sp.csr_matrix:
    """Discrete 1D derivative matrix D with d/dxi S^p = S^{p-1} D.

    Clamped: square (N+p)^2 with an identically zero first row (the padded
    companion slot); every other row holds the two-entry stencil scaled by
    ``p`` over the local knot width. Periodic: N x N circulant with +1/dx
    on the diagonal and -1/dx on the subdiagonal.
    """
    p = basis.degree
    n = basis.n_basis
    dx = basis.dx
    rows, cols, data = [], [], []
    if basis.boundary is Boundary.CLAMPED:
        knots = basis.knots
        for j in range(n):
            w1 = knots[j + p] - knots[j]
            if w1 > 0.0:
                rows.append(j)  # companion padded slot j
                cols.append(j)
                data.append(p / w1)
            w2 = knots[j + p + 1] - knots[j + 1]
            if w2 > 0.0 and j + 1 < n:
                rows.append(j + 1)
                cols.append(j)
                data.append(-p / w2)
    else:
        for j in range(n):
            rows.append(j)
            cols.append(j)
            data.append(1.0 / dx)
            rows.append((j + 1) % n)
            cols.append(j)
            data.append(-1.0 / dx)
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def greville_points(basis: SplineBasis1D) -> np.ndarray:
    """Knot averages; convenient well-spread evaluation points."""
    p = basis.degree
    if basis.boundary is Boundary.CLAMPED:
        return np.array(
            [basis.knots[j + 1 : j + p + 1].mean() for j in range(basis.n_basis)]
        )
    pts = np.array(
        [basis.knots[j + 1 : j + p + 1].mean() for j in range(basis.n_basis)]
    )
    return np.mod(pts, 1.0)
