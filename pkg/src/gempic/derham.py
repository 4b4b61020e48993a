"""Tensor-product spline spaces for 0/1/2/3-forms and the discrete operators.

The first direction carries a clamped basis, the other two are periodic.
Every 1D factor is bookkept with the same padded length (``N1 + p`` in the
clamped direction, ``N2``/``N3`` in the periodic ones) so the gradient,
curl and divergence are Kronecker combinations of three square 1D
derivative matrices. Genuine degrees of freedom are a subset of the padded
slots:

* the leading slot of every clamped lower-degree factor is an identically
  zero padding function and is never active;
* with conducting-wall constraints (``pec=True``) the first and last
  functions of every clamped degree-``p`` factor are removed, which kills
  all basis functions with nonzero tangential-electric / normal-magnetic
  trace at ``xi1 = 0, 1``.

Coefficient vectors passed to the operators live on the active slots only
(components concatenated); :meth:`DeRhamSequence.embed` scatters them into
padded arrays and :meth:`DeRhamSequence.restrict` gathers back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .splines import (
    Boundary,
    ParameterError,
    SplineBasis1D,
    build_basis,
    derivative_matrix,
    eval_basis,
    eval_basis_derivative,
    eval_basis_lower_degree,
)

# per-direction factor kind: 'p' = degree p, 'l' = degree p-1 (padded in dir 1)
_COMPONENT_KINDS = {
    0: [("p", "p", "p")],
    1: [("l", "p", "p"), ("p", "l", "p"), ("p", "p", "l")],
    2: [("p", "l", "l"), ("l", "p", "l"), ("l", "l", "p")],
    3: [("l", "l", "l")],
}


class ShapeError(ValueError):
    """Coefficient vector length does not match the target space."""


@dataclass(frozen=True)
class FormCoefficients:
    """Degrees of freedom of one discrete k-form."""

    degree: int
    values: np.ndarray


@dataclass(frozen=True)
class _Component:
    kinds: tuple[str, str, str]
    active1: np.ndarray            # active padded indices along direction 1
    shape: tuple[int, int, int]    # active shape
    size: int
    offset: int                    # slice start in the flat form vector


class DeRhamSequence:
    """Discrete de Rham sequence on a clamped x periodic x periodic grid."""

    def __init__(self, p: int, cells: tuple[int, int, int], pec: bool):
        if p < 1:
            raise ParameterError(f"degree must be >= 1, got {p}")
        n1, n2, n3 = cells
        self.degree = p
        self.cells = (int(n1), int(n2), int(n3))
        self.pec = bool(pec)
        self.bases = (
            build_basis(p, n1, Boundary.CLAMPED),
            build_basis(p, n2, Boundary.PERIODIC),
            build_basis(p, n3, Boundary.PERIODIC),
        )
        self.padded_shape = (n1 + p, n2, n3)

        d1 = derivative_matrix(self.bases[0]).toarray()
        d2 = derivative_matrix(self.bases[1]).toarray()
        d3 = derivative_matrix(self.bases[2]).toarray()
        self._dmats = (d1, d2, d3)
        self._dmats_t = (d1.T.copy(), d2.T.copy(), d3.T.copy())

        self._components: dict[int, list[_Component]] = {}
        for k, kinds_list in _COMPONENT_KINDS.items():
            comps = []
            offset = 0
            for kinds in kinds_list:
                act1 = self._active_dir1(kinds[0])
                shape = (len(act1), n2, n3)
                size = int(np.prod(shape))
                comps.append(_Component(kinds, act1, shape, size, offset))
                offset += size
            self._components[k] = comps

    # -- bookkeeping ---------------------------------------------------

    def _active_dir1(self, kind: str) -> np.ndarray:
        n = self.padded_shape[0]
        if kind == "l":
            return np.arange(1, n)          # drop the zero-padding slot
        if self.pec:
            return np.arange(1, n - 1)      # drop wall-supported functions
        return np.arange(n)

    def dof_count(self, k: int) -> int:
        return sum(c.size for c in self._components[k])

    def component_shapes(self, k: int) -> list[tuple[int, int, int]]:
        return [c.shape for c in self._components[k]]

    def zeros(self, k: int) -> np.ndarray:
        return np.zeros(self.dof_count(k))

    def _check(self, k: int, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.dof_count(k),):
            raise ShapeError(
                f"{k}-form vector has shape {vec.shape}, "
                f"expected ({self.dof_count(k)},)"
            )
        return vec

    # -- embed / restrict ----------------------------------------------

    def embed(self, k: int, vec: np.ndarray) -> list[np.ndarray]:
        """Scatter an active coefficient vector into padded 3D arrays."""
        vec = self._check(k, vec)
        out = []
        for c in self._components[k]:
            padded = np.zeros(self.padded_shape)
            padded[c.active1, :, :] = vec[c.offset : c.offset + c.size].reshape(
                c.shape
            )
            out.append(padded)
        return out

    def restrict(self, k: int, padded: list[np.ndarray]) -> np.ndarray:
        """Gather the active slots of padded arrays into a flat vector."""
        parts = [
            arr[c.active1, :, :].ravel()
            for c, arr in zip(self._components[k], padded)
        ]
        return np.concatenate(parts)

    def split(self, k: int, vec: np.ndarray) -> list[np.ndarray]:
        """Views of the per-component slices of a flat vector."""
        vec = self._check(k, vec)
        return [
            vec[c.offset : c.offset + c.size].reshape(c.shape)
            for c in self._components[k]
        ]

    # -- derivative operators --------------------------------------------

    def _dx(self, arr: np.ndarray, axis: int, transpose: bool = False) -> np.ndarray:
        mat = (self._dmats_t if transpose else self._dmats)[axis]
        moved = np.moveaxis(arr, axis, 0)
        res = mat @ moved.reshape(mat.shape[1], -1)
        return np.moveaxis(res.reshape(moved.shape), 0, axis)

    def apply_G(self, vec: np.ndarray) -> np.ndarray:
        """Gradient: active 0-form -> active 1-form."""
        (phi,) = self.embed(0, vec)
        return self.restrict(
            1, [self._dx(phi, 0), self._dx(phi, 1), self._dx(phi, 2)]
        )

    def apply_C(self, vec: np.ndarray) -> np.ndarray:
        """Curl: active 1-form -> active 2-form."""
        a1, a2, a3 = self.embed(1, vec)
        c1 = self._dx(a3, 1) - self._dx(a2, 2)
        c2 = self._dx(a1, 2) - self._dx(a3, 0)
        c3 = self._dx(a2, 0) - self._dx(a1, 1)
        return self.restrict(2, [c1, c2, c3])

    def apply_D(self, vec: np.ndarray) -> np.ndarray:
        """Divergence: active 2-form -> active 3-form.

        Block layout is the transpose of the gradient's: the same three 1D
        derivative factors laid out as a row of blocks.
        """
        b1, b2, b3 = self.embed(2, vec)
        return self.restrict(
            3, [self._dx(b1, 0) + self._dx(b2, 1) + self._dx(b3, 2)]
        )

    def apply_G_transpose(self, vec: np.ndarray) -> np.ndarray:
        """Weak divergence of a 1-form: G^T acting on active coefficients."""
        a1, a2, a3 = self.embed(1, vec)
        out = (
            self._dx(a1, 0, transpose=True)
            + self._dx(a2, 1, transpose=True)
            + self._dx(a3, 2, transpose=True)
        )
        return self.restrict(0, [out])

    def apply_C_transpose(self, vec: np.ndarray) -> np.ndarray:
        """Weak curl: C^T acting on active 2-form coefficients."""
        b1, b2, b3 = self.embed(2, vec)
        r1 = self._dx(b2, 2, transpose=True) - self._dx(b3, 1, transpose=True)
        r2 = self._dx(b3, 0, transpose=True) - self._dx(b1, 2, transpose=True)
        r3 = self._dx(b1, 1, transpose=True) - self._dx(b2, 0, transpose=True)
        return self.restrict(1, [r1, r2, r3])

    # -- pointwise evaluation ----------------------------------------------

    def _window(self, axis: int, kind: str, xi: float):
        basis = self.bases[axis]
        if kind == "p":
            first, vals = eval_basis(basis, xi)
        else:
            first, vals = eval_basis_lower_degree(basis, xi)
        if basis.boundary is Boundary.PERIODIC:
            idx = np.mod(first + np.arange(len(vals)), basis.n_basis)
        else:
            idx = first + np.arange(len(vals))
        return idx, vals

    def _window_derivative(self, axis: int, xi: float):
        basis = self.bases[axis]
        first, vals = eval_basis_derivative(basis, xi)
        if basis.boundary is Boundary.PERIODIC:
            idx = np.mod(first + np.arange(len(vals)), basis.n_basis)
        else:
            idx = first + np.arange(len(vals))
        return idx, vals

    def _eval_component(
        self, padded: np.ndarray, kinds, xi, deriv_axis: int | None = None
    ) -> float:
        wins = []
        for axis in range(3):
            if axis == deriv_axis:
                wins.append(self._window_derivative(axis, float(xi[axis])))
            else:
                wins.append(self._window(axis, kinds[axis], float(xi[axis])))
        (i1, v1), (i2, v2), (i3, v3) = wins
        block = padded[np.ix_(i1, i2, i3)]
        return float(np.einsum("abc,a,b,c->", block, v1, v2, v3))

    def eval_form(self, k: int, vec: np.ndarray, xi: np.ndarray):
        """Evaluate the logical k-form at one point.

        Returns a scalar for k = 0, 3 and the 3-vector of components for
        k = 1, 2.
        """
        padded = self.embed(k, vec)
        comps = self._components[k]
        vals = [
            self._eval_component(arr, c.kinds, xi)
            for arr, c in zip(padded, comps)
        ]
        if k in (0, 3):
            return vals[0]
        return np.array(vals)

    def eval_form_gradient(self, vec: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """Analytic pointwise gradient of a 0-form (commuting-diagram oracle)."""
        (phi,) = self.embed(0, vec)
        kinds = self._components[0][0].kinds
        return np.array(
            [self._eval_component(phi, kinds, xi, deriv_axis=d) for d in range(3)]
        )

    def eval_form_curl(self, vec: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """Analytic pointwise curl of a 1-form."""
        padded = self.embed(1, vec)
        kinds = [c.kinds for c in self._components[1]]

        def d(comp, axis):
            return self._eval_component(padded[comp], kinds[comp], xi, deriv_axis=axis)

        return np.array(
            [d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)]
        )

    def eval_form_divergence(self, vec: np.ndarray, xi: np.ndarray) -> float:
        """Analytic pointwise divergence of a 2-form."""
        padded = self.embed(2, vec)
        kinds = [c.kinds for c in self._components[2]]
        return sum(
            self._eval_component(padded[c], kinds[c], xi, deriv_axis=c)
            for c in range(3)
        )


def build_sequence(p: int, cells: tuple[int, int, int], pec: bool) -> DeRhamSequence:
    """Assemble the discrete sequence for degree ``p`` on ``cells``."""
    return DeRhamSequence(p, cells, pec)
