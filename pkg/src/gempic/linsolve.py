"""Conjugate-gradient solvers and the FFT-circulant mass preconditioner.

Spline mass matrices condition badly with increasing degree, and radial
maps add strong row-scale variation. The preconditioner combines the two
cures symmetrically,

    P = D^{-1} P_fft D^{-1},

where ``D`` carries the square roots of the lumped row sums (or the main
diagonal) of the assembled operator and ``P_fft`` inverts the mass matrix
of the same spline degrees on a periodic tensor grid. The periodic matrix
is a separable circulant, so ``P_fft`` is three batched real FFTs and a
spectral division. The clamped direction is treated as periodic of the
same active size; its handful of genuinely different boundary rows is left
to the diagonal scaling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.fft
from numpy.polynomial.legendre import leggauss

from .assembly import MassOperator, lumped_diagonal
from .derham import DeRhamSequence
from .splines import Boundary, build_basis, eval_basis


class NumericalError(RuntimeError):
    """Non-finite values encountered inside a solver."""


class PrecondMode(enum.Enum):
    NONE = "none"
    JACOBI = "jacobi"
    LUMPED = "lumped"


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool


def _as_operator(a):
    if callable(a):
        return a
    return lambda x: a @ x


# ---------------------------------------------------------------------------
# conjugate gradients
# ---------------------------------------------------------------------------


def cg(a, b, tol: float = 1e-13, maxit: int = 20000, x0=None):
    """Plain conjugate gradients for an SPD operator.

    Stops when ||b - A x||_2 <= tol * ||b||_2. Returns the best iterate
    with ``converged=False`` if ``maxit`` is exhausted.
    """
    return pcg(a, b, None, tol=tol, maxit=maxit, x0=x0)


def pcg(a, b, precond, tol: float = 1e-13, maxit: int = 20000, x0=None):
    """Preconditioned conjugate gradients.

    ``precond`` is a callable approximating A^{-1} (or ``None``). The
    preconditioner must be symmetric positive definite for the iteration
    to stay monotone in the P-norm.
    """
    op = _as_operator(a)
    b = np.asarray(b, dtype=float)
    pre = (lambda r: r) if precond is None else _as_operator(precond)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - op(x)
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return np.zeros_like(b), SolveReport(0, 0.0, True)
    z = pre(r)
    d = z.copy()
    rz = r @ z
    res = np.linalg.norm(r)
    if res <= tol * norm_b:
        return x, SolveReport(0, res / norm_b, True)
    for it in range(1, maxit + 1):
        ad = op(d)
        denom = d @ ad
        if not np.isfinite(denom) or denom <= 0.0:
            raise NumericalError(
                f"CG breakdown at iteration {it}: d^T A d = {denom}"
            )
        alpha = rz / denom
        x += alpha * d
        r -= alpha * ad
        res = np.linalg.norm(r)
        if not np.isfinite(res):
            raise NumericalError(f"non-finite residual at iteration {it}")
        if res <= tol * norm_b:
            return x, SolveReport(it, res / norm_b, True)
        z = pre(r)
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
    return x, SolveReport(maxit, res / norm_b, False)


# ---------------------------------------------------------------------------
# FFT-circulant preconditioner
# ---------------------------------------------------------------------------


def periodic_mass_stencil(p: int, n_cells: int) -> np.ndarray:
    """Band values m_j = int S_0 S_j for degree-p periodic splines.

    Returned array has length p+1 holding offsets 0..p (symmetric band).
    """
    basis = build_basis(p, n_cells, Boundary.PERIODIC)
    q = p + 2
    nodes, wts = leggauss(q)
    dx = basis.dx
    band = np.zeros(p + 1)
    vals = np.zeros((basis.n_basis, n_cells * q))
    pts = ((np.arange(n_cells) * dx)[:, None] + (nodes[None, :] + 1) * 0.5 * dx).ravel()
    w = np.tile(wts * 0.5 * dx, n_cells)
    for j, x in enumerate(pts):
        first, vv = eval_basis(basis, x)
        idx = np.mod(first + np.arange(p + 1), basis.n_basis)
        vals[idx, j] += vv
    for off in range(p + 1):
        band[off] = np.sum(w * vals[0] * vals[off % basis.n_basis])
    return band


def circulant_symbol(band: np.ndarray, size: int) -> np.ndarray:
    """Eigenvalues of the symmetric banded circulant of given size."""
    p = len(band) - 1
    if size < 2 * p + 1:
        # overlap the wrapped band entries rather than fail on tiny grids
        row = np.zeros(size)
        row[0] = band[0]
        for off in range(1, p + 1):
            row[off % size] += band[off]
            row[-off % size] += band[off]
    else:
        row = np.zeros(size)
        row[0] = band[0]
        for off in range(1, p + 1):
            row[off] = band[off]
            row[-off] = band[off]
    lam = np.fft.fft(row).real
    return lam


@dataclass
class Preconditioner:
    """Symmetric circulant-spectrum preconditioner for one mass operator."""

    mode: PrecondMode
    scale: np.ndarray              # 1/sqrt(diag or row sums), per active dof
    shapes: list[tuple[int, int, int]]
    spectra: list[np.ndarray]      # per component, rfft-shaped 3D eigenvalues
    offsets: list[int]

    def apply(self, x: np.ndarray) -> np.ndarray:
        y = x * self.scale
        out = np.empty_like(y)
        for shape, lam, off in zip(self.shapes, self.spectra, self.offsets):
            size = int(np.prod(shape))
            blk = y[off : off + size].reshape(shape)
            spec = scipy.fft.rfftn(blk)
            spec /= lam
            out[off : off + size] = scipy.fft.irfftn(spec, s=shape).ravel()
        return out * self.scale

    __call__ = apply


def build_preconditioner(
    mass: MassOperator,
    seq: DeRhamSequence,
    mode: PrecondMode | str = PrecondMode.LUMPED,
) -> Preconditioner:
    """Circulant-spectrum preconditioner for the k-form mass operator."""
    if isinstance(mode, str):
        mode = PrecondMode(mode.lower())
    k = mass.k
    if mode is PrecondMode.NONE:
        scale = np.ones(mass.shape[0])
    elif mode is PrecondMode.JACOBI:
        diag = mass.diagonal()
        if np.any(diag <= 0.0):
            raise NumericalError("non-positive mass diagonal")
        scale = 1.0 / np.sqrt(diag)
    else:
        scale = 1.0 / np.sqrt(lumped_diagonal(mass))

    p = seq.degree
    shapes, spectra, offsets = [], [], []
    for comp, shape in zip(seq._components[k], seq.component_shapes(k)):
        lam_dirs = []
        for d, kind in enumerate(comp.kinds):
            qd = p if kind == "p" else p - 1
            n_active = shape[d]
            band = periodic_mass_stencil(qd, seq.cells[d]) if qd >= 1 else np.array(
                [1.0 / seq.cells[d]]
            )
            lam = circulant_symbol(band, n_active)
            if np.any(lam <= 0.0):
                raise NumericalError("circulant spectrum not positive")
            lam_dirs.append(lam)
        lam3 = (
            lam_dirs[0][:, None, None]
            * lam_dirs[1][None, :, None]
            * lam_dirs[2][None, None, :]
        )
        spectra.append(lam3[..., : shape[2] // 2 + 1].copy())
        shapes.append(shape)
        offsets.append(comp.offset)
    return Preconditioner(mode, scale, shapes, spectra, offsets)


# ---------------------------------------------------------------------------
# Schur-complement field updates
# ---------------------------------------------------------------------------


def schur_solve_maxwell(
    m1: MassOperator,
    m2: MassOperator,
    seq: DeRhamSequence,
    dt: float,
    e: np.ndarray,
    b: np.ndarray,
    precond=None,
    tol: float = 1e-13,
    maxit: int = 20000,
):
    """Trapezoidal field update decoupled by S = M1 + (dt^2/4) C^T M2 C.

    Conserves the electromagnetic energy up to the solver tolerance.
    Returns (e_new, b_new, SolveReport).
    """
    quarter = 0.25 * dt * dt

    def ct_m2_c(x):
        return seq.apply_C_transpose(m2.apply(seq.apply_C(x)))

    def s_apply(x):
        return m1.apply(x) + quarter * ct_m2_c(x)

    rhs = m1.apply(e) - quarter * ct_m2_c(e) + dt * seq.apply_C_transpose(m2.apply(b))
    e_new, report = pcg(s_apply, rhs, precond, tol=tol, maxit=maxit, x0=e)
    b_new = b - 0.5 * dt * seq.apply_C(e_new + e)
    return e_new, b_new, report


def schur_solve_particle(
    m1: MassOperator,
    coupling,
    dt: float,
    e: np.ndarray,
    v: np.ndarray,
    precond=None,
    tol: float = 1e-13,
    maxit: int = 20000,
):
    """Trapezoidal particle-field update with the frozen-position coupling.

    ``coupling`` provides the matrix-free particle sweeps:

    * ``mass_apply(x)``   -- weighted particle mass operator sum over
      particles of  w q^2/m  (Lambda^1)^T G^{-1} Lambda^1 x
    * ``deposit(v)``      -- (Lambda^1)^T N^T W_q v
    * ``kick(x)``         -- per-particle q/m * N (Lambda^1 x)

    Returns (e_new, v_new, SolveReport). Conserves kinetic + electric
    energy up to the solver tolerance.
    """
    quarter = 0.25 * dt * dt

    def s_apply(x):
        return m1.apply(x) + quarter * coupling.mass_apply(x)

    rhs = m1.apply(e) - quarter * coupling.mass_apply(e) - dt * coupling.deposit(v)
    e_new, report = pcg(s_apply, rhs, precond, tol=tol, maxit=maxit, x0=e)
    v_new = v + 0.5 * dt * coupling.kick(e_new + e)
    return e_new, v_new, report


def poisson_solve(
    m1: MassOperator,
    seq: DeRhamSequence,
    rho: np.ndarray,
    tol: float = 1e-14,
    maxit: int = 50000,
):
    """Initial electric field from the discrete Gauss law.

    Solves (G^T M1 G) phi = rho for the 0-form potential and returns
    e = -G phi together with the report. Without wall constraints the
    operator has the constant function in its kernel, so the mean is
    projected out of the right-hand side and the iterates.
    """

    def lap(x):
        return seq.apply_G_transpose(m1.apply(seq.apply_G(x)))

    rho = np.asarray(rho, dtype=float)
    if not seq.pec:
        ones = np.ones_like(rho)
        ones /= np.linalg.norm(ones)
        rho = rho - (ones @ rho) * ones

        def lap_defl(x):
            y = lap(x)
            return y - (ones @ y) * ones

        phi, rep = cg(lap_defl, rho, tol=tol, maxit=maxit)
        phi -= (ones @ phi) * ones
    else:
        phi, rep = cg(lap, rho, tol=tol, maxit=maxit)
    return -seq.apply_G(phi), rep
