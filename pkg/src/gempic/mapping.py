"""Coordinate transformations from the unit logical cube to physical domains.

Four built-in families: a Cartesian scaling, a sinusoidally distorted box,
and cylindrical/elliptical annuli (pole excluded through ``r0 > 0``). Each
map exposes its Jacobian analytically; metric quantities and the Piola
transforms for 1-/2-form proxy fields derive from it.

The first logical direction is bounded (the wall sits at ``xi1 = 0, 1``);
the second and third are periodic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


class MapFamily(enum.Enum):
    CARTESIAN = "cartesian"
    DISTORTED = "distorted"
    CYLINDRICAL = "cylindrical"
    ELLIPTICAL = "elliptical"


class MappingParameterError(ValueError):
    """Invalid map-family parameters (e.g. a pole-touching radius)."""


class SingularJacobianError(RuntimeError):
    """Jacobian determinant vanished at an evaluation point."""

    def __init__(self, xi):
        super().__init__(f"singular Jacobian at xi = {tuple(xi)}")
        self.xi = np.asarray(xi)


# integer family codes shared with the numba kernels
FAMILY_CODE = {
    MapFamily.CARTESIAN: 0,
    MapFamily.DISTORTED: 1,
    MapFamily.CYLINDRICAL: 2,
    MapFamily.ELLIPTICAL: 3,
}


@dataclass(frozen=True)
class MetricData:
    """Pointwise metric quantities derived from DF at one logical point."""

    df: np.ndarray          # DF, 3x3
    n: np.ndarray           # DF^{-T}, columns are the contravariant basis
    g: np.ndarray           # DF^T DF
    g_inv: np.ndarray       # (DF^T DF)^{-1} = N^T N
    det: float              # det DF (signed)

    @property
    def tangents(self) -> np.ndarray:
        """Covariant basis vectors t_i as columns."""
        return self.df


class Mapping:
    """One of the built-in coordinate transformations.

    Parameters are stored in a flat array whose layout matches the family
    code, so the same object feeds both the numpy paths and the compiled
    particle kernels.
    """

    def __init__(self, family: MapFamily, params: np.ndarray):
        self.family = family
        self.params = np.asarray(params, dtype=float)
        self.code = FAMILY_CODE[family]
        self._validate_regularity()

    # -- construction ------------------------------------------------

    def _validate_regularity(self, samples: int = 5) -> None:
        pts = (np.arange(samples) + 0.5) / samples
        dets = [
            self.metric_at(np.array([a, b, c])).det
            for a in pts
            for b in pts
            for c in pts
        ]
        dets = np.array(dets)
        if np.any(dets == 0.0) or np.any(np.sign(dets) != np.sign(dets[0])):
            raise MappingParameterError(
                f"{self.family.value} map is not sign-definite on a sample grid"
            )

    # -- evaluation --------------------------------------------------

    def eval(self, xi: np.ndarray) -> np.ndarray:
        """Physical point x = F(xi)."""
        x1, x2, x3 = float(xi[0]), float(xi[1]), float(xi[2])
        q = self.params
        if self.family is MapFamily.CARTESIAN:
            return np.array([q[0] * x1, q[1] * x2, q[2] * x3])
        if self.family is MapFamily.DISTORTED:
            lx, ly, lz, lp, eps = q
            d = eps * np.sin(lp * x1) * np.sin(TWO_PI * x2)
            return np.array([lx * (x1 + d), ly * (x2 + d), lz * x3])
        if self.family is MapFamily.CYLINDRICAL:
            r0, lr, lz = q
            r = r0 + lr * x1
            return np.array(
                [r * np.cos(TWO_PI * x2), r * np.sin(TWO_PI * x2), lz * x3]
            )
        r0, lr, lz = q
        return np.array(
            [
                lr * np.cosh(x1 + r0) * np.cos(TWO_PI * x2),
                lr * np.sinh(x1 + r0) * np.sin(TWO_PI * x2),
                lz * x3,
            ]
        )

    def jacobian(self, xi: np.ndarray) -> np.ndarray:
        """Analytic Jacobian matrix DF(xi)."""
        x1, x2 = float(xi[0]), float(xi[1])
        q = self.params
        df = np.zeros((3, 3))
        if self.family is MapFamily.CARTESIAN:
            df[0, 0], df[1, 1], df[2, 2] = q[0], q[1], q[2]
        elif self.family is MapFamily.DISTORTED:
            lx, ly, lz, lp, eps = q
            s1, c1 = np.sin(lp * x1), np.cos(lp * x1)
            s2, c2 = np.sin(TWO_PI * x2), np.cos(TWO_PI * x2)
            d1 = eps * lp * c1 * s2
            d2 = eps * s1 * TWO_PI * c2
            df[0, 0] = lx * (1.0 + d1)
            df[0, 1] = lx * d2
            df[1, 0] = ly * d1
            df[1, 1] = ly * (1.0 + d2)
            df[2, 2] = lz
        elif self.family is MapFamily.CYLINDRICAL:
            r0, lr, lz = q
            r = r0 + lr * x1
            s, c = np.sin(TWO_PI * x2), np.cos(TWO_PI * x2)
            df[0, 0] = lr * c
            df[0, 1] = -TWO_PI * r * s
            df[1, 0] = lr * s
            df[1, 1] = TWO_PI * r * c
            df[2, 2] = lz
        else:
            r0, lr, lz = q
            ch, sh = np.cosh(x1 + r0), np.sinh(x1 + r0)
            s, c = np.sin(TWO_PI * x2), np.cos(TWO_PI * x2)
            df[0, 0] = lr * sh * c
            df[0, 1] = -TWO_PI * lr * ch * s
            df[1, 0] = lr * ch * s
            df[1, 1] = TWO_PI * lr * sh * c
            df[2, 2] = lz
        return df

    def metric_at(self, xi: np.ndarray) -> MetricData:
        """All metric quantities at one point; raises on a singular DF."""
        df = self.jacobian(xi)
        det = float(np.linalg.det(df))
        if det == 0.0 or not np.isfinite(det):
            raise SingularJacobianError(xi)
        inv = np.linalg.inv(df)
        n = inv.T
        g = df.T @ df
        return MetricData(df=df, n=n, g=g, g_inv=n.T @ n, det=det)

    def volume(self, quad_per_cell: int = 8) -> float:
        """Total physical volume via tensor Gauss quadrature of |J_F|."""
        from numpy.polynomial.legendre import leggauss

        x, w = leggauss(quad_per_cell)
        x = 0.5 * (x + 1.0)
        w = 0.5 * w
        total = 0.0
        for a, wa in zip(x, w):
            for b, wb in zip(x, w):
                for c, wc in zip(x, w):
                    total += wa * wb * wc * abs(
                        self.metric_at(np.array([a, b, c])).det
                    )
        return total


def piola_covariant(metric: MetricData, e_logical: np.ndarray) -> np.ndarray:
    """Push a logical 1-form proxy to the physical field: E = N Etilde."""
    return metric.n @ e_logical


def piola_contravariant(metric: MetricData, b_logical: np.ndarray) -> np.ndarray:
    """Push a logical 2-form proxy to the physical field: B = DF Btilde / J."""
    return (metric.df @ b_logical) / metric.det


def builtin_map(family: MapFamily | str, **params) -> Mapping:
    """Build one of the four map families from keyword parameters.

    Cartesian: ``lx, ly, lz``. Distorted: ``lx, ly, lz, lp, eps``.
    Cylindrical/elliptical: ``r0, lr, lz`` with ``r0 > 0``.
    """
    if isinstance(family, str):
        family = MapFamily(family.lower())
    if family is MapFamily.CARTESIAN:
        vec = [params["lx"], params["ly"], params["lz"]]
    elif family is MapFamily.DISTORTED:
        vec = [params["lx"], params["ly"], params["lz"], params["lp"], params["eps"]]
    else:
        r0 = params["r0"]
        if r0 <= 0.0:
            raise MappingParameterError(
                f"{family.value} map needs r0 > 0 to keep the pole out of the domain"
            )
        vec = [r0, params["lr"], params["lz"]]
    return Mapping(family, np.array(vec, dtype=float))
