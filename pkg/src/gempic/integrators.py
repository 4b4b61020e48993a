"""Time integrators over the semi-discrete particle-field system.

Three schemes:

* ``hs`` - Hamiltonian splitting into field-energy, magnetic-energy and
  kinetic parts. Semi-explicit (one mass solve per field update, a
  fixed-point iteration for the kinetic part) and exactly charge
  conserving through the split line-integral current.
* ``cef`` - the bracket variant that freezes the velocity in the position
  update and rotates velocities with a Cayley transform. Same conservation
  behaviour as ``hs``.
* ``disgrade`` - discrete-gradient update per antisymmetric subsystem of
  the Poisson matrix, decoupled with Schur complements. Semi-implicit and
  energy conserving up to the solver tolerance; the Gauss law is not
  conserved exactly.

All three leave the strong divergence of the magnetic coefficients
invariant, and starting from a curl of a potential it stays exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as k
from .assembly import MassOperator
from .derham import DeRhamSequence
from .linsolve import (
    Preconditioner,
    pcg,
    schur_solve_maxwell,
    schur_solve_particle,
)
from .mapping import Mapping
from .particles import (
    BoundaryMode,
    ParticleCoupling,
    ParticleGroup,
    _BMODE_CODE,
    check_errors,
    gl_unit_rule,
    line_quadrature_points,
)


@dataclass
class StepConfig:
    """Per-step numerical parameters."""

    dt: float
    boundary: BoundaryMode = BoundaryMode.REFLECT
    composition: str = "strang"       # "strang" or "lie"
    particle_tol: float = 1e-12
    particle_maxit: int = 50
    mass_tol: float = 1e-14
    outer_tol: float = 1e-13
    solver_maxit: int = 20000

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.composition not in ("strang", "lie"):
            raise ValueError(f"unknown composition {self.composition!r}")
        if self.particle_tol <= 0 or self.mass_tol <= 0 or self.outer_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class IterationStats:
    """Iteration maxima recorded during one step."""

    mass: int = 0
    outer: int = 0
    picard: int = 0

    def reset(self):
        self.mass = self.outer = self.picard = 0


@dataclass
class SimState:
    """Dynamic state plus the assembled operators it evolves under."""

    seq: DeRhamSequence
    mapping: Mapping
    groups: list[ParticleGroup]
    e: np.ndarray
    b: np.ndarray
    t: float
    m1: MassOperator
    m2: MassOperator
    pre1: Preconditioner | None = None
    stats: IterationStats = field(default_factory=IterationStats)

    def total_energy(self) -> float:
        kin = sum(g.kinetic_energy() for g in self.groups)
        return kin + self.field_energy()

    def field_energy(self) -> float:
        return 0.5 * float(self.e @ self.m1.apply(self.e)) + 0.5 * float(
            self.b @ self.m2.apply(self.b)
        )

    def div_b_inf(self) -> float:
        db = self.seq.apply_D(self.b)
        return float(np.abs(db).max()) if db.size else 0.0


def _mass_solve(state: SimState, rhs: np.ndarray, cfg: StepConfig) -> np.ndarray:
    x, rep = pcg(
        state.m1.apply, rhs, state.pre1,
        tol=cfg.mass_tol, maxit=cfg.solver_maxit, x0=state.e,
    )
    state.stats.mass = max(state.stats.mass, rep.iterations)
    return x


# ---------------------------------------------------------------------------
# shared sub-flows
# ---------------------------------------------------------------------------


def h_e_substep(state: SimState, dt: float) -> None:
    """Electric-energy flow: velocity kick and Faraday update, e frozen."""
    seq = state.seq
    coef_e = np.stack(seq.embed(1, state.e))
    n1, n2, n3 = seq.cells
    for g in state.groups:
        coefs = np.full(g.n, dt * g.charge / g.mass)
        k.kick_electric(
            g.xi, g.v, coefs, coef_e, seq.degree, n1, n2, n3,
            state.mapping.code, state.mapping.params, 0,
        )
    state.b = state.b - dt * seq.apply_C(state.e)


def h_b_substep(state: SimState, dt: float, cfg: StepConfig) -> None:
    """Magnetic-energy flow: weak-curl source for the electric field."""
    rhs = state.m1.apply(state.e) + dt * state.seq.apply_C_transpose(
        state.m2.apply(state.b)
    )
    state.e = _mass_solve(state, rhs, cfg)


def maxwell_substeps(state: SimState, dt: float, cfg: StepConfig | None = None) -> None:
    """Zero-particle Maxwell leapfrog piece: Faraday then Ampere."""
    if cfg is None:
        cfg = StepConfig(dt=dt)
    state.b = state.b - dt * state.seq.apply_C(state.e)
    h_b_substep(state, dt, cfg)


def _h_p_substep(state: SimState, dt: float, cfg: StepConfig, frozen_v: bool) -> None:
    """Kinetic flow: implicit midpoint positions, split current deposit."""
    seq = state.seq
    n1, n2, n3 = seq.cells
    glx, glw = gl_unit_rule(line_quadrature_points(seq.degree))
    jout = np.zeros((3,) + seq.padded_shape)
    bmode = _BMODE_CODE[cfg.boundary]
    bpad = np.stack(seq.embed(2, state.b))
    iters = np.zeros(1, dtype=np.int64)
    for g in state.groups:
        err = np.zeros(g.n, dtype=np.int64)
        wq = np.ascontiguousarray(g.weights * g.charge)
        if frozen_v:
            k.push_hp_cef(
                g.xi, g.v, wq, dt, seq.degree, n1, n2, n3,
                state.mapping.code, state.mapping.params, bmode,
                cfg.particle_tol, cfg.particle_maxit, glx, glw,
                jout, err, iters,
            )
        else:
            qm = np.full(g.n, g.charge / g.mass)
            k.push_hp_hs(
                g.xi, g.v, wq, qm, bpad, dt, seq.degree, n1, n2, n3,
                state.mapping.code, state.mapping.params, bmode,
                cfg.particle_tol, cfg.particle_maxit, glx, glw,
                jout, err, iters,
            )
        check_errors(err)
        state.stats.picard = max(state.stats.picard, int(iters[0]))
    j_int = seq.restrict(1, list(jout))
    rhs = state.m1.apply(state.e) - j_int
    state.e = _mass_solve(state, rhs, cfg)


def _rotate_velocities(state: SimState, dt: float) -> None:
    """Cayley rotation of every velocity in the frozen magnetic field."""
    seq = state.seq
    n1, n2, n3 = seq.cells
    bpad = np.stack(seq.embed(2, state.b))
    for g in state.groups:
        half = np.full(g.n, 0.5 * dt * g.charge / g.mass)
        k.rotate_magnetic(
            g.xi, g.v, half, bpad, seq.degree, n1, n2, n3,
            state.mapping.code, state.mapping.params, 0,
        )


# ---------------------------------------------------------------------------
# integrators
# ---------------------------------------------------------------------------


def hs_step(state: SimState, cfg: StepConfig) -> SimState:
    """One Hamiltonian-splitting step (Strang or Lie composition)."""
    state.stats.reset()
    dt = cfg.dt
    if cfg.composition == "strang":
        h_e_substep(state, 0.5 * dt)
        h_b_substep(state, 0.5 * dt, cfg)
        _h_p_substep(state, dt, cfg, frozen_v=False)
        h_b_substep(state, 0.5 * dt, cfg)
        h_e_substep(state, 0.5 * dt)
    else:
        h_e_substep(state, dt)
        h_b_substep(state, dt, cfg)
        _h_p_substep(state, dt, cfg, frozen_v=False)
    state.t += dt
    return state


def cef_step(state: SimState, cfg: StepConfig) -> SimState:
    """One step of the frozen-velocity bracket variant."""
    state.stats.reset()
    dt = cfg.dt

    def h_b(dt_):
        _rotate_velocities(state, dt_)
        rhs = state.m1.apply(state.e) + dt_ * state.seq.apply_C_transpose(
            state.m2.apply(state.b)
        )
        state.e = _mass_solve(state, rhs, cfg)

    if cfg.composition == "strang":
        h_e_substep(state, 0.5 * dt)
        h_b(0.5 * dt)
        _h_p_substep(state, dt, cfg, frozen_v=True)
        h_b(0.5 * dt)
        h_e_substep(state, 0.5 * dt)
    else:
        h_e_substep(state, dt)
        h_b(dt)
        _h_p_substep(state, dt, cfg, frozen_v=True)
    state.t += dt
    return state


def _disgrade_system1(state: SimState, dt: float, cfg: StepConfig) -> None:
    iters = np.zeros(1, dtype=np.int64)
    for g in state.groups:
        err = np.zeros(g.n, dtype=np.int64)
        k.push_position_average(
            g.xi, g.v, dt, state.mapping.code, state.mapping.params,
            _BMODE_CODE[cfg.boundary], cfg.particle_tol, cfg.particle_maxit,
            err, iters,
        )
        check_errors(err)
        state.stats.picard = max(state.stats.picard, int(iters[0]))


def _disgrade_system3(state: SimState, dt: float, cfg: StepConfig) -> None:
    e_new, b_new, rep = schur_solve_maxwell(
        state.m1, state.m2, state.seq, dt, state.e, state.b,
        precond=state.pre1, tol=cfg.outer_tol, maxit=cfg.solver_maxit,
    )
    state.stats.outer = max(state.stats.outer, rep.iterations)
    state.e, state.b = e_new, b_new


class _SummedCoupling:
    """Particle coupling summed over species groups."""

    def __init__(self, couplings):
        self.couplings = couplings

    def mass_apply(self, x):
        out = self.couplings[0].mass_apply(x)
        for c in self.couplings[1:]:
            out += c.mass_apply(x)
        return out

    def deposit(self, v_list):
        out = self.couplings[0].deposit(v_list[0])
        for c, v in zip(self.couplings[1:], v_list[1:]):
            out += c.deposit(v)
        return out


def _disgrade_system4(state: SimState, dt: float, cfg: StepConfig) -> None:
    couplings = [
        ParticleCoupling(g, state.seq, state.mapping, cfg.boundary)
        for g in state.groups
    ]
    quarter = 0.25 * dt * dt
    summed = _SummedCoupling(couplings)

    def s_apply(x):
        return state.m1.apply(x) + quarter * summed.mass_apply(x)

    v_list = [g.v for g in state.groups]
    rhs = (
        state.m1.apply(state.e)
        - quarter * summed.mass_apply(state.e)
        - dt * summed.deposit(v_list)
    )
    e_new, rep = pcg(
        s_apply, rhs, state.pre1, tol=cfg.outer_tol,
        maxit=cfg.solver_maxit, x0=state.e,
    )
    state.stats.outer = max(state.stats.outer, rep.iterations)
    e_sum = e_new + state.e
    for g, coup in zip(state.groups, couplings):
        g.v += 0.5 * dt * coup.kick(e_sum)
    state.e = e_new


def disgrade_step(state: SimState, cfg: StepConfig) -> SimState:
    """One energy-conserving discrete-gradient step.

    Each subsystem conserves the total energy by itself (antisymmetric
    splitting plus trapezoidal gradient), so any composition order keeps
    the Hamiltonian to solver tolerance.
    """
    state.stats.reset()
    dt = cfg.dt
    if cfg.composition == "strang":
        _disgrade_system1(state, 0.5 * dt, cfg)
        _rotate_velocities(state, 0.5 * dt)
        _disgrade_system3(state, 0.5 * dt, cfg)
        _disgrade_system4(state, dt, cfg)
        _disgrade_system3(state, 0.5 * dt, cfg)
        _rotate_velocities(state, 0.5 * dt)
        _disgrade_system1(state, 0.5 * dt, cfg)
    else:
        _disgrade_system1(state, dt, cfg)
        _rotate_velocities(state, dt)
        _disgrade_system3(state, dt, cfg)
        _disgrade_system4(state, dt, cfg)
    state.t += dt
    return state


STEPPERS = {"hs": hs_step, "cef": cef_step, "disgrade": disgrade_step}
