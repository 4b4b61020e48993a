"""Experiment orchestration: initialization, the time loop, CSV output.

A run samples the markers, projects the seed vector potential (so the
magnetic start is the curl of a discrete 1-form and stays exactly
divergence free), solves the discrete Gauss law for the initial electric
field, then advances with the configured integrator, appending one
diagnostics row per step.

Outputs land in the output directory: ``diagnostics.csv`` always, plus
optional coefficient dumps and particle snapshots. Runs are deterministic
for a given configuration and seed, regardless of the worker count.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass

import numpy as np

from .assembly import (
    ComponentEnergyEvaluator,
    assemble_boundary_matrices,
    assemble_mass,
    project_rhs,
)
from .config import RunConfig
from .derham import build_sequence
from .integrators import STEPPERS, IterationStats, SimState, StepConfig
from .linsolve import build_preconditioner, pcg, poisson_solve
from .mapping import builtin_map
from .particles import (
    BoundaryMode,
    ParticleGroup,
    deposit_charge,
    sample_weibel,
    weibel_vector_potential,
)

log = logging.getLogger("gempic")

CSV_COLUMNS = [
    "t",
    "kinetic",
    "electric",
    "magnetic",
    "magnetic_b1",
    "magnetic_b2",
    "magnetic_b3",
    "total",
    "gauss_inf",
    "divb_inf",
    "poynting",
    "particles",
    "iters_mass",
    "iters_outer",
    "iters_picard",
]


@dataclass
class DiagnosticsRow:
    t: float
    kinetic: float
    electric: float
    magnetic: float
    magnetic_components: np.ndarray
    total: float
    gauss_inf: float
    divb_inf: float
    poynting: float
    particles: int
    stats: IterationStats

    def as_csv(self) -> str:
        vals = [
            self.t,
            self.kinetic,
            self.electric,
            self.magnetic,
            self.magnetic_components[0],
            self.magnetic_components[1],
            self.magnetic_components[2],
            self.total,
            self.gauss_inf,
            self.divb_inf,
            self.poynting,
        ]
        cells = [f"{v:.17g}" for v in vals]
        cells.append(str(self.particles))
        cells.append(str(self.stats.mass))
        cells.append(str(self.stats.outer))
        cells.append(str(self.stats.picard))
        return ",".join(cells)


class Simulation:
    """Assembled operators plus dynamic state for one configured run."""

    def __init__(self, config: RunConfig):
        config.validate()
        self.config = config
        self.mapping = builtin_map(config.map_family, **config.map_params)
        self.seq = build_sequence(config.degree, config.cells, config.pec)
        q = config.quad_order if config.quad_order > 0 else None
        self.m1 = assemble_mass(self.seq, self.mapping, 1, q)
        self.m2 = assemble_mass(self.seq, self.mapping, 2, q)
        self.mb0, self.mb1 = assemble_boundary_matrices(self.seq, self.mapping, q)
        self.pre1 = build_preconditioner(self.m1, self.seq, config.precond)
        self.step_config = StepConfig(
            dt=config.dt,
            boundary=BoundaryMode(config.boundary),
            composition=config.composition,
            particle_tol=config.picard_tol,
            particle_maxit=config.picard_maxit,
            mass_tol=config.mass_tol,
            outer_tol=config.outer_tol,
            solver_maxit=config.solver_maxit,
        )
        self.stepper = STEPPERS[config.integrator]
        self._b_energy = ComponentEnergyEvaluator(self.seq, self.mapping, 2)
        self.state = self._initialize()

    # -- initialization -------------------------------------------------

    def _initialize(self) -> SimState:
        cfg = self.config
        groups = [
            sample_weibel(
                self.mapping,
                cfg.scenario,
                s.count,
                # distinct species get disjoint counter streams
                cfg.seed + 0x9E3779B9 * idx,
                charge=s.charge,
                mass=s.mass,
            )
            for idx, s in enumerate(cfg.species)
        ]

        a_fn = weibel_vector_potential(
            cfg.scenario, cfg.field_init, cfg.envelope_length, cfg.beta
        )
        rhs = project_rhs(self.seq, self.mapping, 1, a_fn)
        a_coeff, rep = pcg(
            self.m1.apply, rhs, self.pre1, tol=cfg.mass_tol, maxit=cfg.solver_maxit
        )
        if not rep.converged:
            raise RuntimeError("vector-potential projection did not converge")
        b0 = self.seq.apply_C(a_coeff)

        self.rho_background = self._background_charge()
        rho = self.rho_background.copy()
        for g in groups:
            rho += deposit_charge(g, self.seq)
        e0, rep = poisson_solve(self.m1, self.seq, rho, tol=cfg.mass_tol)
        if not rep.converged:
            raise RuntimeError("initial Poisson solve did not converge")

        return SimState(
            seq=self.seq,
            mapping=self.mapping,
            groups=groups,
            e=e0,
            b=b0,
            t=0.0,
            m1=self.m1,
            m2=self.m2,
            pre1=self.pre1,
        )

    def _background_charge(self) -> np.ndarray:
        """Immobile neutralizing background: density -sum_s q_s, unit profile."""
        density = -sum(s.charge for s in self.config.species)
        ones = lambda x: np.full(x.shape[0], density)
        return project_rhs(self.seq, self.mapping, 0, ones)

    # -- diagnostics -----------------------------------------------------

    def compute_diagnostics(self) -> DiagnosticsRow:
        state = self.state
        kinetic = sum(g.kinetic_energy() for g in state.groups)
        electric = 0.5 * float(state.e @ self.m1.apply(state.e))
        magnetic = 0.5 * float(state.b @ self.m2.apply(state.b))
        bcomp = self._b_energy(state.b)
        rho = self.rho_background.copy()
        for g in state.groups:
            rho += deposit_charge(g, self.seq)
        gauss = self.seq.apply_G_transpose(self.m1.apply(state.e)) + rho
        if not self.config.pec:
            gauss -= self.mb0 @ state.e
        divb = state.div_b_inf()
        poynting = float(state.e @ (self.mb1 @ state.b))
        return DiagnosticsRow(
            t=state.t,
            kinetic=kinetic,
            electric=electric,
            magnetic=magnetic,
            magnetic_components=bcomp,
            total=kinetic + electric + magnetic,
            gauss_inf=float(np.abs(gauss).max()),
            divb_inf=divb,
            poynting=poynting,
            particles=sum(g.n for g in state.groups),
            stats=IterationStats(
                state.stats.mass, state.stats.outer, state.stats.picard
            ),
        )

    # -- output ----------------------------------------------------------

    def _dump_fields(self, out_dir: str, step: int) -> None:
        path = os.path.join(out_dir, f"fields_{step:06d}.txt")
        with open(path, "w") as f:
            f.write(f"# t = {self.state.t:.17g}\n")
            f.write(f"# e {self.state.e.size}\n")
            for i, v in enumerate(self.state.e):
                f.write(f"e {i} {v:.17g}\n")
            f.write(f"# b {self.state.b.size}\n")
            for i, v in enumerate(self.state.b):
                f.write(f"b {i} {v:.17g}\n")

    def _dump_particles(self, out_dir: str, step: int) -> None:
        path = os.path.join(out_dir, f"particles_{step:06d}.bin")
        with open(path, "wb") as f:
            for gi, g in enumerate(self.state.groups):
                header = (
                    f"gempic-particles group={gi} n={g.n} "
                    f"seed={self.config.seed} t={self.state.t:.17g}\n"
                )
                f.write(header.encode())
                f.write(np.ascontiguousarray(g.xi).tobytes())
                f.write(np.ascontiguousarray(g.v).tobytes())
                f.write(np.ascontiguousarray(g.weights).tobytes())

    # -- main loop ---------------------------------------------------------

    def run(self, out_dir: str | None = None, progress_every: int = 100):
        """Advance to t_end, writing one diagnostics row per step."""
        cfg = self.config
        out_dir = out_dir or cfg.out_dir
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, "diagnostics.csv")
        n_steps = cfg.n_steps()
        t_start = time.time()
        with open(csv_path, "w") as csv:
            csv.write(",".join(CSV_COLUMNS) + "\n")
            row = self.compute_diagnostics()
            csv.write(row.as_csv() + "\n")
            csv.flush()
            for step in range(1, n_steps + 1):
                self.stepper(self.state, self.step_config)
                row = self.compute_diagnostics()
                csv.write(row.as_csv() + "\n")
                csv.flush()
                if cfg.fields_every and step % cfg.fields_every == 0:
                    self._dump_fields(out_dir, step)
                if cfg.particles_every and step % cfg.particles_every == 0:
                    self._dump_particles(out_dir, step)
                if progress_every and step % progress_every == 0:
                    log.info(
                        "step %d/%d t=%.2f H=%.6e gauss=%.2e [%.1fs]",
                        step,
                        n_steps,
                        self.state.t,
                        row.total,
                        row.gauss_inf,
                        time.time() - t_start,
                    )
        return csv_path


def run(config: RunConfig, out_dir: str | None = None) -> str:
    """Build and execute one run; returns the diagnostics CSV path."""
    sim = Simulation(config)
    return sim.run(out_dir=out_dir)
