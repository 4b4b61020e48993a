"""Built-in invariant self-tests behind ``gempic check``.

Fast structural checks of the assembled discretization: sequence
exactness, commuting derivatives, mass-operator symmetry and positivity,
vanishing wall matrices, metric identities and reflection isometry. These
run in seconds and are meant as a smoke test of an installation.
"""

from __future__ import annotations

import numpy as np

from .assembly import assemble_boundary_matrices, assemble_mass
from .config import DOMAIN_L
from .derham import build_sequence
from .linsolve import build_preconditioner, pcg
from .mapping import builtin_map
from .particles import BoundaryMode, ParticleGroup, apply_boundary
from .splines import Boundary, build_basis, eval_basis


def _maps():
    return {
        "cartesian": builtin_map("cartesian", lx=DOMAIN_L, ly=DOMAIN_L, lz=DOMAIN_L),
        "distorted": builtin_map(
            "distorted", lx=DOMAIN_L, ly=DOMAIN_L, lz=DOMAIN_L, lp=np.pi / 2, eps=0.05
        ),
        "cylindrical": builtin_map(
            "cylindrical", r0=0.01, lr=DOMAIN_L - 0.01, lz=DOMAIN_L
        ),
        "elliptical": builtin_map("elliptical", r0=0.05, lr=DOMAIN_L, lz=DOMAIN_L),
    }


def run_checks(verbose_print=print) -> bool:
    """Run all self-tests; prints one PASS/FAIL line each."""
    ok = True

    def report(name, passed, detail=""):
        nonlocal ok
        ok = ok and passed
        tag = "PASS" if passed else "FAIL"
        verbose_print(f"[{tag}] {name}" + (f"  ({detail})" if detail else ""))

    rng = np.random.default_rng(2024)

    # partition of unity
    worst = 0.0
    for bnd in (Boundary.CLAMPED, Boundary.PERIODIC):
        for p in (1, 2, 3):
            basis = build_basis(p, 8, bnd)
            for xi in rng.random(100):
                _, vals = eval_basis(basis, float(xi))
                worst = max(worst, abs(vals.sum() - 1.0))
    report("spline partition of unity", worst <= 1e-13, f"max err {worst:.2e}")

    # complex exactness
    worst = 0.0
    for p in (1, 2, 3):
        for pec in (False, True):
            seq = build_sequence(p, (4, 4, 4), pec)
            x = rng.standard_normal(seq.dof_count(0))
            y = rng.standard_normal(seq.dof_count(1))
            worst = max(worst, np.abs(seq.apply_C(seq.apply_G(x))).max())
            worst = max(worst, np.abs(seq.apply_D(seq.apply_C(y))).max())
    report("discrete sequence exactness (CG=0, DC=0)", worst <= 1e-13,
           f"max err {worst:.2e}")

    # commuting diagram on a curved map (pointwise)
    seq = build_sequence(2, (4, 4, 4), True)
    phi = rng.standard_normal(seq.dof_count(0))
    a = rng.standard_normal(seq.dof_count(1))
    b = rng.standard_normal(seq.dof_count(2))
    gphi, ca, db = seq.apply_G(phi), seq.apply_C(a), seq.apply_D(b)
    worst = 0.0
    for _ in range(10):
        xi = rng.random(3)
        worst = max(worst, np.abs(
            seq.eval_form_gradient(phi, xi) - seq.eval_form(1, gphi, xi)).max())
        worst = max(worst, np.abs(
            seq.eval_form_curl(a, xi) - seq.eval_form(2, ca, xi)).max())
        worst = max(worst, abs(
            seq.eval_form_divergence(b, xi) - seq.eval_form(3, db, xi)))
    report("commuting derivative evaluation", worst <= 1e-12, f"max err {worst:.2e}")

    # metric identities (covariant vs contravariant bases)
    worst = 0.0
    for name, m in _maps().items():
        for _ in range(10):
            xi = rng.random(3)
            met = m.metric_at(xi)
            t = met.df
            n = met.n
            J = met.det
            for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
                worst = max(worst, np.abs(
                    n[:, i] - np.cross(t[:, j], t[:, k]) / J).max())
                worst = max(worst, np.abs(
                    np.cross(n[:, j], n[:, k]) - t[:, i] / J).max())
            worst = max(worst, np.abs(n.T @ n - met.g_inv).max())
    report("metric basis identities", worst <= 1e-12, f"max err {worst:.2e}")

    # mass operators: symmetry, positivity, solver round trip
    m = _maps()["cylindrical"]
    seq = build_sequence(2, (4, 4, 4), True)
    sym_worst = 0.0
    pos_ok = True
    for k in range(4):
        mass = assemble_mass(seq, m, k)
        x = rng.standard_normal(mass.shape[0])
        y = rng.standard_normal(mass.shape[0])
        scale = max(1.0, abs(x @ mass.apply(y)))
        sym_worst = max(
            sym_worst, abs(x @ mass.apply(y) - y @ mass.apply(x)) / scale
        )
        pos_ok = pos_ok and (x @ mass.apply(x) > 0.0)
    report("mass operators symmetric", sym_worst <= 1e-13, f"max rel {sym_worst:.2e}")
    report("mass operators positive", pos_ok)

    mass1 = assemble_mass(seq, m, 1)
    pre = build_preconditioner(mass1, seq)
    x = rng.standard_normal(mass1.shape[0])
    sol, rep = pcg(mass1.apply, mass1.apply(x), pre, tol=1e-12)
    report(
        "preconditioned mass solve",
        rep.converged and np.abs(sol - x).max() <= 1e-8,
        f"{rep.iterations} iterations",
    )
    y = rng.standard_normal(mass1.shape[0])
    sym = abs(x @ pre.apply(y) - y @ pre.apply(x)) / max(1.0, abs(x @ pre.apply(y)))
    report("preconditioner self-adjoint", sym <= 1e-13, f"rel asym {sym:.2e}")

    # wall matrices vanish on constrained spaces
    worst = 0.0
    for name, mm in _maps().items():
        mb0, mb1 = assemble_boundary_matrices(seq, mm)
        worst = max(
            worst,
            abs(mb0).max() if mb0.nnz else 0.0,
            abs(mb1).max() if mb1.nnz else 0.0,
        )
    report("wall matrices vanish under conducting-wall constraints",
           worst == 0.0, f"max entry {worst:.2e}")

    # reflection preserves speed
    n = 100000
    xi = rng.random((n, 3))
    xi[:, 0] = np.where(rng.random(n) < 0.5, -0.3 * rng.random(n), 1.0 + 0.3 * rng.random(n))
    v = rng.standard_normal((n, 3))
    group = ParticleGroup(
        xi=xi, v=v.copy(), weights=np.ones(n), charge=-1.0, mass=1.0
    )
    speed0 = np.linalg.norm(v, axis=1)
    apply_boundary(group, _maps()["cylindrical"], BoundaryMode.REFLECT)
    rel = np.abs(np.linalg.norm(group.v, axis=1) - speed0) / speed0
    report("reflection preserves speed", rel.max() <= 1e-14,
           f"max rel {rel.max():.2e}, n={n}")

    return ok
