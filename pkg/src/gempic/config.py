"""Run configuration: flat ``key = value`` files and built-in presets.

The format is dependency-free text: one dotted key per line, ``#`` starts
a comment. Unknown keys are rejected so typos fail fast. Presets encode
the Weibel-instability experiments at desk scale (64k markers, 8^3 cells
or 16x16x8 for the radial grids, cubic splines).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

DOMAIN_L = 2.0 * np.pi / 1.25


class ConfigError(ValueError):
    """Malformed or invalid run configuration."""


@dataclass
class SpeciesConfig:
    charge: float = -1.0
    mass: float = 1.0
    count: int = 64000


@dataclass
class RunConfig:
    cells: tuple[int, int, int] = (8, 8, 8)
    degree: int = 3
    pec: bool = True
    map_family: str = "cartesian"
    map_params: dict = field(default_factory=dict)
    scenario: str = "kz"
    field_init: str = "B2"
    beta: float = 1e-3
    envelope_length: float = DOMAIN_L
    species: list[SpeciesConfig] = field(default_factory=lambda: [SpeciesConfig()])
    seed: int = 0
    boundary: str = "periodic"          # particle wall mode
    integrator: str = "hs"
    dt: float = 0.1
    t_end: float = 50.0
    composition: str = "strang"
    picard_tol: float = 1e-12
    picard_maxit: int = 50
    mass_tol: float = 1e-14
    outer_tol: float = 1e-13
    solver_maxit: int = 20000
    precond: str = "lumped"
    quad_order: int = 0                 # 0 -> degree + 1
    out_dir: str = "out"
    fields_every: int = 0
    particles_every: int = 0

    def validate(self) -> None:
        if self.degree < 1:
            raise ConfigError("grid.degree must be >= 1")
        if any(n < self.degree + 1 for n in self.cells):
            raise ConfigError("grid.cells must all be >= degree + 1")
        if self.map_family not in ("cartesian", "distorted", "cylindrical", "elliptical"):
            raise ConfigError(f"unknown map.family {self.map_family!r}")
        if self.map_family in ("cylindrical", "elliptical"):
            if self.map_params.get("r0", 0.0) <= 0.0:
                raise ConfigError("radial maps require map.r0 > 0")
        if self.scenario not in ("kx", "ky", "kz"):
            raise ConfigError(f"unknown scenario.kind {self.scenario!r}")
        if self.field_init not in ("B1", "B2", "B3"):
            raise ConfigError(f"unknown scenario.field_init {self.field_init!r}")
        if self.boundary not in ("reflect", "periodic"):
            raise ConfigError(f"unknown particles.boundary {self.boundary!r}")
        if self.integrator not in ("hs", "cef", "disgrade"):
            raise ConfigError(f"unknown integrator.kind {self.integrator!r}")
        if self.composition not in ("strang", "lie"):
            raise ConfigError(f"unknown integrator.composition {self.composition!r}")
        if self.dt <= 0.0:
            raise ConfigError("integrator.dt must be positive")
        if self.t_end < 0.0:
            raise ConfigError("integrator.t_end must be non-negative")
        if self.precond not in ("lumped", "jacobi", "none"):
            raise ConfigError(f"unknown solver.precond {self.precond!r}")
        for s in self.species:
            if s.count < 1:
                raise ConfigError("species count must be >= 1")
            if s.mass <= 0.0:
                raise ConfigError("species mass must be positive")

    def n_steps(self) -> int:
        return int(np.floor(self.t_end / self.dt + 1e-9))


_MAP_PARAM_KEYS = {"lx", "ly", "lz", "lp", "eps", "r0", "lr"}

_BOOL = {"true": True, "false": False, "on": True, "off": False, "1": True, "0": False}


def _parse_bool(val: str, key: str, line: int) -> bool:
    try:
        return _BOOL[val.lower()]
    except KeyError:
        raise ConfigError(f"line {line}: {key} expects a boolean, got {val!r}") from None


def parse_config_text(text: str) -> RunConfig:
    cfg = RunConfig()
    cfg.map_params = dict(lx=DOMAIN_L, ly=DOMAIN_L, lz=DOMAIN_L)
    species: dict[int, SpeciesConfig] = {}
    seen_species = False
    seen_keys: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        try:
            _apply_key(cfg, species, key, val, lineno)
            seen_keys.add(key)
            if key.startswith("species."):
                seen_species = True
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    for required in ("integrator.dt", "integrator.t_end"):
        if required not in seen_keys:
            raise ConfigError(f"missing required key {required}")
    if seen_species:
        cfg.species = [species[i] for i in sorted(species)]
    cfg.validate()
    return cfg


def _apply_key(cfg: RunConfig, species, key: str, val: str, line: int) -> None:
    if key == "grid.cells":
        parts = val.replace(",", " ").split()
        if len(parts) != 3:
            raise ConfigError(f"line {line}: grid.cells needs three integers")
        cfg.cells = tuple(int(p) for p in parts)
    elif key == "grid.degree":
        cfg.degree = int(val)
    elif key == "grid.pec":
        cfg.pec = _parse_bool(val, key, line)
    elif key == "map.family":
        cfg.map_family = val.lower()
    elif key.startswith("map."):
        sub = key[4:]
        if sub not in _MAP_PARAM_KEYS:
            raise ConfigError(f"line {line}: unknown key {key!r}")
        cfg.map_params[sub] = float(val)
    elif key == "scenario.kind":
        cfg.scenario = val.lower()
    elif key == "scenario.field_init":
        cfg.field_init = val.upper()
    elif key == "scenario.beta":
        cfg.beta = float(val)
    elif key == "scenario.envelope_length":
        cfg.envelope_length = float(val)
    elif key == "particles.count":
        cfg.species = [replace(cfg.species[0], count=int(val))]
    elif key == "particles.charge":
        cfg.species = [replace(cfg.species[0], charge=float(val))]
    elif key == "particles.mass":
        cfg.species = [replace(cfg.species[0], mass=float(val))]
    elif key == "particles.seed":
        cfg.seed = int(val)
    elif key == "particles.boundary":
        cfg.boundary = val.lower()
    elif key.startswith("species."):
        parts = key.split(".")
        if len(parts) != 3 or parts[2] not in ("charge", "mass", "count"):
            raise ConfigError(f"line {line}: unknown key {key!r}")
        idx = int(parts[1])
        entry = species.setdefault(idx, SpeciesConfig())
        if parts[2] == "count":
            entry.count = int(val)
        elif parts[2] == "charge":
            entry.charge = float(val)
        else:
            entry.mass = float(val)
    elif key == "integrator.kind":
        cfg.integrator = val.lower()
    elif key == "integrator.dt":
        cfg.dt = float(val)
    elif key == "integrator.t_end":
        cfg.t_end = float(val)
    elif key == "integrator.composition":
        cfg.composition = val.lower()
    elif key == "integrator.picard_tol":
        cfg.picard_tol = float(val)
    elif key == "integrator.picard_maxit":
        cfg.picard_maxit = int(val)
    elif key == "solver.mass_tol":
        cfg.mass_tol = float(val)
    elif key == "solver.outer_tol":
        cfg.outer_tol = float(val)
    elif key == "solver.maxit":
        cfg.solver_maxit = int(val)
    elif key == "solver.precond":
        cfg.precond = val.lower()
    elif key == "quadrature.order":
        cfg.quad_order = int(val)
    elif key == "output.dir":
        cfg.out_dir = val
    elif key == "output.fields_every":
        cfg.fields_every = int(val)
    elif key == "output.particles_every":
        cfg.particles_every = int(val)
    else:
        raise ConfigError(f"line {line}: unknown key {key!r}")


def load_config(path) -> RunConfig:
    """Parse and validate a configuration file."""
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def _cartesian_preset(scenario: str, init: str) -> RunConfig:
    cfg = RunConfig(
        map_family="cartesian",
        map_params=dict(lx=DOMAIN_L, ly=DOMAIN_L, lz=DOMAIN_L),
        scenario=scenario,
        field_init=init,
        boundary="periodic",
    )
    return cfg


def _distorted_preset(scenario: str, init: str, lp: float, eps: float) -> RunConfig:
    cfg = _cartesian_preset(scenario, init)
    cfg.map_family = "distorted"
    cfg.map_params = dict(lx=DOMAIN_L, ly=DOMAIN_L, lz=DOMAIN_L, lp=lp, eps=eps)
    return cfg


def _radial_preset(family: str, scenario: str, init: str) -> RunConfig:
    r0 = 0.01
    cfg = RunConfig(
        cells=(16, 16, 8),
        map_family=family,
        map_params=dict(r0=r0, lr=DOMAIN_L - r0, lz=DOMAIN_L),
        scenario=scenario,
        field_init=init,
        boundary="reflect",
        dt=0.01,
        t_end=5.0,
    )
    return cfg


def _presets() -> dict[str, RunConfig]:
    out = {}
    for scen, inits in (("kx", "B2 B3"), ("ky", "B1 B3"), ("kz", "B1 B2")):
        for init in inits.split():
            out[f"weibel-cartesian-{scen}-{init}"] = _cartesian_preset(scen, init)
    out["weibel-distorted-kz-B2"] = _distorted_preset("kz", "B2", np.pi / 2, 0.05)
    out["weibel-distorted-kz-B1"] = _distorted_preset("kz", "B1", np.pi / 2, 0.05)
    out["weibel-distorted-square-kz-B2"] = _distorted_preset("kz", "B2", 2 * np.pi, 0.05)
    out["weibel-cylindrical-kz-B1"] = _radial_preset("cylindrical", "kz", "B1")
    out["weibel-elliptical-kz-B1"] = _radial_preset("elliptical", "kz", "B1")
    return out


def list_presets() -> list[str]:
    return sorted(_presets())


def preset_config(name: str) -> RunConfig:
    try:
        cfg = _presets()[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(list_presets())}"
        ) from None
    cfg.validate()
    return cfg
