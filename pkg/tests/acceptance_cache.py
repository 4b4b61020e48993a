"""Cached driver runs for the long acceptance experiments.

The Weibel phenomenology runs take an hour-plus of single-core compute, so
their diagnostics CSVs are cached under ``.cache_acceptance/`` keyed by a
hash of the full run configuration. Delete the directory to force a clean
recompute (it is not part of the repository).
"""

import hashlib
import json
import os
from dataclasses import asdict

import gempic.driver
from gempic.config import RunConfig

CACHE_ROOT = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                          ".cache_acceptance")


def config_key(cfg: RunConfig) -> str:
    blob = json.dumps(asdict(cfg), sort_keys=True, default=str)
    return hashlib.sha1(blob.encode()).hexdigest()[:16]


def cached_run(cfg: RunConfig, tag: str) -> str:
    """Run (or reuse) a configured simulation; returns the CSV path."""
    out_dir = os.path.join(CACHE_ROOT, f"{tag}-{config_key(cfg)}")
    csv_path = os.path.join(out_dir, "diagnostics.csv")
    if os.path.exists(csv_path):
        with open(csv_path) as f:
            rows = sum(1 for _ in f) - 1
        if rows == cfg.n_steps() + 1:
            return csv_path
    return gempic.driver.run(cfg, out_dir=out_dir)


def weibel_config(**overrides) -> RunConfig:
    from gempic.config import DOMAIN_L, SpeciesConfig

    cfg = RunConfig(
        cells=(8, 8, 8),
        degree=3,
        pec=True,
        map_family="cartesian",
        map_params=dict(lx=DOMAIN_L, ly=DOMAIN_L, lz=DOMAIN_L),
        scenario="kz",
        field_init="B2",
        seed=0,
        boundary="reflect",
        integrator="hs",
        dt=0.1,
        t_end=50.0,
    )
    cfg.species = [SpeciesConfig(charge=-1.0, mass=1.0, count=64000)]
    for key, val in overrides.items():
        setattr(cfg, key, val)
    cfg.validate()
    return cfg
