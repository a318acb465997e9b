"""Shared fixtures.

The reference-level ladders and the canonical epsilon sweep are the two
expensive computations the suite keeps reusing, so they are session scoped;
everything else is cheap enough to rebuild per test.
"""
from pathlib import Path

import pytest

from regfrac import concentration_sweep, parse_config, reference_level

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

ALPHA, P, N_DIM = 0.4, 2.0, 1


@pytest.fixture(scope="session")
def canonical_cfg():
    return parse_config(CONFIG_DIR / "canonical.cfg")


@pytest.fixture(scope="session")
def ref_canonical(canonical_cfg):
    """Unit-coefficient reference on the canonical ladder (L=20; N=401, 801)."""
    return reference_level(ALPHA, P, N_DIM, canonical_cfg.reference_ladder())


@pytest.fixture(scope="session")
def ref_fine():
    """Unit-coefficient reference on the fine ladder (L=20; N=801, 1601)."""
    return reference_level(ALPHA, P, N_DIM, [(20.0, 801), (20.0, 1601)])


@pytest.fixture(scope="session")
def canonical_sweep(canonical_cfg):
    """The small-eps sweep of the canonical family, shared by the
    concentration and level-bound checks."""
    return concentration_sweep(
        canonical_cfg.problem(), canonical_cfg.eps_list,
        radii=canonical_cfg.radii, opts=canonical_cfg.solver,
        localization_radius=canonical_cfg.localization_radius,
    )
