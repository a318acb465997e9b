"""Config parsing: defaults, echo round-trips, and error reporting."""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regfrac import RunConfig, parse_config, parse_config_string
from regfrac.config import echo_to_text

from conftest import CONFIG_DIR


def test_empty_string_yields_defaults():
    cfg = parse_config_string("")
    assert (cfg.alpha, cfg.p, cfg.n, cfg.eps) == (0.4, 2.0, 1, 1.0)
    assert cfg.frame == "original"
    assert (cfg.box_half_width, cfg.points_per_dim) == (12.0, 401)
    assert cfg.tail_correction and not cfg.shell_correction
    assert cfg.scope.kind == "constant" and cfg.scope.rho0 == 1.0
    assert math.isinf(cfg.scope.rho_inf)
    assert cfg.coeffs.q.kind == "lorentz_dip" and cfg.coeffs.q.base == 2.0
    assert cfg.coeffs.k.kind == "constant" and cfg.coeffs.k.base == 1.0
    assert (cfg.coeffs.a1, cfg.coeffs.a2) == (1.0, 2.0)
    sol = cfg.solver
    assert (sol.max_iters, sol.tol_g, sol.tol_c_rel) == (20000, 1e-8, 1e-9)
    assert sol.restart_centers == () and not sol.symmetrize
    assert (sol.seed, sol.threads) == (0, 1)
    assert cfg.eps_list == (1.0, 0.5, 0.25)
    assert cfg.radii == (1.0, 2.0)
    assert cfg.pairs == ((2.0, 1.0), (1.0, 2.0), (0.5, 1.5))
    assert cfg.ladder == (401, 801) and cfg.ladder_half_width is None
    assert cfg.out_dir == "out"


def test_partial_file_overrides_only_named_keys():
    cfg = parse_config_string("[problem]\neps = 0.25\n\n[solver]\nseed = 9\n")
    assert cfg.eps == 0.25 and cfg.solver.seed == 9
    assert cfg.alpha == 0.4 and cfg.solver.threads == 1


def test_grid_and_ladder_accessors():
    cfg = parse_config_string("[sweep]\nladder = 101, 201\n")
    g = cfg.grid()
    assert (g.n, g.L, g.N) == (1, 12.0, 401)
    assert cfg.reference_ladder() == [(12.0, 101), (12.0, 201)]
    wide = parse_config_string(
        "[sweep]\nladder = 101, 201\nladder_half_width = 20.0\n")
    assert wide.reference_ladder() == [(20.0, 101), (20.0, 201)]


def test_echo_leaves_are_strings():
    echo = parse_config_string("").echo()
    assert set(echo) == {"problem", "scope", "coeffs", "solver", "sweep", "output"}
    for keys in echo.values():
        for val in keys.values():
            assert isinstance(val, str)


def _assert_round_trip(cfg: RunConfig):
    again = parse_config_string(echo_to_text(cfg.echo()), origin="<echo>")
    assert again == cfg


def test_round_trip_defaults():
    _assert_round_trip(parse_config_string(""))


@pytest.mark.parametrize("name", ["canonical.cfg", "scaling.cfg"])
def test_round_trip_shipped_configs(name):
    _assert_round_trip(parse_config(CONFIG_DIR / name))


def test_round_trip_exercises_every_formatter():
    text = """
[problem]
alpha = 0.35
eps = 0.125
frame = rescaled
points_per_dim = 51
box_half_width = 7.5
shell_correction = true

[scope]
kind = saturating
rho0 = 0.75
rho_inf = 2.5
width = 1.25

[coeffs]
q_kind = lorentz_dip
q_base = 3.0
q_center = -0.5
k_kind = lorentz_bump
k_base = 1.0
k_amplitude = 0.5
k_width = 2.0

[solver]
restart_centers = 0.0, 1.5, -2.25
symmetrize = true
threads = 2
seed = 12345

[sweep]
eps_list = 2.0, 1.0
pairs = 2:1, 0.5:1.5
ladder = 51, 101
ladder_half_width = none
spot_checks = 0.1

[output]
dir = elsewhere
"""
    cfg = parse_config_string(text, origin="custom")
    assert cfg.scope.rho_inf == 2.5
    assert cfg.solver.restart_centers == (0.0, 1.5, -2.25)
    assert cfg.solver.symmetrize
    assert cfg.ladder_half_width is None
    assert cfg.pairs == ((2.0, 1.0), (0.5, 1.5))
    _assert_round_trip(cfg)


def test_infinity_spellings_parse():
    for word in ("inf", "+inf", "Infinity"):
        cfg = parse_config_string(f"[scope]\nrho_inf = {word}\n")
        assert math.isinf(cfg.scope.rho_inf)


def test_optional_ladder_half_width():
    assert parse_config_string("[sweep]\nladder_half_width = 18.5\n").ladder_half_width == 18.5
    assert parse_config_string("[sweep]\nladder_half_width =\n").ladder_half_width is None
    assert parse_config_string("[sweep]\nladder_half_width = none\n").ladder_half_width is None


def test_unknown_section_is_an_error():
    with pytest.raises(ValueError, match=r"custom: unknown section \[nope\]"):
        parse_config_string("[nope]\nx = 1\n", origin="custom")


def test_unknown_key_is_an_error():
    with pytest.raises(ValueError, match=r"unknown key 'zeta' in \[problem\]"):
        parse_config_string("[problem]\nzeta = 3\n")


def test_type_errors_name_the_location():
    with pytest.raises(ValueError, match=r"\[problem\] alpha: expected a number"):
        parse_config_string("[problem]\nalpha = abc\n")
    with pytest.raises(ValueError, match=r"\[problem\] n: expected an integer"):
        parse_config_string("[problem]\nn = 1.5\n")
    with pytest.raises(ValueError, match="expected a boolean"):
        parse_config_string("[problem]\ntail_correction = maybe\n")
    with pytest.raises(ValueError, match="expected q:k pairs"):
        parse_config_string("[sweep]\npairs = 2:1:3\n")


def test_ini_syntax_errors_are_wrapped():
    with pytest.raises(ValueError, match="bad.cfg"):
        parse_config_string("not an ini line\n", origin="bad.cfg")


def test_missing_file_is_a_value_error(tmp_path):
    with pytest.raises(ValueError, match="cannot read config"):
        parse_config(tmp_path / "absent.cfg")


def test_hypothesis_violations_surface_at_parse_time():
    # n > 2*alpha fails for alpha close to 1 in one dimension
    with pytest.raises(ValueError):
        parse_config_string("[problem]\nalpha = 0.75\n")
    # supercritical exponent
    with pytest.raises(ValueError):
        parse_config_string("[problem]\np = 10.0\n")
    # the node lattice needs a center point
    with pytest.raises(ValueError):
        parse_config_string("[problem]\npoints_per_dim = 400\n")
    # coefficients must stay uniformly positive
    with pytest.raises(ValueError):
        parse_config_string("[coeffs]\nk_base = 0.0\n")


@settings(max_examples=25, deadline=None)
@given(
    eps=st.floats(0.05, 4.0, allow_nan=False),
    box=st.floats(4.0, 30.0),
    half_points=st.integers(10, 60),
    q_base=st.floats(1.5, 3.0),
    seed=st.integers(0, 2**32 - 1),
    tol_g=st.floats(1e-12, 1e-4),
    symmetrize=st.booleans(),
    samples=st.integers(1, 5000),
)
def test_round_trip_random_configs(eps, box, half_points, q_base, seed,
                                   tol_g, symmetrize, samples):
    text = (
        f"[problem]\neps = {eps!r}\nbox_half_width = {box!r}\n"
        f"points_per_dim = {2 * half_points + 1}\n"
        f"[coeffs]\nq_base = {q_base!r}\n"
        f"[solver]\nseed = {seed}\ntol_g = {tol_g!r}\n"
        f"symmetrize = {str(symmetrize).lower()}\n"
        f"[sweep]\nsamples = {samples}\n"
    )
    _assert_round_trip(parse_config_string(text))
