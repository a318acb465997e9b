"""Energy pieces, gradients against finite differences, Nehari algebra."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regfrac import (
    CoeffProfile,
    CoeffSpec,
    ConstCoeffProblem,
    Field,
    ProblemSpec,
    ScopeSpec,
    assemble_for,
    check_concentration_gap,
    energy,
    frozen_level,
    gradient,
    level_exponents,
    level_from_field,
    make_grid,
    nehari_scale,
    nonlinear_integral,
    norm_squared,
    quotient,
    sample_profile,
)

ALPHA, P = 0.4, 2.0


def canonical_coeffs():
    return CoeffSpec(
        q=CoeffProfile(kind="lorentz_dip", base=2.0, amplitude=1.0, width=1.0),
        k=CoeffProfile(kind="constant", base=1.0),
    )


def small_problem(n=1, N=81, L=4.0, frame="original", eps=1.0):
    return ProblemSpec(
        alpha=ALPHA, p=P, n=n, eps=eps, frame=frame,
        scope=ScopeSpec(kind="constant", rho0=1.0),
        coeffs=canonical_coeffs(),
        grid=make_grid(n, L, N),
    )


def test_exponent_validation():
    grid = make_grid(1, 1.0, 11)
    scope = ScopeSpec(kind="constant", rho0=1.0)
    co = canonical_coeffs()
    with pytest.raises(ValueError, match="alpha"):
        ProblemSpec(alpha=1.2, p=P, n=1, eps=1.0, frame="original",
                    scope=scope, coeffs=co, grid=grid)
    with pytest.raises(ValueError, match="2\\*alpha"):
        ProblemSpec(alpha=0.6, p=P, n=1, eps=1.0, frame="original",
                    scope=scope, coeffs=co, grid=grid)
    with pytest.raises(ValueError, match="p="):
        ProblemSpec(alpha=ALPHA, p=9.5, n=1, eps=1.0, frame="original",
                    scope=scope, coeffs=co, grid=grid)
    with pytest.raises(ValueError, match="frame"):
        ProblemSpec(alpha=ALPHA, p=P, n=1, eps=1.0, frame="lab",
                    scope=scope, coeffs=co, grid=grid)
    with pytest.raises(ValueError, match="eps"):
        ProblemSpec(alpha=ALPHA, p=P, n=1, eps=0.0, frame="original",
                    scope=scope, coeffs=co, grid=grid)
    with pytest.raises(ValueError, match="dimension"):
        ProblemSpec(alpha=ALPHA, p=P, n=2, eps=1.0, frame="original",
                    scope=scope, coeffs=co, grid=grid)
    with pytest.raises(ValueError, match="positive"):
        ConstCoeffProblem(0.0, 1.0, ALPHA, P, 1, grid)


def test_energy_report_identity():
    prob = small_problem()
    form = assemble_for(prob)
    u = sample_profile(prob.grid, "gaussian", width=0.8)
    rep = energy(prob, form, u)
    assert rep.total == pytest.approx(
        0.5 * (rep.quadratic + rep.potential) - rep.nonlinear / (P + 1),
        rel=1e-14)
    assert rep.quadratic > 0 and rep.potential > 0 and rep.nonlinear > 0
    assert norm_squared(prob, form, u) == pytest.approx(
        rep.quadratic + rep.potential, rel=1e-14)
    assert nonlinear_integral(prob, u) == pytest.approx(rep.nonlinear, rel=1e-14)


def test_gradient_matches_finite_differences():
    prob = small_problem()
    form = assemble_for(prob)
    rng = np.random.default_rng(21)
    base = sample_profile(prob.grid, "gaussian", width=1.2).values
    delta = 1e-5
    for _ in range(3):
        u = base + 0.1 * rng.standard_normal(base.size)
        v = rng.standard_normal(base.size)
        v /= np.sqrt(prob.grid.weight) * np.linalg.norm(v)
        g = gradient(prob, form, Field(prob.grid, u))
        analytic = prob.grid.weight * float(g.values @ v)
        plus = energy(prob, form, Field(prob.grid, u + delta * v)).total
        minus = energy(prob, form, Field(prob.grid, u - delta * v)).total
        fd = (plus - minus) / (2 * delta)
        assert analytic == pytest.approx(fd, rel=1e-6)


def test_frame_prefactor():
    orig = small_problem(frame="original", eps=0.5)
    resc = small_problem(frame="rescaled", eps=0.5)
    assert orig.quad_prefactor() == 0.5 ** (2 * ALPHA)
    assert resc.quad_prefactor() == 1.0
    # original frame samples coefficients at x, rescaled at eps*x
    assert orig.q_values()[0] == pytest.approx(
        canonical_coeffs().q.evaluate(orig.grid.coords)[0], rel=1e-14)
    assert resc.q_values()[0] == pytest.approx(
        canonical_coeffs().q.evaluate(0.5 * resc.grid.coords)[0], rel=1e-14)


def test_nehari_scale_lands_on_manifold():
    prob = small_problem()
    form = assemble_for(prob)
    u = sample_profile(prob.grid, "gaussian", width=0.7, amplitude=2.5)
    t = nehari_scale(prob, form, u)
    proj = Field(prob.grid, t * u.values)
    assert norm_squared(prob, form, proj) == pytest.approx(
        nonlinear_integral(prob, proj), rel=1e-12)


def test_level_is_ray_maximum_of_energy():
    prob = small_problem()
    form = assemble_for(prob)
    u = sample_profile(prob.grid, "gaussian", width=0.7)
    t_star = nehari_scale(prob, form, u)
    e_star = energy(prob, form, Field(prob.grid, t_star * u.values)).total
    assert e_star == pytest.approx(level_from_field(prob, form, u), rel=1e-12)
    for t in np.logspace(-2, 2, 100):
        e_t = energy(prob, form, Field(prob.grid, t * t_star * u.values)).total
        assert e_t <= e_star * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(c=st.floats(min_value=1e-3, max_value=1e3))
def test_level_is_scale_invariant(c):
    prob = small_problem(N=41)
    form = assemble_for(prob)
    u = sample_profile(prob.grid, "gaussian", width=0.7)
    lvl = level_from_field(prob, form, u)
    assert level_from_field(prob, form, Field(prob.grid, c * u.values)) == \
        pytest.approx(lvl, rel=1e-12)
    assert quotient(prob, form, u) == pytest.approx(lvl / (0.5 - 1 / (P + 1)),
                                                   rel=1e-14)


def test_degenerate_field_errors():
    prob = small_problem(N=41)
    form = assemble_for(prob)
    zero = Field(prob.grid, np.zeros(prob.grid.num_nodes))
    with pytest.raises(ValueError, match="zero field"):
        nehari_scale(prob, form, zero)
    with pytest.raises(ValueError, match="zero field"):
        quotient(prob, form, zero)


def test_level_exponents_values():
    theta, sigma = level_exponents(ALPHA, P, 1)
    assert theta == 1.75 and sigma == 2.0
    theta2, sigma2 = level_exponents(0.75, 2.0, 2)
    assert theta2 == pytest.approx(3.0 - 2.0 / 1.5, rel=1e-15)
    assert sigma2 == 2.0


def test_frozen_level_shapes_and_values():
    co = canonical_coeffs()
    d = 10.0
    # Q(0) = 1, K = 1: the frozen level at the origin is the reference itself
    assert frozen_level(0.0, co, ALPHA, P, 1, d) == pytest.approx(d, rel=1e-14)
    xi = np.array([-1.0, 0.0, 1.0])
    vals = frozen_level(xi, co, ALPHA, P, 1, d)
    assert vals.shape == (3,)
    assert vals[0] == vals[2] and vals[1] == pytest.approx(d, rel=1e-14)
    q_at_1 = 2.0 - 1.0 / 2.0
    assert vals[0] == pytest.approx(q_at_1**1.75 * d, rel=1e-13)
    # n=2: a single point versus a stack of points
    one = frozen_level(np.array([0.3, -0.4]), co, ALPHA, P, 2, d)
    many = frozen_level(np.array([[0.3, -0.4], [0.0, 0.0]]), co, ALPHA, P, 2, d)
    assert isinstance(one, float)
    assert many.shape == (2,) and many[0] == pytest.approx(one, rel=1e-14)
    with pytest.raises(ValueError, match="components"):
        frozen_level(np.array([0.3, -0.4, 0.1]), co, ALPHA, P, 2, d)


def test_concentration_gap_canonical_family():
    rep = check_concentration_gap(canonical_coeffs(), ALPHA, P, 1)
    assert rep.holds
    assert rep.argmin[0] == 0.0
    assert rep.limit_ratio == pytest.approx(2.0**1.75, rel=1e-14)
    assert rep.margin == pytest.approx(2.0**1.75 - 1.0, rel=1e-12)


def test_concentration_gap_flat_family_fails():
    flat = CoeffSpec(q=CoeffProfile(kind="constant", base=1.0),
                     k=CoeffProfile(kind="constant", base=2.0))
    rep = check_concentration_gap(flat, ALPHA, P, 1)
    assert not rep.holds and rep.margin == 0.0


def test_concentration_gap_2d_grid():
    co = CoeffSpec(
        q=CoeffProfile(kind="lorentz_dip", base=2.0, amplitude=1.0,
                       center=(1.0, -1.0)),
        k=CoeffProfile(kind="constant", base=1.0),
    )
    rep = check_concentration_gap(co, 0.75, 2.0, 2, halfwidth=4.0, points=81)
    assert rep.holds
    assert np.allclose(rep.argmin, [1.0, -1.0], atol=0.11)


def test_assemble_for_dispatch():
    regional = assemble_for(small_problem(N=41))
    assert not regional.tail_corrected and regional.zero_extension

    infinite = ProblemSpec(
        alpha=ALPHA, p=P, n=1, eps=1.0, frame="original",
        scope=ScopeSpec(kind="infinite", rho0=1.0),
        coeffs=canonical_coeffs(), grid=make_grid(1, 4.0, 41),
    )
    assert assemble_for(infinite).tail_corrected

    const = ConstCoeffProblem(1.0, 1.0, ALPHA, P, 1, make_grid(1, 4.0, 41))
    form = assemble_for(const)
    assert form.tail_corrected and not form.zero_extension
    assert np.all(const.q_values() == 1.0) and np.all(const.k_values() == 1.0)


def test_rescaled_scope_shrinks_with_eps():
    # constant scope rho0 in the rescaled frame becomes rho0/eps
    prob = small_problem(frame="rescaled", eps=0.5, N=41)
    assert np.all(prob.scope_values() == 2.0)
    assert np.all(small_problem(N=41).scope_values() == 1.0)
