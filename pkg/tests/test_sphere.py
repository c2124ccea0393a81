"""Tests for the spectral grids: quadrature, transforms, derivatives, and
off-grid evaluation, checked against analytic formulas and scipy oracles."""

import numpy as np
import pytest
from scipy.special import sph_harm_y

from gcflab.errors import FieldShapeError, ParameterError
from gcflab.sphere import (
    average,
    build_grid,
    covariant_hessian,
    eval_direction,
    gradient,
    gradient_norm,
    integrate,
    lowpass,
)


def real_harmonic(l, m, theta, phi):
    """Real spherical harmonic, unit L2 norm on the sphere (scipy-backed)."""
    y = sph_harm_y(l, abs(m), theta, phi)
    if m == 0:
        return y.real
    if m > 0:
        return np.sqrt(2.0) * y.real
    return np.sqrt(2.0) * y.imag


# ---------------------------------------------------------------------------
# grid construction / validation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("dim,kwargs", [
    (1, dict(n=8)),
    (1, dict(n=33)),
    (2, dict(n_theta=4, n_phi=32)),
    (2, dict(n_theta=16, n_phi=15)),
    (2, dict(n_theta=16, n_phi=8)),
    (3, dict(n=32)),
])
def test_grid_rejects_bad_parameters(dim, kwargs):
    with pytest.raises(ParameterError):
        build_grid(dim, **kwargs)


def test_field_shape_is_checked():
    grid = build_grid(1, n=32)
    with pytest.raises(FieldShapeError):
        integrate(grid, np.ones(31))
    with pytest.raises(FieldShapeError):
        integrate(grid, np.full(32, np.nan))


def test_grid_metadata():
    g1 = build_grid(1, n=64)
    assert g1.n_nodes == 64
    assert g1.bandlimit == 31
    assert g1.quad_degree == 63
    assert np.isclose(g1.h_min, 2.0 * np.pi / 64)

    g2 = build_grid(2, n_theta=24, n_phi=48)
    assert g2.n_nodes == 24 * 48
    assert g2.bandlimit == 23
    assert g2.quad_degree == 47
    assert np.isclose(g2.h_min, np.pi / 24)
    # nodes are unit vectors, frames orthonormal and tangent
    assert np.allclose(np.linalg.norm(g2.nodes, axis=1), 1.0, atol=1e-14)
    dots = np.einsum("nij,nj->ni", g2.frames, g2.nodes)
    assert np.max(np.abs(dots)) < 1e-14
    gram = np.einsum("naj,nbj->nab", g2.frames, g2.frames)
    assert np.allclose(gram, np.eye(2), atol=1e-14)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("dim,kwargs,area", [
    (1, dict(n=16), 2 * np.pi),
    (1, dict(n=256), 2 * np.pi),
    (2, dict(n_theta=8, n_phi=16), 4 * np.pi),
    (2, dict(n_theta=32, n_phi=64), 4 * np.pi),
])
def test_weights_sum_to_sphere_area(dim, kwargs, area):
    grid = build_grid(dim, **kwargs)
    total = float(np.sum(grid.weights))
    assert abs(total - area) <= 1e-12 * area, f"weight sum {total} vs {area}"


def test_circle_quadrature_exact_to_degree():
    grid = build_grid(1, n=32)
    th = grid.thetas
    # pure modes integrate to zero up to the quadrature degree
    for k in range(1, grid.quad_degree + 1):
        assert abs(integrate(grid, np.cos(k * th))) < 1e-12
        assert abs(integrate(grid, np.sin(k * th))) < 1e-12
    # squared modes (degree 2k <= quad_degree) integrate to pi
    for k in range(1, grid.quad_degree // 2 + 1):
        val = integrate(grid, np.cos(k * th) ** 2)
        assert abs(val - np.pi) < 1e-12


def test_sphere_quadrature_exact_on_harmonics():
    """Mean-zero and orthonormality of scipy harmonics under the grid rule."""
    grid = build_grid(2, n_theta=12, n_phi=24)
    theta = np.arccos(grid.nodes[:, 2])
    phi = np.arctan2(grid.nodes[:, 1], grid.nodes[:, 0])
    for l in range(1, grid.quad_degree + 1):
        for m in range(-min(l, 6), min(l, 6) + 1):
            y = real_harmonic(l, m, theta, phi)
            assert abs(integrate(grid, y)) < 1e-11, f"mean of Y({l},{m})"
    for l in range(0, grid.quad_degree // 2 + 1):
        for m in (-l, 0, l):
            y = real_harmonic(l, m, theta, phi)
            norm = integrate(grid, y * y)
            assert abs(norm - 1.0) < 1e-11, f"norm of Y({l},{m}) = {norm}"


def test_average_of_constant():
    for grid in (build_grid(1, n=48), build_grid(2, n_theta=10, n_phi=20)):
        assert abs(average(grid, np.full(grid.n_nodes, 3.5)) - 3.5) < 1e-14


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def test_transform_roundtrip_bandlimited():
    rng = np.random.default_rng(7)
    grid = build_grid(2, n_theta=16, n_phi=32)
    L = grid.bandlimit
    coeffs = np.zeros((L + 1, L + 1), dtype=complex)
    for m in range(L + 1):
        coeffs[m, m:] = rng.normal(size=L + 1 - m)
        if m > 0:
            coeffs[m, m:] = coeffs[m, m:] + 1j * rng.normal(size=L + 1 - m)
    u = grid.synthesize(coeffs)
    back = grid.analyze(u)
    assert np.max(np.abs(back - coeffs)) < 1e-12
    again = grid.synthesize(back)
    assert np.max(np.abs(again - u)) < 1e-12


def test_analysis_projects_smooth_fields():
    # exp(x3) is not band-limited but its tail is far below machine precision
    grid = build_grid(2, n_theta=24, n_phi=48)
    u = np.exp(grid.nodes[:, 2])
    v = grid.synthesize(grid.analyze(u))
    assert np.max(np.abs(u - v)) < 1e-12


def test_lowpass_removes_high_modes_only():
    grid = build_grid(1, n=64)
    th = grid.thetas
    u = 1.0 + np.cos(2 * th) + 0.5 * np.sin(29 * th)
    v = lowpass(grid, u, frac=2.0 / 3.0)
    assert np.max(np.abs(v - (1.0 + np.cos(2 * th)))) < 1e-12

    grid2 = build_grid(2, n_theta=12, n_phi=24)
    x = grid2.nodes
    u2 = 1.0 + x[:, 0]
    assert np.max(np.abs(lowpass(grid2, u2, frac=0.5) - u2)) < 1e-12


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------


def test_circle_derivatives_analytic():
    grid = build_grid(1, n=64)
    th = grid.thetas
    for k in (1, 3, 10):
        u = np.cos(k * th)
        g = gradient(grid, u)
        h = covariant_hessian(grid, u)
        assert np.max(np.abs(g[:, 0] + k * np.sin(k * th))) < 1e-10 * k**2
        assert np.max(np.abs(h[:, 0, 0] + k * k * np.cos(k * th))) < 1e-10 * k**2


@pytest.mark.parametrize("j", [0, 1, 2])
def test_linear_fields_have_hessian_minus_ug(j):
    """Coordinate functions x_j satisfy Hess x_j = -x_j g exactly.

    This identity is what makes translations act linearly on support
    functions, so it must hold to machine precision on the grid.
    """
    grid = build_grid(2, n_theta=16, n_phi=32)
    u = grid.nodes[:, j].copy()
    h = covariant_hessian(grid, u)
    expect = -u[:, None, None] * np.eye(2)[None]
    assert np.max(np.abs(h - expect)) < 1e-11
    # and the gradient is the tangential projection of e_j
    e = np.zeros(3)
    e[j] = 1.0
    g = gradient(grid, u)
    assert np.max(np.abs(g - grid.frames @ e)) < 1e-12


def test_harmonic_laplacian_eigenvalues():
    grid = build_grid(2, n_theta=20, n_phi=40)
    theta = np.arccos(grid.nodes[:, 2])
    phi = np.arctan2(grid.nodes[:, 1], grid.nodes[:, 0])
    for l, m in [(2, 1), (4, -3), (7, 0), (9, 5)]:
        y = real_harmonic(l, m, theta, phi)
        h = covariant_hessian(grid, y)
        lap = h[:, 0, 0] + h[:, 1, 1]
        assert np.max(np.abs(lap + l * (l + 1) * y)) < 1e-9, f"(l,m)=({l},{m})"


def test_hessian_of_smooth_field_converges():
    """Covariant Hessian of exp(cos theta): analytic check under refinement."""

    def errs(n_theta, n_phi):
        grid = build_grid(2, n_theta=n_theta, n_phi=n_phi)
        ct = grid.nodes[:, 2]
        st = np.sqrt(1.0 - ct**2)
        u = np.exp(ct)
        h = covariant_hessian(grid, u)
        h11 = (st**2 - ct) * u
        h22 = -ct * u
        return max(
            np.max(np.abs(h[:, 0, 0] - h11)),
            np.max(np.abs(h[:, 1, 1] - h22)),
            np.max(np.abs(h[:, 0, 1])),
        )

    coarse = errs(12, 24)
    fine = errs(16, 32)
    assert fine < 1e-11 or fine < coarse / 10, f"coarse={coarse:.3e} fine={fine:.3e}"
    # roundoff floor: second theta-derivatives amplify eps by ~1/sin^2(theta)
    # at the nodes nearest the poles, so the plateau sits slightly above 1e-11
    assert errs(24, 48) < 5e-11


def test_gradient_norm_matches_components():
    grid = build_grid(2, n_theta=12, n_phi=24)
    u = 1.0 + 0.3 * grid.nodes[:, 0] + 0.1 * grid.nodes[:, 2]
    g = gradient(grid, u)
    assert np.allclose(gradient_norm(grid, u), np.hypot(g[:, 0], g[:, 1]), atol=1e-14)


# ---------------------------------------------------------------------------
# off-grid evaluation
# ---------------------------------------------------------------------------


def test_eval_direction_interpolates_nodes():
    grid = build_grid(1, n=32)
    u = 1.0 + 0.2 * np.cos(3 * grid.thetas)
    assert np.max(np.abs(eval_direction(grid, u, grid.nodes) - u)) < 1e-12

    grid2 = build_grid(2, n_theta=12, n_phi=24)
    u2 = 1.0 + 0.2 * grid2.nodes[:, 0] - 0.1 * grid2.nodes[:, 1] * grid2.nodes[:, 2]
    assert np.max(np.abs(eval_direction(grid2, u2, grid2.nodes) - u2)) < 1e-12


def test_eval_direction_circle_offgrid():
    grid = build_grid(1, n=64)
    u = 2.0 + 0.3 * np.cos(5 * grid.thetas) - 0.1 * np.sin(2 * grid.thetas)
    ang = np.array([0.123, 1.9, 4.4])
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    expect = 2.0 + 0.3 * np.cos(5 * ang) - 0.1 * np.sin(2 * ang)
    assert np.max(np.abs(eval_direction(grid, u, pts) - expect)) < 1e-12


def test_eval_direction_matches_scipy_synthesis():
    """Off-grid evaluation agrees with direct scipy harmonic synthesis."""
    rng = np.random.default_rng(11)
    grid = build_grid(2, n_theta=16, n_phi=32)
    modes = [(0, 0, 0.9), (1, 1, 0.2), (3, -2, 0.15), (5, 0, 0.1), (6, 4, 0.05)]

    def synth(theta, phi):
        out = np.zeros_like(theta)
        for l, m, a in modes:
            out = out + a * real_harmonic(l, m, theta, phi)
        return out

    theta_g = np.arccos(grid.nodes[:, 2])
    phi_g = np.arctan2(grid.nodes[:, 1], grid.nodes[:, 0])
    u = synth(theta_g, phi_g)

    theta = np.arccos(rng.uniform(-0.99, 0.99, size=40))
    phi = rng.uniform(0, 2 * np.pi, size=40)
    pts = np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)],
        axis=1,
    )
    got = eval_direction(grid, u, pts)
    assert np.max(np.abs(got - synth(theta, phi))) < 1e-8


def test_eval_direction_rejects_bad_directions():
    grid = build_grid(1, n=32)
    u = np.ones(32)
    with pytest.raises(ParameterError):
        eval_direction(grid, u, np.array([1.0, 1.0]))
    with pytest.raises(ParameterError):
        eval_direction(grid, u, np.array([[0.5, 0.0, 0.0]]))
