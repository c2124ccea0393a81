"""Entropy functionals of convex bodies and their distinguished points.

The central object is

    F(z) = avg over S^n of log(u - <z, x>),

the spherical mean of the log support function about a reference point z.
Its supremum over interior z is the body's entropy E; the maximizer is the
entropy point z_e.  F is strictly concave in z, so a damped Newton iteration
converges globally.  The Santalo point minimizes the polar volume and is
found the same way on a strictly convex objective.

``entropy_report`` bundles the functional values with the inequality suite
they satisfy.  The scale constants in the radius/width bounds are derived by
this package (see :mod:`gcflab.constants`) and flagged as such in the report.

Monte Carlo routines re-derive the log integral and the polar mass-center
condition from the signed weighted-volume identity: for interior z,

    int log u_z dtheta = (int over B(1)-P_z minus int over P_z-B(1)) of |w|^-(n+1),

where P_z is the polar body about z (membership r * u_z(x) <= 1).  They are
deliberately independent of the quadrature pipeline: support values at random
directions come from off-grid spectral evaluation, and the sampler is a
counter-based generator split into fixed chunks so results do not depend on
how the sample range is partitioned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox

from .body import ConvexBody, geometry_summary
from .constants import (
    CONSTANT_PROVENANCE,
    ball_volume,
    inner_scale_constant,
    outer_scale_constant,
    santalo_support_constant,
    sphere_area,
)
from .errors import ConcavityError, ParameterError, SolverError
from .sphere import average, eval_direction

__all__ = [
    "EntropyReport",
    "InequalityCheck",
    "chow_entropy",
    "entropy",
    "entropy_mass_center_residual",
    "entropy_point",
    "entropy_report",
    "firey_entropy",
    "mc_log_integral",
    "mc_polar_mass_center",
    "santalo_point",
]

MAX_NEWTON_STEPS = 100
# Newton converges quadratically, so a tolerance well under the documented
# 1e-8 costs at most one extra step and pins the points to ~1e-11.
GRAD_TOL = 1e-11
MC_CHUNK = 1 << 16


def firey_entropy(body: ConvexBody) -> float:
    """Spherical mean of log u about the current origin."""
    return average(body.grid, np.log(body.support))


def chow_entropy(body: ConvexBody) -> float:
    """Spherical mean of log K (K the Gauss curvature as a normal function)."""
    return average(body.grid, np.log(body.curvature.gauss))


# ---------------------------------------------------------------------------
# distinguished points (damped Newton)
# ---------------------------------------------------------------------------


def _interior_floor(u: np.ndarray) -> float:
    # Iterates stay this far inside; the optimum is strictly interior so the
    # constraint is inactive at convergence.
    return 1e-6 * float(np.max(u))


def entropy_point(body: ConvexBody, z0=None):
    """Maximize F(z) = avg log(u - <z,x>); return (z_e, E, residual).

    ``residual`` is max_j |avg x_j/u_e|, the first-order condition.  Damped
    Newton with backtracking: steps keep u_z above a small interior floor and
    must not decrease F.  The Hessian -avg x x^T / u_z^2 is checked to be
    negative definite at every iterate.

    Raises
    ------
    SolverError
        No convergence within 100 steps (carries the last iterate).
    ConcavityError
        The Newton model lost definiteness.
    """
    grid = body.grid
    u, x, w = body.support, grid.nodes, grid.weights
    floor = _interior_floor(u)
    z = np.zeros(body.dim + 1) if z0 is None else np.asarray(z0, dtype=float)
    if z.shape != (body.dim + 1,):
        raise ParameterError(f"z0 must have shape ({body.dim + 1},)")
    u_z = u - x @ z
    if np.min(u_z) <= floor:
        raise ParameterError("z0 is not sufficiently interior")
    f_val = average(grid, np.log(u_z))

    for _ in range(MAX_NEWTON_STEPS):
        inv = 1.0 / u_z
        grad = -(w * inv) @ x / grid.area
        # the gradient scales like 1/u under dilation, so the tolerance must
        # follow suit for small bodies or Newton stalls at the round-off floor
        if np.linalg.norm(grad) <= GRAD_TOL * max(1.0, float(np.max(inv))):
            return z, f_val, float(np.max(np.abs(grad)))
        hess = -(x.T * (w * inv * inv)) @ x / grid.area
        if np.linalg.eigvalsh(hess)[-1] >= 0.0:
            raise ConcavityError(f"entropy Hessian not negative definite at z={z}")
        step = np.linalg.solve(hess, -grad)
        t = 1.0
        for _ in range(60):
            z_try = z + t * step
            u_try = u - x @ z_try
            if np.min(u_try) > floor:
                f_try = average(grid, np.log(u_try))
                if f_try >= f_val - 1e-14:
                    break
            t *= 0.5
        else:
            raise SolverError(f"entropy point: line search failed at z={z}")
        z, u_z, f_val = z_try, u_try, f_try

    raise SolverError(
        f"entropy point: no convergence in {MAX_NEWTON_STEPS} steps "
        f"(last z={z}, |grad|={np.linalg.norm(grad):.3e})"
    )


def entropy(body: ConvexBody) -> float:
    """The entropy E = sup_z avg log(u - <z,x>)."""
    return entropy_point(body)[1]


def santalo_point(body: ConvexBody, z0=None):
    """Minimize the polar volume over the reference point; return (z_s, Vstar).

    The objective V*(z) = (1/(dim+1)) int u_z^-(dim+1) is strictly convex;
    damped Newton with the same interior floor as :func:`entropy_point`.
    """
    grid = body.grid
    n = body.dim
    u, x, w = body.support, grid.nodes, grid.weights
    floor = _interior_floor(u)
    z = np.zeros(n + 1) if z0 is None else np.asarray(z0, dtype=float)
    if z.shape != (n + 1,):
        raise ParameterError(f"z0 must have shape ({n + 1},)")
    u_z = u - x @ z
    if np.min(u_z) <= floor:
        raise ParameterError("z0 is not sufficiently interior")

    def value(u_z):
        return float(np.sum(w * u_z ** -(n + 1))) / (n + 1)

    f_val = value(u_z)
    for _ in range(MAX_NEWTON_STEPS):
        grad = (w * u_z ** -(n + 2)) @ x
        # same dilation-aware tolerance as the entropy point; here the
        # gradient scales like u^-(dim+2)
        if np.linalg.norm(grad) <= GRAD_TOL * max(1.0, float(np.min(u_z)) ** -(n + 2)):
            return z, f_val
        hess = (n + 2) * (x.T * (w * u_z ** -(n + 3))) @ x
        if np.linalg.eigvalsh(hess)[0] <= 0.0:
            raise ConcavityError(f"polar-volume Hessian not positive definite at z={z}")
        step = np.linalg.solve(hess, -grad)
        t = 1.0
        for _ in range(60):
            z_try = z + t * step
            u_try = u - x @ z_try
            if np.min(u_try) > floor:
                f_try = value(u_try)
                if f_try <= f_val + 1e-14:
                    break
            t *= 0.5
        else:
            raise SolverError(f"Santalo point: line search failed at z={z}")
        z, u_z, f_val = z_try, u_try, f_try

    raise SolverError(
        f"Santalo point: no convergence in {MAX_NEWTON_STEPS} steps "
        f"(last z={z}, |grad|={np.linalg.norm(grad):.3e})"
    )


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InequalityCheck:
    """One inequality lhs >= rhs, with ``ok = lhs >= rhs - tol``."""

    name: str
    lhs: float
    rhs: float
    ok: bool
    tol: float


@dataclass(frozen=True)
class EntropyReport:
    """Entropy values, distinguished points, and the inequality suite.

    The radius/width bounds use scale constants derived by this package
    (``constant_provenance`` marks them as derived, not quoted).
    """

    dim: int
    volume: float
    entropy: float
    entropy_point: np.ndarray
    first_order_residual: float
    firey: float
    chow: float
    santalo_point: np.ndarray
    dual_vol_at_santalo: float
    dual_vol_at_origin: float
    checks: tuple
    constant_provenance: str = field(default=CONSTANT_PROVENANCE)

    def all_ok(self) -> bool:
        return all(c.ok for c in self.checks)


def entropy_report(body: ConvexBody) -> EntropyReport:
    """Evaluate the full entropy suite on one body.

    The inequality checks are written in volume-corrected form so they hold
    for every valid body; at unit-ball volume they reduce to the plain chain
    E_C >= E >= E_F together with the radius, width, and polar bounds.
    """
    n = body.dim
    vol = body.volume()
    v_ball = ball_volume(n)
    z_e, e_val, residual = entropy_point(body)
    e_f = firey_entropy(body)
    e_c = chow_entropy(body)
    z_s, v_star = santalo_point(body)
    summary = geometry_summary(body)
    u_s_min = float(np.min(body.support_about(z_s)))

    def mk(name, lhs, rhs, tol=1e-8):
        return InequalityCheck(name, float(lhs), float(rhs), bool(lhs >= rhs - tol), tol)

    checks = (
        mk("chow-dominates-entropy", e_c + np.log(vol / v_ball), e_val),
        mk("entropy-dominates-origin", e_val, e_f, tol=1e-9),
        mk("entropy-volume-bound", e_val, (np.log(vol) - np.log(v_ball)) / (n + 1)),
        mk(
            "outer-radius-bound",
            outer_scale_constant(n) * np.exp(e_val),
            max(summary.w_plus, summary.rho_plus),
        ),
        mk(
            "inner-radius-bound",
            min(summary.rho_minus, summary.w_minus),
            inner_scale_constant(n) * vol * np.exp(-n * e_val),
        ),
        mk(
            "santalo-support-bound",
            u_s_min,
            santalo_support_constant(n) * vol * np.exp(-n * e_val),
        ),
        mk("santalo-product-bound", v_ball**2, vol * v_star),
    )
    return EntropyReport(
        dim=n,
        volume=vol,
        entropy=e_val,
        entropy_point=z_e,
        first_order_residual=residual,
        firey=e_f,
        chow=e_c,
        santalo_point=z_s,
        dual_vol_at_santalo=v_star,
        dual_vol_at_origin=body.dual_volume(),
        checks=checks,
    )


# ---------------------------------------------------------------------------
# Monte Carlo oracles
# ---------------------------------------------------------------------------


def _sample_chunks(seed: int, n_samples: int):
    """Fixed partition of the sample range into counter-based substreams.

    Chunk i always covers samples [i*MC_CHUNK, ...) with its own jumped
    stream, so the estimate does not depend on how chunks are scheduled.
    """
    base = Philox(key=seed)
    n_full, rem = divmod(n_samples, MC_CHUNK)
    for i in range(n_full):
        yield Generator(base.jumped(i)), MC_CHUNK
    if rem:
        yield Generator(base.jumped(n_full)), rem


def _uniform_directions(rng, count, dim_ambient):
    v = rng.normal(size=(count, dim_ambient))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def mc_log_integral(body: ConvexBody, z=None, samples: int = 100_000, seed: int = 0):
    """Monte Carlo estimate of int log u_z dtheta; returns (estimate, stderr).

    Uses the signed weighted volume of the symmetric difference between the
    unit ball and the polar body about z, sampled uniformly (in volume) on
    the annulus min(1, 1/max u_z) <= |w| <= max(1, 1/min u_z) that contains
    it; both bodies contain the inner ball, which also keeps the weight
    |w|^-(n+1) bounded.  If the annulus is empty the integral is exactly 0.
    An infinite stderr flags the (pathological) case of no hits at all.
    """
    if samples < 10_000:
        raise ParameterError("need at least 10^4 samples")
    n = body.dim
    grid = body.grid
    z = np.zeros(n + 1) if z is None else np.asarray(z, dtype=float)
    u_z = body.support_about(z)
    if np.min(u_z) <= 0.0:
        raise ParameterError("z is not interior to the body")

    r_lo = min(1.0, 1.0 / float(np.max(u_z)))
    r_hi = max(1.0, 1.0 / float(np.min(u_z)))
    if r_hi - r_lo <= 1e-15:
        return 0.0, 0.0
    p_lo, p_hi = r_lo ** (n + 1), r_hi ** (n + 1)
    vol_annulus = sphere_area(n) * (p_hi - p_lo) / (n + 1)

    total = 0.0
    total_sq = 0.0
    hits = 0
    for rng, count in _sample_chunks(seed, samples):
        dirs = _uniform_directions(rng, count, n + 1)
        r = (p_lo + rng.random(count) * (p_hi - p_lo)) ** (1.0 / (n + 1))
        s = eval_direction(grid, body.support, dirs) - dirs @ z
        in_polar = r * s <= 1.0
        in_ball = r <= 1.0
        sign = np.where(in_ball & ~in_polar, 1.0, 0.0) - np.where(
            in_polar & ~in_ball, 1.0, 0.0
        )
        f = vol_annulus * sign * r ** -(n + 1)
        total += float(np.sum(f))
        total_sq += float(np.sum(f * f))
        hits += int(np.count_nonzero(sign))

    mean = total / samples
    var = max(0.0, total_sq / samples - mean * mean)
    stderr = np.sqrt(var / samples)
    if hits == 0:
        return 0.0, float("inf")
    return mean, stderr


def mc_polar_mass_center(body: ConvexBody, z=None, samples: int = 100_000, seed: int = 0):
    """Monte Carlo mass center of the polar body with weight |w|^-(n+1).

    Estimates m_j = int_{P_z} w_j |w|^-(n+1) dmu (zero exactly at the entropy
    point).  Sampling is uniform in (radius, direction) on the enclosing ball
    of the polar body — under the weight, the radial integrand is constant,
    so this importance choice keeps the variance finite.  Returns
    (m, stderr) as vectors.
    """
    if samples < 10_000:
        raise ParameterError("need at least 10^4 samples")
    n = body.dim
    grid = body.grid
    z = np.zeros(n + 1) if z is None else np.asarray(z, dtype=float)
    u_z = body.support_about(z)
    if np.min(u_z) <= 0.0:
        raise ParameterError("z is not interior to the body")
    r_max = 1.0 / float(np.min(u_z))
    scale = sphere_area(n) * r_max

    total = np.zeros(n + 1)
    total_sq = np.zeros(n + 1)
    for rng, count in _sample_chunks(seed, samples):
        dirs = _uniform_directions(rng, count, n + 1)
        r = r_max * rng.random(count)
        s = eval_direction(grid, body.support, dirs) - dirs @ z
        inside = (r * s <= 1.0).astype(float)
        v = scale * dirs * inside[:, None]
        total += np.sum(v, axis=0)
        total_sq += np.sum(v * v, axis=0)

    mean = total / samples
    var = np.maximum(0.0, total_sq / samples - mean * mean)
    return mean, np.sqrt(var / samples)


def entropy_mass_center_residual(
    body: ConvexBody, z=None, samples: int = 100_000, seed: int = 0
):
    """Norm of the Monte Carlo polar mass center and its propagated stderr.

    With z omitted the entropy point is used, where the residual should be
    statistically consistent with zero.
    """
    if z is None:
        z = entropy_point(body)[0]
    m, se = mc_polar_mass_center(body, z, samples=samples, seed=seed)
    return float(np.linalg.norm(m)), float(np.linalg.norm(se))
