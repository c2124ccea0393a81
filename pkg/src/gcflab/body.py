"""Convex bodies represented by support functions on a spectral grid.

A body is a positive nodal field u (the support function) whose
radii-of-curvature matrix

    A = Hess u + u g        (covariant Hessian, orthonormal frame)

is positive definite at every node.  ``ConvexBody`` freezes the samples and
checks both conditions up front; the derived curvature quantities (det A,
Gauss curvature K = 1/det A, boundary embedding X = u x + grad u, ...) are
computed once and cached.

Shape generators live in :func:`make_shape`.  Smooth non-polynomial shapes
are screened for spectral aliasing on the requested grid: a non-negligible
tail near the bandlimit triggers :class:`~gcflab.errors.AliasingWarning`
rather than an error, because mild aliasing merely degrades accuracy while
severe aliasing already fails the convexity check.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .constants import ball_volume
from .errors import AliasingWarning, BodyValidityError, ParameterError, SolverError
from .sphere import SphereGrid, integrate

__all__ = [
    "ConvexBody",
    "CurvatureData",
    "GeometrySummary",
    "circumradius",
    "geometry_summary",
    "harmonic_field",
    "inradius",
    "make_shape",
    "normalize_volume",
]

MIN_SUPPORT = 1e-8  # positivity threshold for u
MIN_CURVATURE_EIG = 1e-8  # definiteness threshold for A
TAIL_WARN = 1e-7  # relative spectral-tail size that triggers AliasingWarning


@dataclass(frozen=True)
class CurvatureData:
    """Pointwise curvature quantities of a body (all nodal arrays).

    ``a`` is the radii-of-curvature matrix A = Hess u + u g; its eigenvalues
    are the principal radii of curvature, det A the curvature radius product
    and ``gauss = 1/det A`` the Gauss curvature as a function of the normal.
    ``mean_curvature`` is trace(A^-1), the sum of the principal curvatures.
    ``sigma_w[k-1]`` holds the k-th elementary symmetric function of the
    principal curvatures (eigenvalues of A^-1) and ``sigma_a[k-1]`` the same
    for the curvature radii (eigenvalues of A), k = 1..dim.
    ``position`` is the boundary embedding X = u x + grad u (the point of the
    body whose outer normal is the node direction).
    """

    a: np.ndarray
    det_a: np.ndarray
    gauss: np.ndarray
    trace_a: np.ndarray
    mean_curvature: np.ndarray
    min_eig_a: np.ndarray
    sigma_w: tuple
    sigma_a: tuple
    grad: np.ndarray
    grad_norm: np.ndarray
    position: np.ndarray
    position_norm: np.ndarray


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """A convex body given by support samples on a grid.

    Raises
    ------
    BodyValidityError
        If the support is not positive (``invariant="positivity"``) or the
        radii-of-curvature matrix is not positive definite
        (``invariant="convexity"``) within the package thresholds.
    """

    grid: SphereGrid
    support: np.ndarray

    def __post_init__(self):
        u = self.grid.check_field(self.support).copy()
        u.setflags(write=False)
        object.__setattr__(self, "support", u)
        u_min = float(np.min(u))
        if u_min <= MIN_SUPPORT:
            raise BodyValidityError(
                "positivity", f"min support {u_min:.3e} <= {MIN_SUPPORT:.0e}"
            )
        eig = float(np.min(self.curvature.min_eig_a))
        if eig <= MIN_CURVATURE_EIG:
            raise BodyValidityError(
                "convexity",
                f"min curvature-matrix eigenvalue {eig:.3e} <= {MIN_CURVATURE_EIG:.0e}",
            )

    @cached_property
    def curvature(self) -> CurvatureData:
        grid = self.grid
        jet = grid.derivative_bundle(self.support)
        u = jet.values
        dim = grid.dim
        a = jet.hess + u[:, None, None] * np.eye(dim)[None]
        if dim == 1:
            det = a[:, 0, 0]
            trace = det
            min_eig = det
            mean_curv = 1.0 / det
            sigma_w = (1.0 / det,)
            sigma_a = (det,)
        else:
            a11, a22, a12 = a[:, 0, 0], a[:, 1, 1], a[:, 0, 1]
            det = a11 * a22 - a12 * a12
            trace = a11 + a22
            disc = np.sqrt(np.maximum(0.0, (0.5 * (a11 - a22)) ** 2 + a12 * a12))
            min_eig = 0.5 * trace - disc
            mean_curv = trace / det
            sigma_w = (mean_curv, 1.0 / det)
            sigma_a = (trace, det)
        grad_norm = np.sqrt(np.sum(jet.grad**2, axis=1))
        position = u[:, None] * grid.nodes + np.einsum(
            "na,naj->nj", jet.grad, grid.frames
        )
        return CurvatureData(
            a=a,
            det_a=det,
            gauss=1.0 / det,
            trace_a=trace,
            mean_curvature=mean_curv,
            min_eig_a=min_eig,
            sigma_w=sigma_w,
            sigma_a=sigma_a,
            grad=jet.grad,
            grad_norm=grad_norm,
            position=position,
            position_norm=np.sqrt(np.sum(position**2, axis=1)),
        )

    # --- basic geometry ---------------------------------------------------

    @property
    def dim(self) -> int:
        return self.grid.dim

    def volume(self) -> float:
        """Enclosed volume, (1/(dim+1)) * int u det A."""
        return integrate(self.grid, self.support * self.curvature.det_a) / (
            self.dim + 1
        )

    def area(self) -> float:
        """Boundary measure, int det A (perimeter for dim 1)."""
        return integrate(self.grid, self.curvature.det_a)

    def translate(self, z) -> "ConvexBody":
        """The body re-expressed with the origin moved to z.

        Support functions transform by u -> u - <z, x>; the subtraction is
        exact at the nodes because linear functions are grid-resolved.
        """
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim + 1,):
            raise ParameterError(f"z must have shape ({self.dim + 1},), got {z.shape}")
        return ConvexBody(self.grid, self.support - self.grid.nodes @ z)

    def support_about(self, z) -> np.ndarray:
        """Nodal support samples relative to origin z (no validity check)."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim + 1,):
            raise ParameterError(f"z must have shape ({self.dim + 1},), got {z.shape}")
        return self.support - self.grid.nodes @ z

    def dual_volume(self, z=None) -> float:
        """Volume of the polar body about z, (1/(dim+1)) * int u_z^-(dim+1).

        Requires z strictly interior (u_z > 0 at every node).
        """
        u_z = self.support if z is None else self.support_about(z)
        if np.min(u_z) <= 0.0:
            raise ParameterError("z is not interior to the body (u_z <= 0 somewhere)")
        return integrate(self.grid, u_z ** -(self.dim + 1)) / (self.dim + 1)

    def scale(self, factor: float) -> "ConvexBody":
        if factor <= 0.0:
            raise ParameterError("scale factor must be positive")
        return ConvexBody(self.grid, self.support * factor)


def normalize_volume(body: ConvexBody) -> ConvexBody:
    """Rescale so the volume equals the unit-ball volume exactly.

    Volume is homogeneous of degree dim+1 in the support function, so the
    factor is (V_ball / V)^(1/(dim+1)).
    """
    factor = (ball_volume(body.dim) / body.volume()) ** (1.0 / (body.dim + 1))
    return body.scale(factor)


# ---------------------------------------------------------------------------
# widths, radii, summary
# ---------------------------------------------------------------------------


def inradius(body: ConvexBody, max_iter: int = 500, tol: float = 1e-8):
    """Inradius and incenter via subgradient ascent.

    Maximizes the concave piecewise-linear function
    f(z) = min over nodes of (u - <z, x>), starting from the origin, with
    Polyak-style steps against an adaptive target level.  Returns
    (radius, center) for the best iterate seen.
    """
    grid, u = body.grid, body.support
    nodes = grid.nodes
    z = np.zeros(body.dim + 1)

    def f_and_g(z):
        vals = u - nodes @ z
        i = int(np.argmin(vals))
        return float(vals[i]), -nodes[i]

    f_best, z_best = f_and_g(z)[0], z.copy()
    delta = max(0.1 * abs(f_best), 1e-3)
    since_improve = 0
    for _ in range(max_iter):
        f_z, g = f_and_g(z)
        if f_z > f_best + 1e-15:
            f_best, z_best = f_z, z.copy()
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= 20:
                delta *= 0.5
                since_improve = 0
        if delta < tol:
            break
        step = f_best + delta - f_z  # Polyak step; |g| = 1 so no normalization
        z = z + max(step, 0.0) * g
    return f_best, z_best


def circumradius(body: ConvexBody, max_iter: int = 800, tol: float = 1e-9):
    """Circumradius and circumcenter (smallest ball enclosing the boundary).

    Minimizes the convex function f(z) = max over nodes of |X - z| over the
    sampled boundary points X, by the same Polyak-level subgradient scheme
    as :func:`inradius`, initialized at the centroid of the samples.
    Returns (radius, center) for the best iterate seen.
    """
    pts = body.curvature.position
    z = pts.mean(axis=0)

    def f_and_g(z):
        d = pts - z[None, :]
        r2 = np.sum(d * d, axis=1)
        i = int(np.argmax(r2))
        r = float(np.sqrt(r2[i]))
        return r, -d[i] / r

    f_best, z_best = f_and_g(z)[0], z.copy()
    delta = max(0.1 * f_best, 1e-3)
    since_improve = 0
    for _ in range(max_iter):
        f_z, g = f_and_g(z)
        if f_z < f_best - 1e-15:
            f_best, z_best = f_z, z.copy()
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= 20:
                delta *= 0.5
                since_improve = 0
        if delta < tol:
            break
        step = f_z - f_best + delta  # level step, always > 0
        z = z - step * g
    return f_best, z_best


def _antipodal(grid: SphereGrid, u: np.ndarray) -> np.ndarray:
    """Samples of u at the antipodes of the nodes.

    Both grids are antipodally symmetric (even counts; Gauss-Legendre
    colatitudes come in +/- pairs), so this is an index permutation.
    """
    if grid.dim == 1:
        return np.roll(u, grid.shape[0] // 2)
    n_theta, n_phi = grid.shape
    v = u.reshape(n_theta, n_phi)[::-1, :]
    return np.roll(v, n_phi // 2, axis=1).ravel()


@dataclass(frozen=True)
class GeometrySummary:
    """Scalar geometry of a body: volume, boundary measure, extremal radii
    (about the best centers, not the current origin) and widths.

    ``diameter`` equals ``w_plus``: the diameter of a convex body is its
    largest width.  Invariants: rho_minus <= rho_plus, w_minus <= w_plus.
    """

    volume: float
    area: float
    rho_plus: float
    rho_minus: float
    w_plus: float
    w_minus: float
    diameter: float
    incenter: np.ndarray
    circumcenter: np.ndarray


def geometry_summary(body: ConvexBody) -> GeometrySummary:
    """Compute a :class:`GeometrySummary`.

    Widths pair each node with its antipode (exact on these grids);
    rho_minus/rho_plus solve the in- and circumscribed-ball problems with
    deterministic subgradient iterations, so they are translation invariant
    up to the solver tolerance.  Extrema are over the node set, which at the
    package's working resolutions biases them far below the tolerances used
    downstream.
    """
    u = body.support
    widths = u + _antipodal(body.grid, u)
    rho_minus, incenter = inradius(body)
    rho_plus, circumcenter = circumradius(body)
    w_plus = float(np.max(widths))
    return GeometrySummary(
        volume=body.volume(),
        area=body.area(),
        rho_plus=rho_plus,
        rho_minus=rho_minus,
        w_plus=w_plus,
        w_minus=float(np.min(widths)),
        diameter=w_plus,
        incenter=incenter,
        circumcenter=circumcenter,
    )


# ---------------------------------------------------------------------------
# shape generators
# ---------------------------------------------------------------------------


def harmonic_field(grid: SphereGrid, modes) -> np.ndarray:
    """Nodal field from a list of harmonic modes.

    dim 1: entries (k, a, b) contribute a*cos(k t) + b*sin(k t).
    dim 2: entries (l, m, a) contribute a times the unit-norm real harmonic
    of degree l and order m (m > 0 cosine-type, m < 0 sine-type).
    """
    if grid.dim == 1:
        th = grid.thetas
        out = np.zeros(grid.n_nodes)
        for k, a, b in modes:
            k = int(k)
            if not 0 <= k <= grid.bandlimit:
                raise ParameterError(f"mode k={k} outside bandlimit {grid.bandlimit}")
            out += a * np.cos(k * th) + b * np.sin(k * th)
        return out

    L = grid.bandlimit
    coeffs = np.zeros((L + 1, L + 1), dtype=complex)
    for l, m, a in modes:
        l, m = int(l), int(m)
        if not 0 <= l <= L or abs(m) > l:
            raise ParameterError(f"mode (l={l}, m={m}) outside bandlimit {L}")
        if m == 0:
            coeffs[0, l] += a / np.sqrt(2.0 * np.pi)
        elif m > 0:
            coeffs[m, l] += a / (2.0 * np.sqrt(np.pi))
        else:
            coeffs[-m, l] += -1j * a / (2.0 * np.sqrt(np.pi))
    return grid.synthesize(coeffs)


def spectral_tail(grid: SphereGrid, u: np.ndarray) -> float:
    """Relative magnitude of u's spectrum in the top third of the band.

    A smooth well-resolved field decays well below round-off there; values
    above ~1e-7 mean the grid is marginal for this shape and derivatives
    (hence curvature) lose accuracy.
    """
    coeffs = grid.analyze(u)
    L = grid.bandlimit
    lo = (2 * L) // 3
    if grid.dim == 1:
        tail = float(np.max(np.abs(coeffs[lo:])))
    else:
        degrees = np.arange(L + 1)
        orders = np.arange(L + 1)
        band = (degrees[None, :] >= lo) & (degrees[None, :] >= orders[:, None])
        tail = float(np.max(np.abs(coeffs[band])))
    return tail / max(float(np.max(np.abs(u))), 1e-300)


def _warn_if_aliased(grid: SphereGrid, u: np.ndarray, what: str):
    tail = spectral_tail(grid, u)
    if tail > TAIL_WARN:
        warnings.warn(
            f"{what}: relative spectral tail {tail:.2e} near the grid bandlimit "
            f"{grid.bandlimit}; curvature may be under-resolved on this grid",
            AliasingWarning,
            stacklevel=3,
        )


def make_shape(grid: SphereGrid, kind: str, normalize: bool = False, **params) -> ConvexBody:
    """Construct a named shape on a grid.

    Kinds
    -----
    ball : radius (default 1.0)
    translated_ball : radius, center (interior point, |center| < radius)
    ellipsoid : semiaxes, tuple of dim+1 positive numbers
    harmonic : base (default 1.0) plus modes as in :func:`harmonic_field`
    random_valid : seed, l_max, amplitude, translation — random band-limited
        perturbation of the unit ball, amplitude shrunk until the body is
        valid.

    With ``normalize=True`` the result is rescaled to unit-ball volume.
    Smooth non-polynomial shapes (the ellipsoid) are screened for spectral
    aliasing on the requested grid; a marginal tail emits
    :class:`AliasingWarning` (severe aliasing fails the convexity check).
    """
    dim = grid.dim
    if kind == "ball":
        radius = float(params.pop("radius", 1.0))
        _no_extra(params)
        if radius <= 0:
            raise ParameterError("radius must be positive")
        body = ConvexBody(grid, np.full(grid.n_nodes, radius))

    elif kind == "translated_ball":
        radius = float(params.pop("radius", 1.0))
        center = np.asarray(params.pop("center"), dtype=float)
        _no_extra(params)
        if center.shape != (dim + 1,):
            raise ParameterError(f"center must have shape ({dim + 1},)")
        if np.linalg.norm(center) >= radius:
            raise ParameterError("center must lie strictly inside the ball")
        body = ConvexBody(grid, radius + grid.nodes @ center)

    elif kind == "ellipsoid":
        semiaxes = np.asarray(params.pop("semiaxes"), dtype=float)
        _no_extra(params)
        if semiaxes.shape != (dim + 1,) or np.any(semiaxes <= 0):
            raise ParameterError(f"semiaxes must be {dim + 1} positive numbers")
        u = np.sqrt(np.sum((semiaxes[None, :] * grid.nodes) ** 2, axis=1))
        _warn_if_aliased(grid, u, f"ellipsoid{tuple(float(s) for s in semiaxes)}")
        body = ConvexBody(grid, u)

    elif kind == "harmonic":
        base = float(params.pop("base", 1.0))
        modes = params.pop("modes")
        _no_extra(params)
        body = ConvexBody(grid, base + harmonic_field(grid, modes))

    elif kind == "random_valid":
        body = _random_valid(grid, **params)

    else:
        raise ParameterError(f"unknown shape kind {kind!r}")

    return normalize_volume(body) if normalize else body


def _no_extra(params):
    if params:
        raise ParameterError(f"unexpected shape parameters: {sorted(params)}")


def _random_valid(
    grid: SphereGrid,
    seed: int = 0,
    l_max: int = None,
    amplitude: float = 0.3,
    translation: float = 0.0,
    decay: float = 0.6,
    parity: str = "any",
) -> ConvexBody:
    """Random smooth perturbation of the unit ball, shrunk until valid.

    ``parity="even"`` keeps only even-degree modes, giving a centrally
    symmetric body (useful for flows, where odd content is a pure
    translation mode).
    """
    rng = np.random.default_rng(seed)
    if l_max is None:
        l_max = min(8, max(2, grid.bandlimit // 3))
    if l_max > grid.bandlimit:
        raise ParameterError(f"l_max {l_max} exceeds grid bandlimit {grid.bandlimit}")
    if parity not in ("any", "even"):
        raise ParameterError("parity must be 'any' or 'even'")

    modes = []
    if grid.dim == 1:
        for k in range(2, l_max + 1):
            a, b = rng.normal(size=2) * decay ** (k - 2)
            if parity == "even" and k % 2:
                continue
            modes.append((k, a, b))
    else:
        for l in range(2, l_max + 1):
            for m in range(-l, l + 1):
                c = rng.normal() * decay ** (l - 2) / (2 * l + 1)
                if parity == "even" and l % 2:
                    continue
                modes.append((l, m, c))
    bump = harmonic_field(grid, modes)
    peak = float(np.max(np.abs(bump)))
    if peak > 0:
        bump = bump / peak  # unit sup-norm; `amplitude` is the actual size

    shift = np.zeros(grid.dim + 1)
    if translation:
        v = rng.normal(size=grid.dim + 1)
        shift = translation * v / np.linalg.norm(v)

    amp = amplitude
    for _ in range(40):
        try:
            return ConvexBody(grid, 1.0 + amp * bump + grid.nodes @ shift)
        except BodyValidityError:
            amp *= 0.7
    raise SolverError(
        f"random_valid(seed={seed}) found no valid amplitude after 40 shrinks"
    )
