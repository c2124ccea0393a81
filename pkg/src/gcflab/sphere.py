"""Collocation grids and spectral calculus on the unit circle and 2-sphere.

A grid couples quadrature nodes/weights with tabulated basis data so scalar
fields sampled at the nodes can be differentiated, integrated and evaluated
off-grid with spectral accuracy:

* dim 1: uniform angles on S^1, trigonometric (FFT) differentiation;
* dim 2: Gauss-Legendre colatitudes x uniform longitudes, real spherical
  harmonic transform built from fully normalized associated Legendre
  functions.  The node set avoids the poles, so covariant components in the
  orthonormal frame (e_theta, e_phi/sin theta) are well defined everywhere.

The public entry points are :func:`build_grid` and the field operations
(:func:`integrate`, :func:`covariant_hessian`, :func:`eval_direction`, ...).
Everything downstream treats the grid as an opaque handle, which keeps the
geometry code dimension-agnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FieldShapeError, ParameterError

__all__ = [
    "SphereGrid",
    "SupportJet",
    "build_grid",
    "integrate",
    "average",
    "gradient",
    "gradient_norm",
    "covariant_hessian",
    "derivative_bundle",
    "eval_direction",
    "lowpass",
]

_EVAL_CHUNK = 8192  # off-grid evaluation block size (keeps temporaries small)


@dataclass(frozen=True)
class SupportJet:
    """Pointwise derivative data of a nodal field.

    ``grad`` holds the orthonormal-frame components of the tangential
    gradient, ``hess`` the covariant Hessian in the same frame; shapes are
    (n_nodes, dim) and (n_nodes, dim, dim).
    """

    values: np.ndarray
    grad: np.ndarray
    hess: np.ndarray


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Collocation grid on S^dim (dim in {1, 2}).

    Attributes
    ----------
    nodes : (n_nodes, dim+1) unit vectors of the collocation directions.
    weights : quadrature weights; exact for harmonics up to ``quad_degree``.
    frames : (n_nodes, dim, dim+1) orthonormal tangent frames at the nodes.
    bandlimit : largest harmonic degree the transforms resolve.
    h_min : collocation spacing of the highest resolved mode, pi/(bandlimit+1);
        this is the spacing that governs explicit time-step stability.
    """

    dim: int
    shape: tuple
    nodes: np.ndarray
    weights: np.ndarray
    frames: np.ndarray
    area: float
    bandlimit: int
    quad_degree: int
    h_min: float
    # dim-2 only public angle arrays (dim 1 stores angles in `thetas`)
    thetas: np.ndarray = None
    phis: np.ndarray = None
    # private transform tables
    _tab: dict = field(default_factory=dict, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def __repr__(self):  # keep reprs short; tables are large
        return f"SphereGrid(dim={self.dim}, shape={self.shape})"

    # --- transforms -------------------------------------------------------

    def check_field(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_nodes,):
            raise FieldShapeError(
                f"field has shape {values.shape}, grid expects ({self.n_nodes},)"
            )
        if not np.all(np.isfinite(values)):
            raise FieldShapeError("field contains non-finite entries")
        return values

    def analyze(self, values: np.ndarray) -> np.ndarray:
        """Forward transform to spectral coefficients.

        dim 1: complex rfft coefficients divided by N.
        dim 2: complex triangle c[m, l] (zero for l < m) in the orthonormal
        associated-Legendre basis; m >= 0 only, real fields assumed.
        """
        values = self.check_field(values)
        if self.dim == 1:
            return np.fft.rfft(values) / self.shape[0]
        n_theta, n_phi = self.shape
        g = np.fft.rfft(values.reshape(n_theta, n_phi), axis=1) / n_phi
        L = self.bandlimit
        # c[m, l] = sum_i w_i g_m(theta_i) P_lm(x_i)
        return np.einsum("mli,im->ml", self._tab["PW"], g[:, : L + 1])

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`analyze` (exact for band-limited data)."""
        if self.dim == 1:
            return np.fft.irfft(coeffs * self.shape[0], n=self.shape[0])
        n_theta, n_phi = self.shape
        prof = np.einsum("mli,ml->im", self._tab["P"], coeffs)
        return self._phi_synth(prof)

    def _phi_synth(self, prof: np.ndarray) -> np.ndarray:
        """Longitude synthesis of per-m colatitude profiles (n_theta, L+1)."""
        n_theta, n_phi = self.shape
        buf = np.zeros((n_theta, n_phi // 2 + 1), dtype=complex)
        buf[:, : prof.shape[1]] = prof
        return np.fft.irfft(buf * n_phi, n=n_phi, axis=1).reshape(-1)

    def derivative_bundle(self, values: np.ndarray) -> SupportJet:
        """Gradient and covariant Hessian of a nodal field (orthonormal frame).

        The nodal values are kept as-is; derivatives come from the spectral
        representation, the standard pseudo-spectral convention.
        """
        values = self.check_field(values)
        if self.dim == 1:
            n = self.shape[0]
            c = np.fft.rfft(values)
            k = np.arange(c.size)
            ik = 1j * k
            if n % 2 == 0:
                ik[-1] = 0.0  # Nyquist mode has no well-defined odd derivative
            du = np.fft.irfft(ik * c, n=n)
            d2u = np.fft.irfft(-(k**2) * c, n=n)
            return SupportJet(values, du[:, None], d2u[:, None, None])

        n_theta, n_phi = self.shape
        L = self.bandlimit
        g = np.fft.rfft(values.reshape(n_theta, n_phi), axis=1) / n_phi
        c = np.einsum("mli,im->ml", self._tab["PW"], g[:, : L + 1])
        m = np.arange(L + 1)
        prof0 = np.einsum("mli,ml->im", self._tab["P"], c)
        prof1 = np.einsum("mli,ml->im", self._tab["dP"], c)
        prof2 = np.einsum("mli,ml->im", self._tab["d2P"], c)
        u_t = self._phi_synth(prof1)
        u_tt = self._phi_synth(prof2)
        u_p = self._phi_synth(1j * m * prof0)
        u_tp = self._phi_synth(1j * m * prof1)
        u_pp = self._phi_synth(-(m**2) * prof0)

        sin_t = self._tab["sin_flat"]
        cot_t = self._tab["cot_flat"]
        grad = np.stack([u_t, u_p / sin_t], axis=1)
        hess = np.empty((self.n_nodes, 2, 2))
        hess[:, 0, 0] = u_tt
        hess[:, 0, 1] = hess[:, 1, 0] = (u_tp - cot_t * u_p) / sin_t
        hess[:, 1, 1] = u_pp / sin_t**2 + cot_t * u_t
        return SupportJet(values, grad, hess)

    def eval(self, values: np.ndarray, directions: np.ndarray) -> np.ndarray:
        """Evaluate the spectral interpolant at arbitrary unit directions."""
        values = self.check_field(values)
        directions = np.asarray(directions, dtype=float)
        single = directions.ndim == 1
        pts = np.atleast_2d(directions)
        if pts.shape[1] != self.dim + 1:
            raise ParameterError(
                f"directions must have {self.dim + 1} components, got {pts.shape[1]}"
            )
        norms = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise ParameterError("directions must be unit vectors (|x| = 1 within 1e-10)")

        if self.dim == 1:
            ang = np.arctan2(pts[:, 1], pts[:, 0])
            c = np.fft.rfft(values) / self.shape[0]
            out = np.empty(pts.shape[0])
            for lo in range(0, pts.shape[0], _EVAL_CHUNK):
                a = ang[lo : lo + _EVAL_CHUNK]
                acc = np.full(a.shape, c[0].real)
                for k in range(1, c.size):
                    term = c[k] * np.exp(1j * k * a)
                    # Nyquist coefficient represents a pure cosine mode
                    fac = 1.0 if (self.shape[0] % 2 == 0 and k == c.size - 1) else 2.0
                    acc += fac * term.real
                out[lo : lo + _EVAL_CHUNK] = acc
            return out[0] if single else out

        coeffs = self.analyze(values)
        x = np.clip(pts[:, 2], -1.0, 1.0)
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        out = np.empty(pts.shape[0])
        for lo in range(0, pts.shape[0], _EVAL_CHUNK):
            out[lo : lo + _EVAL_CHUNK] = self._eval_block(
                coeffs, x[lo : lo + _EVAL_CHUNK], phi[lo : lo + _EVAL_CHUNK]
            )
        return out[0] if single else out

    def _eval_block(self, coeffs, x, phi):
        """Harmonic synthesis at arbitrary points via the ALF recurrence."""
        L = self.bandlimit
        sin_t = np.sqrt(np.maximum(0.0, 1.0 - x * x))
        acc = np.zeros(x.shape)
        pmm = np.full(x.shape, 1.0 / np.sqrt(2.0))  # normalized P_00
        for m in range(L + 1):
            if m > 0:
                pmm = np.sqrt((2 * m + 1) / (2.0 * m)) * sin_t * pmm
            gm = coeffs[m, m] * pmm
            p_prev, p_curr = np.zeros_like(pmm), pmm
            for l in range(m + 1, L + 1):
                a_l = np.sqrt((l**2 - m**2) / (4.0 * l**2 - 1.0))
                a_lm1 = (
                    np.sqrt(((l - 1) ** 2 - m**2) / (4.0 * (l - 1) ** 2 - 1.0))
                    if l - 1 > m
                    else 0.0
                )
                p_next = (x * p_curr - a_lm1 * p_prev) / a_l
                p_prev, p_curr = p_curr, p_next
                gm = gm + coeffs[m, l] * p_curr
            fac = 1.0 if m == 0 else 2.0
            acc += fac * (gm * np.exp(1j * m * phi)).real
        return acc

    def lowpass(self, values: np.ndarray, frac: float) -> np.ndarray:
        """Zero all modes above ``frac * bandlimit`` (2/3-rule style filter)."""
        c = self.analyze(values)
        cut = int(np.floor(frac * self.bandlimit))
        if self.dim == 1:
            c = c.copy()
            c[cut + 1 :] = 0.0
        else:
            l = np.arange(self.bandlimit + 1)
            c = np.where(l[None, :] > cut, 0.0, c)
        return self.synthesize(c)


# ---------------------------------------------------------------------------
# grid construction
# ---------------------------------------------------------------------------


def _legendre_tables(x: np.ndarray, L: int):
    """Tabulate orthonormal associated Legendre functions and their first two
    theta-derivatives at the points x = cos(theta).

    Normalization: integral of P_lm^2 over [-1, 1] equals 1.  Returned arrays
    have shape (L+1, L+1, len(x)) indexed [m, l, i], zero for l < m.
    """
    nx = x.size
    sin_t = np.sqrt(1.0 - x * x)
    P = np.zeros((L + 1, L + 1, nx))
    dP = np.zeros_like(P)

    pmm = np.full(nx, 1.0 / np.sqrt(2.0))
    for m in range(L + 1):
        if m > 0:
            pmm = np.sqrt((2 * m + 1) / (2.0 * m)) * sin_t * pmm
        P[m, m] = pmm
        for l in range(m + 1, L + 1):
            a_l = np.sqrt((l**2 - m**2) / (4.0 * l**2 - 1.0))
            a_lm1 = (
                np.sqrt(((l - 1) ** 2 - m**2) / (4.0 * (l - 1) ** 2 - 1.0))
                if l - 1 > m
                else 0.0
            )
            P[m, l] = (x * P[m, l - 1] - a_lm1 * P[m, l - 2]) / a_l

    for m in range(L + 1):
        for l in range(m, L + 1):
            if l == 0:
                continue  # dP_00 = 0
            beta = np.sqrt((l**2 - m**2) * (2 * l + 1) / (2.0 * l - 1))
            prev = P[m, l - 1] if l - 1 >= m else 0.0
            dP[m, l] = (l * x * P[m, l] - beta * prev) / sin_t

    l_arr = np.arange(L + 1)[None, :, None]
    m_arr = np.arange(L + 1)[:, None, None]
    cot = (x / sin_t)[None, None, :]
    d2P = -cot * dP - (l_arr * (l_arr + 1) - m_arr**2 / sin_t[None, None, :] ** 2) * P
    # zero the unused lower triangle that the broadcast above may have touched
    mask = (l_arr >= m_arr).astype(float)
    return P * mask, dP * mask, d2P * mask


def build_grid(dim: int, n: int = None, n_theta: int = None, n_phi: int = None) -> SphereGrid:
    """Build a collocation grid on S^1 (``n`` nodes) or S^2 (``n_theta x n_phi``).

    dim 1 requires even n >= 16; dim 2 requires n_theta >= 8 and even
    n_phi >= 16.  Other dimensions are rejected: the tabulated transforms
    below are what make the rest of the package dimension-agnostic.
    """
    if dim == 1:
        if n is None or n < 16 or n % 2:
            raise ParameterError("dim 1 grids need an even node count n >= 16")
        theta = 2.0 * np.pi * np.arange(n) / n
        nodes = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        weights = np.full(n, 2.0 * np.pi / n)
        frames = np.stack([-np.sin(theta), np.cos(theta)], axis=1)[:, None, :]
        bandlimit = n // 2 - 1
        grid = SphereGrid(
            dim=1,
            shape=(n,),
            nodes=_ro(nodes),
            weights=_ro(weights),
            frames=_ro(frames),
            area=2.0 * np.pi,
            bandlimit=bandlimit,
            quad_degree=n - 1,
            h_min=np.pi / (bandlimit + 1),
            thetas=_ro(theta),
        )
        return grid

    if dim != 2:
        raise ParameterError(f"only dim 1 and dim 2 grids are implemented (got {dim})")
    if n_theta is None or n_phi is None:
        raise ParameterError("dim 2 grids need n_theta and n_phi")
    if n_theta < 8 or n_phi < 16 or n_phi % 2:
        raise ParameterError("dim 2 grids need n_theta >= 8 and even n_phi >= 16")

    x_asc, w_gl = np.polynomial.legendre.leggauss(n_theta)
    x = x_asc[::-1].copy()  # descending x <=> ascending colatitude
    w_gl = w_gl[::-1].copy()
    thetas = np.arccos(x)
    phis = 2.0 * np.pi * np.arange(n_phi) / n_phi
    L = min(n_theta - 1, n_phi // 2 - 1)

    sin_t, cos_t = np.sin(thetas), np.cos(thetas)
    st = np.repeat(sin_t, n_phi)
    ct = np.repeat(cos_t, n_phi)
    cp = np.tile(np.cos(phis), n_theta)
    sp = np.tile(np.sin(phis), n_theta)
    nodes = np.stack([st * cp, st * sp, ct], axis=1)
    weights = np.repeat(w_gl, n_phi) * (2.0 * np.pi / n_phi)

    frames = np.empty((n_theta * n_phi, 2, 3))
    frames[:, 0, 0] = ct * cp
    frames[:, 0, 1] = ct * sp
    frames[:, 0, 2] = -st
    frames[:, 1, 0] = -sp
    frames[:, 1, 1] = cp
    frames[:, 1, 2] = 0.0

    P, dP, d2P = _legendre_tables(x, L)
    tab = {
        "P": P,
        "dP": dP,
        "d2P": d2P,
        "PW": P * w_gl[None, None, :],
        "sin_flat": st,
        "cot_flat": ct / st,
    }
    return SphereGrid(
        dim=2,
        shape=(n_theta, n_phi),
        nodes=_ro(nodes),
        weights=_ro(weights),
        frames=_ro(frames),
        area=4.0 * np.pi,
        bandlimit=L,
        quad_degree=min(2 * n_theta - 1, n_phi - 1),
        h_min=np.pi / (L + 1),
        thetas=_ro(thetas),
        phis=_ro(phis),
        _tab=tab,
    )


def _ro(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# field operations (free-function API used throughout the package)
# ---------------------------------------------------------------------------


def integrate(grid: SphereGrid, values) -> float:
    """Quadrature of a nodal field over the sphere (pairwise summation)."""
    values = grid.check_field(values)
    return float(np.sum(grid.weights * values))


def average(grid: SphereGrid, values) -> float:
    """Area average of a nodal field."""
    return integrate(grid, values) / grid.area


def derivative_bundle(grid: SphereGrid, values) -> SupportJet:
    return grid.derivative_bundle(values)


def gradient(grid: SphereGrid, values) -> np.ndarray:
    """Orthonormal-frame components of the tangential gradient."""
    return grid.derivative_bundle(values).grad


def gradient_norm(grid: SphereGrid, values) -> np.ndarray:
    """Pointwise norm of the tangential gradient."""
    g = gradient(grid, values)
    return np.sqrt(np.sum(g * g, axis=1))


def covariant_hessian(grid: SphereGrid, values) -> np.ndarray:
    """Covariant Hessian in the orthonormal frame, shape (n_nodes, dim, dim)."""
    return grid.derivative_bundle(values).hess


def eval_direction(grid: SphereGrid, values, directions) -> np.ndarray:
    """Spectral interpolation of a nodal field at arbitrary unit directions.

    Exact at the nodes for grid-resolved (band-limited) fields; spectrally
    accurate elsewhere.
    """
    return grid.eval(values, directions)


def lowpass(grid: SphereGrid, values, frac: float = 2.0 / 3.0) -> np.ndarray:
    return grid.lowpass(values, frac)
