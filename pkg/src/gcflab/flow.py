"""Time integration of the Gauss-curvature support flow.

Two modes on the same right-hand side scaffold:

    unnormalized   u_t = -1/det A          (bodies shrink, extinct in finite time)
    normalized     u_t = u - 1/det A       (volume preserved by the continuous flow)

Stepping is explicit RK4 with the parabolic restriction

    dt = dt_safety * h_min^2 / max(K * trace A^{-1})

coming from the linearized operator K A^{ij} grad_i grad_j: its largest
coefficient is K trace(A^{-1}), and h_min is the finest resolved scale of the
grid.  Steps whose stages leave the valid-body cone are rejected and retried
with dt/2; collapse below 1e-12 raises :class:`StiffnessError` with the last
state attached.

The stage velocities are dealiased with a 2/3-rule lowpass.  Evaluating
1/det A pointwise on the dimension-2 grid aliases the top of the spectral
band through the colatitude quadrature, and the resulting discrete operator
acquires a large cluster of spurious eigenvalues near +(n+1) (the continuous
rates are (n+1) - l(l+1) <= -(n+1) for l >= 2): round-off seeds those modes
and long runs blow up after the shape has converged.  Filtering the velocity
restores the damping of the continuous operator; the dimension-1 transform
has no such quadrature and is unaffected, but the filter is applied
uniformly.  ``dealias=False`` recovers the raw pointwise scheme.

In normalized mode the discrete volume drifts at O(dt^4); optional projection
rescales the support after every accepted step so the volume stays at the
unit-ball value exactly.  Optional recentering translates the body to its
entropy point after each step: translates of solutions remain solutions (the
origin is a gauge choice), and pinning the entropy point keeps the
linearized translation mode, which grows like e^t, out of long runs.

``FlowTrace`` collects a fixed 15-column diagnostic series; monitor suites
(:func:`monitor_bounds`, :func:`harnack_monitor`) evaluate the a-posteriori
bounds on a finished trace and report violations as data, never as errors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .body import ConvexBody, normalize_volume
from .constants import ball_volume
from .entropy import entropy_point
from .errors import (
    BodyValidityError,
    ParameterError,
    SolverError,
    StepRejected,
    StiffnessError,
)
from .sphere import average, lowpass

__all__ = [
    "FlowConfig",
    "FlowTrace",
    "HarnackReport",
    "MonitorCheck",
    "MonitorReport",
    "dissipation_identity_residual",
    "harnack_monitor",
    "monitor_bounds",
    "run",
    "step",
]

DT_FLOOR = 1e-12
DEALIAS_FRAC = 2.0 / 3.0

TRACE_COLUMNS = (
    "t",
    "dt",
    "volume",
    "entropy",
    "firey",
    "chow",
    "u_min",
    "u_max",
    "gauss_min",
    "gauss_max",
    "trace_a_max",
    "soliton_residual",
    "entropy_point_norm",
    "dissipation",
    "violations",
)


@dataclass(frozen=True)
class FlowConfig:
    """Run parameters.

    ``project_volume=None`` resolves to True in normalized mode and False
    otherwise.  ``fixed_dt`` bypasses the adaptive step size for convergence
    studies; the caller must keep it inside the stability limit (a rejected
    fixed step raises StiffnessError instead of silently shrinking, which
    would corrupt the deterministic step sequence).  ``recenter``
    re-expresses the body about its entropy point after every accepted step;
    ``record_bodies`` keeps the recorded states (needed by the per-node
    Harnack monitor).  ``dealias`` filters the stage velocities (see the
    module docstring); leave it on for anything but discretization studies.
    """

    mode: str = "normalized"
    t_end: float = 1.0
    dt_safety: float = 0.25
    project_volume: bool = None
    output_stride: int = 10
    soliton_tol: float = 1e-6
    fixed_dt: float = None
    recenter: bool = False
    record_bodies: bool = False
    dealias: bool = True
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.mode not in ("normalized", "unnormalized"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if not 0.0 < self.dt_safety <= 1.0:
            raise ParameterError("dt_safety must be in (0, 1]")
        if self.t_end <= 0.0:
            raise ParameterError("t_end must be positive")
        if self.output_stride < 1:
            raise ParameterError("output_stride must be >= 1")
        if self.project_volume and self.mode == "unnormalized":
            raise ParameterError("volume projection only applies to the normalized flow")
        if self.project_volume is None:
            object.__setattr__(self, "project_volume", self.mode == "normalized")


@dataclass
class FlowTrace:
    """Diagnostic time series with a pinned column layout.

    ``rows[i]`` matches ``TRACE_COLUMNS``; the per-row ``violations`` entry
    counts instantaneous monitor breaches (support band, positive curvature,
    the dimension-2 u/K lower bound, Newton's inequality) known at record
    time.  ``bodies`` is populated only when the run recorded states.
    """

    config: FlowConfig
    rows: list = field(default_factory=list)
    bodies: list = field(default_factory=list)
    converged: bool = False
    steps: int = 0
    rejections: int = 0

    def column(self, name: str) -> np.ndarray:
        i = TRACE_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for row in self.rows:
                writer.writerow([repr(v) for v in row])

    def last(self, name: str) -> float:
        return self.rows[-1][TRACE_COLUMNS.index(name)]


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------


def _rhs(body: ConvexBody, normalized: bool, dealias: bool) -> np.ndarray:
    gauss = body.curvature.gauss
    vel = body.support - gauss if normalized else -gauss
    return lowpass(body.grid, vel, DEALIAS_FRAC) if dealias else vel


def step(body: ConvexBody, dt: float, mode: str = "normalized",
         dealias: bool = True) -> ConvexBody:
    """One explicit RK4 step; raises StepRejected if any stage leaves the
    valid-body cone (the caller halves dt and retries)."""
    if dt <= 0.0:
        raise ParameterError("dt must be positive")
    normalized = mode == "normalized"
    grid, u = body.grid, body.support
    try:
        k1 = _rhs(body, normalized, dealias)
        k2 = _rhs(ConvexBody(grid, u + 0.5 * dt * k1), normalized, dealias)
        k3 = _rhs(ConvexBody(grid, u + 0.5 * dt * k2), normalized, dealias)
        k4 = _rhs(ConvexBody(grid, u + dt * k3), normalized, dealias)
        return ConvexBody(grid, u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    except BodyValidityError as exc:
        raise StepRejected(f"dt={dt:.3e}: {exc}") from exc


def stable_dt(body: ConvexBody, safety: float) -> float:
    c = body.curvature
    rate = float(np.max(c.gauss * (c.trace_a * c.gauss if body.dim == 2 else c.gauss)))
    # trace(A^-1) = trace(A)/det(A) in dim 2 and 1/A in dim 1
    return safety * body.grid.h_min**2 / rate


def _count_violations(body: ConvexBody, t: float, cfg: FlowConfig) -> int:
    c = body.curvature
    u = body.support
    bad = 0
    if float(np.min(u)) < 1e-3 or float(np.max(u)) > 1e3:
        bad += 1
    if float(np.min(c.det_a)) <= 0.0:
        bad += 1
    if body.dim == 2:
        if cfg.mode == "normalized" and t >= 0.1:
            floor = (1.0 / 3.0) * (1.0 - np.exp(-t)) ** (2.0 / 3.0)
            if float(np.min(u / c.gauss)) < floor:
                bad += 1
        # Newton's inequality for A: (sigma_1/2)^2 >= sigma_2
        if float(np.min((0.5 * c.trace_a) ** 2 - c.det_a)) < -1e-9:
            bad += 1
    return bad


def run(body: ConvexBody, config: FlowConfig):
    """Integrate the flow; returns (FlowTrace, final body).

    Records a row at t = 0, every ``output_stride`` accepted steps, and at
    the end.  In normalized mode the run also stops early once the soliton
    residual max|u det A - 1| falls below ``soliton_tol``.
    """
    cfg = config
    normalized = cfg.mode == "normalized"
    if cfg.project_volume:
        body = normalize_volume(body)
    if cfg.recenter:
        body = body.translate(entropy_point(body)[0])

    trace = FlowTrace(config=cfg)
    z_e = np.zeros(body.dim + 1)

    def record(t, dt_used):
        nonlocal z_e
        c = body.curvature
        u = body.support
        z_e, e_val, _ = entropy_point(body, z0=_safe_start(body, z_e))
        log_u = np.log(u)
        ratio = c.gauss / u
        dissipation = float(average(body.grid, ratio + 1.0 / ratio)) - 2.0
        trace.rows.append(
            (
                t,
                dt_used,
                body.volume(),
                e_val,
                float(average(body.grid, log_u)),
                float(average(body.grid, np.log(c.gauss))),
                float(np.min(u)),
                float(np.max(u)),
                float(np.min(c.gauss)),
                float(np.max(c.gauss)),
                float(np.max(c.trace_a)),
                float(np.max(np.abs(u * c.det_a - 1.0))),
                float(np.linalg.norm(z_e)),
                dissipation,
                _count_violations(body, t, cfg),
            )
        )
        if cfg.record_bodies:
            trace.bodies.append(body)

    t = 0.0
    record(t, 0.0)
    if normalized and trace.last("soliton_residual") < cfg.soliton_tol:
        trace.converged = True
        return trace, body

    # relative guard: after many steps the accumulated t carries round-off
    # ~ steps * eps * t_end, and an absolute epsilon would let a spurious
    # ~1e-14 leftover step through (duplicating the final record time)
    t_done = cfg.t_end * (1.0 - 1e-9)
    while t < t_done and trace.steps < cfg.max_steps:
        dt = cfg.fixed_dt if cfg.fixed_dt else stable_dt(body, cfg.dt_safety)
        dt = min(dt, cfg.t_end - t)
        while True:
            try:
                new_body = step(body, dt, cfg.mode, cfg.dealias)
                break
            except StepRejected:
                trace.rejections += 1
                if cfg.fixed_dt:
                    # a fixed step size exists for reproducible sequences;
                    # silently substituting smaller steps would corrupt them
                    raise StiffnessError(t, dt, body)
                dt *= 0.5
                if dt < DT_FLOOR:
                    raise StiffnessError(t, dt, body)
        if cfg.project_volume:
            new_body = normalize_volume(new_body)
        if cfg.recenter:
            z = entropy_point(new_body, z0=_safe_start(new_body, z_e))[0]
            new_body = new_body.translate(z)
        body = new_body
        t += dt
        trace.steps += 1
        residual = float(np.max(np.abs(body.support * body.curvature.det_a - 1.0)))
        done = t >= t_done
        if normalized and residual < cfg.soliton_tol:
            trace.converged = True
            done = True
        if done or trace.steps % cfg.output_stride == 0:
            record(t, dt)
        if done:
            break

    if trace.steps >= cfg.max_steps and t < t_done:
        raise SolverError(f"step budget {cfg.max_steps} exhausted at t={t:.6g}")
    return trace, body


def _safe_start(body: ConvexBody, z: np.ndarray):
    """Warm start for the entropy Newton, reset if no longer deep interior."""
    u_z = body.support_about(z)
    if np.min(u_z) > 2e-6 * float(np.max(body.support)):
        return z
    return None


# ---------------------------------------------------------------------------
# post-hoc analyses
# ---------------------------------------------------------------------------


def dissipation_identity_residual(trace: FlowTrace, t_min: float = None) -> float:
    """Max over interior rows of |d(avg log u)/dt + D(t)|.

    Three-point nonuniform centered differences on the recorded times.  The
    identity d/dt avg log u = -D holds exactly for the normalized flow while
    avg(u det A) = 1, so the residual is O(dt_record^2) + quadrature error.
    ``t_min`` restricts the reported max to rows with t >= t_min (transients
    at the first record can otherwise dominate); the difference stencil
    always uses the full row sequence, so the set of differenced times does
    not shift with the record spacing and residuals at different spacings
    stay comparable row by row.
    """
    t = trace.t
    e_f = trace.column("firey")
    d = trace.column("dissipation")
    if len(t) < 3:
        raise ParameterError("need at least 3 recorded rows")
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    deriv = (
        h1**2 * e_f[2:] + (h2**2 - h1**2) * e_f[1:-1] - h2**2 * e_f[:-2]
    ) / (h1 * h2 * (h1 + h2))
    resid = np.abs(deriv + d[1:-1])
    if t_min is not None:
        resid = resid[t[1:-1] >= t_min - 1e-14]
        if resid.size == 0:
            raise ParameterError("t_min excludes every interior row")
    return float(np.max(resid))


@dataclass(frozen=True)
class MonitorCheck:
    name: str
    ok: bool
    value: float
    detail: str = ""
    skipped: bool = False


@dataclass(frozen=True)
class MonitorReport:
    checks: tuple
    drift_constant: float

    def all_ok(self) -> bool:
        return all(c.ok for c in self.checks)


def monitor_bounds(trace: FlowTrace) -> MonitorReport:
    """Evaluate the a-posteriori monitor suite on a normalized-mode trace.

    Hard assertions: the two-sided support band, the dimension-2 u/K lower
    bound after t = 0.1, Newton's inequality (via the per-row violation
    counter), the entropy/Firey monotonicity, and the integrated dissipation
    inequality.  Curvature and trace bounds are reported as run constants
    (their boundedness is the claim; the constants are body-dependent).
    The drift constant C in |e(t)|^2 <= C (E - avg log u) is fitted, never
    asserted.
    """
    t = trace.t
    if len(t) < 2:
        raise ParameterError("need at least 2 recorded rows")
    u_min = trace.column("u_min")
    u_max = trace.column("u_max")
    k_min = trace.column("gauss_min")
    k_max = trace.column("gauss_max")
    tr_max = trace.column("trace_a_max")
    e_val = trace.column("entropy")
    e_f = trace.column("firey")
    e_c = trace.column("chow")
    e_norm = trace.column("entropy_point_norm")

    checks = []

    def add(name, ok, value, detail="", skipped=False):
        checks.append(MonitorCheck(name, bool(ok), float(value), detail, skipped))

    band_lo, band_hi = float(np.min(u_min)), float(np.max(u_max))
    add("support-band", band_lo >= 1e-3 and band_hi <= 1e3, band_lo,
        f"support stays in [{band_lo:.3e}, {band_hi:.3e}]")
    add("gauss-upper", np.isfinite(k_max).all(), float(np.max(k_max)),
        "run constant: max K")
    late = t >= 1.0
    if late.any():
        add("gauss-lower-late", bool(np.min(k_min[late]) > 0.0),
            float(np.min(k_min[late])), "run constant: min K for t >= 1")
    else:
        add("gauss-lower-late", True, 0.0, "run shorter than t = 1", skipped=True)
    add("trace-bound", np.isfinite(tr_max).all(), float(np.max(tr_max)),
        "run constant: max trace A")

    # pointwise monitors were folded into the per-row violation counter
    violations = trace.column("violations")
    add("pointwise", bool(np.max(violations) == 0), float(np.max(violations)),
        "per-row violation counter (support band, K > 0, u/K floor, Newton)")

    # entropy monotonicity along records
    rise_e = float(np.max(np.diff(e_val))) if len(t) > 1 else 0.0
    add("entropy-monotone", rise_e <= 1e-9, rise_e, "max recorded increase of E")
    rise_f = float(np.max(np.diff(e_f))) if len(t) > 1 else 0.0
    add("firey-monotone", rise_f <= 1e-9, rise_f, "max recorded increase of avg log u")

    # integrated dissipation inequality via trapezoid sums:
    # E(t0) - E(t1) <= int_{t1}^{t0} (E - E_C) dt <= 0 for t1 <= t0
    integrand = e_val - e_c
    cum = np.concatenate(
        [[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(t))]
    )
    inc = float(np.max(np.diff(cum))) if len(t) > 1 else 0.0
    add("dissipation-integral-nonpositive", inc <= 1e-9, inc,
        "max trapezoid increment of cumulative (E - E_C)")
    gap = e_val - cum  # E(t) - C(t) must be non-increasing
    rise_gap = float(np.max(np.diff(gap))) if len(t) > 1 else 0.0
    add("dissipation-integral-dominates", rise_gap <= 1e-6, rise_gap,
        "max increase of E(t) - cumulative integral")

    # drift constant fit |e|^2 <= C (E - E_F)
    gap_ef = e_val - e_f
    mask = gap_ef > 1e-13
    drift_c = float(np.max(e_norm[mask] ** 2 / gap_ef[mask])) if mask.any() else 0.0
    add("entropy-point-drift", True, drift_c,
        "fitted C in |e|^2 <= C (E - avg log u); reported, not asserted")

    return MonitorReport(checks=tuple(checks), drift_constant=drift_c)


@dataclass(frozen=True)
class HarnackReport:
    ok: bool
    worst_monotonicity_slack: float
    lower_constant: float
    t_extinction_estimate: float
    detail: str = ""


def harnack_monitor(trace: FlowTrace) -> HarnackReport:
    """Per-node Harnack checks on an un-normalized run with recorded bodies.

    (i) K(x,t) t^{n/(n+1)} non-decreasing in t at every node (slack 1e-6);
    (ii) K(x,t) (T-t)^{n/(n+1)} bounded below by a positive run constant,
    with the extinction time T estimated by linear extrapolation of the
    exactly-linear volume decay (reported as approximate, never assumed).
    """
    if trace.config.mode != "unnormalized":
        raise ParameterError("Harnack monitor applies to un-normalized runs")
    if len(trace.bodies) < 3:
        raise ParameterError("need a run recorded with record_bodies=True (>= 3 rows)")
    t = trace.t
    n = trace.bodies[0].dim
    p = n / (n + 1.0)
    gauss = np.stack([b.curvature.gauss for b in trace.bodies])  # (rows, nodes)

    # (i) monotonicity of K t^p between consecutive recorded times
    weighted = gauss * t[:, None] ** p
    slack = float(np.min(np.diff(weighted, axis=0))) if len(t) > 1 else 0.0
    mono_ok = slack >= -1e-6

    # (ii) lower bound with extrapolated extinction time
    v = trace.column("volume")
    rate = (v[-2] - v[-1]) / (t[-1] - t[-2])
    if rate <= 0.0:
        raise SolverError("volume is not decreasing; cannot extrapolate extinction")
    t_ext = t[-1] + v[-1] / rate
    rem = (t_ext - t) ** p
    lower = float(np.min(gauss * rem[:, None]))

    return HarnackReport(
        ok=mono_ok and lower > 0.0,
        worst_monotonicity_slack=slack,
        lower_constant=lower,
        t_extinction_estimate=float(t_ext),
        detail=f"extinction estimated at t = {t_ext:.6g} (extrapolated)",
    )
