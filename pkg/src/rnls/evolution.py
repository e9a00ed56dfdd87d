"""Time integration of the averaged-nonlinearity NLS models.

Two equations share one stepping core, differing only in the linear flow:

  NLS   i d_t phi = -d_z^2 phi + lam F_av(phi)          flow U(t) = e^{i t d_z^2}
  NLS2  i d_t psi = (H - d_z^2) psi + lam F_av(psi)     flow e^{-i t D}

(psi(t) = V(t) phi(t) maps solutions of the first onto the second, which the
duality tests exercise.)  Schemes:

  lawson_rk4  exponential (interaction-picture) RK4: the linear flow is
              applied exactly, classical RK4 integrates the twisted
              nonlinearity.  Order 4.
  strang_rk4  half linear flow, RK4 on the autonomous nonlinear subflow
              (which is *not* modulus-preserving for F_av, hence a real
              integrator and not a phase formula), half linear flow.
              Order 2 (splitting-limited).

Both commute exactly with global gauge rotations and cost four F_av
evaluations per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .basis import SpectralField, norms
from .functionals import FunctionalReport, report
from .nonlinearity import NonlinearityParams, ThetaQuadrature, eval_F_av
from .propagators import phase_plan

__all__ = [
    "SchemeConfig",
    "Trajectory",
    "step_nls",
    "step_nls2",
    "evolve",
    "SCHEMES",
    "TERMINATIONS",
]

SCHEMES = ("lawson_rk4", "strang_rk4")
TERMINATIONS = ("completed", "blowup_detected", "nan_detected")


@dataclass(frozen=True)
class SchemeConfig:
    """Stepping parameters.

    conservation_check_every: cadence (in steps) of functional reports;
    blowup_factor: terminate once ||d_z phi||^2 exceeds this multiple of the
    initial ||d_z phi||^2 (floored at the lowest-z-mode scale of the mass, so
    z-independent data cannot trip on the first step);
    checkpoint_every: cadence of stored fields (0 = first and last only).
    """

    scheme: str = "lawson_rk4"
    dt: float = 1e-3
    T: float = 1.0
    conservation_check_every: int = 10
    blowup_factor: float = 1e4
    checkpoint_every: int = 0

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; use {SCHEMES}")
        if not (self.dt > 0):
            raise ValueError("dt must be positive")
        if self.T < 0:
            raise ValueError("T must be >= 0")
        if self.conservation_check_every < 1:
            raise ValueError("conservation_check_every must be >= 1")
        if self.blowup_factor <= 1:
            raise ValueError("blowup_factor must exceed 1")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be >= 0")


@dataclass
class Trajectory:
    """Recorded output of evolve(): reports (and optional extra diagnostic
    columns) at the check cadence, sparse field checkpoints, the final field,
    and how the run ended."""

    reports: list[FunctionalReport] = dc_field(default_factory=list)
    extras: list[dict] = dc_field(default_factory=list)
    checkpoints: list[SpectralField] = dc_field(default_factory=list)
    final: SpectralField | None = None
    termination: str = "completed"

    @property
    def times(self) -> list[float]:
        return [r.time for r in self.reports]


def _lawson_step(field, dt, params, quad, kind):
    tbl = field.basis
    lam = params.lam

    def rhs(coeffs):
        f = SpectralField(coeffs=coeffs, basis=tbl, time=field.time)
        return (-1j * lam) * eval_F_av(f, params, quad).coeffs

    half = phase_plan(tbl, kind, 0.5 * dt).phases
    halfm = phase_plan(tbl, kind, -0.5 * dt).phases
    full = phase_plan(tbl, kind, dt).phases
    fullm = phase_plan(tbl, kind, -dt).phases

    c = field.coeffs
    k1 = rhs(c)
    k2 = halfm * rhs(half * (c + (0.5 * dt) * k1))
    k3 = halfm * rhs(half * (c + (0.5 * dt) * k2))
    k4 = fullm * rhs(full * (c + dt * k3))
    g = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return SpectralField(coeffs=full * g, basis=tbl, time=field.time + dt)


def _strang_step(field, dt, params, quad, kind):
    tbl = field.basis
    lam = params.lam

    def rhs(coeffs):
        f = SpectralField(coeffs=coeffs, basis=tbl, time=field.time)
        return (-1j * lam) * eval_F_av(f, params, quad).coeffs

    half = phase_plan(tbl, kind, 0.5 * dt).phases
    c = half * field.coeffs
    k1 = rhs(c)
    k2 = rhs(c + (0.5 * dt) * k1)
    k3 = rhs(c + (0.5 * dt) * k2)
    k4 = rhs(c + dt * k3)
    c = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return SpectralField(coeffs=half * c, basis=tbl, time=field.time + dt)


def _step(field, dt, params, quad, scheme, kind):
    if scheme == "lawson_rk4":
        return _lawson_step(field, dt, params, quad, kind)
    if scheme == "strang_rk4":
        return _strang_step(field, dt, params, quad, kind)
    raise ValueError(f"unknown scheme {scheme!r}")


def step_nls(
    field: SpectralField,
    dt: float,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
    scheme: str = "lawson_rk4",
) -> SpectralField:
    """One step of the phi model (dispersion flow U)."""
    return _step(field, dt, params, quad, scheme, "U")


def step_nls2(
    field: SpectralField,
    dt: float,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
    scheme: str = "lawson_rk4",
) -> SpectralField:
    """One step of the psi model (full linear flow D = H - d_z^2)."""
    return _step(field, dt, params, quad, scheme, "D")


def evolve(
    field: SpectralField,
    scfg: SchemeConfig,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
    model: str = "nls",
    extra_diagnostics=None,
    callbacks: tuple = (),
) -> Trajectory:
    """Integrate to T = scfg.T, recording reports at the check cadence.

    model: 'nls' or 'nls2'.  extra_diagnostics: optional callable
    field -> dict appended (aligned with reports) as extra CSV columns.
    callbacks: callables (step_index, field) invoked at record points.
    Step times are t0 + n dt (computed, not accumulated).  Termination is
    'completed', 'blowup_detected' (gradient-norm threshold), or
    'nan_detected' (non-finite coefficients).
    """
    if model not in ("nls", "nls2"):
        raise ValueError("model must be 'nls' or 'nls2'")
    kind = "U" if model == "nls" else "D"
    n_steps = int(round(scfg.T / scfg.dt))
    if abs(n_steps * scfg.dt - scfg.T) > 1e-9 * max(1.0, scfg.T):
        raise ValueError("T must be an integer multiple of dt")

    t0 = field.time
    nn0 = norms(field)
    # z-independent data have grad 0; floor the reference at the lowest-mode
    # gradient scale so the threshold stays meaningful without being inflated.
    k1 = 2.0 * math.pi / field.basis.spec.L_z
    blow_ref = scfg.blowup_factor * max(nn0["grad_z_sq"], nn0["mass_L2"] * k1**2)

    traj = Trajectory()

    def record(step, f):
        traj.reports.append(report(f, params, quad))
        if extra_diagnostics is not None:
            traj.extras.append(dict(extra_diagnostics(f)))
        for cb in callbacks:
            cb(step, f)

    record(0, field)
    traj.checkpoints.append(field)

    cur = field
    for n in range(1, n_steps + 1):
        prev = cur
        try:
            cur = _step(cur, scfg.dt, params, quad, scfg.scheme, kind)
        except FloatingPointError:
            traj.termination = "nan_detected"
            break
        cur = SpectralField(
            coeffs=cur.coeffs, basis=cur.basis, time=t0 + n * scfg.dt
        )
        if not np.all(np.isfinite(cur.coeffs)):
            cur = prev  # keep the last finite field
            traj.termination = "nan_detected"
            break
        grad = norms(cur)["grad_z_sq"]
        if grad > blow_ref:
            traj.final = cur
            traj.termination = "blowup_detected"
            record(n, cur)
            break
        is_record = (n % scfg.conservation_check_every == 0) or n == n_steps
        if is_record:
            record(n, cur)
        if scfg.checkpoint_every and n % scfg.checkpoint_every == 0:
            traj.checkpoints.append(cur)

    if traj.termination == "completed":
        traj.final = cur
        if traj.checkpoints[-1] is not cur and scfg.checkpoint_every == 0:
            traj.checkpoints.append(cur)
    elif traj.final is None:
        traj.final = cur
    return traj
