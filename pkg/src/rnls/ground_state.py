"""Ground states and the variational threshold.

The focusing ground state solves the Euler-Lagrange equation

    (D + 1) Q = F_av(Q),        D = H - d_z^2,

found here by the Petviashvili iteration

    u_{k+1} = M_k^gamma (D+1)^{-1} F_av(u_k),
    M_k     = <(D+1) u_k, u_k> / <F_av(u_k), u_k>,
    gamma   = (2 sigma + 1) / (2 sigma).

The stabilizing factor M_k tends to 1 exactly at a solution, which the
result records along with the relative residual ||(D+1)u - F_av(u)|| / ||u||.
The action threshold admits two independent expressions whose agreement is a
strong consistency check on the solve:

    d = S[Q]                         (action at the ground state)
    d = sigma/(2 sigma + 2) * R(Q)^{(2 sigma + 2)/sigma},
    R(u) = ||u||_{B^1} / ((2/pi) P_pot(u))^{1/(2 sigma + 2)},

with ||u||_{B^1}^2 = mass + hermite + grad_z and P_pot the bare theta-z-y
potential integral.  nehari_project moves a field onto {J^{a,b} = 0} along
the (a, b) scaling orbit; at sigma = 2 the (1, 2) orbit degenerates (both
surviving terms rescale by the same factor) and nehari_project_dilation
projects by a pure z-dilation instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import brentq

from .basis import HermiteTable, SpectralField, gaussian_field, norms
from .functionals import admissible, report, scale
from .nonlinearity import NonlinearityParams, ThetaQuadrature, eval_F_av, potential_energy

__all__ = [
    "GroundStateResult",
    "petviashvili_solve",
    "compute_alpha",
    "threshold_d",
    "gap_check",
    "nehari_project",
    "nehari_amplitude",
    "nehari_project_dilation",
    "level0_soliton",
]


@dataclass
class GroundStateResult:
    Q: SpectralField
    d: float
    residual: float
    quotient: float
    iterations: int
    converged: bool
    trace: list = dc_field(default_factory=list)


def _require_focusing(params: NonlinearityParams) -> None:
    if params.lam != -1.0:
        raise ValueError("ground states exist only for the focusing sign lam = -1")


def _el_shift(table: HermiteTable) -> np.ndarray:
    """(D + 1) symbol on coefficients: 2(a+b+1) + k_eff^2 + 1."""
    return table.eig[:, :, None] + table.k_eff[None, None, :] ** 2 + 1.0


def el_residual(field: SpectralField, params: NonlinearityParams, quad: ThetaQuadrature) -> float:
    """Relative Euler-Lagrange residual ||(D+1)u - F_av(u)|| / ||u||."""
    _require_focusing(params)
    F = eval_F_av(field, params, quad).coeffs
    r = _el_shift(field.basis) * field.coeffs - F
    return float(np.linalg.norm(r) / np.linalg.norm(field.coeffs))


def petviashvili_solve(
    table: HermiteTable,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
    init: SpectralField | None = None,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> GroundStateResult:
    """Fixed-point solve of (D+1)Q = F_av(Q) with Petviashvili stabilization.

    init defaults to the unit Gaussian exp(-(|y|^2 + z^2)/2); pass a
    level-(0,0) datum to stay on the invariant level-0 subspace (sigma = 1).
    Divergence or stagnation is reported through converged=False rather than
    raised, so callers can inspect the trace.
    """
    _require_focusing(params)
    sig = params.sigma
    gamma = (2.0 * sig + 1.0) / (2.0 * sig)
    shift = _el_shift(table)
    inv_shift = 1.0 / shift

    u = init if init is not None else gaussian_field(table, 1.0, 1.0, 1.0)
    c = u.coeffs.astype(np.complex128)

    trace: list = []
    converged = False
    resid = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        fld = SpectralField(coeffs=c, basis=table, time=0.0)
        F = eval_F_av(fld, params, quad).coeffs
        resid = float(np.linalg.norm(shift * c - F) / np.linalg.norm(c))
        num = float((shift * (c.real**2 + c.imag**2)).sum())
        den = float(np.vdot(c, F).real)
        Mk = num / den if den != 0.0 else math.inf
        trace.append({"iter": it, "M": Mk, "residual": resid})
        if not math.isfinite(Mk) or not math.isfinite(resid):
            break
        if resid < tol:
            converged = True
            break
        c = (Mk**gamma) * inv_shift * F

    Q = SpectralField(coeffs=c, basis=table, time=0.0)
    rep = report(Q, params, quad)
    quot = _quotient(Q, params, quad)
    return GroundStateResult(
        Q=Q,
        d=rep.S,
        residual=resid,
        quotient=quot,
        iterations=it,
        converged=converged,
        trace=trace,
    )


def _quotient(field: SpectralField, params: NonlinearityParams, quad: ThetaQuadrature) -> float:
    nn = norms(field)
    b1_full = nn["mass_L2"] + nn["B1_sq"]
    pot = potential_energy(field, params, quad)
    if pot <= 0.0:
        raise ValueError("quotient undefined for a field with vanishing potential term")
    return math.sqrt(b1_full) / ((2.0 / math.pi) * pot) ** (1.0 / (2.0 * params.sigma + 2.0))


def compute_alpha(field: SpectralField, params: NonlinearityParams, quad: ThetaQuadrature) -> float:
    """Scaling alpha making alpha*u an exact Euler-Lagrange point when u is a
    ground-state profile up to amplitude: alpha^{2 sigma} = ||u||_{B^1}^2 / <F_av u, u>.

    Homogeneous of degree -1: alpha(r u) = alpha(u) / r.
    """
    nn = norms(field)
    pot = potential_energy(field, params, quad)
    pair = (2.0 / math.pi) * pot
    if pair <= 0.0:
        raise ValueError("alpha undefined for a field with vanishing potential term")
    return ((nn["mass_L2"] + nn["B1_sq"]) / pair) ** (1.0 / (2.0 * params.sigma))


def threshold_d(
    gs: GroundStateResult,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
    rtol: float = 1e-6,
) -> dict:
    """Both expressions for the threshold and their agreement.

    Returns {'d_action', 'd_quotient', 'agree'}; disagreement beyond rtol
    emits a RuntimeWarning (it almost always means the solve did not
    converge to the ground state).
    """
    sig = params.sigma
    rep = report(gs.Q, params, quad)
    d_action = rep.S
    d_quot = (sig / (2.0 * sig + 2.0)) * gs.quotient ** (2.0 + 2.0 / sig)
    agree = abs(d_action - d_quot) <= rtol * max(1.0, abs(d_action))
    if not agree:
        warnings.warn(
            f"threshold expressions disagree: S[Q]={d_action!r} vs "
            f"quotient form {d_quot!r}",
            RuntimeWarning,
            stacklevel=2,
        )
    return {"d_action": d_action, "d_quotient": d_quot, "agree": agree}


def gap_check(
    field: SpectralField,
    d: float,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
) -> float:
    """The coercivity gap P + (d - S)/4 for below-threshold data with I < 0.

    Valid for 2 < sigma < 4.  Nonnegative gap certifies the virial concavity
    constant; callers should treat a negative return as a failed hypothesis,
    not an error.
    """
    if not (2.0 < params.sigma < 4.0):
        raise ValueError("gap_check applies for 2 < sigma < 4 only")
    rep = report(field, params, quad)
    if rep.S >= d:
        raise ValueError("gap_check requires below-threshold action S < d")
    if rep.I >= 0.0:
        raise ValueError("gap_check applies to the I < 0 (blow-up) region only")
    return rep.P + 0.25 * (d - rep.S)


def _scaling_exponents(a: float, b: float, sigma: float) -> tuple:
    return 2.0 * a - b, 2.0 * a + b, (2.0 * sigma + 2.0) * a - b


def nehari_project(
    field: SpectralField,
    a: float,
    b: float,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
    mu_max: float = 20.0,
) -> tuple:
    """Scale field along the (a, b) orbit onto {J^{a,b} = 0}; returns (field, mu).

    Along the orbit, J(mu) = A1 e^{e1 mu} + A2 e^{e2 mu} - A3 e^{e3 mu} with
    e3 > max(e1, e2) and nonnegative A1, A2, so there is exactly one root when
    A3 > 0.  Degenerate orbits (e3 == e2 with A1 = 0, i.e. (1, 2) at
    sigma = 2) have no root and raise; use nehari_project_dilation there.
    b != 0 resamples the z-grid, so the root must stay within the field's
    spectral headroom (scale() raises otherwise).
    """
    sig = params.sigma
    if not admissible(a, b, sig):
        raise ValueError(f"(a, b) = ({a}, {b}) is not admissible for sigma = {sig}")
    if params.lam != -1.0:
        raise ValueError("Nehari projection is a focusing-sign construction")
    nn = norms(field)
    pot = potential_energy(field, params, quad)
    e1, e2, e3 = _scaling_exponents(a, b, sig)
    A1 = 0.5 * (2.0 * a - b) * (nn["mass_L2"] + nn["hermite_energy"])
    A2 = 0.5 * (2.0 * a + b) * nn["grad_z_sq"]
    A3 = ((2.0 * sig + 2.0) * a - b) / (math.pi * (sig + 1.0)) * pot
    if A3 <= 0.0:
        raise ValueError("field has no potential component; the orbit never meets the manifold")
    if abs(e3 - e2) < 1e-12 and A1 == 0.0:
        raise ValueError(
            "degenerate scaling orbit (single exponent); project by pure dilation instead"
        )

    def Jmu(mu: float) -> float:
        return A1 * math.exp(e1 * mu) + A2 * math.exp(e2 * mu) - A3 * math.exp(e3 * mu)

    lo, hi = -mu_max, mu_max
    # J > 0 far left, < 0 far right; tighten the bracket from mu = 0 outward.
    if Jmu(0.0) > 0.0:
        lo = 0.0
    else:
        hi = 0.0
    mu = brentq(Jmu, lo, hi, xtol=1e-14, rtol=8.9e-16)
    return scale(field, a, b, mu), mu


def nehari_amplitude(
    field: SpectralField,
    a: float,
    b: float,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
) -> tuple:
    """Amplitude move r*field onto {J^{a,b} = 0}; returns (field, r).

    Under a pure amplitude change the quadratic terms of J pick up r^2 and
    the potential term r^{2 sigma + 2}, so r^{2 sigma} = (quadratic)/(potential)
    lands exactly on the manifold.  Unlike the orbit projection this never
    resamples the grid, so it works for arbitrary (even non-localized)
    fields; it is the workhorse for manifold sampling.

    Accepts the closure of the admissible cone (sigma a - b >= 0): on the
    boundary, e.g. (1, 2) at sigma = 2, the manifold {J = 0} = {P = 0} is
    still meaningful even though the scaling orbit degenerates.
    """
    sig = params.sigma
    if not (a > 0 and b >= 0 and 2 * a - b >= 0 and sig * a - b >= 0):
        raise ValueError(f"(a, b) = ({a}, {b}) is outside the closed admissible cone")
    if params.lam != -1.0:
        raise ValueError("Nehari projection is a focusing-sign construction")
    nn = norms(field)
    pot = potential_energy(field, params, quad)
    quadratic = 0.5 * (2.0 * a - b) * (nn["mass_L2"] + nn["hermite_energy"]) + 0.5 * (
        2.0 * a + b
    ) * nn["grad_z_sq"]
    potential = ((2.0 * sig + 2.0) * a - b) / (math.pi * (sig + 1.0)) * pot
    if quadratic <= 0.0 or potential <= 0.0:
        raise ValueError("field misses a quadratic or potential component; no manifold point")
    r = (quadratic / potential) ** (1.0 / (2.0 * sig))
    out = SpectralField(coeffs=r * field.coeffs, basis=field.basis, time=field.time)
    return out, r


def nehari_project_dilation(
    field: SpectralField,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
) -> tuple:
    """Project onto {P = 0} by the pure z-dilation psi(y, z/s); returns (field, s).

    This is the sigma = 2 route, where the (1, 2) orbit degenerates:
    P(psi_s) = 2 grad/s - (2 sigma/(pi (sigma+1))) s pot vanishes at
    s^2 = pi (sigma+1) grad / (sigma pot).  s > 1 shrinks the z-bandwidth,
    s < 1 expands it (resampling guards apply).
    """
    if params.lam != -1.0:
        raise ValueError("Nehari projection is a focusing-sign construction")
    nn = norms(field)
    pot = potential_energy(field, params, quad)
    if pot <= 0.0 or nn["grad_z_sq"] <= 0.0:
        raise ValueError("dilation projection needs both gradient and potential terms")
    s = math.sqrt(math.pi * (params.sigma + 1.0) * nn["grad_z_sq"] / (params.sigma * pot))
    return scale(field, 0.0, 1.0, -math.log(s)), s


def level0_soliton(table: HermiteTable) -> SpectralField:
    """Closed-form ground state of the level-(0, 0) reduction at sigma = 1.

    On that invariant subspace the Euler-Lagrange equation collapses to
    -f'' + 3 f = (1/(2 pi)) |f|^2 f  (the Hermite level contributes +2),
    solved by f(z) = sqrt(12 pi) sech(sqrt(3) z).
    """
    f = math.sqrt(12.0 * math.pi) / np.cosh(math.sqrt(3.0) * table.z)
    c = np.zeros((table.spec.n_modes, table.spec.n_modes, table.spec.N_z), dtype=np.complex128)
    c[0, 0, :] = np.fft.fft(f) * table._zanal
    return SpectralField(coeffs=c, basis=table, time=0.0)
