"""Localized virial weights and concavity monitoring.

W(t) = int chi(z) |phi|^2 dx with its first two time derivatives

    W'  = 2 Im int d_z phi conj(phi) chi'(z),
    W'' = 4 int |d_z phi|^2 chi''
          - (4 sigma/(pi (sigma+1))) int_theta int |V(theta) phi|^{2 sigma+2} chi''
          - int |phi|^2 chi''''.

For chi = z^2 (kind 'untruncated_z2') the last term drops and W'' = 4 P
identically.  Blow-up monitoring rests on the concavity bound
W'' <= -4 C1 with

    C1 = (d - S[phi_0]) / 4        for 2 < sigma < 4,
    C1 = -P[phi_0]                 for sigma = 2 (where P = 4E is conserved),

which forces W under the envelope W(0) + W'(0) T - C1 T^2 and hence to
vanish by its positive root.

The truncated weight is a quintic Hermite blend on [R, 2R] from (z^2, 2z, 2)
down to (0, 0, 0), with every stated pointwise bound checked on the grid at
build time and construction aborted on any violation.  Note the bounds are
mutually unsatisfiable on a resolved grid: dropping the value z^2 -> 0 over a
single length R while chi'' <= 2 would require the slope to jump, and indeed
the blend's curvature peaks at ~10.01 regardless of R.  The abort (with the
measured excess) is therefore the expected outcome whenever the grid resolves
the transition; only the z^2 weight is used by the monitors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import HermiteTable, SpectralField
from .functionals import report, classify
from .nonlinearity import NonlinearityParams, ThetaQuadrature, potential_energy

__all__ = [
    "VirialWeight",
    "build_weight",
    "W_and_derivatives",
    "concavity_monitor",
    "WEIGHT_KINDS",
]

WEIGHT_KINDS = ("untruncated_z2", "truncated")

# dimensionless transition polynomial q(t) = chi(R(1+t))/R^2 on t in [0, 1]:
# the unique quintic with q(0)=1, q'(0)=2, q''(0)=2 and a triple zero at t=1,
# i.e. q(t) = (1-t)^3 (13 t^2 + 5 t + 1).
_Q = np.array([1.0, 2.0, 1.0, -25.0, 34.0, -13.0])  # ascending powers
_Q1 = np.polynomial.polynomial.polyder(_Q)
_Q2 = np.polynomial.polynomial.polyder(_Q1)
_Q3 = np.polynomial.polynomial.polyder(_Q2)
_Q4 = np.polynomial.polynomial.polyder(_Q3)


@dataclass(frozen=True, eq=False)
class VirialWeight:
    """chi and its derivatives sampled on the z-grid."""

    kind: str
    R: float
    chi: np.ndarray
    chi1: np.ndarray
    chi2: np.ndarray
    chi4: np.ndarray


def _polyval(c: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.polynomial.polynomial.polyval(t, c)


def build_weight(
    table: HermiteTable,
    kind: str = "untruncated_z2",
    R: float | None = None,
    slack: float = 1e-12,
) -> VirialWeight:
    """Sample a virial weight on the grid; pointwise-verify its bounds.

    untruncated_z2: chi = z^2 (chi'' = 2, chi'''' = 0), no parameters.
    truncated: requires 2R < L_z/2; quintic Hermite blend on [R, 2R], zero
    beyond.  The stated bounds (0 <= chi <= z^2, chi'' <= 2 + slack,
    chi'''' <= 4/R + slack) are checked on every grid point and a ValueError
    reports the worst violation.  See the module docstring: on grids that
    resolve the transition, the curvature bound cannot hold and the abort is
    the documented outcome.
    """
    z = table.z
    if kind == "untruncated_z2":
        return VirialWeight(
            kind=kind,
            R=math.inf,
            chi=z**2,
            chi1=2.0 * z,
            chi2=np.full_like(z, 2.0),
            chi4=np.zeros_like(z),
        )
    if kind != "truncated":
        raise ValueError(f"unknown weight kind {kind!r}; use {WEIGHT_KINDS}")
    if R is None or not (R > 0):
        raise ValueError("truncated weight needs a radius R > 0")
    if not (2.0 * R < 0.5 * table.spec.L_z):
        raise ValueError(
            f"truncation must fit the box: 2R = {2*R:g} >= L_z/2 = {table.spec.L_z/2:g}"
        )

    az = np.abs(z)
    chi = np.where(az <= R, z**2, 0.0)
    chi1 = np.where(az <= R, 2.0 * z, 0.0)
    chi2 = np.where(az <= R, 2.0, 0.0)
    chi4 = np.zeros_like(z)
    trans = (az > R) & (az < 2.0 * R)
    t = (az[trans] - R) / R
    sgn = np.sign(z[trans])
    chi[trans] = _polyval(_Q, t) * R**2
    chi1[trans] = _polyval(_Q1, t) * R * sgn  # odd extension
    chi2[trans] = _polyval(_Q2, t)
    chi4[trans] = _polyval(_Q4, t) / R**2

    problems = []
    if float(chi.min()) < -slack:
        problems.append(f"chi >= 0 fails by {-float(chi.min()):.3e}")
    excess_sq = float((chi - z**2).max())
    if excess_sq > slack:
        problems.append(f"chi <= z^2 fails by {excess_sq:.3e}")
    c2max = float(chi2.max())
    if c2max > 2.0 + slack:
        problems.append(f"chi'' <= 2 fails: max {c2max:.6f}")
    c4max = float(chi4.max())
    if c4max > 4.0 / R + slack:
        problems.append(f"chi'''' <= 4/R = {4.0/R:.3e} fails: max {c4max:.3e}")
    if problems:
        raise ValueError(
            "truncated weight bound violation on the grid: " + "; ".join(problems)
        )
    return VirialWeight(kind=kind, R=float(R), chi=chi, chi1=chi1, chi2=chi2, chi4=chi4)


def _z_profiles(field: SpectralField) -> tuple:
    """Grid-space z-profiles, derivatives, and the grid measure.

    Returns (vals, dvals, dvals_odd, dz).  dvals keeps the full spectrum so
    that sum |dvals|^2 dz reproduces the spectral gradient energy by Parseval
    (the W'' = 4 P identity stays exact); dvals_odd zeroes the unpaired
    Nyquist mode, the skew-symmetric convention for odd-order derivatives (a
    real profile keeps a real derivative, so W' of real data vanishes).
    """
    t = field.basis
    vals = np.fft.ifft(field.coeffs * t._zsynth, axis=-1)
    spec = field.coeffs * t._zsynth
    dvals = np.fft.ifft((1j * t.k_eff) * spec, axis=-1)
    dk = 1j * t.k_eff.copy()
    dk[int(np.argmin(t.k_eff))] = 0.0
    dvals_odd = np.fft.ifft(dk * spec, axis=-1)
    dz = t.spec.L_z / t.spec.N_z
    return vals, dvals, dvals_odd, dz


def W_and_derivatives(
    field: SpectralField,
    weight: VirialWeight,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
) -> dict:
    """Collocation values of W, W', W'' for the given weight."""
    vals, dvals, dvals_odd, dz = _z_profiles(field)
    dens = (vals.real**2 + vals.imag**2).sum(axis=(0, 1))
    ddens = (dvals.real**2 + dvals.imag**2).sum(axis=(0, 1))
    cross = 2.0 * (dvals_odd * vals.conj()).imag.sum(axis=(0, 1))

    W = float((weight.chi * dens).sum() * dz)
    Wp = float((weight.chi1 * cross).sum() * dz)
    sig = params.sigma
    pot_w = potential_energy(field, params, quad, z_weight=weight.chi2)
    Wpp = float(
        4.0 * (weight.chi2 * ddens).sum() * dz
        - (4.0 * sig / (math.pi * (sig + 1.0))) * pot_w
        - (weight.chi4 * dens).sum() * dz
    )
    return {"W": W, "Wp": Wp, "Wpp": Wpp}


def concavity_monitor(
    trajectory,
    weight: VirialWeight,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
    d: float | None = None,
    slack: float = 1e-8,
) -> dict:
    """Concavity of W along a blow-up-type run and the predicted vanishing time.

    The trajectory must carry W/Wp/Wpp extras (evolve with
    extra_diagnostics=lambda f: W_and_derivatives(f, weight, ...)).  The
    initial datum must classify as blow-up type (K-), which needs the
    threshold d; at sigma = 2 the monitor also tracks the conserved identity
    P = 4E.  Returns C1, the pointwise concavity margin
    max(Wpp + 4 C1) (<= slack when the bound holds), and the envelope root

        T* = (Wp(0) + sqrt(Wp(0)^2 + 4 C1 W(0))) / (2 C1),

    the time by which W(0) + Wp(0) T - C1 T^2 reaches zero.
    """
    if not trajectory.reports:
        raise ValueError("empty trajectory")
    if not trajectory.extras or "Wpp" not in trajectory.extras[0]:
        raise ValueError(
            "trajectory lacks virial columns; evolve() with W_and_derivatives as extra_diagnostics"
        )
    rep0 = trajectory.reports[0]
    sig = params.sigma
    if d is None:
        raise ValueError("concavity_monitor needs the threshold d to certify K-")
    first = trajectory.checkpoints[0]
    label = classify(first, d, params, quad)
    if label != "Kminus":
        raise ValueError(f"initial datum classifies as {label}, not Kminus")

    if sig == 2.0:
        C1 = -rep0.P
    elif 2.0 < sig < 4.0:
        C1 = 0.25 * (d - rep0.S)
    else:
        raise ValueError("concavity constant defined for 2 <= sigma < 4 only")
    if C1 <= 0.0:
        raise ValueError(f"nonpositive concavity constant C1 = {C1:g}")

    W0 = trajectory.extras[0]["W"]
    Wp0 = trajectory.extras[0]["Wp"]
    margins = [ex["Wpp"] + 4.0 * C1 for ex in trajectory.extras]
    t_star = (Wp0 + math.sqrt(Wp0**2 + 4.0 * C1 * W0)) / (2.0 * C1)

    out = {
        "C1": C1,
        "W0": W0,
        "Wp0": Wp0,
        "predicted_vanishing_time": t_star,
        "max_concavity_margin": max(margins),
        "concave": max(margins) <= slack,
        "n_records": len(margins),
    }
    if sig == 2.0:
        out["p_minus_4e_max"] = max(abs(r.P - 4.0 * r.E) for r in trajectory.reports)
    return out
