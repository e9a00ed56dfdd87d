"""Exact linear flows, applied as diagonal phase multipliers.

Three flows are diagonal in the Hermite x Fourier basis:

  U(t) = exp(i t d_z^2)        free z dispersion:   phase exp(-i t k_eff^2)
  V(s) = exp(-i s H)           oscillator rotation: phase exp(-i s 2(a+b+1))
  D-flow exp(-i t (H - d_z^2)) their composition.

All are unitary; plans are cached per basis so repeated steps with the same
increment reuse the phase arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import HermiteTable, SpectralField

__all__ = ["PhasePlan", "phase_plan", "apply_U", "apply_V", "apply_D_flow"]

_KINDS = ("U", "V", "D")


@dataclass(frozen=True, eq=False)
class PhasePlan:
    """Cached diagonal multiplier for one flow at one parameter value.

    `phases` broadcasts against a coefficient array (A, A, N_z): shape
    (1, 1, N_z) for U, (A, A, 1) for V, (A, A, N_z) for D.
    """

    kind: str
    param: float
    phases: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown flow kind {self.kind!r}")
        self.phases.setflags(write=False)


def phase_plan(table: HermiteTable, kind: str, param: float) -> PhasePlan:
    """Build (or fetch from the per-basis cache) a diagonal flow plan.

    The cache key is the exact float64 parameter, i.e. parameters are
    distinguished at 1 ulp; identical increments share one plan.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown flow kind {kind!r}")
    param = float(param)
    cache = table._phase_cache
    key = (kind, param)
    plan = cache.get(key)
    if plan is not None:
        return plan
    if kind == "U":
        ph = np.exp(-1j * param * table.k_eff**2)[None, None, :]
    elif kind == "V":
        ph = np.exp(-1j * param * table.eig)[:, :, None]
    else:  # D: oscillator and dispersion phases combined
        ph = (
            np.exp(-1j * param * table.eig)[:, :, None]
            * np.exp(-1j * param * table.k_eff**2)[None, None, :]
        )
    plan = PhasePlan(kind=kind, param=param, phases=ph)
    if len(cache) > 256:  # keep rogue parameter sweeps from hoarding memory
        cache.clear()
    cache[key] = plan
    return plan


def _apply(field: SpectralField, kind: str, param: float) -> SpectralField:
    plan = phase_plan(field.basis, kind, param)
    return SpectralField(
        coeffs=field.coeffs * plan.phases,
        basis=field.basis,
        time=field.time,
    )


def apply_U(field: SpectralField, t: float) -> SpectralField:
    """Free z-dispersion flow exp(i t d_z^2)."""
    return _apply(field, "U", t)


def apply_V(field: SpectralField, s: float) -> SpectralField:
    """Harmonic-oscillator flow exp(-i s H); 2 pi periodic, and V(pi/2)
    flips the sign of odd-total-level coefficients (a parity operator up to
    global sign)."""
    return _apply(field, "V", s)


def apply_D_flow(field: SpectralField, t: float) -> SpectralField:
    """Combined flow exp(-i t (H - d_z^2)) = V(t) U(t)."""
    return _apply(field, "D", t)
