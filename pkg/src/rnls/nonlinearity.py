"""The angle-averaged nonlinearity and its quadrature.

The model replaces the bare power nonlinearity |phi|^{2 sigma} phi by its
average along the harmonic-oscillator rotation,

    F_av(phi) = (2/pi) int_0^{pi/2} V(-theta) N(V(theta) phi) dtheta,
    N(u) = |u|^{2 sigma} u,   V(theta) = exp(-i theta H),

which is what survives time-averaging of the fast oscillator phase.  The
integrand is (pi/2)-periodic in theta (V(pi/2) is a parity operator up to a
global sign, and N is parity-equivariant), so the uniform midpoint rule on
[0, pi/2) is a full-period trapezoidal rule: for integer sigma the integrand
is a trigonometric polynomial of degree at most 2 (sigma+1) N_hermite and the
rule is *exact* once N_theta > (sigma+1) N_hermite.  Below that threshold a
RuntimeWarning is emitted.

F_av here is unsigned; the coupling (params.lam, +/-1) is applied by callers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._kernels import density_reduce, phase_expand, pow_mult_inplace, theta_reduce
from .basis import (
    HermiteTable,
    SpectralField,
    analyze_batch,
    analyze_prescaled,
    synthesize_batch,
    synthesize_prescaled,
)

__all__ = [
    "ThetaQuadrature",
    "theta_quadrature",
    "NonlinearityParams",
    "eval_F_av",
    "eval_resonant_sum",
    "potential_energy",
    "gateaux_pairings",
    "theta_exactness_threshold",
    "RESONANT_LEVEL_CAP",
]

RESONANT_LEVEL_CAP = 12  # eval_resonant_sum refuses larger N_hermite


@dataclass(frozen=True, eq=False)
class ThetaQuadrature:
    """Quadrature rule for the averaging angle.

    nodes lie in [0, span), weights are positive and sum to span (pi/2 for
    the standard rule; pi for the full-period diagnostic rule).
    """

    nodes: np.ndarray
    weights: np.ndarray
    span: float = np.pi / 2

    def __post_init__(self) -> None:
        n, w = self.nodes, self.weights
        if n.ndim != 1 or w.shape != n.shape or n.size < 2:
            raise ValueError("need matching 1-d node/weight arrays, >= 2 nodes")
        if not (np.all(np.diff(n) > 0) and n[0] >= 0 and n[-1] < self.span):
            raise ValueError("nodes must increase within [0, span)")
        if not np.all(w > 0):
            raise ValueError("weights must be positive")
        if abs(float(w.sum()) - self.span) > 1e-12 * max(1.0, self.span):
            raise ValueError("weights must sum to the interval length")
        n.setflags(write=False)
        w.setflags(write=False)


def theta_quadrature(n_theta: int, full_period: bool = False) -> ThetaQuadrature:
    """Uniform midpoint rule on [0, pi/2) (or [0, pi) for diagnostics)."""
    span = np.pi if full_period else np.pi / 2
    nodes = (np.arange(n_theta) + 0.5) * (span / n_theta)
    weights = np.full(n_theta, span / n_theta)
    return ThetaQuadrature(nodes=nodes, weights=weights, span=span)


@dataclass(frozen=True)
class NonlinearityParams:
    """Nonlinearity power sigma in [1/2, 4] and coupling lam in {-1, +1}
    (-1 focusing, +1 defocusing)."""

    sigma: float
    lam: float = -1.0

    def __post_init__(self) -> None:
        if not (0.5 <= self.sigma <= 4.0):
            raise ValueError(f"sigma={self.sigma} outside [1/2, 4]")
        if self.lam not in (-1.0, 1.0):
            raise ValueError(f"lam must be -1 or +1, got {self.lam}")


def theta_exactness_threshold(n_hermite: int, sigma: float) -> int:
    """Minimal midpoint node count that makes the average exact (integer
    sigma): the integrand's theta frequencies are e^{-2 i j theta} with
    |j| <= (sigma+1) * 2 * n_hermite, and the N-node half-period midpoint
    rule errs only on j = 0 mod 2N."""
    return int(sigma + 1) * n_hermite + 1


def _theta_phases(table: HermiteTable, quad: ThetaQuadrature) -> np.ndarray:
    """exp(-i eig(a,b) theta_t) as an (A, A, T) tensor, cached per basis."""
    key = ("theta", quad.nodes.tobytes())
    cache = table._phase_cache
    ph = cache.get(key)
    if ph is None:
        ph = np.exp(-1j * table.eig[:, :, None] * quad.nodes[None, None, :])
        ph.setflags(write=False)
        cache[key] = ph
    return ph


def _theta_back(table: HermiteTable, quad: ThetaQuadrature) -> np.ndarray:
    """Averaging weights exp(+i eig theta_t) w_t / span, cached per basis."""
    key = ("theta-back", quad.nodes.tobytes(), quad.weights.tobytes())
    cache = table._phase_cache
    back = cache.get(key)
    if back is None:
        ph = _theta_phases(table, quad)
        back = np.ascontiguousarray(
            ph.conj() * (quad.weights / quad.span)[None, None, :]
        )
        back.setflags(write=False)
        cache[key] = back
    return back


def _rotated_grid_fields(
    field: SpectralField, quad: ThetaQuadrature
) -> np.ndarray:
    """Grid values of V(theta_t) phi for all quadrature nodes: (M, M, T, N_z)."""
    table = field.basis
    ph = _theta_phases(table, quad)
    cb = phase_expand(field.coeffs, ph, table._zsynth)
    return synthesize_prescaled(table, cb)


def _maybe_warn_theta(field: SpectralField, params, quad) -> None:
    sig = params.sigma
    if sig != int(sig) or quad.span != np.pi / 2:
        return
    need = theta_exactness_threshold(field.basis.spec.N_hermite, sig)
    if quad.nodes.size < need:
        warnings.warn(
            f"N_theta={quad.nodes.size} below the exactness threshold "
            f"{need} for sigma={int(sig)}, N_hermite="
            f"{field.basis.spec.N_hermite}; the averaged nonlinearity will "
            "carry quadrature aliasing",
            RuntimeWarning,
            stacklevel=3,
        )


def eval_F_av(
    field: SpectralField,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
) -> SpectralField:
    """Averaged nonlinearity (unsigned): mean over theta of
    V(-theta) |V(theta) phi|^{2 sigma} V(theta) phi.

    All theta nodes run through one batched synthesize/pointwise/analyze
    pipeline.  Raises FloatingPointError if the result is not finite.
    """
    _maybe_warn_theta(field, params, quad)
    table = field.basis
    u = _rotated_grid_fields(field, quad)
    w = pow_mult_inplace(u, params.sigma)
    d = analyze_prescaled(table, w)
    out = theta_reduce(d, _theta_back(table, quad), table._zanal)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("averaged nonlinearity produced non-finite values")
    return SpectralField(coeffs=out, basis=table, time=field.time)


def potential_energy(
    field: SpectralField,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
    z_weight: np.ndarray | None = None,
) -> float:
    """Unsigned averaging potential
    int_0^{pi/2} int |V(theta) phi|^{2 sigma + 2} dx dtheta
    (integral over the quadrature's own span, not the mean).

    z_weight, if given, multiplies the x-integrand pointwise in z (used by
    localized virial identities).
    """
    table = field.basis
    u = _rotated_grid_fields(field, quad)
    dz = table.spec.L_z / table.spec.N_z
    if z_weight is None:
        z_weight = np.ones(table.spec.N_z)
    per_theta = density_reduce(u, table.weights, z_weight, params.sigma + 1.0)
    return float(per_theta @ quad.weights) * dz


def gateaux_pairings(
    field: SpectralField,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
) -> dict:
    """Inner products that drive the conservation laws.

    Returns {re_pair_id, im_pair_id, im_pair_H} for the pairings
    <F_av(phi), phi> and <F_av(phi), H phi>.  Identities (discretely exact up
    to quadrature aliasing):  re_pair_id = (2/pi) * potential_energy,
    im_pair_id = 0 (mass conservation), im_pair_H = 0 (oscillator-energy
    conservation, from periodicity of theta -> |V(theta) phi|^{2s+2}).
    """
    F = eval_F_av(field, params, quad)
    c = field.coeffs
    pair_id = complex(np.vdot(c, F.coeffs))  # sum conj(c) F
    pair_H = complex(np.vdot(field.basis.eig[:, :, None] * c, F.coeffs))
    return {
        "re_pair_id": pair_id.real,
        "im_pair_id": pair_id.imag,
        "im_pair_H": pair_H.imag,
    }


def eval_resonant_sum(
    field: SpectralField, params: NonlinearityParams
) -> SpectralField:
    """Direct resonant sum for sigma = 1: the exact theta-average

        sum_{l1 + l2 - l3 = n} P_n [ (P_{l1} phi)(P_{l2} phi) conj(P_{l3} phi) ]

    over total Hermite levels, computed from physical-space products of
    level-projected fields and re-projection.  Refuses sigma != 1 and
    N_hermite > RESONANT_LEVEL_CAP (the level convolution is an O(N^4)
    object and exists as an oracle, not a production path).
    """
    if params.sigma != 1.0:
        raise ValueError("resonant sum is defined for sigma = 1 only")
    table = field.basis
    N = table.spec.N_hermite
    if N > RESONANT_LEVEL_CAP:
        raise ValueError(
            f"N_hermite={N} exceeds the resonant-sum cap {RESONANT_LEVEL_CAP}"
        )
    A = table.spec.n_modes
    lmax = 2 * N
    a = np.arange(A)
    lvl = a[:, None] + a[None, :]
    mask = (lvl[:, :, None] == np.arange(lmax + 1)[None, None, :])

    # physical field of each total-level slice: (M, M, lmax+1, N_z)
    cb = field.coeffs[:, :, None, :] * mask[:, :, :, None]
    ul = synthesize_batch(table, cb)

    M = table.spec.M_quad
    K = table.spec.N_z
    # pair convolution s_m = sum_{l1 + l2 = m} u_{l1} u_{l2}
    s = np.zeros((M, M, 2 * lmax + 1, K), dtype=np.complex128)
    for l1 in range(lmax + 1):
        s[:, :, l1 : l1 + lmax + 1, :] += (
            ul[:, :, l1, :][:, :, None, :] * ul
        )
    # bucket_n = sum_{l3} s_{n + l3} conj(u_{l3})  (target level n = l1+l2-l3)
    bucket = np.zeros((M, M, lmax + 1, K), dtype=np.complex128)
    for l3 in range(lmax + 1):
        bucket += s[:, :, l3 : l3 + lmax + 1, :] * np.conj(
            ul[:, :, l3, :]
        )[:, :, None, :]

    d = analyze_batch(table, bucket)
    out = np.einsum("abnk,abn->abk", d, mask.astype(np.float64))
    return SpectralField(coeffs=out, basis=table, time=field.time)
