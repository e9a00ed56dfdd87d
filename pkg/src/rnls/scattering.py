"""Scattering diagnostics: the critical space-time norm, an auxiliary norm,
and the asymptotic profile under the free z-dispersion.

For sigma in (2, 4) the scattering theory runs on the exponent family

    p = 2 sigma/(sigma - 1),  q = 2 sigma,
    s = 3 (sigma - 2)/(2 (sigma - 1)),  p0 = (1/p - s/3)^(-1) = 2 sigma (sigma - 1).

The finiteness of ||V(theta) phi||_{L_t^{2q} L_theta^q L_x^{p0}} is the
scattering condition; it is accumulated here as a running sum of
dt * (theta-quadrature L^q of collocation L^{p0} norms)^{2q}, left-endpoint
in time.  The asymptotic profile is the pullback U(-t) phi(t); along a
scattering run its pairwise B^1 distances form a Cauchy tail and the last
pullback is the numerical scattering state.  The auxiliary norm
L_t^4 L_z^inf L_y^2 takes the z-maximum on the grid (a lower bound of the
continuum sup) and the same left-endpoint time rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .basis import SpectralField, b1_distance, norms
from .nonlinearity import ThetaQuadrature, _rotated_grid_fields
from ._kernels import density_reduce
from .propagators import apply_U

__all__ = [
    "ScatteringIndices",
    "ScatterReport",
    "st_norm_increment",
    "StNormAccumulator",
    "AuxNormAccumulator",
    "asymptotic_profile",
]


@dataclass(frozen=True)
class ScatteringIndices:
    """Exponents of the critical space-time norms; requires sigma in (2, 4)."""

    sigma: float
    p: float
    q: float
    s: float
    p0: float

    @classmethod
    def from_sigma(cls, sigma: float) -> "ScatteringIndices":
        if not (2.0 < sigma < 4.0):
            raise ValueError("scattering exponents are defined for 2 < sigma < 4")
        return cls(
            sigma=sigma,
            p=2.0 * sigma / (sigma - 1.0),
            q=2.0 * sigma,
            s=3.0 * (sigma - 2.0) / (2.0 * (sigma - 1.0)),
            p0=2.0 * sigma * (sigma - 1.0),
        )


def st_norm_increment(
    field: SpectralField,
    indices: ScatteringIndices,
    quad: ThetaQuadrature,
    dt: float,
) -> float:
    """One left-endpoint time slice: dt * (||V(.)phi||_{L_theta^q L_x^{p0}})^{2q}.

    The x-norm is collocation, the theta-norm uses the quadrature weights, and
    the outer power 2q makes slices add up to the accumulated norm^{2q}.
    """
    t = field.basis
    u = _rotated_grid_fields(field, quad)
    dz = t.spec.L_z / t.spec.N_z
    # per-theta ||V(theta) phi||_{p0}^{p0} (collocation)
    per_theta = density_reduce(u, t.weights, np.full(t.spec.N_z, dz), indices.p0 / 2.0)
    theta_norm_q = float((per_theta ** (indices.q / indices.p0)) @ quad.weights)
    return dt * theta_norm_q**2


class StNormAccumulator:
    """Running L_t^{2q} L_theta^q L_x^{p0} norm of V(theta) phi."""

    def __init__(self, indices: ScatteringIndices, quad: ThetaQuadrature):
        self.indices = indices
        self.quad = quad
        self.total = 0.0

    def add(self, field: SpectralField, dt: float) -> float:
        self.total += st_norm_increment(field, self.indices, self.quad, dt)
        return self.value

    @property
    def value(self) -> float:
        return self.total ** (1.0 / (2.0 * self.indices.q))


class AuxNormAccumulator:
    """Running L_t^4 L_z^inf L_y^2 norm (grid max in z, left-endpoint in t)."""

    def __init__(self):
        self.total = 0.0

    def add(self, field: SpectralField, dt: float) -> float:
        t = field.basis
        prof = np.fft.ifft(field.coeffs * t._zsynth, axis=-1)
        g_sq = (prof.real**2 + prof.imag**2).sum(axis=(0, 1))  # ||phi(z)||_{L_y^2}^2
        self.total += dt * float(g_sq.max()) ** 2
        return self.value

    @property
    def value(self) -> float:
        return self.total**0.25


@dataclass
class ScatterReport:
    """Asymptotic-profile diagnostics plus final accumulator readings."""

    profile_times: list
    profile_dists: np.ndarray  # pairwise B^1 distances of the pullbacks
    cauchy_defects: list  # consecutive-pullback distances
    phi_plus: SpectralField  # last pullback: the numerical scattering state
    stnorm_accum: float = float("nan")
    aux_L4LinfL2: float = float("nan")

    @property
    def monotone_cauchy(self) -> bool:
        d = self.cauchy_defects
        return all(d[i + 1] <= d[i] for i in range(len(d) - 1))


def asymptotic_profile(checkpoints, stnorm: float = float("nan"), aux: float = float("nan")) -> ScatterReport:
    """Pairwise B^1 distances of the pullbacks U(-t_i) phi(t_i).

    checkpoints: >= 3 SpectralFields at strictly increasing times.  The
    pullback is unitary and commutes with H, so each retains the mass and
    Hermite energy of its field; the distances quantify how settled the
    Duhamel tail is.  cauchy_defects[i] = dist(pullback_i, pullback_{i+1}).
    """
    cps = list(checkpoints)
    if len(cps) < 3:
        raise ValueError("need at least 3 checkpoints for a Cauchy diagnostic")
    times = [f.time for f in cps]
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise ValueError("checkpoint times must be strictly increasing")
    pulled = [apply_U(f, -f.time) for f in cps]
    n = len(pulled)
    dists = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dists[i, j] = dists[j, i] = b1_distance(pulled[i], pulled[j])
    defects = [float(dists[i, i + 1]) for i in range(n - 1)]
    return ScatterReport(
        profile_times=times,
        profile_dists=dists,
        cauchy_defects=defects,
        phi_plus=pulled[-1],
        stnorm_accum=stnorm,
        aux_L4LinfL2=aux,
    )
