"""Conserved quantities, variational functionals, and scaling transforms.

For a field phi with coefficients c and the averaging potential
pot = int_0^{pi/2} int |V(theta) phi|^{2 sigma + 2} dx dtheta (unsigned):

    M = 1/2 ||phi||^2                         mass
    K = 1/2 <H phi, phi>                      oscillator (transverse) energy
    G = Im int conj(phi) d_z phi              z momentum
    E = 1/2 ||d_z phi||^2 + lam/(pi (sigma+1)) pot    dispersive energy
    S = K + M + E                             action
    I = ||phi||^2 + ||phi||_{B^1}^2 - (2/pi) pot      Nehari functional
    P = 2 ||d_z phi||^2 - 2 sigma/(pi (sigma+1)) pot  virial functional

I and P are the boundary members J^{1,0} and J^{1,2} of the scaling family

    J^{a,b} = d/dmu S[e^{a mu} phi(y, e^{b mu} z)] |_{mu=0}
            = (2a-b)(K+M) + (2a+b)/2 ||d_z phi||^2
              - ((2 sigma + 2) a - b)/(pi (sigma+1)) pot,

defined for admissible exponents a > 0, b >= 0, 2a - b >= 0, sigma a - b > 0.
I and P keep their literal focusing-sign formulas for either coupling; for
lam = +1 the report is flagged not variational (S is always K + M + E, so E
then carries +pot and the focusing S display does not apply).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import SpectralField, norms
from .nonlinearity import NonlinearityParams, ThetaQuadrature, potential_energy

__all__ = [
    "FunctionalReport",
    "CSV_COLUMNS",
    "csv_header",
    "csv_row",
    "report",
    "scale",
    "J_ab",
    "admissible",
    "classify",
    "scale_invariant_check",
    "strichartz_quotient",
]

CSV_COLUMNS = ("time", "M", "E", "G", "K", "S", "I", "P", "B1_sq", "pot")


@dataclass(frozen=True)
class FunctionalReport:
    """Snapshot of all tracked functionals at one time."""

    time: float
    M: float
    E: float
    G: float
    K: float
    S: float
    I: float
    P: float
    B1_sq: float
    pot: float
    variational: bool = True

    def values(self) -> tuple:
        return tuple(getattr(self, name) for name in CSV_COLUMNS)


def csv_header(extra: tuple = ()) -> str:
    return ",".join(CSV_COLUMNS + tuple(extra))


def csv_row(rep: FunctionalReport, extra: tuple = ()) -> str:
    vals = rep.values() + tuple(extra)
    return ",".join(repr(float(v)) for v in vals)


def report(
    field: SpectralField,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
) -> FunctionalReport:
    """Evaluate all functionals (one averaging-quadrature pass)."""
    nn = norms(field)
    c = field.coeffs
    absq = c.real * c.real + c.imag * c.imag
    G = float((absq.sum(axis=(0, 1)) * field.basis.k_eff).sum())
    pot = potential_energy(field, params, quad)
    sig = params.sigma
    M = 0.5 * nn["mass_L2"]
    K = 0.5 * nn["hermite_energy"]
    E = 0.5 * nn["grad_z_sq"] + params.lam / (np.pi * (sig + 1.0)) * pot
    S = K + M + E
    I = nn["mass_L2"] + nn["B1_sq"] - (2.0 / np.pi) * pot
    P = 2.0 * nn["grad_z_sq"] - 2.0 * sig / (np.pi * (sig + 1.0)) * pot
    return FunctionalReport(
        time=field.time, M=M, E=E, G=G, K=K, S=S, I=I, P=P,
        B1_sq=nn["B1_sq"], pot=pot, variational=(params.lam == -1.0),
    )


def _band_mass_fraction(field: SpectralField) -> tuple[float, float]:
    """(relative mass in the outer 10% of z, relative mass in the top 10%
    of |k_eff|) — the two tails that invalidate a z-resampling."""
    c = field.coeffs
    absq = (c.real * c.real + c.imag * c.imag).sum(axis=(0, 1))
    total = float(absq.sum())
    if total == 0.0:
        return 0.0, 0.0
    table = field.basis
    zb = np.abs(table.z) >= 0.45 * table.spec.L_z
    kmax = np.abs(table.k_eff).max()
    kb = np.abs(table.k_eff) >= 0.9 * kmax
    # z-marginal mass density via 1-d inverse transform of each (a,b) row
    vals = np.fft.ifft(field.coeffs * field.basis._zsynth, axis=-1)
    dens = (vals.real**2 + vals.imag**2).sum(axis=(0, 1))
    dz = table.spec.L_z / table.spec.N_z
    space_tail = float(dens[zb].sum() * dz) / total
    spec_tail = float(absq[kb].sum()) / total
    return space_tail, spec_tail


def scale(
    field: SpectralField,
    a: float,
    b: float,
    mu: float,
    tail_tol: float = 1e-10,
) -> SpectralField:
    """Amplitude/dilation rescaling  phi -> e^{a mu} phi(y, e^{b mu} z).

    The z dilation is evaluated by sampling the trigonometric interpolant at
    the stretched grid and re-projecting (spectrally accurate for fields that
    decay inside the box).  Stretched sample points that leave the box are
    set to zero rather than wrapped periodically: the input-side localization
    guard certifies the field is negligible there, and wrapping would instead
    plant a spurious image of the field at the box edge whenever the stretch
    factor reaches 2.  Both before and after, the field must be negligible
    (relative mass <= tail_tol) near the spatial boundary and at the top of
    the k range; otherwise the dilation would wrap or alias and a ValueError
    is raised.

    No admissibility constraint is imposed here: inadmissible exponent pairs
    are legitimate for diagnostics (e.g. the sigma = 4 invariant scaling);
    only the functional J_ab restricts to admissible pairs.
    """
    table = field.basis
    stretch = float(np.exp(b * mu))
    amp = float(np.exp(a * mu))
    if stretch == 1.0:
        # pure amplitude change: exact for any field, no localization needed
        return SpectralField(
            coeffs=amp * field.coeffs, basis=table, time=field.time
        )
    space0, spec0 = _band_mass_fraction(field)
    if max(space0, spec0) > tail_tol:
        raise ValueError(
            f"field not localized enough to rescale: boundary mass "
            f"{space0:.2e}, spectral tail {spec0:.2e} exceed {tail_tol:.0e}"
        )
    k = table.k_eff
    z = table.z
    # sample the interpolant at stretch * z_m, zero-extended outside the box
    fwd = np.exp(1j * np.outer(z * stretch, k))     # (m, k)
    fwd[np.abs(z * stretch) > 0.5 * table.spec.L_z] = 0.0
    back = np.exp(-1j * np.outer(k, z))             # (k', m)
    T = (back @ fwd) / table.spec.N_z
    out = np.einsum("lk,abk->abl", T, field.coeffs) * amp
    scaled = SpectralField(coeffs=out, basis=table, time=field.time)
    space1, spec1 = _band_mass_fraction(scaled)
    if max(space1, spec1) > tail_tol:
        raise ValueError(
            f"rescaled field leaves the resolved band: boundary mass "
            f"{space1:.2e}, spectral tail {spec1:.2e} exceed {tail_tol:.0e}"
        )
    return scaled


def admissible(a: float, b: float, sigma: float) -> bool:
    """Scaling exponents for which the J^{a,b} family is defined."""
    return a > 0 and b >= 0 and 2 * a - b >= 0 and sigma * a - b > 0


def J_ab(
    field: SpectralField,
    a: float,
    b: float,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
) -> float:
    """Scaling derivative of the action in closed form (no resampling)."""
    if not admissible(a, b, params.sigma):
        raise ValueError(
            f"(a, b)=({a}, {b}) not admissible for sigma={params.sigma}"
        )
    nn = norms(field)
    pot = potential_energy(field, params, quad)
    sig = params.sigma
    return (
        0.5 * (2 * a - b) * (nn["mass_L2"] + nn["hermite_energy"])
        + 0.5 * (2 * a + b) * nn["grad_z_sq"]
        - ((2 * sig + 2) * a - b) / (np.pi * (sig + 1.0)) * pot
    )


def classify(
    field: SpectralField,
    d_threshold: float,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
) -> str:
    """Membership test against the action threshold: 'Kplus' (global
    existence side: S < d and P >= 0), 'Kminus' (S < d and P < 0), or
    'above_threshold'.  Only meaningful for the focusing coupling."""
    if params.lam != -1.0:
        raise ValueError("classification requires the focusing coupling (-1)")
    rep = report(field, params, quad)
    if rep.S >= d_threshold:
        return "above_threshold"
    return "Kplus" if rep.P >= 0.0 else "Kminus"


def scale_invariant_check(
    field: SpectralField,
    mu: float,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
) -> dict:
    """At sigma = 4 the combination K^3 E is invariant under the critical
    scaling phi -> mu^{1/4} phi(y, mu z).  Returns both sides."""
    if params.sigma != 4.0:
        raise ValueError("the K^3 E invariant belongs to sigma = 4")
    if mu <= 0:
        raise ValueError("mu must be positive")
    rep0 = report(field, params, quad)
    scaled = scale(field, a=0.25, b=1.0, mu=float(np.log(mu)))
    rep1 = report(scaled, params, quad)
    return {
        "K3E_before": rep0.K**3 * rep0.E,
        "K3E_after": rep1.K**3 * rep1.E,
    }


def strichartz_quotient(
    field: SpectralField,
    params: NonlinearityParams,
    quad: ThetaQuadrature,
) -> float:
    """Empirical constant in the averaged potential bound

        pot^{1/(2s+2)} <= C ||phi||_{L^2}^{(4-sigma)/(2s+2)}
                            ||phi||_{B^1}^{(3 sigma - 2)/(2s+2)},

    with s = sigma and the full B^1 norm sqrt(mass + B1_sq).  Finiteness and
    stability of the returned quotient over field families is the testable
    content of the bound."""
    nn = norms(field)
    pot = potential_energy(field, params, quad)
    if pot == 0.0:
        return 0.0
    s2 = 2.0 * params.sigma + 2.0
    l2 = np.sqrt(nn["mass_L2"])
    b1 = np.sqrt(nn["mass_L2"] + nn["B1_sq"])
    return float(
        pot ** (1.0 / s2)
        / (l2 ** ((4.0 - params.sigma) / s2)
           * b1 ** ((3.0 * params.sigma - 2.0) / s2))
    )
