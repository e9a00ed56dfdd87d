"""Hermite x Fourier spectral basis for fields on R^2_y x [-L_z/2, L_z/2).

A field phi(y, z) confined harmonically in the transverse plane y = (y1, y2)
and periodic in z is expanded as

    phi(y, z) = sum_{a,b,k} c[a, b, k] h_a(y1) h_b(y2) E_k(z),

with h_n the L^2-normalized Hermite functions (eigenfunctions of the
oscillator H = -Laplace_y + |y|^2, eigenvalue 2(n1 + n2 + 1) on the product
h_{n1} h_{n2}) and E_k(z) = L_z^{-1/2} exp(i k_eff z), k_eff = 2 pi ktilde / L_z
over the usual signed FFT frequencies.  The basis is orthonormal, so the
coefficient array carries all quadratic observables exactly:

    ||phi||_{L^2}^2     = sum |c|^2
    ||d_z phi||^2       = sum k_eff^2 |c|^2
    <H phi, phi>        = sum 2(a + b + 1) |c|^2.

Collocation uses Gauss-Hermite nodes in each y axis (weights folded with
exp(+y^2) so that plain integrals of decaying smooth functions are produced)
and the uniform z grid.  Nodes are symmetrized so that +/-y pairs are exact
floating-point negations; odd-parity integrands then cancel exactly, which
several discrete identities downstream rely on.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft
from numpy.polynomial.hermite import hermgauss

__all__ = [
    "BasisSpec",
    "HermiteTable",
    "SpectralField",
    "PhysicalField",
    "build_basis",
    "to_spectral",
    "from_spectral",
    "norms",
    "hermite_values",
    "gaussian_field",
    "random_field",
    "packet_field",
    "b1_norm",
    "b1_distance",
    "embed_field",
    "fft_workers",
]


def fft_workers() -> int:
    """Worker count for batched FFTs, capped by the RNLS_THREADS env var."""
    raw = os.environ.get("RNLS_THREADS", "")
    if raw.strip():
        try:
            n = int(raw)
        except ValueError:
            n = 1
        return max(1, n)
    return max(1, min(4, os.cpu_count() or 1))


@dataclass(frozen=True)
class BasisSpec:
    """Resolution parameters of the Hermite x Fourier discretization.

    Parameters
    ----------
    N_hermite : highest Hermite index per y axis (modes 0..N_hermite).
    M_quad    : Gauss-Hermite nodes per y axis; must exceed N_hermite so the
                mode-orthonormality quadrature is exact.
    N_z       : number of uniform z grid points (even).
    L_z       : z period.
    N_theta   : default node count for the averaging quadrature in theta.
    """

    N_hermite: int
    M_quad: int
    N_z: int
    L_z: float
    N_theta: int = 64

    def __post_init__(self) -> None:
        errs = []
        if self.N_hermite < 0:
            errs.append("N_hermite must be >= 0")
        if self.M_quad < self.N_hermite + 1:
            errs.append("M_quad must be >= N_hermite + 1")
        if self.N_z < 4 or self.N_z % 2:
            errs.append("N_z must be even and >= 4")
        if not (self.L_z > 0):
            errs.append("L_z must be positive")
        if self.N_theta < 2:
            errs.append("N_theta must be >= 2")
        if errs:
            raise ValueError("invalid BasisSpec: " + "; ".join(errs))

    @property
    def n_modes(self) -> int:
        return self.N_hermite + 1


def hermite_values(nodes: np.ndarray, n_max: int) -> np.ndarray:
    """Evaluate normalized Hermite functions h_0..h_n_max at given points.

    Uses the stable normalized three-term recurrence
        h_0(y)     = pi^{-1/4} exp(-y^2/2),
        h_{k+1}(y) = sqrt(2/(k+1)) y h_k(y) - sqrt(k/(k+1)) h_{k-1}(y).

    Returns an array of shape (n_max + 1, len(nodes)).
    """
    y = np.asarray(nodes, dtype=np.float64)
    out = np.empty((n_max + 1, y.size), dtype=np.float64)
    out[0] = np.pi ** (-0.25) * np.exp(-0.5 * y * y)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * y * out[0]
    for k in range(1, n_max):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * y * out[k] - np.sqrt(
            k / (k + 1.0)
        ) * out[k - 1]
    return out


@dataclass(frozen=True, eq=False)
class HermiteTable:
    """Realized basis: nodes, weights, mode values and spectral multipliers.

    Attributes
    ----------
    spec    : the generating BasisSpec.
    nodes   : (M_quad,) symmetrized Gauss-Hermite nodes.
    weights : (M_quad,) quadrature weights folded with exp(+y^2), i.e.
              sum_j weights[j] f(nodes[j]) ~ int f(y) dy for smooth decaying f.
    values  : (N_hermite+1, M_quad) table values[a, j] = h_a(nodes[j]).
    eig     : (N_hermite+1, N_hermite+1) oscillator eigenvalues 2(a+b+1).
    k_eff   : (N_z,) signed Fourier wavenumbers 2 pi ktilde / L_z.
    z       : (N_z,) grid z_m = -L_z/2 + m L_z/N_z.
    """

    spec: BasisSpec
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    eig: np.ndarray
    k_eff: np.ndarray
    z: np.ndarray
    proj: np.ndarray          # (A, M): weights * values, the analysis matrix
    _zsynth: np.ndarray       # folded into coefficients before ifft
    _zanal: np.ndarray        # folded into coefficients after fft

    def __post_init__(self) -> None:
        for arr in (self.nodes, self.weights, self.values, self.eig,
                    self.k_eff, self.z, self.proj, self._zsynth, self._zanal):
            arr.setflags(write=False)
        # identity-keyed caches for propagator phases / averaging phases
        object.__setattr__(self, "_phase_cache", {})


def build_basis(spec: BasisSpec) -> HermiteTable:
    """Construct the collocation table for a BasisSpec.

    Raises ValueError if the Gauss-Hermite weights underflow (node count too
    large for double precision after the exp(+y^2) folding).
    """
    x, w = hermgauss(spec.M_quad)
    # enforce exact +/- symmetry of the node/weight sets
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
        raise ValueError(
            f"Gauss-Hermite weights underflow at M_quad={spec.M_quad}"
        )
    weights = w * np.exp(x * x)
    if not np.all(np.isfinite(weights)):
        raise ValueError(
            f"folded Gauss-Hermite weights overflow at M_quad={spec.M_quad}"
        )
    values = hermite_values(x, spec.N_hermite)

    a = np.arange(spec.N_hermite + 1)
    eig = 2.0 * (a[:, None] + a[None, :] + 1.0)

    ktilde = np.fft.fftfreq(spec.N_z, d=1.0 / spec.N_z)  # signed integers
    k_eff = 2.0 * np.pi * ktilde / spec.L_z
    z = -0.5 * spec.L_z + spec.L_z * np.arange(spec.N_z) / spec.N_z
    # alternating sign (-1)^ktilde maps FFT indexing to the centered grid
    zsign = np.where(np.abs(ktilde).astype(np.int64) % 2 == 0, 1.0, -1.0)

    return HermiteTable(
        spec=spec,
        nodes=x,
        weights=weights,
        values=values,
        eig=eig,
        k_eff=k_eff,
        z=z,
        proj=weights[None, :] * values,
        _zsynth=(zsign * (spec.N_z / np.sqrt(spec.L_z))).astype(np.complex128),
        _zanal=(zsign * (np.sqrt(spec.L_z) / spec.N_z)).astype(np.complex128),
    )


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficient-space field: coeffs[a, b, k] over (h_a h_b, E_k)."""

    coeffs: np.ndarray
    basis: HermiteTable
    time: float = 0.0

    def __post_init__(self) -> None:
        A = self.basis.spec.n_modes
        expected = (A, A, self.basis.spec.N_z)
        if self.coeffs.shape != expected:
            raise ValueError(
                f"coeffs shape {self.coeffs.shape}, expected {expected}"
            )
        if self.coeffs.dtype != np.complex128:
            raise ValueError("coeffs must be complex128")


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Collocation-space field: values[j1, j2, m] on nodes x nodes x z grid."""

    values: np.ndarray
    basis: HermiteTable
    time: float = 0.0

    def __post_init__(self) -> None:
        M = self.basis.spec.M_quad
        expected = (M, M, self.basis.spec.N_z)
        if self.values.shape != expected:
            raise ValueError(
                f"values shape {self.values.shape}, expected {expected}"
            )


def _left_apply(mat: np.ndarray, arr: np.ndarray) -> np.ndarray:
    # out[i, ...] = sum_j mat[i, j] arr[j, ...]; real mat, complex arr.
    # The complex array is viewed as interleaved float64 so BLAS runs a real
    # GEMM (half the flops of a promoted complex GEMM).
    rest = arr.shape[1:]
    f = np.ascontiguousarray(arr).view(np.float64).reshape(arr.shape[0], -1)
    out = mat @ f
    return out.view(np.complex128).reshape((mat.shape[0],) + rest)


def _pair_apply(mat: np.ndarray, arr: np.ndarray) -> np.ndarray:
    # out[i, j, ...] = sum_b mat[j, b] arr[i, b, ...]; batched over axis 0.
    rest = arr.shape[2:]
    f = np.ascontiguousarray(arr).view(np.float64)
    f = f.reshape(arr.shape[0], arr.shape[1], -1)
    out = np.matmul(mat, f)
    return out.view(np.complex128).reshape(
        (arr.shape[0], mat.shape[0]) + rest
    )


def synthesize_prescaled(table: HermiteTable, coeffs: np.ndarray) -> np.ndarray:
    """Like synthesize_batch but the caller already folded in _zsynth.

    The z FFT runs first, on the (A, A, R, N_z) array — half the bytes of the
    grid-sized array, and the pipeline is bandwidth-bound.
    """
    t = _fft.ifft(coeffs, axis=-1, workers=fft_workers(), overwrite_x=True)
    t = _left_apply(table.values.T, t)
    return _pair_apply(table.values.T, t)


def synthesize_batch(table: HermiteTable, coeffs: np.ndarray) -> np.ndarray:
    """Coefficients (A, A, R, N_z) -> grid values (M, M, R, N_z).

    R is an arbitrary batch axis (e.g. one slot per averaging angle).
    """
    return synthesize_prescaled(table, coeffs * table._zsynth)


def analyze_prescaled(table: HermiteTable, values: np.ndarray) -> np.ndarray:
    """Like analyze_batch but without the trailing _zanal factor (callers
    that reduce over the batch axis fold it in there)."""
    t = _left_apply(table.proj, values)
    t = _pair_apply(table.proj, t)
    return _fft.fft(t, axis=-1, workers=fft_workers(), overwrite_x=True)


def analyze_batch(table: HermiteTable, values: np.ndarray) -> np.ndarray:
    """Grid values (M, M, R, N_z) -> coefficients (A, A, R, N_z)."""
    return analyze_prescaled(table, values) * table._zanal


def from_spectral(u: SpectralField) -> PhysicalField:
    """Synthesize a coefficient field on the collocation grid."""
    vals = synthesize_batch(u.basis, u.coeffs[:, :, None, :])[:, :, 0, :]
    return PhysicalField(values=vals, basis=u.basis, time=u.time)


def to_spectral(f: PhysicalField) -> SpectralField:
    """Project grid values onto the basis by discrete quadrature.

    For fields synthesized from band-limited coefficients this inverts
    from_spectral exactly (the Gauss-Hermite rule with M_quad nodes is exact
    on products of two modes up to degree 2 M_quad - 1).
    """
    c = analyze_batch(f.basis, f.values.astype(np.complex128)[:, :, None, :])
    return SpectralField(coeffs=c[:, :, 0, :], basis=f.basis, time=f.time)


def norms(u: SpectralField) -> dict:
    """Quadratic observables of a spectral field.

    Returns a dict with
      mass_L2        = ||phi||_{L^2}^2          (sum |c|^2)
      grad_z_sq      = ||d_z phi||_{L^2}^2      (sum k_eff^2 |c|^2)
      hermite_energy = <H phi, phi>             (sum 2(a+b+1) |c|^2)
      B1_sq          = hermite_energy + grad_z_sq
    """
    c = u.coeffs
    absq = c.real * c.real + c.imag * c.imag
    mass = float(absq.sum())
    grad = float((absq.sum(axis=(0, 1)) * u.basis.k_eff**2).sum())
    herm = float((absq.sum(axis=2) * u.basis.eig).sum())
    return {
        "mass_L2": mass,
        "grad_z_sq": grad,
        "hermite_energy": herm,
        "B1_sq": herm + grad,
    }


def b1_norm(u: SpectralField) -> float:
    """Full B^1 norm: (mass + hermite energy + z-gradient)^(1/2)."""
    nn = norms(u)
    return float(np.sqrt(nn["mass_L2"] + nn["B1_sq"]))


def b1_distance(u: SpectralField, v: SpectralField) -> float:
    """B^1 distance between two fields on the same basis."""
    if u.basis is not v.basis and u.basis.spec != v.basis.spec:
        raise ValueError("fields live on different bases")
    d = u.coeffs - v.coeffs
    t = u.basis
    wt = 1.0 + t.eig[:, :, None] + (t.k_eff**2)[None, None, :]
    return float(np.sqrt(((d.real**2 + d.imag**2) * wt).sum()))


def embed_field(u: SpectralField, fine: HermiteTable) -> SpectralField:
    """Exact embedding into a refined basis (more levels and/or z modes).

    Basis functions are global, so zero-padding Hermite levels and copying
    each k_eff line to its slot in the finer fftfreq layout reproduces the
    same function exactly.  Requires equal L_z and a finer-or-equal basis.
    """
    cs, fs = u.basis.spec, fine.spec
    if fs.L_z != cs.L_z:
        raise ValueError("embedding requires the same box length")
    if fs.N_z < cs.N_z or fine.spec.n_modes < u.basis.spec.n_modes:
        raise ValueError("target basis must refine the source")
    A = u.basis.spec.n_modes
    out = np.zeros((fs.n_modes, fs.n_modes, fs.N_z), dtype=np.complex128)
    half = cs.N_z // 2
    out[:A, :A, :half] = u.coeffs[:, :, :half]
    out[:A, :A, fs.N_z - (cs.N_z - half):] = u.coeffs[:, :, half:]
    return SpectralField(coeffs=out, basis=fine, time=u.time)


def gaussian_field(
    table: HermiteTable,
    amplitude: float = 1.0,
    y_width: float = 1.0,
    z_width: float = 1.0,
    z_velocity: float = 0.0,
) -> SpectralField:
    """Separable Gaussian datum  A exp(-|y|^2/(2 wy^2)) exp(-z^2/(2 wz^2)) e^{i v z}.

    y_width=1 is a pure level-(0,0) profile; other widths excite the even
    ladder (projection uses the table's quadrature, so pick y_width within
    what M_quad nodes resolve).  The z factor is sampled on the grid, so
    z_width should stay well above the grid spacing.
    """
    t = table
    gy = np.exp(-0.5 * (t.nodes / y_width) ** 2)
    cy = t.proj @ gy  # (A,) Hermite coefficients of the 1-d Gaussian
    gz = np.exp(-0.5 * (t.z / z_width) ** 2) * np.exp(1j * z_velocity * t.z)
    cz = np.fft.fft(gz) * t._zanal
    c = amplitude * cy[:, None, None] * cy[None, :, None] * cz[None, None, :]
    return SpectralField(coeffs=c.astype(np.complex128), basis=t, time=0.0)


def packet_field(
    table: HermiteTable,
    seed: int,
    level_decay: float = 0.6,
    z_width_range: tuple = (2.5, 4.0),
    velocity_max: float = 0.8,
    mass: float = 1.0,
) -> SpectralField:
    """Random z-localized wave packet, normalized to given mass.

    A level-damped random Hermite mixture rides on a Gaussian z-envelope with
    random width, center (inner half of the box), velocity, and a mild random
    chirp in the level-dependent phase.  Unlike random_field (stationary
    noise filling the box), packets decay at the z boundary, so dilations and
    Nehari projections along b != 0 orbits act on them cleanly.
    """
    spec = table.spec
    rng = np.random.default_rng(seed)
    A = spec.n_modes
    cy = rng.standard_normal((A, A)) + 1j * rng.standard_normal((A, A))
    lvl = np.arange(A)[:, None] + np.arange(A)[None, :]
    cy *= np.exp(-level_decay * lvl)
    w = rng.uniform(*z_width_range)
    z0 = rng.uniform(-0.125, 0.125) * spec.L_z
    v = rng.uniform(-velocity_max, velocity_max)
    gz = np.exp(-0.5 * ((table.z - z0) / w) ** 2) * np.exp(1j * v * table.z)
    cz = np.fft.fft(gz) * table._zanal
    c = cy[:, :, None] * cz[None, None, :]
    total = float((c.real**2 + c.imag**2).sum())
    c *= np.sqrt(mass / total)
    return SpectralField(coeffs=c, basis=table, time=0.0)


def random_field(
    table: HermiteTable,
    seed: int,
    level_decay: float = 0.4,
    z_width: float = 2.5,
    mass: float = 1.0,
) -> SpectralField:
    """Random band-limited field with smooth decay, normalized to given mass.

    Coefficients are complex Gaussians damped exponentially in the Hermite
    level and like a Gaussian in k_eff (correlation length z_width), so the
    field is well resolved and its low nonlinear powers stay representable.
    """
    spec = table.spec
    rng = np.random.default_rng(seed)
    shape = (spec.n_modes, spec.n_modes, spec.N_z)
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    a = np.arange(spec.n_modes)
    lvl = a[:, None] + a[None, :]
    c *= np.exp(-level_decay * lvl)[:, :, None]
    c *= np.exp(-0.5 * (table.k_eff * z_width) ** 2)[None, None, :]
    total = float((c.real**2 + c.imag**2).sum())
    c *= np.sqrt(mass / total)
    return SpectralField(coeffs=c, basis=table, time=0.0)
