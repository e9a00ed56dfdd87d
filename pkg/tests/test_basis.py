"""Basis construction, transforms, norms, and field factories.

Oracles: mpmath high-precision quadrature for Hermite orthonormality and the
Gaussian self-integral; exact algebra for Parseval and zero-padding.
"""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rnls.basis import (
    BasisSpec,
    PhysicalField,
    SpectralField,
    b1_distance,
    b1_norm,
    build_basis,
    embed_field,
    from_spectral,
    gaussian_field,
    hermite_values,
    norms,
    packet_field,
    random_field,
    to_spectral,
)

from conftest import make_fields


# ---------------------------------------------------------------- oracles


def test_hermite_orthonormality_against_mpmath():
    """<h_m, h_n> = delta_{mn} with the integral done in 50-digit arithmetic
    (oracle is independent of the package quadrature)."""
    mpmath.mp.dps = 50
    n_max = 6

    def h(n, x):
        # normalized Hermite function via the same recurrence, in mpmath
        x = mpmath.mpf(x)
        h0 = mpmath.mpf(1) / mpmath.sqrt(mpmath.sqrt(mpmath.pi)) * mpmath.e**(-x * x / 2)
        if n == 0:
            return h0
        h1 = mpmath.sqrt(2) * x * h0
        for k in range(2, n + 1):
            h0, h1 = h1, mpmath.sqrt(mpmath.mpf(2) / k) * x * h1 - mpmath.sqrt(
                mpmath.mpf(k - 1) / k
            ) * h0
        return h1

    worst = 0.0
    for m in range(n_max + 1):
        for n in range(m, n_max + 1):
            val = mpmath.quad(lambda x: h(m, x) * h(n, x), [-mpmath.inf, 0, mpmath.inf])
            want = 1.0 if m == n else 0.0
            worst = max(worst, abs(float(val) - want))
    assert worst < 1e-12


def test_quadrature_orthonormality_residual(small_table):
    """The folded Gauss-Hermite rule reproduces <h_m, h_n> = delta to 1e-12."""
    t = small_table
    H = hermite_values(t.nodes, t.spec.N_hermite)  # (n_modes, M)
    gram = (H * t.weights) @ H.T
    assert np.abs(gram - np.eye(t.spec.n_modes)).max() < 1e-12


def test_gaussian_mass_oracle(small_table):
    """Mass of A*exp(-(y^2+z^2/2w^2)/2)-type datum vs closed form.

    gaussian_field(amplitude=A, y_width=1, z_width=w) is A*h0(y1)h0(y2)
    *sqrt(pi)* ... checked against the analytic product integral:
    ||phi||^2 = A^2 * pi * w * sqrt(pi) * (normalization of h0 pair = 1).
    """
    A, w = 1.3, 2.0
    f = gaussian_field(small_table, amplitude=A, y_width=1.0, z_width=w)
    # y part: A * e^{-y^2/2} each axis = A * pi^{1/2} h0(y1) h0(y2); z part
    # e^{-z^2/(2w^2)} has L2^2 = w sqrt(pi)
    want = A**2 * math.pi * w * math.sqrt(math.pi)
    got = norms(f)["mass_L2"]
    assert abs(got - want) / want < 1e-12


# ------------------------------------------------------ transforms, exact


def test_round_trip_spectral_grid_spectral(small_table):
    for f in make_fields(small_table, 3, seed0=5):
        g = to_spectral(from_spectral(f))
        assert np.abs(g.coeffs - f.coeffs).max() < 1e-12


def test_parseval(small_table):
    """Collocation mass equals coefficient mass to 1e-10 relative."""
    t = small_table
    dz = t.spec.L_z / t.spec.N_z
    for f in make_fields(t, 3, seed0=9):
        vals = from_spectral(f).values
        dens = vals.real**2 + vals.imag**2
        grid_mass = float(np.einsum("x,y,xyk->", t.weights, t.weights, dens) * dz)
        coeff_mass = norms(f)["mass_L2"]
        assert abs(grid_mass - coeff_mass) / coeff_mass < 1e-10


def test_analysis_is_left_inverse_on_band_limited(small_table):
    """analyze(synthesize(c)) = c exactly for in-band coefficients."""
    t = small_table
    rng = np.random.default_rng(3)
    c = rng.standard_normal((t.spec.n_modes, t.spec.n_modes, t.spec.N_z)) + 0j
    f = SpectralField(coeffs=c, basis=t, time=0.0)
    g = to_spectral(from_spectral(f))
    assert np.abs(g.coeffs - c).max() < 1e-12


def test_embed_field_exact_zero_padding(small_table):
    """Padding to a finer basis preserves all norms bitwise-almost and the
    grid values at shared physical points up to transform roundoff."""
    fine = build_basis(BasisSpec(N_hermite=9, M_quad=14, N_z=128, L_z=24 * math.pi))
    for f in make_fields(small_table, 2, seed0=21):
        g = embed_field(f, fine)
        n0, n1 = norms(f), norms(g)
        for k in n0:
            assert abs(n0[k] - n1[k]) <= 1e-14 * max(1.0, abs(n0[k])), k
        assert b1_distance_via_pad(f, g) < 1e-12


def b1_distance_via_pad(coarse, fine_field):
    emb = embed_field(coarse, fine_field.basis)
    return b1_distance(emb, fine_field)


def test_embed_requires_containing_basis(small_table):
    shrug = build_basis(BasisSpec(N_hermite=4, M_quad=8, N_z=32, L_z=24 * math.pi))
    f = random_field(small_table, seed=0)
    with pytest.raises(ValueError):
        embed_field(f, shrug)


# ------------------------------------------------------------ norms, B1


def test_norms_parts_and_b1(small_table):
    f = random_field(small_table, seed=2)
    nn = norms(f)
    assert nn["B1_sq"] == pytest.approx(nn["hermite_energy"] + nn["grad_z_sq"], rel=1e-15)
    assert b1_norm(f) == pytest.approx(math.sqrt(nn["mass_L2"] + nn["B1_sq"]), rel=1e-15)
    assert b1_distance(f, f) == 0.0


def test_b1_distance_triangle(small_table):
    u, v, w = make_fields(small_table, 3, seed0=31)
    duv, dvw, duw = b1_distance(u, v), b1_distance(v, w), b1_distance(u, w)
    assert duw <= duv + dvw + 1e-12


def test_hermite_energy_eigenvalues(small_table):
    """A single (a, b) level has <H phi, phi> = 2(a+b+1) ||phi||^2."""
    t = small_table
    for (a, b) in ((0, 0), (2, 3), (5, 1)):
        c = np.zeros((t.spec.n_modes, t.spec.n_modes, t.spec.N_z), complex)
        c[a, b, 4] = 1.5
        f = SpectralField(coeffs=c, basis=t, time=0.0)
        nn = norms(f)
        assert nn["hermite_energy"] == pytest.approx(
            2.0 * (a + b + 1) * nn["mass_L2"], rel=1e-14
        )


# ------------------------------------------------------- field factories


def test_factory_masses_and_time(small_table, packet_table):
    f = packet_field(packet_table, seed=0, mass=1.0)
    assert norms(f)["mass_L2"] == pytest.approx(1.0, rel=1e-12)
    g = random_field(small_table, seed=0, mass=2.5)
    assert norms(g)["mass_L2"] == pytest.approx(2.5, rel=1e-12)
    assert f.time == 0.0 and g.time == 0.0


def test_gaussian_velocity_shifts_momentum(small_table):
    t = small_table
    v = 0.5
    f = gaussian_field(t, amplitude=1.0, y_width=1.0, z_width=2.0, z_velocity=v)
    c = f.coeffs
    absq = (c.real**2 + c.imag**2).sum(axis=(0, 1))
    G = float((absq * t.k_eff).sum())
    mass = float(absq.sum())
    # exact up to the k_max spectral tail of the shifted envelope (~5e-9 here)
    assert G / mass == pytest.approx(v, abs=1e-7)


# ------------------------------------------------------------ properties


_TINY = build_basis(BasisSpec(N_hermite=4, M_quad=8, N_z=32, L_z=16 * math.pi))


@settings(max_examples=20, deadline=None)
@given(
    a=st.floats(-2, 2, allow_nan=False),
    b=st.floats(-2, 2, allow_nan=False),
    s1=st.integers(0, 10_000),
    s2=st.integers(0, 10_000),
)
def test_transform_linearity(a, b, s1, s2):
    t = _TINY
    u = random_field(t, seed=s1)
    v = random_field(t, seed=s2)
    lin = a * u.coeffs + b * v.coeffs
    mixed = PhysicalField(
        values=a * from_spectral(u).values + b * from_spectral(v).values,
        basis=t,
        time=0.0,
    )
    assert np.abs(to_spectral(mixed).coeffs - lin).max() < 1e-11 * (1 + abs(a) + abs(b))
