"""Shared fixtures: small bases for module tests, the reference basis for
acceptance, and field factories.

Grid-size policy: module tests run on small grids whose error floors sit
well below the asserted tolerances; only the acceptance suite touches the
reference resolution (N_hermite=16, M_quad=24, N_z=128, L_z=40*pi,
N_theta=64), via session-scoped fixtures so it is built once.
"""

import math

import numpy as np
import pytest

from rnls.basis import (
    BasisSpec,
    build_basis,
    gaussian_field,
    packet_field,
    random_field,
)
from rnls.nonlinearity import (
    NonlinearityParams,
    theta_exactness_threshold,
    theta_quadrature,
)

REF = dict(N_hermite=16, M_quad=24, N_z=128, L_z=40 * math.pi)


@pytest.fixture(scope="session")
def small_table():
    """Fast general-purpose basis (exact-theta needs <= 22 nodes at sigma=2)."""
    return build_basis(BasisSpec(N_hermite=6, M_quad=10, N_z=64, L_z=24 * math.pi))


@pytest.fixture(scope="session")
def packet_table():
    """Wider box for fields that get dilated (tail headroom >= 32*pi)."""
    return build_basis(BasisSpec(N_hermite=6, M_quad=10, N_z=96, L_z=32 * math.pi))


@pytest.fixture(scope="session")
def gs_table():
    """Ground-state workhorse: resolves Q for sigma in [2, 3]."""
    return build_basis(BasisSpec(N_hermite=10, M_quad=14, N_z=96, L_z=24 * math.pi))


@pytest.fixture(scope="session")
def ref_table():
    return build_basis(BasisSpec(**REF))


def exact_quad(table, sigma):
    """Midpoint rule at (or above) the integer-sigma exactness threshold."""
    n = theta_exactness_threshold(table.spec.N_hermite, max(1.0, math.ceil(sigma)))
    return theta_quadrature(max(n, 8))


@pytest.fixture(scope="session")
def quad24():
    return theta_quadrature(24)


@pytest.fixture(scope="session")
def quad48():
    return theta_quadrature(48)


@pytest.fixture()
def focusing2():
    return NonlinearityParams(sigma=2.0, lam=-1.0)


def make_fields(table, n, seed0=0, kind="random"):
    maker = {"random": random_field, "packet": packet_field}[kind]
    return [maker(table, seed=seed0 + i) for i in range(n)]


def rel_err(got, want):
    return abs(got - want) / max(1.0, abs(want))


@pytest.fixture(scope="session")
def small_gaussian(small_table):
    return gaussian_field(small_table, amplitude=1.0, y_width=1.0, z_width=2.0)
