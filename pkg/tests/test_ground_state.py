"""Ground-state solves, the action threshold, and Nehari-manifold moves.

Regression anchors (the threshold values) were computed by this package and
are pinned to guard against silent drift; structural assertions (residuals,
manifold identities, the closed-form level-0 soliton) are independent
oracles.
"""

import math
import warnings

import numpy as np
import pytest

from rnls.basis import (
    BasisSpec,
    SpectralField,
    b1_distance,
    build_basis,
    gaussian_field,
    norms,
    packet_field,
)
from rnls.functionals import J_ab, report
from rnls.ground_state import (
    el_residual,
    gap_check,
    level0_soliton,
    nehari_amplitude,
    nehari_project,
    nehari_project_dilation,
    petviashvili_solve,
    threshold_d,
)
from rnls.nonlinearity import (
    NonlinearityParams,
    theta_exactness_threshold,
    theta_quadrature,
)

from conftest import exact_quad

_P2 = NonlinearityParams(sigma=2.0, lam=-1.0)
_P25 = NonlinearityParams(sigma=2.5, lam=-1.0)


@pytest.fixture(scope="module")
def q2(gs_table):
    return exact_quad(gs_table, 2.0)


@pytest.fixture(scope="module")
def q3(gs_table):
    return exact_quad(gs_table, 2.5)


@pytest.fixture(scope="module")
def gs2(gs_table, q2):
    return petviashvili_solve(gs_table, _P2, q2)


@pytest.fixture(scope="module")
def gs25(gs_table, q3):
    return petviashvili_solve(gs_table, _P25, q3, tol=1e-9)


# ------------------------------------------------------------ the solve


def test_sigma2_solve_properties(gs_table, q2, gs2):
    assert gs2.converged
    assert gs2.iterations <= 30
    assert gs2.residual < 1e-8
    assert el_residual(gs2.Q, _P2, q2) < 1e-8
    rep = report(gs2.Q, _P2, q2)
    assert abs(rep.I) < 1e-12 * rep.S            # on the Nehari manifold
    assert abs(gs2.trace[-1]["M"] - 1.0) < 1e-10  # stabilizer at fixed point
    assert gs2.trace[-1]["residual"] < gs2.trace[0]["residual"]
    # regression anchor for the threshold at this resolution
    assert gs2.d == pytest.approx(20.670326960376, rel=1e-10)


def test_sigma25_solve_properties(gs_table, q3, gs25):
    assert gs25.converged
    assert el_residual(gs25.Q, _P25, q3) < 1e-8
    rep = report(gs25.Q, _P25, q3)
    assert abs(rep.I) < 1e-12 * rep.S
    assert gs25.d == pytest.approx(17.698670540366, rel=1e-10)


def test_threshold_two_expressions_agree(gs_table, q2, q3, gs2, gs25):
    for gs, params, quad in ((gs2, _P2, q2), (gs25, _P25, q3)):
        td = threshold_d(gs, params, quad)
        assert td["agree"]
        assert td["d_action"] == pytest.approx(td["d_quotient"], rel=1e-8)


def test_threshold_warns_for_non_ground_state(gs_table, q2):
    """A 1-step iterate is far from the solution: the two threshold
    expressions must visibly disagree and raise a RuntimeWarning."""
    bad = petviashvili_solve(gs_table, _P2, q2, max_iter=1)
    assert not bad.converged
    assert len(bad.trace) == 1
    with pytest.warns(RuntimeWarning, match="disagree"):
        td = threshold_d(bad, _P2, q2)
    assert not td["agree"]


def test_solve_rejects_defocusing(gs_table, q2):
    with pytest.raises(ValueError, match="focusing"):
        petviashvili_solve(
            gs_table, NonlinearityParams(sigma=2.0, lam=1.0), q2
        )


# --------------------------------------------------------- gap check


def test_gap_check_domain(gs_table, q3, gs25):
    g = gaussian_field(gs_table, amplitude=2.2, y_width=1.0, z_width=2.5)
    rep = report(g, _P25, q3)
    assert rep.I < 0
    d = rep.S + 4.0
    got = gap_check(g, d, _P25, q3)
    assert got == pytest.approx(rep.P + 0.25 * (d - rep.S), rel=1e-12)
    with pytest.raises(ValueError, match="2 < sigma < 4"):
        gap_check(g, d, _P2, exact_quad(gs_table, 2.0))
    with pytest.raises(ValueError, match="below-threshold"):
        gap_check(g, rep.S - 1.0, _P25, q3)
    tiny = gaussian_field(gs_table, amplitude=1e-3, y_width=1.0, z_width=2.5)
    assert report(tiny, _P25, q3).I > 0
    with pytest.raises(ValueError, match="I < 0"):
        gap_check(tiny, d, _P25, q3)


# ------------------------------------------------- manifold projections


def test_amplitude_projection_lands_on_manifold(gs_table, q2, q3):
    for seed in range(5):
        f = packet_field(gs_table, seed=seed)
        proj, r = nehari_amplitude(f, 1.0, 0.0, _P2, q2)
        assert r > 0
        rep = report(proj, _P2, q2)
        assert abs(rep.I) < 1e-10 * max(1.0, rep.S)
        # closed-cone boundary at sigma = 2: (1,2) targets {P = 0}
        proj2, _ = nehari_amplitude(f, 1.0, 2.0, _P2, q2)
        rep2 = report(proj2, _P2, q2)
        assert abs(rep2.P) < 1e-10 * max(1.0, rep2.S)
        # interior pair at sigma = 2.5
        proj3, _ = nehari_amplitude(f, 1.0, 2.0, _P25, q3)
        assert abs(J_ab(proj3, 1.0, 2.0, _P25, q3)) < 1e-10


def test_amplitude_projection_is_ray_idempotent(gs_table, q2):
    f = packet_field(gs_table, seed=11)
    g = SpectralField(coeffs=3.7 * f.coeffs, basis=gs_table, time=0.0)
    pf, _ = nehari_amplitude(f, 1.0, 0.0, _P2, q2)
    pg, _ = nehari_amplitude(g, 1.0, 0.0, _P2, q2)
    assert np.abs(pf.coeffs - pg.coeffs).max() < 1e-12


def test_amplitude_projection_rejections(gs_table, q2, q3):
    f = packet_field(gs_table, seed=0)
    with pytest.raises(ValueError, match="cone"):
        nehari_amplitude(f, 1.0, 3.0, _P25, q3)
    with pytest.raises(ValueError, match="focusing"):
        nehari_amplitude(f, 1.0, 0.0, NonlinearityParams(2.0, 1.0), q2)
    zero = SpectralField(coeffs=np.zeros_like(f.coeffs), basis=gs_table,
                         time=0.0)
    with pytest.raises(ValueError):
        nehari_amplitude(zero, 1.0, 0.0, _P2, q2)


def test_orbit_projection_matches_amplitude_move_at_b0(gs_table, q3):
    """The (1, 0) orbit is a pure amplitude ray, so both projectors must
    land on the same field."""
    f = packet_field(gs_table, seed=7)
    po, mu = nehari_project(f, 1.0, 0.0, _P25, q3)
    pa, r = nehari_amplitude(f, 1.0, 0.0, _P25, q3)
    assert math.exp(mu) == pytest.approx(r, rel=1e-12)
    assert np.abs(po.coeffs - pa.coeffs).max() < 1e-12
    assert abs(report(po, _P25, q3).I) < 1e-10 * report(po, _P25, q3).S


def test_orbit_projection_dilating_pair(gs_table, q3):
    """(1, 2) at sigma = 2.5 from a near-manifold start: the root is a
    modest dilation and lands on {J = 0}."""
    g = gaussian_field(gs_table, amplitude=1.6, y_width=1.0, z_width=2.5)
    gm, _ = nehari_amplitude(g, 1.0, 2.0, _P25, q3)
    h = SpectralField(coeffs=1.07 * gm.coeffs, basis=gs_table, time=0.0)
    pj, mu = nehari_project(h, 1.0, 2.0, _P25, q3)
    assert abs(mu) < 1.0
    assert abs(J_ab(pj, 1.0, 2.0, _P25, q3)) < 1e-10


def test_orbit_projection_guards(gs_table, q2, q3):
    # inadmissible pair at sigma = 2
    g = gaussian_field(gs_table, amplitude=1.6, y_width=1.0, z_width=2.5)
    with pytest.raises(ValueError, match="admissible"):
        nehari_project(g, 1.0, 2.0, _P2, q2)
    # far-from-manifold data need a dilation beyond the resolved band
    weak = gaussian_field(gs_table, amplitude=0.9, y_width=1.0, z_width=2.5)
    with pytest.raises(ValueError, match="resolved band|not localized"):
        nehari_project(weak, 1.0, 2.0, _P25, q3)


def test_dilation_projection_zeroes_P(gs_table, q2):
    g = gaussian_field(gs_table, amplitude=1.2, y_width=1.0, z_width=2.5)
    before = report(g, _P2, q2).P
    pj, s = nehari_project_dilation(g, _P2, q2)
    after = report(pj, _P2, q2).P
    assert abs(after) < 1e-6 * abs(before)
    assert 0.5 < s < 1.5
    # strongly focusing data would need a dilation the grid cannot hold
    strong = gaussian_field(gs_table, amplitude=2.1, y_width=1.0,
                            z_width=2.5)
    with pytest.raises(ValueError, match="resolved band"):
        nehari_project_dilation(strong, _P2, q2)


# -------------------------------------------- sampled variational bound


def test_sampled_nehari_lower_bound(gs_table, q2, q3, gs2, gs25):
    """Every manifold point's action is bounded below by the threshold:
    S[proj psi] >= d (1 - 1e-6), independent of the projecting pair."""
    for seed in range(10):
        p = packet_field(gs_table, seed=seed)
        m, _ = nehari_amplitude(p, 1.0, 0.0, _P2, q2)
        assert report(m, _P2, q2).S >= gs2.d * (1.0 - 1e-6)
        for a, b in ((1.0, 0.0), (1.0, 2.0)):
            m, _ = nehari_amplitude(p, a, b, _P25, q3)
            assert report(m, _P25, q3).S >= gs25.d * (1.0 - 1e-6)


# ------------------------------------------------- level-0 closed form


def test_level0_soliton_sigma1():
    """At sigma = 1 the level-(0,0) subspace is invariant and the reduced
    problem has the closed-form sech ground state; the discrete solve from
    a generic level-0 start must recover it and stay on the subspace."""
    table = build_basis(BasisSpec(N_hermite=4, M_quad=16, N_z=512,
                                  L_z=32 * math.pi))
    params = NonlinearityParams(sigma=1.0, lam=-1.0)
    quad = theta_quadrature(theta_exactness_threshold(4, 1.0))
    sol = level0_soliton(table)
    # closed form solves the discrete problem to the grid's spectral floor
    assert el_residual(sol, params, quad) < 1e-4
    c0 = np.zeros_like(sol.coeffs)
    c0[0, 0, :] = np.fft.fft(np.exp(-table.z**2 / 2)) * table._zanal
    gs = petviashvili_solve(
        table, params, quad,
        init=SpectralField(coeffs=c0, basis=table, time=0.0),
    )
    assert gs.converged
    off_level = float(np.abs(gs.Q.coeffs).sum()
                      - np.abs(gs.Q.coeffs[0, 0, :]).sum())
    assert off_level < 1e-12
    dist = b1_distance(gs.Q, sol) / math.sqrt(norms(sol)["mass_L2"])
    assert dist < 1e-5
