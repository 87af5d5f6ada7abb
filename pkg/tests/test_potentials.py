import numpy as np
import pytest
from scipy import special as sp

from nearcloak import geometry as geo
from nearcloak import potentials as pot
from nearcloak.kernels import KernelParams, phi
from nearcloak.media import BackgroundMedium, GaussianBump, Profile, gauge_reduce

OMEGA = 2.3


@pytest.fixture(scope="module")
def disc():
    return geo.make_disc((0.0, 0.0), 1.0, 64)


@pytest.mark.parametrize("m", [0, 1, 2, 5, 9])
def test_single_layer_circle_eigenvalues(disc, m):
    f = np.exp(1j * m * disc.t)
    got = pot.single_layer_on(disc, OMEGA) @ f
    lam = 0.5j * np.pi * sp.jv(m, OMEGA) * sp.hankel1(m, OMEGA)
    assert np.max(np.abs(got - lam * f)) < 1e-12


@pytest.mark.parametrize("m", [0, 1, 2, 5, 9])
def test_double_layer_circle_eigenvalues(disc, m):
    f = np.exp(1j * m * disc.t)
    got = pot.double_layer_on(disc, OMEGA) @ f
    lam = 0.5j * np.pi * OMEGA * sp.jv(m, OMEGA) * sp.h1vp(m, OMEGA) + 0.5
    assert np.max(np.abs(got - lam * f)) < 1e-12


def test_circle_rotation_invariance(disc):
    s = pot.single_layer_on(disc, OMEGA).matrix
    shifted = np.roll(np.roll(s, 5, axis=0), 5, axis=1)
    assert np.max(np.abs(s - shifted)) < 1e-13


def test_static_double_layer_of_one(disc):
    kite = geo.make_kite((0, 0), 1.0, 128)
    for c in (disc, kite):
        assert np.max(np.abs(pot.static_double_layer_on(c).matrix.sum(axis=1) + 0.5)) < 1e-12


def test_self_convergence_on_kite():
    def apply(n):
        k = geo.make_kite((0, 0), 1.0, n)
        f = np.cos(k.t) + 0.3 * np.sin(2 * k.t)
        return (pot.single_layer_on(k, OMEGA) @ f)[0], (pot.double_layer_on(k, OMEGA) @ f)[0]

    coarse, fine, ref = apply(64), apply(128), apply(256)
    for a, b, r in zip(coarse, fine, ref):
        assert abs(b - r) < 1e-10
        assert abs(a - r) > abs(b - r)


def test_log_weights_circulant():
    r = pot.log_weights(16)
    assert np.allclose(r, r.T)
    assert np.allclose(np.roll(np.roll(r, 1, 0), 1, 1), r)


def test_static_single_layer_center_zero():
    """Static single layer of a constant on the unit circle vanishes at the centre."""
    c = geo.make_disc((0.0, 0.0), 1.0, 64)
    x = np.zeros((1, 2))
    val = np.sum(np.log(1 / np.linalg.norm(c.points - x, axis=1)) * c.weights) / (2 * np.pi)
    assert abs(val) < 1e-14


def test_off_curve_greens_representation():
    """``D u - S du`` reproduces a radiating ``u`` outside the disc and vanishes inside."""
    c = geo.make_disc((0.0, 0.0), 1.0, 128)
    m = 2
    u = sp.hankel1(m, OMEGA) * np.exp(1j * m * c.t)
    du = OMEGA * sp.h1vp(m, OMEGA) * np.exp(1j * m * c.t)
    pts = np.array([[1.5, 0.2], [0.0, -2.2], [1.003, 0.0], [-0.7, 0.7015]])
    got = pot.layer_off(c, pts, "double", OMEGA) @ u - pot.layer_off(c, pts, "single", OMEGA) @ du
    r = np.linalg.norm(pts, axis=1)
    exact = sp.hankel1(m, OMEGA * r) * np.exp(1j * m * np.arctan2(pts[:, 1], pts[:, 0]))
    exact[r < 1] = 0.0  # the last point sits just inside
    assert np.max(np.abs(got - exact)) < 1e-8


def test_off_curve_matches_direct_sum_far_away(disc):
    pts = np.array([[3.0, 1.0], [-2.0, 2.5]])
    mat = pot.layer_off(disc, pts, "single", OMEGA).matrix
    direct = phi(pts[:, None, :], disc.points[None, :, :], KernelParams(OMEGA)) * disc.weights
    assert np.max(np.abs(mat - direct)) < 1e-14


@pytest.mark.parametrize("side", [1.0, -1.0])
def test_jump_relation(side):
    kite = geo.make_kite((0, 0), 1.0, 128)
    f = np.cos(2 * kite.t) + 1j * np.sin(kite.t)
    on = pot.double_layer_on(kite, OMEGA) @ f
    idx = np.arange(0, 128, 16)
    vals = []
    for d in (0.004, 0.002):
        pts = kite.points[idx] + side * d * kite.normals[idx]
        vals.append(pot.layer_off(kite, pts, "double", OMEGA) @ f)
    limit = 2 * vals[1] - vals[0]
    assert np.max(np.abs(limit - (on[idx] + side * 0.5 * f[idx]))) < 1e-3


def test_refine_false_warns_near_curve(disc):
    with pytest.warns(UserWarning, match="plain quadrature"):
        pot.layer_off(disc, np.array([[1.001, 0.0]]), "single", OMEGA, refine=False)


def test_layer_rejects_bad_kind(disc):
    with pytest.raises(ValueError):
        pot.layer_off(disc, np.array([[2.0, 0.0]]), "triple", OMEGA)


def test_upsample_matrix_exact_on_trig_polynomials():
    n = 16
    t = 2 * np.pi * np.arange(n) / n
    tf = 2 * np.pi * np.arange(4 * n) / (4 * n)
    f = lambda s: np.cos(3 * s) + 0.5 * np.sin(5 * s)  # noqa: E731
    assert np.max(np.abs(pot.upsample_matrix(n, 4) @ f(t) - f(tf))) < 1e-13


def test_self_cell_log_moment_frozen_and_monte_carlo():
    h = 0.1
    assert pot.self_cell_log_moment(h) == pytest.approx(0.0053535911411572, rel=1e-13)
    rng = np.random.default_rng(7)
    y = rng.uniform(-h / 2, h / 2, size=(400_000, 2))
    mc = np.mean(np.log(1 / np.linalg.norm(y, axis=1))) * h * h / (2 * np.pi)
    assert abs(mc - pot.self_cell_log_moment(h)) / pot.self_cell_log_moment(h) < 1e-3


def test_log_rect_integral_against_quadrature():
    x = np.array([[0.03, -0.01], [0.5, 0.4]])
    lo, hi = np.array([0.0, 0.0]), np.array([0.1, 0.1])
    g, w = np.polynomial.legendre.leggauss(200)
    q = 0.05 + 0.05 * g
    yy = np.stack(np.meshgrid(q, q, indexing="ij"), -1).reshape(-1, 2)
    ww = np.outer(w, w).ravel() * 0.05**2
    ref = np.array([np.sum(np.log(np.linalg.norm(yy - xi, axis=1)) * ww) for xi in x])
    # the far target is smooth; the near one has a log singularity inside the cell
    got = pot.log_rect_integral(x, lo, hi)
    assert abs(got[1] - ref[1]) < 1e-12
    assert abs(got[0] - ref[0]) < 1e-5


def test_cell_integral_far_cell_is_midpoint_like():
    h = 0.05
    c = np.array([[1.0, 0.5]])
    got = pot.cell_integral(np.zeros((1, 2)), c, h, OMEGA)[0]
    mid = 0.25j * sp.hankel1(0, OMEGA * np.linalg.norm(c)) * h * h
    assert abs(got - mid) < 1e-3 * abs(mid)


def test_volume_matrix_zero_for_trivial_contrast():
    g = geo.build_grid([], (-1, 1, -1, 1), 0.2)
    gauge = gauge_reduce(BackgroundMedium(), 1.0)
    assert not np.any(pot.volume_matrix(g, gauge))
    assert not np.any(pot.volume_matrix(g, gauge, targets=np.array([[1.5, 0.0]])))


def test_volume_offgrid_matches_grid_rows():
    g = geo.build_grid([], (-1, 1, -1, 1), 0.1)
    gauge = gauge_reduce(BackgroundMedium(eta0=Profile((GaussianBump(0.5, 0.5),))), OMEGA)
    square = pot.volume_matrix(g, gauge)
    rows = pot.volume_matrix(g, gauge, targets=g.centers[:7])
    assert np.max(np.abs(square[:7] - rows)) < 1e-12


def test_cell_integrals_of_disc_converge():
    """Summed cell integrals over a disc against ``int_{|y|<R} Phi(0, y) dy``.

    With ``(Delta + omega^2) Phi = -delta`` that integral is
    ``(i pi R / 2 omega) H1(omega R) - 1 / omega^2``.
    """
    radius = 0.8
    exact = 1j * np.pi * radius / (2 * OMEGA) * sp.hankel1(1, OMEGA * radius) - 1 / OMEGA**2
    errs = []
    for h in (0.08, 0.04):
        g = geo.build_grid([], (-1, 1, -1, 1), h, domain_radius=radius)
        val = np.sum(pot.cell_integral(np.zeros((g.n_cells, 2)), g.centers, h, OMEGA))
        errs.append(abs(val - exact))
    # staircase boundary error, O(h)
    assert errs[1] < errs[0] and errs[1] < 0.01
