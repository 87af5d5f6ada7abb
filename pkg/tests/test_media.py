import numpy as np
import pytest

from nearcloak.media import (
    BackgroundMedium,
    GaussianBump,
    MediumError,
    PolyBump,
    Profile,
    gauge_reduce,
    push_forward_media,
)
from nearcloak.transform import BlowupMap


class IdentityMap:
    def inverse(self, x):
        return np.asarray(x, dtype=float)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2)), np.ones(x.shape[:-1])


PTS = np.random.default_rng(0).uniform(-2, 2, size=(40, 2))


def test_homogeneous_gauge():
    g = gauge_reduce(BackgroundMedium(), 2.0)
    assert np.all(g.q(PTS) == 1.0)
    assert np.all(g.gamma0(PTS) == 0.0)


def test_constant_sigma_gives_q_eta():
    eta = Profile((GaussianBump(0.3, 0.7, (0.2, 0.1)),))
    g = gauge_reduce(BackgroundMedium(eta0=eta), 1.5)
    assert np.allclose(g.q(PTS), eta.value(PTS), rtol=0, atol=0)


def test_gauge_term_against_fd():
    sig = Profile((GaussianBump(0.5, 1.0),))
    med = BackgroundMedium(sigma0=sig)
    omega = 1.3
    d = 1e-4
    x0 = np.zeros(2)
    s = lambda x: np.sqrt(sig.value(np.atleast_2d(x)))[0]  # noqa: E731
    lap = (sum(s(x0 + d * e) + s(x0 - d * e) for e in np.eye(2)) - 4 * s(x0)) / d**2
    q_fd = 1 / sig.value(x0[None])[0] - lap / s(x0) / omega**2
    assert abs(gauge_reduce(med, omega).q(x0[None])[0] - q_fd) < 1e-6


@pytest.mark.parametrize("bump", [GaussianBump(0.4, 0.8, (0.5, 0.5)), PolyBump(0.3, 1.2, (-0.1, 0.2))])
def test_bump_derivatives_against_fd(bump):
    d = 1e-5
    x = np.random.default_rng(1).uniform(-0.8, 0.8, size=(10, 2))
    for k, e in enumerate(np.eye(2)):
        fd = (bump.value(x + d * e) - bump.value(x - d * e)) / (2 * d)
        assert np.allclose(bump.gradient(x)[:, k], fd, atol=1e-8)
    d = 1e-4
    lap = sum(bump.value(x + d * e) + bump.value(x - d * e) for e in np.eye(2)) - 4 * bump.value(x)
    assert np.allclose(bump.laplacian(x), lap / d**2, atol=1e-5)


def test_q_exactly_one_outside_support():
    sig = Profile((GaussianBump(0.4, 0.8, (0.5, 0.5)),), 3.0)
    eta = Profile((GaussianBump(0.3, 0.8, (0.5, 0.5)),), 3.0)
    g = gauge_reduce(BackgroundMedium(sig, eta), 2.0)
    ang = np.linspace(0, 2 * np.pi, 50)
    far = 3.01 * np.column_stack([np.cos(ang), np.sin(ang)])
    assert np.all(g.q(far) == 1.0)


def test_negative_sigma_rejected():
    sig = Profile((GaussianBump(-2.0, 1.0),))
    g = gauge_reduce(BackgroundMedium(sigma0=sig), 1.0)
    with pytest.raises(MediumError):
        g.q(np.zeros((1, 2)))
    with pytest.raises(MediumError):
        BackgroundMedium(sigma0=sig).validate(np.zeros((1, 2)))


def test_nonpositive_omega_rejected():
    with pytest.raises(MediumError):
        gauge_reduce(BackgroundMedium(), 0.0)


def test_push_forward_identity():
    med = BackgroundMedium(Profile((GaussianBump(0.4, 0.8),)), Profile((GaussianBump(0.2, 0.5),)))
    s, e = push_forward_media(med, IdentityMap(), PTS)
    assert np.allclose(s, med.sigma0.value(PTS)[:, None, None] * np.eye(2))
    assert np.allclose(e, med.eta0.value(PTS))


def test_push_forward_symmetric_positive():
    bm = BlowupMap((0.0, 0.0), 0.1, 0.5, 1.0)
    ang = np.linspace(0, 2 * np.pi, 30)
    rad = np.linspace(0.51, 0.99, 30)
    xt = rad[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
    med = BackgroundMedium(Profile((GaussianBump(0.4, 0.8),)))
    s, e = push_forward_media(med, bm, xt)
    assert np.array_equal(s, np.swapaxes(s, -1, -2))
    assert np.all(np.linalg.eigvalsh(s) > 0) and np.all(e > 0)


def test_push_forward_determinant_identity():
    """For sigma0 = 1: det(sigma~) = det(M)^2 / J^2 = 1 and eta~ J = 1."""
    bm = BlowupMap((0.0, 0.0), 0.1, 0.5, 1.0)
    rng = np.random.default_rng(4)
    r = rng.uniform(0.5, 1.0, 25)
    a = rng.uniform(0, 2 * np.pi, 25)
    xt = r[:, None] * np.column_stack([np.cos(a), np.sin(a)])
    s, e = push_forward_media(BackgroundMedium(), bm, xt)
    _, j = bm.jacobian(bm.inverse(xt))
    assert np.allclose(np.linalg.det(s), 1.0, atol=1e-12)
    assert np.allclose(e * j, 1.0, atol=1e-14)
