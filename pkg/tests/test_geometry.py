import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nearcloak import geometry as geo


def test_disc_point_and_derivative():
    d = geo.make_disc((0.0, 0.0), 1.0, 64)
    assert np.allclose(d.param(np.array([0.0])), [[1.0, 0.0]])
    assert np.allclose(d.deriv1(np.array([np.pi / 2])), [[-1.0, 0.0]], atol=1e-15)


def test_disc_area_green():
    assert abs(geo.make_disc((0.3, 0.1), 1.0, 64).area() - np.pi) < 1e-12


@pytest.mark.parametrize("radius,n", [(0.0, 64), (-1.0, 64), (1.0, 63), (1.0, 6)])
def test_disc_rejects_bad_input(radius, n):
    with pytest.raises(geo.GeometryError):
        geo.make_disc((0, 0), radius, n)


def test_kite_point_and_closure():
    k = geo.make_kite((0.0, 0.0), 1.0, 64)
    assert np.allclose(k.param(np.array([0.0])), [[1.0, 0.0]])
    assert np.allclose(k.param(np.array([0.0])), k.param(np.array([2 * np.pi])), atol=1e-14)


def test_kite_area_self_convergent():
    ref = geo.make_kite((0, 0), 1.0, 256).area()
    assert abs(geo.make_kite((0, 0), 1.0, 64).area() - ref) < 1e-12


def test_normals_point_outward():
    for c in (geo.make_disc((1, 2), 0.5, 32), geo.make_kite((0, 0), 1.0, 64), geo.make_ellipse((0, 0), 2, 1, 64)):
        probe = c.points + 1e-3 * c.normals
        assert not c.contains(probe).any()
        assert c.contains(c.points - 1e-3 * c.normals).all()


def test_perimeter_spectral():
    errs = []
    ref = geo.make_ellipse((0, 0), 2.0, 1.0, 512).perimeter()
    for n in (8, 16, 32, 64):
        errs.append(abs(geo.make_ellipse((0, 0), 2.0, 1.0, n).perimeter() - ref))
    # geometric, not algebraic, decay
    assert errs[1] < errs[0] / 100 and errs[2] < errs[1] / 100 and errs[3] < 1e-13


def test_scale_small_obstacles():
    tpl = geo.make_disc((0, 0), 1.0, 32)
    cfg = geo.ObstacleConfig(small=(geo.SmallObstacle(np.array([2.0, 0.0]), tpl),))
    (c,) = geo.scale_small_obstacles(cfg, 0.1)
    assert np.allclose(np.linalg.norm(c.points - [2, 0], axis=1), 0.1)
    assert np.allclose(c.normals, tpl.normals)
    (c2,) = geo.scale_small_obstacles(cfg, 0.05)
    chord = lambda cc: np.linalg.norm(cc.points[1] - cc.points[0])  # noqa: E731
    assert chord(c2) == pytest.approx(chord(c) / 2, rel=1e-14)


def test_overlap_rejected():
    tpl = geo.make_disc((0, 0), 1.0, 32)
    cfg = geo.ObstacleConfig(
        small=(geo.SmallObstacle(np.array([0.0, 0.0]), tpl), geo.SmallObstacle(np.array([0.5, 0.0]), tpl))
    )
    with pytest.raises(geo.GeometryError):
        geo.scale_small_obstacles(cfg, 0.3)
    geo.scale_small_obstacles(cfg, 0.2)


def test_center_distance_below_d0_rejected():
    tpl = geo.make_disc((0, 0), 1.0, 32)
    with pytest.raises(geo.GeometryError):
        geo.ObstacleConfig(
            small=(geo.SmallObstacle(np.array([0.0, 0.0]), tpl), geo.SmallObstacle(np.array([0.3, 0.0]), tpl)),
            d0_min=0.5,
        )


@given(st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=25, deadline=None)
def test_scaling_commutes_with_translation(dx, dy):
    tpl = geo.make_disc((0, 0), 1.0, 16)
    cfg = geo.ObstacleConfig(
        small=(geo.SmallObstacle(np.array([0.0, 0.0]), tpl), geo.SmallObstacle(np.array([1.0, 0.5]), tpl))
    )
    shift = np.array([dx, dy])
    a = [c.points + shift for c in geo.scale_small_obstacles(cfg, 0.1)]
    b = [c.points for c in geo.scale_small_obstacles(cfg.translated(shift), 0.1)]
    for p, q in zip(a, b):
        assert np.allclose(p, q, atol=1e-12)


def test_point_in_curve():
    d = geo.make_disc((0, 0), 1.0, 64)
    assert d.contains(np.zeros((1, 2)))[0]
    assert not d.contains(np.array([[1.5, 0.0]]))[0]
    assert d.contains(d.points[:1])[0]  # ties count as inside


def test_grid_empty_obstacles():
    g = geo.build_grid([], (-1, 1, -1, 1), 0.1)
    assert g.n_cells == 400 and g.mask.all()


def test_grid_masked_count_for_unit_disc():
    d = geo.make_disc((0, 0), 1.0, 128)
    g = geo.build_grid([d], (-2, 2, -2, 2), 0.1)
    masked = g.nx * g.ny - g.n_cells
    perimeter_cells = 2 * np.pi / 0.1
    assert abs(masked - np.pi / 0.01) < perimeter_cells


def test_grid_area_error_bounded_by_boundary_layer():
    # lattice counting error is not monotone in h, only O(h * perimeter)
    d = geo.make_disc((0.05, -0.02), 0.7, 128)
    perimeter = 2 * np.pi * (1.4 + 0.7)
    for h in (0.1, 0.05, 0.025, 0.0125):
        g = geo.build_grid([d], (-1.5, 1.5, -1.5, 1.5), h, domain_radius=1.4)
        err = abs(g.n_cells * h * h - (np.pi * 1.4**2 - np.pi * 0.49))
        assert err < 0.5 * h * perimeter


def test_grid_warns_for_unresolved_obstacle():
    small = geo.make_disc((0, 0), 0.01, 32)
    with pytest.warns(UserWarning, match="exceeds the diameter"):
        geo.build_grid([small], (-1, 1, -1, 1), 0.1)


def test_grid_rejects_nonpositive_h():
    with pytest.raises(geo.GeometryError):
        geo.build_grid([], (-1, 1, -1, 1), 0.0)


def test_grid_cell_of_roundtrip():
    g = geo.build_grid([], (-1, 1, -1, 1), 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert np.array_equal(g.cell_of(g.centers), g.index)
