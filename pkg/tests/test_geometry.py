"""Domain, tracing, normals and boundary quadrature tests.

Closed-form conic intersections serve as oracles for the bisection tracer.
"""

import numpy as np
import pytest

import dvmbvp as dv
from dvmbvp.geometry import (ConvexDomain, GeometryError, OutsideDomainError,
                             boundary_param, tangency_thetas)


def disk_entry_time(z, v, r=1.0):
    """Closed-form backward exit time for the disk |z - s v| = r."""
    z = np.asarray(z, float)
    v = np.asarray(v, float)
    a = v @ v
    b = z @ v
    c = z @ z - r * r
    disc = b * b - a * c
    return (b + np.sqrt(disc)) / a


# -- tracing -------------------------------------------------------------------

def test_trace_disk_center(disk):
    seg = disk.trace((0.0, 0.0), (1.0, 0.0))
    assert abs(seg.s_plus - 1.0) < 1e-12 and abs(seg.s_minus - 1.0) < 1e-12
    assert np.allclose(seg.z_plus, [-1, 0], atol=1e-12)
    assert np.allclose(seg.z_minus, [1, 0], atol=1e-12)


def test_trace_disk_offset(disk):
    seg = disk.trace((0.5, 0.0), (1.0, 0.0))
    assert abs(seg.s_plus - 1.5) < 1e-12
    assert abs(seg.s_minus - 0.5) < 1e-12


def test_trace_ellipse_closed_form():
    dom = ConvexDomain.ellipse(2.0, 1.0)
    v = np.array([2.0, 1.0]) / np.sqrt(5.0)
    seg = dom.trace((0.0, 0.0), v)
    # (2t/sqrt5)^2/4 + (t/sqrt5)^2 = 1  =>  t = sqrt(5/2)
    t = np.sqrt(2.5)
    assert abs(seg.s_plus - t) < 1e-12 and abs(seg.s_minus - t) < 1e-12


def test_trace_result_on_boundary(disk):
    rng = np.random.default_rng(3)
    for _ in range(50):
        z = rng.uniform(-0.6, 0.6, 2)
        v = rng.normal(size=2)
        seg = disk.trace(z, v)
        assert abs(disk.phi(seg.z_plus)) < 1e-12
        assert abs(disk.phi(seg.z_minus)) < 1e-12


def test_trace_outside_raises(disk):
    with pytest.raises(OutsideDomainError):
        disk.trace((2.0, 0.0), (1.0, 0.0))


def test_trace_roundtrip(disk):
    """Re-tracing from the chord midpoint reproduces the chord length."""
    rng = np.random.default_rng(11)
    for _ in range(30):
        z = rng.uniform(-0.5, 0.5, 2)
        v = rng.normal(size=2)
        seg = disk.trace(z, v)
        mid = seg.z_plus + 0.5 * seg.length_time * seg.v
        seg2 = disk.trace(mid, v)
        assert abs(seg2.length_time - seg.length_time) < 1e-10


def test_exit_times_match_closed_form(disk):
    rng = np.random.default_rng(5)
    zs = rng.uniform(-0.5, 0.5, size=(40, 2))
    v = np.array([3.0, 2.0])
    got = disk.exit_times(zs, -v)
    want = np.array([disk_entry_time(z, v) for z in zs])
    assert np.max(np.abs(got - want)) < 1e-12


# -- normals ---------------------------------------------------------------------

def test_inward_normal_disk(disk):
    assert np.allclose(disk.inward_normal((1.0, 0.0)), [-1, 0], atol=1e-12)
    assert np.allclose(disk.inward_normal((0.0, -1.0)), [0, 1], atol=1e-12)


def test_inward_normal_ellipse():
    dom = ConvexDomain.ellipse(2.0, 1.0)
    assert np.allclose(dom.inward_normal((2.0, 0.0)), [-1, 0], atol=1e-12)
    # gradient direction (x/2, 2y) normalised at a generic point
    x, y = 2.0 * np.cos(0.7), np.sin(0.7)
    n = dom.inward_normal((x, y))
    g = np.array([x / 2.0, 2.0 * y])
    assert np.allclose(n, -g / np.linalg.norm(g), atol=1e-10)
    assert abs(np.linalg.norm(n) - 1.0) < 1e-14


def test_inward_normal_requires_boundary_point(disk):
    with pytest.raises(GeometryError):
        disk.inward_normal((0.5, 0.0))


def test_normal_unit_norm_superellipse():
    dom = ConvexDomain.superellipse(1.5, 1.0, 4.0)
    bp = boundary_param(dom)
    pts = bp.point_of_theta(np.linspace(0.1, 6.0, 17))
    for pt in pts:
        n = dom.inward_normal(pt)
        assert abs(np.linalg.norm(n) - 1.0) < 1e-14


def test_superellipse_exponent_validation():
    with pytest.raises(GeometryError):
        ConvexDomain.superellipse(1.0, 1.0, 1.0)
    with pytest.raises(GeometryError):
        ConvexDomain.superellipse(1.0, 1.0, 9.5)


# -- boundary quadrature ------------------------------------------------------------

def test_boundary_quadrature_disk_projected_width(disk):
    arc = dv.boundary_quadrature(disk, (1.0, 0.0), +1)
    # inflow arc of v = (1, 0) is the left half circle
    assert np.all(arc.points[:, 0] < 0)
    assert np.all(arc.vdotn > 0)
    width = arc.integrate_flux(np.ones(len(arc.dsigma)))
    assert abs(width - 2.0) < 1e-4


def test_boundary_quadrature_inflow_equals_outflow(disk):
    v = (3.0, 2.0)
    win = dv.boundary_quadrature(disk, v, +1).integrate_flux(1.0)
    wout = dv.boundary_quadrature(disk, v, -1).integrate_flux(1.0)
    assert abs(win - wout) < 1e-8 * win


def test_boundary_quadrature_ellipse_projected_width():
    dom = ConvexDomain.ellipse(2.0, 1.0)
    arc = dv.boundary_quadrature(dom, (0.0, 1.0), +1)
    width = arc.integrate_flux(np.ones(len(arc.dsigma)))
    assert abs(width - 4.0) < 1e-4


def test_boundary_quadrature_signs(disk, broadwell):
    for i in range(broadwell.p):
        plus = dv.boundary_quadrature(disk, broadwell.v[i], +1)
        minus = dv.boundary_quadrature(disk, broadwell.v[i], -1)
        assert np.all(plus.vdotn > 0)
        assert np.all(minus.vdotn < 0)


def test_projected_width_identity_superellipse():
    dom = ConvexDomain.superellipse(1.2, 0.9, 1.8)
    v = (1.0, 0.4)
    win = dv.boundary_quadrature(dom, v, +1).integrate_flux(1.0)
    wout = dv.boundary_quadrature(dom, v, -1).integrate_flux(1.0)
    assert abs(win - wout) < 1e-5 * win


def test_tangency_thetas_disk(disk):
    th = sorted(tangency_thetas(disk, (1.0, 0.0)))
    assert np.allclose(th, [np.pi / 2, 3 * np.pi / 2], atol=1e-8)


# -- strict convexity proxy -----------------------------------------------------------

@pytest.mark.parametrize("dom", [
    ConvexDomain.disk(),
    ConvexDomain.ellipse(2.0, 1.0),
    ConvexDomain.superellipse(1.0, 1.3, 4.0),
])
def test_midpoints_strictly_interior(dom):
    bp = boundary_param(dom)
    rng = np.random.default_rng(2)
    th = rng.uniform(0, 2 * np.pi, size=(60, 2))
    pts_a = bp.point_of_theta(th[:, 0])
    pts_b = bp.point_of_theta(th[:, 1])
    sep = np.linalg.norm(pts_a - pts_b, axis=1) > 1e-6
    mids = 0.5 * (pts_a + pts_b)[sep]
    assert np.all(dom.phi(mids) < 0)


# -- double-characteristic change of variables ----------------------------------------

def test_jacobian_check_disk(disk, broadwell):
    dev = dv.change_of_variables_jacobian_check(disk, broadwell.v[0], broadwell.v[2])
    assert dev <= 1e-6


def test_jacobian_check_rejects_parallel(disk, broadwell):
    with pytest.raises(GeometryError):
        dv.change_of_variables_jacobian_check(disk, broadwell.v[0], broadwell.v[0])


def test_jacobian_check_center_and_near_boundary(disk, broadwell):
    dev_c = dv.change_of_variables_jacobian_check(
        disk, broadwell.v[1], broadwell.v[3], z=(0.0, 0.0), n_s=10, n_sigma=10)
    dev_b = dv.change_of_variables_jacobian_check(
        disk, broadwell.v[1], broadwell.v[3], z=(0.7, 0.3), n_s=10, n_sigma=10)
    assert dev_c <= 1e-6 and dev_b <= 1e-6


def test_parameter_recovery_roundtrip():
    for dom in (ConvexDomain.disk(), ConvexDomain.ellipse(2.0, 1.0),
                ConvexDomain.superellipse(1.0, 1.0, 3.0)):
        bp = boundary_param(dom)
        th = np.linspace(0.05, 2 * np.pi - 0.05, 37)
        pts = bp.point_of_theta(th)
        back = bp.theta_of_point(pts)
        assert np.max(np.abs(back - th)) < 1e-10
