"""Strictly convex planar domains with characteristic tracing.

Supported shapes are disks, ellipses and superellipses |x/a|^q + |y/b|^q = 1
with q in (1, 8].  All of them are described by an implicit function phi with
phi < 0 inside and phi = 0 on the boundary, so ray/boundary intersections can
be found by bracketed bisection without shape-specific code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    pass


class OutsideDomainError(GeometryError):
    pass


def _as_point(p):
    a = np.asarray(p, dtype=float)
    if a.shape != (2,):
        raise GeometryError(f"expected a 2-vector, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class ConvexDomain:
    """Strictly convex bounded open region with C1 boundary.

    `exponent` is 2 for disks and ellipses; superellipses take q in (1, 8].
    """

    kind: str
    center: tuple[float, float]
    semi_axes: tuple[float, float]
    exponent: float = 2.0
    # number of parameter samples backing the arclength table
    param_samples: int = 8192

    def __post_init__(self):
        if self.kind not in ("disk", "ellipse", "superellipse"):
            raise GeometryError(f"unsupported domain kind {self.kind!r}")
        a, b = self.semi_axes
        if a <= 0 or b <= 0:
            raise GeometryError("semi-axes must be positive")
        if self.kind == "superellipse" and not (1.0 < self.exponent <= 8.0):
            raise GeometryError("superellipse exponent must lie in (1, 8]")
        if self.kind != "superellipse" and self.exponent != 2.0:
            raise GeometryError("exponent is only meaningful for superellipses")

    # -- factories ---------------------------------------------------------

    @staticmethod
    def disk(radius=1.0, center=(0.0, 0.0)) -> "ConvexDomain":
        return ConvexDomain("disk", tuple(map(float, center)), (float(radius), float(radius)))

    @staticmethod
    def ellipse(a, b, center=(0.0, 0.0)) -> "ConvexDomain":
        return ConvexDomain("ellipse", tuple(map(float, center)), (float(a), float(b)))

    @staticmethod
    def superellipse(a, b, exponent, center=(0.0, 0.0)) -> "ConvexDomain":
        return ConvexDomain("superellipse", tuple(map(float, center)),
                            (float(a), float(b)), float(exponent))

    @staticmethod
    def from_spec(spec: dict) -> "ConvexDomain":
        """Build from a config mapping {kind, center, semi_axes, exponent|radius}."""
        kind = spec.get("kind")
        center = spec.get("center", (0.0, 0.0))
        if kind == "disk":
            return ConvexDomain.disk(spec.get("radius", 1.0), center)
        if kind == "ellipse":
            a, b = spec["semi_axes"]
            return ConvexDomain.ellipse(a, b, center)
        if kind == "superellipse":
            a, b = spec["semi_axes"]
            return ConvexDomain.superellipse(a, b, spec["exponent"], center)
        raise GeometryError(f"unsupported domain kind {kind!r}")

    def to_spec(self) -> dict:
        spec = {"kind": self.kind, "center": list(self.center),
                "semi_axes": list(self.semi_axes)}
        if self.kind == "superellipse":
            spec["exponent"] = self.exponent
        return spec

    # -- implicit function -------------------------------------------------

    @property
    def scale(self) -> float:
        return max(self.semi_axes)

    @property
    def diameter(self) -> float:
        return 2.0 * self.scale

    @property
    def bounding_radius(self) -> float:
        a, b = self.semi_axes
        return math.hypot(a, b)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        a, b = self.semi_axes
        return (cx - a, cx + a, cy - b, cy + b)

    def phi(self, points):
        """Implicit function: negative inside, zero on the boundary."""
        p = np.asarray(points, dtype=float)
        x = (p[..., 0] - self.center[0]) / self.semi_axes[0]
        y = (p[..., 1] - self.center[1]) / self.semi_axes[1]
        if self.exponent == 2.0:
            return x * x + y * y - 1.0
        q = self.exponent
        return np.abs(x) ** q + np.abs(y) ** q - 1.0

    def grad_phi(self, points):
        p = np.asarray(points, dtype=float)
        a, b = self.semi_axes
        x = (p[..., 0] - self.center[0]) / a
        y = (p[..., 1] - self.center[1]) / b
        if self.exponent == 2.0:
            gx = 2.0 * x / a
            gy = 2.0 * y / b
        else:
            q = self.exponent
            gx = q * np.abs(x) ** (q - 1.0) * np.sign(x) / a
            gy = q * np.abs(y) ** (q - 1.0) * np.sign(y) / b
        return np.stack([gx, gy], axis=-1)

    def contains(self, points):
        return self.phi(points) < 0.0

    # -- normals -----------------------------------------------------------

    def inward_normal(self, point):
        """Unit inward normal at a boundary point."""
        z = _as_point(point)
        tol = 1e-6 * self.scale
        if abs(self.phi(z)) > tol:
            raise GeometryError(f"point {z} is not on the boundary (phi={self.phi(z):.3e})")
        g = self.grad_phi(z)
        gn = float(np.hypot(g[0], g[1]))
        if gn == 0.0:
            raise GeometryError("degenerate gradient on the boundary")
        n = -g / gn
        # orientation probe: stepping inward along n must decrease phi
        delta = 1e-8 * self.scale
        if self.phi(z + delta * n) >= self.phi(z):
            n = -n
        return n

    def inward_normals(self, points):
        g = self.grad_phi(points)
        gn = np.linalg.norm(g, axis=-1, keepdims=True)
        return -g / gn

    # -- ray tracing ---------------------------------------------------------

    def _exit_time(self, z, v):
        """Scalar bisection: smallest s > 0 with z + s v on the boundary.

        Assumes phi(z) <= 0 (inside or on the boundary with the ray entering).
        """
        z = _as_point(z)
        v = _as_point(v)
        speed = float(np.hypot(v[0], v[1]))
        if speed == 0.0:
            raise GeometryError("zero velocity has no characteristic")
        c = np.asarray(self.center)
        hi = (float(np.hypot(*(z - c))) + self.bounding_radius + self.scale) / speed
        while self.phi(z + hi * v) <= 0.0:
            hi *= 2.0
        lo = 0.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.phi(z + mid * v) > 0.0:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    def exit_times(self, zs, v):
        """Vectorised version of `_exit_time` over an (n, 2) array of points."""
        zs = np.asarray(zs, dtype=float)
        v = _as_point(v)
        speed = float(np.hypot(v[0], v[1]))
        c = np.asarray(self.center)
        hi = (np.linalg.norm(zs - c, axis=1) + self.bounding_radius + self.scale) / speed
        grow = self.phi(zs + hi[:, None] * v) <= 0.0
        while np.any(grow):
            hi[grow] *= 2.0
            grow = self.phi(zs + hi[:, None] * v) <= 0.0
        lo = np.zeros(len(zs))
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            outside = self.phi(zs + mid[:, None] * v) > 0.0
            hi = np.where(outside, mid, hi)
            lo = np.where(outside, lo, mid)
        return 0.5 * (lo + hi)

    def trace(self, z, v, grazing_tol=None):
        """Characteristic segment through z in direction v.

        Entry/exit are measured in the time parameter s of z + s*v; the entry
        point lies at z - s_plus*v and the exit point at z + s_minus*v.
        """
        z = _as_point(z)
        v = _as_point(v)
        p = self.phi(z)
        if p > 1e-12 * self.scale:
            raise OutsideDomainError(f"point {z} lies outside the domain (phi={p:.3e})")
        s_minus = self._exit_time(z, v)
        s_plus = self._exit_time(z, -v)
        if grazing_tol is None:
            grazing_tol = 1e-6 * self.diameter / float(np.hypot(v[0], v[1]))
        return CharacteristicSegment(
            z=z, v=v, s_plus=s_plus, s_minus=s_minus,
            z_plus=z - s_plus * v, z_minus=z + s_minus * v,
            grazing=(s_plus + s_minus) < grazing_tol,
        )


@dataclass(frozen=True)
class CharacteristicSegment:
    """Chord of the domain through `z` along velocity `v`.

    s_plus and s_minus are nonnegative times to the upstream (entry) and
    downstream (exit) boundary points.
    """

    z: np.ndarray
    v: np.ndarray
    s_plus: float
    s_minus: float
    z_plus: np.ndarray
    z_minus: np.ndarray
    grazing: bool = False

    @property
    def length_time(self) -> float:
        return self.s_plus + self.s_minus

    def point(self, s):
        """Point at time s measured from the entry point z_plus."""
        return self.z_plus + np.multiply.outer(np.asarray(s, dtype=float), self.v)


# ---------------------------------------------------------------------------
# boundary parameterisation
# ---------------------------------------------------------------------------

class BoundaryParam:
    """Arclength parameterisation of the boundary of a ConvexDomain.

    The curve is sampled on a dense theta grid; arclength lookups go through
    a monotone cumulative table, which keeps every evaluation deterministic.
    """

    def __init__(self, domain: ConvexDomain):
        self.domain = domain
        n = domain.param_samples
        theta = np.linspace(0.0, 2.0 * np.pi, n + 1)
        pts = self.point_of_theta(theta)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        t = np.concatenate([[0.0], np.cumsum(seg)])
        self.theta_grid = theta
        self.t_grid = t
        self.total_length = float(t[-1])

    def point_of_theta(self, theta):
        theta = np.asarray(theta, dtype=float)
        d = self.domain
        a, b = d.semi_axes
        c, s = np.cos(theta), np.sin(theta)
        if d.exponent == 2.0:
            x = a * c
            y = b * s
        else:
            e = 2.0 / d.exponent
            x = a * np.sign(c) * np.abs(c) ** e
            y = b * np.sign(s) * np.abs(s) ** e
        return np.stack([d.center[0] + x, d.center[1] + y], axis=-1)

    def theta_of_point(self, points):
        """Recover the parameter of boundary points (exact up to rounding)."""
        d = self.domain
        p = np.asarray(points, dtype=float)
        x = (p[..., 0] - d.center[0]) / d.semi_axes[0]
        y = (p[..., 1] - d.center[1]) / d.semi_axes[1]
        if d.exponent == 2.0:
            u, w = x, y
        else:
            e = d.exponent / 2.0
            u = np.sign(x) * np.abs(x) ** e
            w = np.sign(y) * np.abs(y) ** e
        return np.mod(np.arctan2(w, u), 2.0 * np.pi)

    def t_of_theta(self, theta):
        theta = np.mod(np.asarray(theta, dtype=float), 2.0 * np.pi)
        return np.interp(theta, self.theta_grid, self.t_grid)

    def theta_of_t(self, t):
        t = np.mod(np.asarray(t, dtype=float), self.total_length)
        return np.interp(t, self.t_grid, self.theta_grid)

    def t_of_point(self, points):
        return self.t_of_theta(self.theta_of_point(points))

    def normals_of_theta(self, theta):
        return self.domain.inward_normals(self.point_of_theta(theta))


_PARAM_CACHE: dict[ConvexDomain, BoundaryParam] = {}


def boundary_param(domain: ConvexDomain) -> BoundaryParam:
    bp = _PARAM_CACHE.get(domain)
    if bp is None:
        bp = BoundaryParam(domain)
        _PARAM_CACHE[domain] = bp
    return bp


def tangency_thetas(domain: ConvexDomain, v) -> tuple[float, float]:
    """Parameters of the two boundary points where v is tangent (v.n = 0)."""
    bp = boundary_param(domain)
    v = _as_point(v)
    theta = bp.theta_grid
    g = bp.normals_of_theta(theta) @ v
    roots = []
    for j in range(len(theta) - 1):
        if g[j] == 0.0:
            roots.append(theta[j])
        elif g[j] * g[j + 1] < 0.0:
            lo, hi = theta[j], theta[j + 1]
            glo = g[j]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                gm = float(bp.normals_of_theta(mid) @ v)
                if gm == 0.0:
                    lo = hi = mid
                    break
                if (gm > 0) == (glo > 0):
                    lo = mid
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    if len(roots) != 2:
        raise GeometryError(f"expected 2 tangency points, found {len(roots)}")
    return tuple(roots)


@dataclass(frozen=True)
class BoundaryArc:
    """Quadrature nodes on the inflow or outflow arc of one velocity.

    Weights `dsigma` integrate against the arclength measure; `vdotn` carries
    the signed projection, so flux integrals use abs(vdotn) * dsigma.
    """

    v: np.ndarray
    sign: int
    theta_lo: float
    theta_hi: float
    points: np.ndarray       # (n, 2)
    t_params: np.ndarray     # (n,) global arclength parameter
    dsigma: np.ndarray       # (n,) arclength weights
    vdotn: np.ndarray        # (n,) signed v . n(Z)

    def integrate_flux(self, values) -> float:
        """Integral of values * |v.n| dsigma over the arc."""
        return float(np.sum(np.asarray(values) * np.abs(self.vdotn) * self.dsigma))

    def integrate(self, values) -> float:
        return float(np.sum(np.asarray(values) * self.dsigma))


def boundary_quadrature(domain: ConvexDomain, v, sign, n_nodes=1024) -> BoundaryArc:
    """Midpoint-rule quadrature on the arc where sign(v.n) matches `sign`.

    The arc endpoints are the two tangency points of v; midpoint nodes keep
    the integrand |v.n| away from its zeros at the endpoints.
    """
    if sign not in (+1, -1):
        raise GeometryError("sign must be +1 (inflow) or -1 (outflow)")
    v = _as_point(v)
    bp = boundary_param(domain)
    th1, th2 = tangency_thetas(domain, v)
    # decide which of the two arcs carries the requested sign
    mid = 0.5 * (th1 + th2)
    g_mid = float(bp.normals_of_theta(mid) @ v)
    if (g_mid > 0) == (sign > 0):
        lo, hi = th1, th2
    else:
        lo, hi = th2, th1 + 2.0 * np.pi
    edges = np.linspace(lo, hi, n_nodes + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    pts = bp.point_of_theta(mids)
    nrm = bp.normals_of_theta(mids)
    vdotn = nrm @ v
    # arclength weight per theta interval from the secant of the curve
    edge_pts = bp.point_of_theta(edges)
    dsig = np.linalg.norm(np.diff(edge_pts, axis=0), axis=1)
    return BoundaryArc(
        v=v, sign=sign, theta_lo=float(np.mod(lo, 2 * np.pi)),
        theta_hi=float(np.mod(hi, 2 * np.pi)),
        points=pts, t_params=bp.t_of_theta(mids), dsigma=dsig, vdotn=vdotn,
    )


def change_of_variables_jacobian_check(domain: ConvexDomain, vi, vj, z=None,
                                       n_s=20, n_sigma=20, delta=1e-5,
                                       margin=0.08):
    """Max |det - 1| of the double-characteristic map in the (vi, vj) basis.

    The map sends (s, sigma) to the point reached by entering along vi,
    advancing s, re-entering along vj and advancing sigma.  Its Jacobian in
    the (vi, vj) coordinate frame is identically one; the finite-difference
    estimate quantifies the geometric error of the tracer.
    """
    vi = _as_point(vi)
    vj = _as_point(vj)
    cross = vi[0] * vj[1] - vi[1] * vj[0]
    if cross == 0.0:
        raise GeometryError("velocities must be non-parallel")
    if z is None:
        z = np.asarray(domain.center) + 0.05 * domain.scale
    z = _as_point(z)

    seg_i = domain.trace(z, vi)
    entry_i = seg_i.z_plus

    def forward(s, sigma):
        w = entry_i + s * vi
        si_j = domain._exit_time(w, -vj)
        return (w - si_j * vj) + sigma * vj

    tau_i = seg_i.length_time
    worst = 0.0
    s_vals = np.linspace(margin * tau_i, (1 - margin) * tau_i, n_s)
    for s in s_vals:
        w = seg_i.z_plus + s * vi
        tau_j = domain._exit_time(w, -vj) + domain._exit_time(w, vj)
        sig_vals = np.linspace(margin * tau_j, (1 - margin) * tau_j, n_sigma)
        for sig in sig_vals:
            dzs = (forward(s + delta, sig) - forward(s - delta, sig)) / (2 * delta)
            dzg = (forward(s, sig + delta) - forward(s, sig - delta)) / (2 * delta)
            det = (dzs[0] * dzg[1] - dzs[1] * dzg[0]) / cross
            worst = max(worst, abs(det - 1.0))
    return worst
