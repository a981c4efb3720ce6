"""Grids, density fields, boundary traces and smoothing operators.

Fields live on a uniform cell-centered lattice clipped to the domain.  Off
the interior mask the field is continued by the value of the nearest interior
cell (a discrete stand-in for continuation along the inward normal), which
gives every interpolation and convolution a defined, order-preserving value
near the boundary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import ConvexDomain, CharacteristicSegment, boundary_param


class FieldError(ValueError):
    pass


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

class Grid:
    """Uniform cell-centered lattice over the domain bounding box."""

    def __init__(self, domain: ConvexDomain, n: int):
        if n < 4:
            raise FieldError("grid resolution must be at least 4")
        x0, x1, y0, y1 = domain.bbox
        h = max(x1 - x0, y1 - y0) / n
        nx = max(4, int(round((x1 - x0) / h)))
        ny = max(4, int(round((y1 - y0) / h)))
        self.domain = domain
        self.n = n
        self.h = h
        self.nx, self.ny = nx, ny
        self.x0, self.y0 = x0, y0
        self.xs = x0 + (np.arange(nx) + 0.5) * h
        self.ys = y0 + (np.arange(ny) + 0.5) * h
        X, Y = np.meshgrid(self.xs, self.ys, indexing="xy")
        self.centers = np.stack([X, Y], axis=-1)          # (ny, nx, 2)
        self.mask = domain.contains(self.centers)          # (ny, nx)
        if not np.any(self.mask):
            raise FieldError("no interior cells; increase the resolution")
        self.pad_flat = self._nearest_interior_map()
        self.n_interior = int(np.sum(self.mask))

    def _nearest_interior_map(self) -> np.ndarray:
        """Flat index of the nearest interior cell for every lattice cell.

        Ties are broken lexicographically in (iy, ix), so the continuation
        of fields past the boundary is a deterministic contract rather than
        an artifact of the distance transform's scan order.
        """
        ny, nx = self.ny, self.nx
        flat = np.arange(ny * nx, dtype=np.int64)
        interior = np.argwhere(self.mask)                 # row-major = lexicographic
        interior_flat = interior[:, 0] * nx + interior[:, 1]
        exterior = np.argwhere(~self.mask)
        out = flat.copy()
        chunk = max(1, 10_000_000 // max(1, len(interior)))
        for lo in range(0, len(exterior), chunk):
            ext = exterior[lo:lo + chunk]
            d2 = ((ext[:, None, 0] - interior[None, :, 0]) ** 2
                  + (ext[:, None, 1] - interior[None, :, 1]) ** 2)
            nearest = np.argmin(d2, axis=1)               # first minimum = lexicographic
            out[ext[:, 0] * nx + ext[:, 1]] = interior_flat[nearest]
        return out

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def pad(self, values2d: np.ndarray) -> np.ndarray:
        """Continue a (ny, nx) array to every cell by nearest interior value."""
        return values2d.ravel()[self.pad_flat].reshape(self.ny, self.nx)

    def interp_weights(self, points):
        """Bilinear stencil for arbitrary points: flat index of the lower-left
        cell plus the four nonnegative corner weights.

        Points beyond the outermost cell centers are clamped, which keeps the
        weights in [0, 1] and the scheme order-preserving.
        """
        pts = np.asarray(points, dtype=float)
        gx = (pts[..., 0] - self.x0) / self.h - 0.5
        gy = (pts[..., 1] - self.y0) / self.h - 0.5
        ix = np.clip(np.floor(gx).astype(np.int64), 0, self.nx - 2)
        iy = np.clip(np.floor(gy).astype(np.int64), 0, self.ny - 2)
        fx = np.clip(gx - ix, 0.0, 1.0)
        fy = np.clip(gy - iy, 0.0, 1.0)
        flat = iy * self.nx + ix
        w00 = (1.0 - fx) * (1.0 - fy)
        w10 = fx * (1.0 - fy)
        w01 = (1.0 - fx) * fy
        w11 = fx * fy
        return flat, (w00, w10, w01, w11)

    def gather(self, padded_flat_values, flat, weights):
        w00, w10, w01, w11 = weights
        v = padded_flat_values
        return (w00 * v[flat] + w10 * v[flat + 1]
                + w01 * v[flat + self.nx] + w11 * v[flat + self.nx + 1])

    def interpolate(self, values2d, points):
        """Bilinear interpolation of a cell array at arbitrary points."""
        padded = self.pad(values2d).ravel()
        flat, w = self.interp_weights(points)
        return self.gather(padded, flat, w)


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

@dataclass
class Field:
    """p nonnegative density components on a shared grid."""

    grid: Grid
    values: np.ndarray    # (p, ny, nx), zero off the interior mask

    @staticmethod
    def zeros(grid: Grid, p: int) -> "Field":
        return Field(grid, np.zeros((p, grid.ny, grid.nx)))

    @staticmethod
    def constant(grid: Grid, vals) -> "Field":
        vals = np.atleast_1d(np.asarray(vals, dtype=float))
        data = np.zeros((len(vals), grid.ny, grid.nx))
        data[:, grid.mask] = vals[:, None]
        return Field(grid, data)

    @staticmethod
    def from_function(grid: Grid, funcs) -> "Field":
        """Build from callables f(x, y); one per component."""
        data = np.zeros((len(funcs), grid.ny, grid.nx))
        X = grid.centers[..., 0]
        Y = grid.centers[..., 1]
        for i, f in enumerate(funcs):
            vals = np.asarray(f(X, Y), dtype=float)
            data[i][grid.mask] = vals[grid.mask]
        return Field(grid, data)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def component_mass(self) -> np.ndarray:
        return self.values.sum(axis=(1, 2)) * self.grid.cell_area

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_area)

    def l1_distance(self, other: "Field") -> float:
        return float(np.abs(self.values - other.values).sum() * self.grid.cell_area)

    def min_value(self) -> float:
        return float(self.values[:, self.grid.mask].min()) if self.grid.n_interior else 0.0

    def interpolate(self, i: int, points):
        return self.grid.interpolate(self.values[i], points)

    def save_csv(self, path) -> None:
        """Rows x, y, component, value for every interior cell."""
        g = self.grid
        ys, xs = np.nonzero(g.mask)
        with open(path, "w") as fh:
            fh.write("x,y,component,value\n")
            for i in range(self.p):
                vals = self.values[i, ys, xs]
                for x, y, v in zip(g.xs[xs], g.ys[ys], vals):
                    fh.write(f"{float(x)!r},{float(y)!r},{i + 1},{float(v)!r}\n")

    @staticmethod
    def load_csv(path, grid: Grid, p: int) -> "Field":
        data = np.zeros((p, grid.ny, grid.nx))
        with open(path) as fh:
            header = fh.readline()
            if not header.startswith("x,y,component,value"):
                raise FieldError(f"unexpected field CSV header: {header!r}")
            for line in fh:
                sx, sy, sc, sv = line.rstrip("\n").split(",")
                x, y, c, v = float(sx), float(sy), int(sc), float(sv)
                ix = int(round((x - grid.x0) / grid.h - 0.5))
                iy = int(round((y - grid.y0) / grid.h - 0.5))
                data[c - 1, iy, ix] = v
        return Field(grid, data)


# ---------------------------------------------------------------------------
# mollification
# ---------------------------------------------------------------------------

def bump_profile(r):
    """C-infinity bump exp(1 / (r^2 - 1)) on r < 1, zero outside."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(1.0 / (r[inside] ** 2 - 1.0))
    return out


@dataclass(frozen=True)
class MollifierSpec:
    """Interior smoothing radius plus the boundary smoothing fraction.

    `boundary_fraction` is the support of the boundary kernel as a fraction
    of the total boundary arclength (1/k unless overridden).
    """

    radius: float
    boundary_fraction: float = 0.0

    def kernel_offsets(self, h: float):
        """Discrete kernel: cell offsets within the radius and unit-sum weights."""
        if self.radius <= 0:
            raise FieldError("mollifier radius must be positive")
        reach = int(math.floor(self.radius / h))
        offs = []
        wts = []
        for dy in range(-reach, reach + 1):
            for dx in range(-reach, reach + 1):
                r = math.hypot(dx * h, dy * h) / self.radius
                w = float(bump_profile(r))
                if w > 0.0:
                    offs.append((dy, dx))
                    wts.append(w)
        if not offs:
            offs = [(0, 0)]
            wts = [1.0]
        w = np.array(wts)
        return offs, w / w.sum()


def mollify_interior(values2d: np.ndarray, spec: MollifierSpec, grid: Grid,
                     warn_small=True) -> np.ndarray:
    """Convolve one component with the interior bump kernel.

    Stencil points outside the interior take the nearest-interior-cell value,
    the discrete version of continuing the field past the boundary with its
    boundary value.  The discrete kernel is normalised to unit sum, so
    constants are reproduced exactly.
    """
    if warn_small and spec.radius < 2.0 * grid.h:
        warnings.warn(
            f"mollifier radius {spec.radius:.3g} below 2h = {2 * grid.h:.3g}; "
            "the kernel degenerates toward the identity", stacklevel=2)
    offs, w = spec.kernel_offsets(grid.h)
    reach = max(max(abs(dy), abs(dx)) for dy, dx in offs)
    padded = np.pad(grid.pad(values2d), reach, mode="edge")
    ny, nx = grid.ny, grid.nx
    out = np.zeros((ny, nx))
    for (dy, dx), wk in zip(offs, w):
        out += wk * padded[reach + dy: reach + dy + ny, reach + dx: reach + dx + nx]
    result = np.zeros_like(out)
    result[grid.mask] = out[grid.mask]
    return result


def mollify_field(field: Field, spec: MollifierSpec, warn_small=True) -> Field:
    data = np.stack([
        mollify_interior(field.values[i], spec, field.grid, warn_small=(warn_small and i == 0))
        for i in range(field.p)
    ])
    return Field(field.grid, data)


# ---------------------------------------------------------------------------
# boundary data
# ---------------------------------------------------------------------------

class BoundaryTrace:
    """Nonnegative inflow profile on the global boundary arclength."""

    def eval(self, t):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantTrace(BoundaryTrace):
    value: float

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        return np.full(t.shape, self.value)


@dataclass(frozen=True)
class SampledTrace(BoundaryTrace):
    """Periodic linear interpolation of arclength samples."""

    ts: np.ndarray
    values: np.ndarray
    period: float

    def eval(self, t):
        return np.interp(np.asarray(t, dtype=float), self.ts, self.values,
                         period=self.period)


@dataclass(frozen=True)
class CallableTrace(BoundaryTrace):
    fn: object

    def eval(self, t):
        return np.asarray(self.fn(np.asarray(t, dtype=float)), dtype=float)


@dataclass(frozen=True)
class BoundaryData:
    """Per-component inflow traces, evaluated on the arclength parameter."""

    traces: tuple[BoundaryTrace, ...]

    @property
    def p(self) -> int:
        return len(self.traces)

    def eval(self, i: int, t):
        vals = self.traces[i].eval(t)
        if np.any(np.isnan(vals)):
            raise FieldError(f"boundary trace {i} produced NaN")
        return vals

    @staticmethod
    def zero(p: int) -> "BoundaryData":
        return BoundaryData(tuple(ConstantTrace(0.0) for _ in range(p)))

    @staticmethod
    def constant(values) -> "BoundaryData":
        return BoundaryData(tuple(ConstantTrace(float(v)) for v in np.atleast_1d(values)))

    @staticmethod
    def maxwellian(model, a, b, c) -> "BoundaryData":
        """Constant-in-space equilibrium profile exp(a + b.v + c |v|^2)."""
        b = np.asarray(b, dtype=float)
        vals = np.exp(a + model.v @ b + c * model.speeds_sq)
        return BoundaryData.constant(vals)

    def max_values(self, domain: ConvexDomain, n_probe=512) -> np.ndarray:
        L = boundary_param(domain).total_length
        ts = np.linspace(0.0, L, n_probe, endpoint=False)
        return np.array([np.max(self.eval(i, ts)) for i in range(self.p)])


def truncate_and_mollify_boundary(bd: BoundaryData, k: float, domain: ConvexDomain,
                                  n_samples=None, support_fraction=None) -> BoundaryData:
    """Cap each trace at k/2, then smooth along the boundary.

    The smoothing kernel is a bump supported on a fraction of the total
    arclength (1/k by default).  Constant traces are closed under both steps
    and pass through exactly.
    """
    if k <= 1:
        raise FieldError("truncation level k must exceed 1")
    bp = boundary_param(domain)
    L = bp.total_length
    frac = (1.0 / k) if support_fraction is None else support_fraction
    support = frac * L
    cap = 0.5 * k
    traces = []
    for tr in bd.traces:
        if isinstance(tr, ConstantTrace):
            traces.append(ConstantTrace(min(tr.value, cap)))
            continue
        if n_samples is None:
            n_samples = max(2048, int(math.ceil(16.0 * k)))
        ts = np.arange(n_samples) * (L / n_samples)
        vals = np.minimum(np.asarray(tr.eval(ts), dtype=float), cap)
        half = support / 2.0
        reach = max(1, int(math.floor(half / (L / n_samples))))
        offs = np.arange(-reach, reach + 1)
        w = bump_profile(offs * (L / n_samples) / half)
        w = w / w.sum()
        sm = np.zeros_like(vals)
        for off, wk in zip(offs, w):
            sm += wk * np.roll(vals, -int(off))
        sm = np.minimum(sm, cap)   # guard against 1-ulp drift of the kernel sum
        traces.append(SampledTrace(ts, sm, L))
    return BoundaryData(tuple(traces))


# ---------------------------------------------------------------------------
# line integrals along characteristics
# ---------------------------------------------------------------------------

def line_integral(values2d: np.ndarray, grid: Grid, segment: CharacteristicSegment,
                  s_a: float, s_b: float, h_s: float) -> float:
    """Integral of the interpolated field over [s_a, s_b] along the segment.

    The parameter runs from the entry point (s = 0) to the exit point
    (s = s_plus + s_minus).  Internally a cumulative trapezoid table I(s) is
    built on a fixed partition of the whole segment with spatial step <= h_s,
    and the result is I(s_b) - I(s_a); differences of a single cumulative
    table make the integral exactly additive over adjacent subintervals.
    """
    tau = segment.length_time
    if not (0.0 <= s_a <= s_b <= tau * (1 + 1e-12)):
        raise FieldError(f"integration bounds [{s_a}, {s_b}] outside [0, {tau}]")
    speed = float(np.hypot(segment.v[0], segment.v[1]))
    M = max(1, int(math.ceil(tau * speed / h_s)))
    dt = tau / M
    nodes = np.arange(M + 1) * dt
    pts = segment.point(nodes)
    vals = grid.interpolate(values2d, pts)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (vals[:-1] + vals[1:]) * dt)])

    def I(s):
        jf = min(int(math.floor(s / dt)), M - 1)
        sj = jf * dt
        fs = grid.interpolate(values2d, segment.point(np.array([s]))).item()
        return cum[jf] + 0.5 * (vals[jf] + fs) * (s - sj)

    return I(s_b) - I(s_a)
