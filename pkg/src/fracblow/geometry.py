"""Domains described through distance/projection oracles.

Supported shapes have closed-form or cheap iterative distance to the
boundary: balls (any supported dimension), a half-space paired with a
bounding box for quadrature, and superellipses in the plane. The distance
convention is one-sided: ``distance`` is positive strictly inside and zero
on the boundary and outside, which is what the extended powers d^tau need.

All objects are immutable value types; every operation is pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import _as_points

__all__ = [
    "Ball",
    "HalfSpaceBox",
    "Superellipse",
    "BoundaryFrame",
    "distance",
    "d_tau",
    "project",
    "boundary_frame",
    "in_layer",
]


@dataclass(frozen=True)
class BoundaryFrame:
    """Orthonormal frame at a boundary point, last axis = inward normal."""

    origin: np.ndarray
    inward_normal: np.ndarray
    tangents: np.ndarray  # (N-1, N), empty for N = 1

    @property
    def basis(self):
        """Rows: tangents then inward normal."""
        return np.vstack([self.tangents, self.inward_normal[None, :]])

    def to_local(self, x):
        return (np.atleast_2d(x) - self.origin) @ self.basis.T

    def from_local(self, y):
        return np.atleast_2d(y) @ self.basis + self.origin


def _complete_frame(normal):
    """Tangent rows completing a unit normal to an orthonormal basis."""
    n = len(normal)
    if n == 1:
        return np.zeros((0, 1))
    if n == 2:
        return np.array([[-normal[1], normal[0]]])
    # N = 3: Gram-Schmidt against the least-aligned coordinate axis
    k = int(np.argmin(np.abs(normal)))
    t1 = np.zeros(3)
    t1[k] = 1.0
    t1 -= normal * (t1 @ normal)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(normal, t1)
    return np.vstack([t1, t2])


class _DomainBase:
    def contains(self, x):
        return self.distance(x) > 0.0

    def d_tau(self, tau, x):
        """Extended power: d(x)^tau inside, 0 outside the open domain."""
        x2 = _as_points(x, self.N)
        d = np.asarray(self.distance(x2), dtype=float)
        out = np.zeros(len(x2))
        inside = d > 0.0
        out[inside] = d[inside] ** tau
        return out if np.ndim(x) > 1 or (self.N == 1 and np.size(x) > 1) else float(out[0])

    def boundary_frame(self, x0, tol=1e-8):
        x0 = np.asarray(x0, dtype=float).reshape(self.N)
        p = self.project(x0)
        if np.linalg.norm(p - x0) > tol * max(self.diameter, 1.0):
            raise ValueError(f"point {x0} is not on the boundary")
        nu = self.inward_normal_at(p)
        return BoundaryFrame(origin=p, inward_normal=nu, tangents=_complete_frame(nu))

    def exit_radius(self, x, q):
        """First crossing of the ray x + r q, r > 0, with the boundary.

        Defined for interior x; +inf if the ray never leaves (half-space).
        """
        rs = self.ray_crossings(x, q, r_max=None)
        return rs[0] if len(rs) else np.inf


class Ball(_DomainBase):
    """Ball of radius R; in one dimension, the interval (c-R, c+R)."""

    def __init__(self, center, radius):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.center = center
        self.radius = float(radius)
        self.N = len(center)

    @property
    def diameter(self):
        return 2.0 * self.radius

    @property
    def inradius(self):
        return self.radius

    @property
    def support_radius(self):
        """Radius of a ball about the origin containing the closure."""
        return float(np.linalg.norm(self.center) + self.radius)

    def distance(self, x):
        pts = _as_points(x, self.N)
        d = self.radius - np.linalg.norm(pts - self.center, axis=1)
        d = np.maximum(d, 0.0)
        return d if len(pts) > 1 or np.ndim(x) > 1 else float(d[0])

    def project(self, x):
        single = np.ndim(x) <= 1
        pts = _as_points(x, self.N)
        v = pts - self.center
        r = np.linalg.norm(v, axis=1)
        if np.any(r < 1e-12 * self.radius):
            raise ValueError("projection from the center is not unique")
        p = self.center + self.radius * v / r[:, None]
        return p[0] if single else p

    def inward_normal_at(self, b):
        v = np.asarray(b, dtype=float) - self.center
        return -v / np.linalg.norm(v)

    def ray_crossings(self, x, q, r_max=None):
        """Positive radii where x + r q meets the sphere."""
        x = np.asarray(x, dtype=float).reshape(self.N) - self.center
        q = np.asarray(q, dtype=float).reshape(self.N)
        qq = q @ q
        b = x @ q
        disc = b * b - qq * (x @ x - self.radius**2)
        if disc <= 0:
            return np.array([])
        roots = np.array([(-b - np.sqrt(disc)) / qq, (-b + np.sqrt(disc)) / qq])
        roots = np.sort(roots[roots > 0])
        if r_max is not None:
            roots = roots[roots < r_max]
        return roots

    def sample_interior(self, rng, n, d_min=0.0):
        u = rng.random(n) ** (1.0 / self.N)
        r = u * (self.radius - d_min)
        q = rng.standard_normal((n, self.N))
        q /= np.linalg.norm(q, axis=1)[:, None]
        return self.center + r[:, None] * q

    def sample_boundary(self, rng, n):
        q = rng.standard_normal((n, self.N))
        q /= np.linalg.norm(q, axis=1)[:, None]
        return self.center + self.radius * q

    def boundary_anchors(self, n):
        """Deterministic quasi-uniform boundary points."""
        if self.N == 1:
            return np.array([[self.center[0] - self.radius], [self.center[0] + self.radius]])
        from .kernels import sphere_directions

        return self.center + self.radius * sphere_directions(self.N, n)


class HalfSpaceBox(_DomainBase):
    """Half-space {nu . x > offset} with a box that bounds quadrature.

    ``nu`` is the inward unit normal. Distance and projection use the true
    half-space; the box (tangential half-width, normal depth, centered at
    the projection of the origin) only supplies desk-scale metadata such as
    the diameter, the inradius and sampling bounds.
    """

    def __init__(self, normal, offset=0.0, box_halfwidth=4.0, box_depth=4.0):
        nu = np.atleast_1d(np.asarray(normal, dtype=float))
        nrm = np.linalg.norm(nu)
        if nrm == 0:
            raise ValueError("normal must be nonzero")
        self.normal = nu / nrm
        self.offset = float(offset)
        self.box_halfwidth = float(box_halfwidth)
        self.box_depth = float(box_depth)
        self.N = len(nu)
        self._tangents = _complete_frame(self.normal)

    @classmethod
    def upper(cls, N, **kw):
        """Canonical upper half-space {x_N > 0}."""
        nu = np.zeros(N)
        nu[-1] = 1.0
        return cls(nu, 0.0, **kw)

    @property
    def diameter(self):
        return 2.0 * np.hypot(self.box_halfwidth, self.box_depth)

    @property
    def inradius(self):
        return min(self.box_halfwidth, self.box_depth) / 2.0

    @property
    def support_radius(self):
        return np.inf

    def height(self, x):
        """Signed height nu . x - offset (positive inside)."""
        pts = _as_points(x, self.N)
        h = pts @ self.normal - self.offset
        return h if len(pts) > 1 or np.ndim(x) > 1 else float(h[0])

    def distance(self, x):
        h = self.height(x)
        return np.maximum(h, 0.0)

    def project(self, x):
        single = np.ndim(x) <= 1
        pts = _as_points(x, self.N)
        h = pts @ self.normal - self.offset
        p = pts - h[:, None] * self.normal
        return p[0] if single else p

    def inward_normal_at(self, b):
        return self.normal.copy()

    def ray_crossings(self, x, q, r_max=None):
        hx = float(np.asarray(x, dtype=float).reshape(self.N) @ self.normal - self.offset)
        hq = float(np.asarray(q, dtype=float).reshape(self.N) @ self.normal)
        if hq == 0.0 or hx == 0.0:
            return np.array([])
        r = -hx / hq
        if r <= 0 or (r_max is not None and r >= r_max):
            return np.array([])
        return np.array([r])

    def _box_center(self):
        return self.project(np.zeros(self.N))

    def sample_interior(self, rng, n, d_min=0.0):
        c = self._box_center()
        t = rng.uniform(-self.box_halfwidth, self.box_halfwidth, (n, max(self.N - 1, 1)))
        h = rng.uniform(d_min, self.box_depth, n)
        pts = c + h[:, None] * self.normal
        for k in range(self.N - 1):
            pts += t[:, k][:, None] * self._tangents[k]
        return pts

    def sample_boundary(self, rng, n):
        pts = self.sample_interior(rng, n)
        return self.project(pts)

    def boundary_anchors(self, n):
        c = self._box_center()
        if self.N == 1:
            return c[None, :]
        t = np.linspace(-self.box_halfwidth, self.box_halfwidth, n)
        return c + t[:, None] * self._tangents[0]


class Superellipse(_DomainBase):
    """Planar superellipse |x/a|^p + |y/b|^p < 1 with exponent p >= 2.

    Distance and projection are found by minimizing the squared distance to
    the parametrized boundary (coarse grid + ternary refinement); this is
    exact enough to isolate quadrature error in the experiments.
    """

    _GRID = 1024

    def __init__(self, semi_axes, exponent):
        a, b = (float(v) for v in semi_axes)
        if a <= 0 or b <= 0:
            raise ValueError("semi-axes must be positive")
        if exponent < 2:
            raise ValueError("exponent must be >= 2")
        self.a, self.b = a, b
        self.p = float(exponent)
        self.N = 2
        th = 2.0 * np.pi * (np.arange(self._GRID) + 0.5) / self._GRID
        self._grid_pts = self.boundary_point(th)
        self._grid_th = th

    def boundary_point(self, th):
        th = np.atleast_1d(np.asarray(th, dtype=float))
        c, s = np.cos(th), np.sin(th)
        e = 2.0 / self.p
        return np.column_stack(
            [self.a * np.sign(c) * np.abs(c) ** e, self.b * np.sign(s) * np.abs(s) ** e]
        )

    def level(self, x):
        pts = _as_points(x, 2)
        return np.abs(pts[:, 0] / self.a) ** self.p + np.abs(pts[:, 1] / self.b) ** self.p

    @property
    def diameter(self):
        return 2.0 * float(np.max(np.linalg.norm(self._grid_pts, axis=1)))

    @property
    def inradius(self):
        # radius of the inscribed ball centered at the origin (p >= 2)
        return min(self.a, self.b)

    @property
    def support_radius(self):
        return float(np.max(np.linalg.norm(self._grid_pts, axis=1)))

    def _nearest_param(self, pts, iters=60):
        d2 = ((pts[:, None, :] - self._grid_pts[None, :, :]) ** 2).sum(axis=2)
        k = np.argmin(d2, axis=1)
        h = 2.0 * np.pi / self._GRID
        lo = self._grid_th[k] - h
        hi = self._grid_th[k] + h
        for _ in range(iters):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            f1 = ((self.boundary_point(m1) - pts) ** 2).sum(axis=1)
            f2 = ((self.boundary_point(m2) - pts) ** 2).sum(axis=1)
            take = f1 < f2
            hi = np.where(take, m2, hi)
            lo = np.where(take, lo, m1)
        return (lo + hi) / 2.0

    def project(self, x):
        single = np.ndim(x) <= 1
        pts = _as_points(x, 2)
        th = self._nearest_param(pts)
        p = self.boundary_point(th)
        return p[0] if single else p

    def distance(self, x):
        pts = _as_points(x, 2)
        inside = self.level(pts) < 1.0
        d = np.zeros(len(pts))
        if np.any(inside):
            proj = np.atleast_2d(self.project(pts[inside]))
            d[inside] = np.linalg.norm(pts[inside] - proj, axis=1)
        return d if len(pts) > 1 or np.ndim(x) > 1 else float(d[0])

    def inward_normal_at(self, bpt):
        x, y = np.asarray(bpt, dtype=float)
        gx = self.p / self.a * np.sign(x) * np.abs(x / self.a) ** (self.p - 1.0)
        gy = self.p / self.b * np.sign(y) * np.abs(y / self.b) ** (self.p - 1.0)
        g = np.array([gx, gy])
        return -g / np.linalg.norm(g)

    def ray_crossings(self, x, q, r_max=None):
        x = np.asarray(x, dtype=float).reshape(2)
        q = np.asarray(q, dtype=float).reshape(2)
        top = r_max if r_max is not None else 2.0 * self.diameter
        rs = np.linspace(0.0, top, 512)
        f = self.level(x[None, :] + rs[:, None] * q[None, :]) - 1.0
        out = []
        sign_change = np.nonzero(f[:-1] * f[1:] < 0)[0]
        for i in sign_change:
            lo, hi = rs[i], rs[i + 1]
            flo = f[i]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                fm = float(self.level((x + mid * q)[None, :]) - 1.0)
                if flo * fm <= 0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            out.append(0.5 * (lo + hi))
        return np.asarray(out)

    def sample_interior(self, rng, n, d_min=0.0):
        out = np.empty((n, 2))
        have = 0
        while have < n:
            cand = rng.uniform(-1.0, 1.0, (2 * (n - have), 2)) * [self.a, self.b]
            keep = self.level(cand) < 1.0
            if d_min > 0:
                keep &= self.distance(cand) > d_min
            cand = cand[keep]
            take = min(len(cand), n - have)
            out[have : have + take] = cand[:take]
            have += take
        return out

    def sample_boundary(self, rng, n):
        return self.boundary_point(rng.uniform(0.0, 2.0 * np.pi, n))

    def boundary_anchors(self, n):
        th = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        return self.boundary_point(th)


def distance(dom, x):
    """Distance to the boundary: positive inside, zero outside."""
    return dom.distance(x)


def d_tau(dom, tau, x):
    """Extended power d^tau: d(x)^tau inside the open domain, else 0."""
    return dom.d_tau(tau, x)


def project(dom, x):
    """Nearest boundary point; raises where the projection is ambiguous."""
    return dom.project(x)


def boundary_frame(dom, x0, tol=1e-8):
    """Orthonormal frame whose last axis is the inward normal at x0."""
    return dom.boundary_frame(x0, tol=tol)


def in_layer(dom, x, delta):
    """Membership in the open boundary layer {0 < d < delta}."""
    d = np.atleast_1d(dom.distance(x))
    return (d > 0.0) & (d < delta)
