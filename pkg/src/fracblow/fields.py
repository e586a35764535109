"""Scalar fields on R^N with the metadata the singular quadrature needs.

A :class:`ScalarField` couples a vectorized evaluator with what the
principal-value machinery must know about it: where it is twice
differentiable (so the symmetric second difference is valid), which
surfaces carry power-type singularities or jumps (so radial rules can be
graded toward the ray crossings), and how it behaves at infinity (compact
support, a pointwise growth envelope, or an analytic ray tail).

Growth envelopes are declared away from the singular surfaces: a field like
the half-space profile is integrable against the weight (1+|y|)^(-(N+2s))
without being pointwise bounded near its surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import _as_points

__all__ = [
    "ScalarField",
    "SurfaceMark",
    "constant_field",
    "coordinate_field",
    "gaussian_field",
    "windowed_quadratic_field",
    "dist_pow_field",
    "indicator_field",
    "ball_profile_field",
    "halfspace_profile_field",
    "remark62_field",
    "cosine_field",
    "validate_growth",
]


@dataclass(frozen=True)
class SurfaceMark:
    """A singular surface of a field plus its power exponent there.

    ``exponent`` is tau when the field behaves like dist^tau at the
    surface (from the singular side); None marks a plain jump or an
    unknown behavior, in which case radial rules only split at the
    crossing instead of applying a weighted endpoint rule.
    """

    surface: object
    exponent: float | None = None


def _merge_marks_sum(a_marks, b_marks):
    """Marks of a sum: same surface keeps the more singular exponent."""
    out = {}
    for m in a_marks + b_marks:
        if m.surface in out:
            e0, e1 = out[m.surface].exponent, m.exponent
            e = None if (e0 is None or e1 is None) else min(e0, e1)
            out[m.surface] = SurfaceMark(m.surface, e)
        else:
            out[m.surface] = m
    return tuple(out.values())


def _merge_marks_product(a_marks, b_marks):
    """Marks of a product: exponents add where both factors are singular."""
    out = {m.surface: m for m in a_marks}
    for m in b_marks:
        if m.surface in out:
            e0, e1 = out[m.surface].exponent, m.exponent
            e = None if (e0 is None or e1 is None) else e0 + e1
            out[m.surface] = SurfaceMark(m.surface, e)
        else:
            out[m.surface] = m
    return tuple(out.values())


@dataclass
class ScalarField:
    """Evaluable function on all of R^N plus evaluation metadata.

    Fields are immutable in practice (nothing mutates them after
    construction) and safe to evaluate concurrently.

    Parameters
    ----------
    fn : callable
        Vectorized evaluator mapping an (n, N) array to an (n,) array.
    N : int
        Ambient dimension.
    support_radius : float or None
        If set, the field vanishes outside the ball of this radius about
        the origin, and far tails are exact.
    growth : (M, p) or None
        Envelope |u(y)| <= M (1 + |y|)^p holding away from the declared
        surfaces; p < 2s is the caller's contract for single-field
        principal-value integrals.
    surfaces : tuple of SurfaceMark
        Surfaces (objects with ``ray_crossings(x, q, r_max)``) where the
        field has power-type singularities or jumps, with the power
        exponent when known; radial rules grade toward the ray crossings
        and weight the adjacent segments accordingly.
    c2_radius_fn : callable or None
        Map x -> radius of a ball about x inside which the field is C^2.
        None means smooth everywhere; a return of 0 marks a point where
        the principal value is undefined.
    pair_tail_fn : callable or None
        Analytic tail (x, q, R, s) -> (integral of u(x + r q) + u(x - r q)
        times r^(-1-2s) over r > R, error bound). Paired so that odd parts
        of the field cancel the way they do in the symmetrized integrand.
    tail_min_radius_fn : callable or None
        (x, q) -> smallest R at which pair_tail_fn is valid for the +-q pair.
    """

    fn: callable
    N: int
    name: str = "field"
    support_radius: float | None = None
    growth: tuple | None = None
    surfaces: tuple = ()
    c2_radius_fn: callable | None = None
    pair_tail_fn: callable | None = None
    tail_min_radius_fn: callable | None = None

    def __call__(self, pts):
        return np.asarray(self.fn(_as_points(pts, self.N)), dtype=float)

    def value(self, x):
        return float(self(np.asarray(x, dtype=float).reshape(1, self.N))[0])

    def c2_radius(self, x):
        if self.c2_radius_fn is None:
            return np.inf
        return float(self.c2_radius_fn(np.asarray(x, dtype=float).reshape(self.N)))

    def tail_min_radius(self, x, q):
        if self.tail_min_radius_fn is None:
            return 0.0
        return float(self.tail_min_radius_fn(x, q))

    # -- small field algebra (metadata combined conservatively) --------

    def __add__(self, other):
        if np.isscalar(other):
            other = constant_field(self.N, other)
        if other.N != self.N:
            raise ValueError("dimension mismatch")
        return ScalarField(
            fn=lambda p, a=self.fn, b=other.fn: a(p) + b(p),
            N=self.N,
            name=f"({self.name}+{other.name})",
            support_radius=_sum_support(self, other),
            growth=_sum_growth(self, other),
            surfaces=_merge_marks_sum(self.surfaces, other.surfaces),
            c2_radius_fn=_min_c2(self, other),
        )

    def __sub__(self, other):
        if np.isscalar(other):
            other = constant_field(self.N, other)
        return self + (other * -1.0)

    def __mul__(self, other):
        if np.isscalar(other):
            c = float(other)
            g = None if self.growth is None else (abs(c) * self.growth[0], self.growth[1])
            return ScalarField(
                fn=lambda p, a=self.fn: c * a(p),
                N=self.N,
                name=f"{c}*{self.name}",
                support_radius=self.support_radius,
                growth=g,
                surfaces=self.surfaces,
                c2_radius_fn=self.c2_radius_fn,
                pair_tail_fn=None if self.pair_tail_fn is None else _scaled_tail(self.pair_tail_fn, c),
                tail_min_radius_fn=self.tail_min_radius_fn,
            )
        if other.N != self.N:
            raise ValueError("dimension mismatch")
        if self.support_radius is not None or other.support_radius is not None:
            sup = min(
                s for s in (self.support_radius, other.support_radius) if s is not None
            )
            g = None
        else:
            sup = None
            g = None
            if self.growth is not None and other.growth is not None:
                g = (self.growth[0] * other.growth[0], self.growth[1] + other.growth[1])
        return ScalarField(
            fn=lambda p, a=self.fn, b=other.fn: a(p) * b(p),
            N=self.N,
            name=f"{self.name}*{other.name}",
            support_radius=sup,
            growth=g,
            surfaces=_merge_marks_product(self.surfaces, other.surfaces),
            c2_radius_fn=_min_c2(self, other),
        )

    __rmul__ = __mul__


def _scaled_tail(f, c):
    def tail(x, q, R, s):
        v, e = f(x, q, R, s)
        return c * v, abs(c) * e

    return tail


def _sum_support(a, b):
    if a.support_radius is not None and b.support_radius is not None:
        return max(a.support_radius, b.support_radius)
    return None


def _sum_growth(a, b):
    if a.growth is None or b.growth is None:
        return None
    return (a.growth[0] + b.growth[0], max(a.growth[1], b.growth[1]))


def _min_c2(a, b):
    if a.c2_radius_fn is None and b.c2_radius_fn is None:
        return None

    def both(x):
        return min(a.c2_radius(x), b.c2_radius(x))

    return both


# ----------------------------------------------------------------------
# built-in fields
# ----------------------------------------------------------------------


def _affine_pair_tail(value_at):
    """Exact pair tail for affine fields: the odd part cancels."""

    def tail(x, q, R, s):
        return 2.0 * value_at(x) * R ** (-2.0 * s) / (2.0 * s), 0.0

    return tail


def constant_field(N, value):
    value = float(value)
    return ScalarField(
        fn=lambda p: np.full(len(p), value),
        N=N,
        name=f"const:{value}",
        growth=(abs(value), 0.0),
        pair_tail_fn=_affine_pair_tail(lambda x: value),
    )


def coordinate_field(N, k):
    """The linear field x -> x_k (growth exponent 1, exact pair tail)."""
    return ScalarField(
        fn=lambda p: p[:, k].copy(),
        N=N,
        name=f"coord:{k}",
        growth=(1.0, 1.0),
        pair_tail_fn=_affine_pair_tail(lambda x: float(np.asarray(x).reshape(-1)[k])),
    )


def linear_field(N, vec, offset=0.0):
    vec = np.asarray(vec, dtype=float).reshape(N)
    return ScalarField(
        fn=lambda p: p @ vec + offset,
        N=N,
        name="linear",
        growth=(float(np.linalg.norm(vec)) + abs(offset), 1.0),
        pair_tail_fn=_affine_pair_tail(lambda x: float(np.asarray(x).reshape(N) @ vec + offset)),
    )


def gaussian_field(N, center=None, width=1.0):
    """exp(-|x-c|^2 / (2 w^2)); numerically compactly supported."""
    c = np.zeros(N) if center is None else np.asarray(center, dtype=float).reshape(N)
    w = float(width)
    return ScalarField(
        fn=lambda p: np.exp(-np.sum((p - c) ** 2, axis=1) / (2.0 * w * w)),
        N=N,
        name="gaussian",
        support_radius=float(np.linalg.norm(c) + 42.0 * w),
        growth=(1.0, 0.0),
    )


def cosine_field(N, xi):
    """cos(xi . x); the Fourier-symbol test function (growth exponent 0)."""
    xi = np.asarray(xi, dtype=float).reshape(N)
    return ScalarField(
        fn=lambda p: np.cos(p @ xi),
        N=N,
        name="cosine",
        growth=(1.0, 0.0),
    )


def windowed_quadratic_field(N, center=None, halfwidth=1.0):
    """|x-c|^2 times a quintic window; compact, C^2, equals |x-c|^2 near c."""
    c = np.zeros(N) if center is None else np.asarray(center, dtype=float).reshape(N)
    h = float(halfwidth)

    def fn(p):
        r2 = np.sum((p - c) ** 2, axis=1)
        t = np.sqrt(r2) / h
        w = np.zeros(len(p))
        core = t <= 0.5
        w[core] = 1.0
        band = (t > 0.5) & (t < 1.0)
        u = (t[band] - 0.5) / 0.5
        w[band] = 1.0 - u**3 * (10.0 - 15.0 * u + 6.0 * u * u)
        return r2 * w

    return ScalarField(
        fn=fn,
        N=N,
        name="windowed-quadratic",
        support_radius=float(np.linalg.norm(c) + h),
    )


def _ball_c2_radius(dom):
    def rad(x):
        d = float(dom.distance(x))
        if d <= 0.0:
            return 0.0
        r_center = float(np.linalg.norm(np.asarray(x) - dom.center))
        # the distance function has a cone point at the center
        return min(d, r_center) if r_center > 0 else 0.0

    return rad


def dist_pow_field(dom, tau):
    """Extended power of the distance: d(x)^tau inside, 0 outside."""
    from .geometry import Ball, HalfSpaceBox

    tau = float(tau)
    if isinstance(dom, HalfSpaceBox):
        return _halfspace_pow_field(dom, tau, name=f"dist-pow:{tau}")
    if isinstance(dom, Ball):
        c2 = _ball_c2_radius(dom)
    else:
        def c2(x, _dom=dom):
            return float(_dom.distance(x))

    growth = None if tau <= 0 else (dom.diameter**tau + 1.0, 0.0)
    return ScalarField(
        fn=lambda p: dom.d_tau(tau, p),
        N=dom.N,
        name=f"dist-pow:{tau}",
        support_radius=getattr(dom, "support_radius", None),
        growth=growth,
        surfaces=(SurfaceMark(dom, tau),),
        c2_radius_fn=c2,
    )


def indicator_field(dom):
    """The indicator of the open domain (d^0 in the extended convention)."""
    sup = getattr(dom, "support_radius", None)
    if not np.isfinite(sup if sup is not None else np.inf):
        sup = None

    def c2(x, _dom=dom):
        d = float(_dom.distance(x))
        if d > 0.0:
            return d
        # outside: smooth up to the boundary; use distance to the projection
        p = _dom.project(np.asarray(x, dtype=float))
        return float(np.linalg.norm(np.asarray(x, dtype=float) - p))

    return ScalarField(
        fn=lambda p: (np.asarray(dom.distance(p)) > 0.0).astype(float),
        N=dom.N,
        name="indicator",
        support_radius=sup,
        growth=(1.0, 0.0) if sup is None else None,
        surfaces=(SurfaceMark(dom, None),),
        c2_radius_fn=c2,
    )


def ball_profile_field(ball, s):
    """(R^2 - |x - c|^2)_+^(s-1): the explicit blow-up profile on a ball."""
    R2 = ball.radius**2
    c = ball.center

    def fn(p):
        g = R2 - np.sum((p - c) ** 2, axis=1)
        out = np.zeros(len(p))
        pos = g > 0
        out[pos] = g[pos] ** (s - 1.0)
        return out

    def c2(x):
        return 0.5 * float(ball.distance(x))

    return ScalarField(
        fn=fn,
        N=ball.N,
        name="ball-profile",
        support_radius=ball.support_radius,
        surfaces=(SurfaceMark(ball, s - 1.0),),
        c2_radius_fn=c2,
    )


def _pow_series_tail(h_x, h_q, tau, shift, R, s, kmax=12):
    """Tail integral of (h_x + h_q r)^tau r^(shift - 1 - 2s) over r > R.

    Requires h_q > 0 and |h_x| / (h_q R) <= 1/2; binomial expansion in
    h_x / (h_q r), truncated with a geometric error bound.
    """
    ratio = h_x / h_q
    total = 0.0
    term_mag = np.inf
    coef = 1.0  # binom(tau, k), built recursively
    for k in range(kmax + 1):
        if k > 0:
            coef *= (tau - (k - 1)) / k
        expo = tau - k + shift - 2.0 * s
        # int_R^inf r^(expo - 1) dr = R^expo / (-expo), needs expo < 0
        if expo >= 0:
            raise ValueError("series tail requires tau + shift < 2s")
        term = coef * ratio**k * R**expo / (-expo)
        total += term
        term_mag = abs(term)
    err = 2.0 * term_mag  # geometric remainder, ratio <= 1/2
    return h_q**tau * total, abs(h_q**tau) * err


def _halfspace_pow_field(hs, tau, name=None):
    """(height)_+^tau on a half-space, with an analytic ray tail."""
    nu, off = hs.normal, hs.offset

    def fn(p):
        h = p @ nu - off
        out = np.zeros(len(p))
        pos = h > 0
        out[pos] = h[pos] ** tau
        return out

    def c2(x):
        return float(max(np.asarray(x) @ nu - off, 0.0))

    def tail_min(x, q):
        h_x = float(np.asarray(x) @ nu - off)
        h_q = float(np.asarray(q) @ nu)
        if h_q == 0.0:
            return 0.0
        return 2.0 * abs(h_x) / abs(h_q)

    def pair_tail(x, q, R, s):
        # one ray of the pair climbs into the half-space (binomial series),
        # the other drops below the crossing and contributes exactly zero
        h_x = float(np.asarray(x) @ nu - off)
        h_q = float(np.asarray(q) @ nu)
        if h_q == 0.0:
            if h_x <= 0:
                return 0.0, 0.0
            return 2.0 * h_x**tau * R ** (-2.0 * s) / (2.0 * s), 0.0
        return _pow_series_tail(h_x, abs(h_q), tau, 0.0, R, s)

    return ScalarField(
        fn=fn,
        N=hs.N,
        name=name or f"halfspace-pow:{tau}",
        growth=None,
        surfaces=(SurfaceMark(hs, tau),),
        c2_radius_fn=c2,
        pair_tail_fn=pair_tail,
        tail_min_radius_fn=tail_min,
    )


def halfspace_profile_field(hs, s):
    """d^(s-1) on a half-space: the flat-boundary blow-up profile."""
    return _halfspace_pow_field(hs, s - 1.0, name="halfspace-profile")


def remark62_field(hs, p_tangent, s):
    """(p' . x') x_N^(s-1) generalized to a half-space frame.

    ``p_tangent`` has N-1 components against the half-space tangent basis.
    The field is the product of a tangential linear factor with the flat
    blow-up profile; the analytic ray tail combines binomial series for
    both the constant and the linear-in-r parts.
    """
    nu, off = hs.normal, hs.offset
    tgs = hs._tangents
    p_t = np.asarray(p_tangent, dtype=float).reshape(hs.N - 1)
    if np.all(p_t == 0.0):
        raise ValueError("tangential vector must be nonzero")
    pvec = p_t @ tgs  # ambient vector, orthogonal to nu

    def fn(p):
        h = p @ nu - off
        out = np.zeros(len(p))
        pos = h > 0
        out[pos] = (p[pos] @ pvec) * h[pos] ** (s - 1.0)
        return out

    def c2(x):
        return float(max(np.asarray(x) @ nu - off, 0.0))

    def tail_min(x, q):
        h_x = float(np.asarray(x) @ nu - off)
        h_q = float(np.asarray(q) @ nu)
        if h_q == 0.0:
            return 0.0
        return 2.0 * abs(h_x) / abs(h_q)

    def pair_tail(x, q, R, s_ord):
        x = np.asarray(x, dtype=float)
        q = np.asarray(q, dtype=float)
        h_x = float(x @ nu - off)
        h_q = float(q @ nu)
        g_x = float(x @ pvec)
        g_q = float(q @ pvec)
        if h_q == 0.0:
            # both rays share the height; the odd tangential part cancels
            if h_x <= 0:
                return 0.0, 0.0
            return 2.0 * g_x * h_x ** (s - 1.0) * R ** (-2.0 * s_ord) / (2.0 * s_ord), 0.0
        sgn = 1.0 if h_q > 0 else -1.0  # which ray of the pair climbs
        v0, e0 = _pow_series_tail(h_x, abs(h_q), s - 1.0, 0.0, R, s_ord)
        v1, e1 = _pow_series_tail(h_x, abs(h_q), s - 1.0, 1.0, R, s_ord)
        return g_x * v0 + sgn * g_q * v1, abs(g_x) * e0 + abs(g_q) * e1

    return ScalarField(
        fn=fn,
        N=hs.N,
        name="remark62",
        growth=None,
        surfaces=(SurfaceMark(hs, s - 1.0),),
        c2_radius_fn=c2,
        pair_tail_fn=pair_tail,
        tail_min_radius_fn=tail_min,
    )


def validate_growth(field, rng, n=1000, r_max=1e4, surface_margin=1.0):
    """Sampled check of the declared envelope |u| <= M (1+|y|)^p.

    Samples avoid the declared singular surfaces by ``surface_margin``
    (the envelope is declared away from them). Returns the worst ratio
    |u(y)| / envelope(y); values <= 1 certify the declaration.
    """
    if field.growth is None:
        raise ValueError("field declares no growth envelope")
    M, p = field.growth
    pts = rng.standard_normal((4 * n, field.N))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    pts *= rng.uniform(0.0, r_max, 4 * n)[:, None]
    if field.surfaces:
        keep = np.ones(len(pts), dtype=bool)
        for mark in field.surfaces:
            surf = mark.surface
            d_in = np.atleast_1d(surf.distance(pts))
            proj = surf.project(pts)
            gap = np.linalg.norm(pts - np.atleast_2d(proj), axis=1)
            keep &= np.maximum(d_in, gap) >= surface_margin
        pts = pts[keep]
    pts = pts[:n]
    vals = np.abs(field(pts))
    env = M * (1.0 + np.linalg.norm(pts, axis=1)) ** p
    return float(np.max(vals / env))
