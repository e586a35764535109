"""Pointwise evaluation of the nonlocal operators.

Everything reduces to per-direction radial profiles

    psi(q) = int_0^inf [u(x + r q) + u(x - r q) - 2 u(x)] r^(-1-2s) dr,

computed once per point on a half-sphere grid: the linear operator is the
anisotropy-weighted angular sum, the extremal (Pucci) operators weight the
positive and negative parts of psi with the ellipticity constants, and the
inf-sup operator combines the same profiles member by member. The
symmetric pairing removes the principal value inside the ball where the
field is twice differentiable; outside it, radial rules are graded toward
the ray crossings of the field's singular surfaces.

Error estimates are differences between two positions of the refinement
ladder plus any explicit far-tail bound, per the reporting convention of
:class:`EvalResult`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .kernels import Kernel
from .quadrature import QuadratureConfig, angular_half_grid, direction_rule

__all__ = [
    "EvalResult",
    "linear_op",
    "frac_laplacian",
    "pucci_plus",
    "pucci_minus",
    "isaacs_op",
    "bilinear_form",
    "c_constant",
    "DEFAULT_CONFIG",
]

DEFAULT_CONFIG = QuadratureConfig()


@dataclass
class EvalResult:
    """A computed value with a refinement-difference error estimate."""

    value: float
    error_estimate: float

    def __post_init__(self):
        self.error_estimate = abs(self.error_estimate)


def _tail_strategy(u, s):
    """How the far field beyond the truncation radius is closed."""
    if u.support_radius is not None and np.isfinite(u.support_radius):
        return "compact"
    if u.pair_tail_fn is not None:
        return "hook"
    if u.growth is not None:
        M, p = u.growth
        if p >= 2.0 * s:
            raise ValueError(
                f"field '{u.name}' grows like (1+|y|)^{p} which is not integrable "
                f"against the order-{s} kernel weight (need p < 2s)"
            )
        return "growth"
    raise ValueError(
        f"field '{u.name}' declares no compact support, growth envelope or "
        "analytic tail; the far field cannot be closed"
    )


def _pv_radius(u, x, cfg):
    rc = u.c2_radius(x)
    if not rc > 0.0:
        raise ValueError(f"PV undefined: field '{u.name}' is not C^2 at {x}")
    return min(cfg.r_near, 0.5 * rc)


def _ray_specials(marks, x, q, r_hi):
    sp = []
    for mark in marks:
        for rho in np.atleast_1d(mark.surface.ray_crossings(x, q, r_hi)):
            sp.append((float(rho), mark.exponent))
        for rho in np.atleast_1d(mark.surface.ray_crossings(x, -q, r_hi)):
            sp.append((float(rho), mark.exponent))
    return sp


@dataclass
class _Profiles:
    dirs: np.ndarray
    weights: np.ndarray  # angular weights, sum = half the sphere measure
    psi: np.ndarray
    tail_bound: np.ndarray  # per-direction bound on the unresolved tail


def _cover_radius(u, strategy, x, q, cfg, r_near, xnorm):
    if strategy == "compact":
        return max(u.support_radius + xnorm + 0.05 * (1.0 + xnorm), 4.0 * r_near)
    R = max(cfg.R_far, 4.0 * r_near)
    if strategy == "hook":
        R = max(R, u.tail_min_radius(x, q) * (1.0 + 1e-9))
    return R


def _profiles(u, x, s, cfg):
    """Per-direction radial profiles of the symmetric pair difference."""
    x = np.asarray(x, dtype=float).reshape(u.N)
    u_x = u.value(x)
    r_near = _pv_radius(u, x, cfg)
    strategy = _tail_strategy(u, s)
    dirs, wS = angular_half_grid(u.N, cfg.sphere_order, cfg.angular_mode)
    m = len(dirs)
    xnorm = float(np.linalg.norm(x))

    r_list, w_list, counts, R_cover = [], [], [], np.empty(m)
    r_core = None
    for k in range(m):
        q = dirs[k]
        R = _cover_radius(u, strategy, x, q, cfg, r_near, xnorm)
        R_cover[k] = R
        sp = _ray_specials(u.surfaces, x, q, R)
        r, w, r_core = direction_rule(r_near, R, sp, cfg)
        r_list.append(r)
        w_list.append(w)
        counts.append(len(r))

    r_all = np.concatenate(r_list)
    w_all = np.concatenate(w_list)
    idx = np.repeat(np.arange(m), counts)
    # one batched field evaluation covering both rays of every pair
    P = np.vstack(
        [x[None, :] + r_all[:, None] * dirs[idx], x[None, :] - r_all[:, None] * dirs[idx]]
    )
    vals = u(P)
    n = len(r_all)
    delta = vals[:n] + vals[n:] - 2.0 * u_x
    contrib = w_all * delta * r_all ** (-1.0 - 2.0 * s)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    psi = np.add.reduceat(contrib, starts)

    # analytic core on [0, r_core]: quadratic model calibrated at r_core
    Pc = np.vstack([x[None, :] + r_core * dirs, x[None, :] - r_core * dirs])
    vc = u(Pc)
    delta_c = vc[:m] + vc[m:] - 2.0 * u_x
    psi += delta_c * r_core ** (-2.0 * s) / (2.0 - 2.0 * s)

    tail_bound = np.zeros(m)
    if strategy == "compact":
        psi += -2.0 * u_x * R_cover ** (-2.0 * s) / (2.0 * s)
    elif strategy == "hook":
        for k in range(m):
            tv, te = u.pair_tail_fn(x, dirs[k], R_cover[k], s)
            psi[k] += tv - 2.0 * u_x * R_cover[k] ** (-2.0 * s) / (2.0 * s)
            tail_bound[k] = te
    else:  # growth: the whole pair tail is bounded, never estimated
        M, p = u.growth
        c = (1.0 + (1.0 + xnorm) / R_cover) ** p
        tail_bound = (
            2.0 * M * c * R_cover ** (p - 2.0 * s) / (2.0 * s - p)
            + 2.0 * abs(u_x) * R_cover ** (-2.0 * s) / (2.0 * s)
        )
    return _Profiles(dirs=dirs, weights=wS, psi=psi, tail_bound=tail_bound)


def _two_level(u, x, s, cfg, combine):
    fine = _profiles(u, x, s, cfg)
    coarse = _profiles(u, x, s, cfg.coarsened())
    v_f, b_f = combine(fine)
    v_c, _ = combine(coarse)
    return EvalResult(value=v_f, error_estimate=abs(v_f - v_c) + b_f)


def linear_op(kernel, u, x, cfg=DEFAULT_CONFIG):
    """L_K u(x): the principal-value integral against one kernel."""
    if u.N != kernel.N:
        raise ValueError("field and kernel dimensions differ")

    def combine(pr):
        a = kernel.direction_weight(pr.dirs)
        return float(np.sum(pr.weights * a * pr.psi)), float(
            np.sum(pr.weights * a * pr.tail_bound)
        )

    return _two_level(u, x, kernel.s, cfg, combine)


def frac_laplacian(u, x, s, cfg=DEFAULT_CONFIG):
    """The normalized fractional Laplacian of order 2s (negative-definite
    convention: it tends to the classical Laplacian as s -> 1)."""
    return linear_op(Kernel(N=u.N, s=s, include_normalizer=True), u, x, cfg)


def _pucci(u, x, bounds, s, cfg, sign):
    hi, lo = (bounds.Gamma, bounds.gamma) if sign > 0 else (bounds.gamma, bounds.Gamma)

    def combine(pr):
        pos = np.maximum(pr.psi, 0.0)
        neg = np.maximum(-pr.psi, 0.0)
        val = float(np.sum(pr.weights * (hi * pos - lo * neg)))
        return val, float(bounds.Gamma * np.sum(pr.weights * pr.tail_bound))

    return _two_level(u, x, s, cfg, combine)


def pucci_plus(u, x, bounds, s, cfg=DEFAULT_CONFIG):
    """Extremal operator: supremum of L_K u(x) over the kernel class."""
    return _pucci(u, x, bounds, s, cfg, +1)


def pucci_minus(u, x, bounds, s, cfg=DEFAULT_CONFIG):
    """Extremal operator: infimum of L_K u(x) over the kernel class."""
    return _pucci(u, x, bounds, s, cfg, -1)


def isaacs_op(family, u, x, cfg=DEFAULT_CONFIG):
    """inf over i of sup over j of L_ij u(x) for a finite kernel family.

    Ties resolve to the lowest index, which keeps reports deterministic.
    """
    if not family.I or not family.J:
        raise ValueError("family index sets must be nonempty")

    def combine(pr):
        vals = {}
        for key, k in family.kernels.items():
            a = k.direction_weight(pr.dirs)
            vals[key] = float(np.sum(pr.weights * a * pr.psi))
        best = None
        for i in family.I:
            sup = max(vals[(i, j)] for j in family.J)
            if best is None or sup < best:
                best = sup
        worst_a = max(
            float(np.max(k.direction_weight(pr.dirs))) for k in family.kernels.values()
        )
        return best, worst_a * float(np.sum(pr.weights * pr.tail_bound))

    return _two_level(u, x, family.s, cfg, combine)


def _pair_tail_of(field, x, q, R, s):
    """(value, bound) for int_R^inf [h(x+rq) + h(x-rq)] r^(-1-2s) dr."""
    xnorm = float(np.linalg.norm(np.asarray(x)))
    if field.support_radius is not None and np.isfinite(field.support_radius):
        if R >= field.support_radius + xnorm:
            return 0.0, 0.0
        raise ValueError("truncation radius does not cover the compact support")
    if field.pair_tail_fn is not None:
        return field.pair_tail_fn(x, q, R, s)
    if field.growth is not None:
        M, p = field.growth
        if p >= 2.0 * s:
            raise ValueError(f"field '{field.name}' tail is not integrable alone")
        c = (1.0 + (1.0 + xnorm) / R) ** p
        return 0.0, 2.0 * M * c * R ** (p - 2.0 * s) / (2.0 * s - p)
    raise ValueError(f"no tail information for field '{field.name}'")


def bilinear_form(kernel, f, g, x, cfg=DEFAULT_CONFIG, product=None):
    """The symmetric bilinear form

        B(f, g)(x) = 1/2 int (f(y) - f(x)) (g(y) - g(x)) K(x - y) dy.

    Integrable whenever one factor is Lipschitz at x (the caller asserts
    this); no principal value is involved. It satisfies the product
    identity ``L(fg) = f Lg + g Lf + 2 B(f, g)`` pointwise.

    ``product`` may supply an exact field for f*g; its tail metadata then
    closes the far field (useful when the true product has an analytic
    tail that the metadata-combined product lacks).
    """
    if f.N != g.N or f.N != kernel.N:
        raise ValueError("dimension mismatch")
    s = kernel.s
    x = np.asarray(x, dtype=float).reshape(f.N)
    f_x, g_x = f.value(x), g.value(x)
    fg = product if product is not None else f * g
    rc = min(f.c2_radius(x), g.c2_radius(x))
    if not rc > 0.0:
        raise ValueError("PV undefined: a factor is not C^2 at x")

    from .fields import _merge_marks_sum

    marks = _merge_marks_sum(fg.surfaces, _merge_marks_sum(f.surfaces, g.surfaces))
    xnorm = float(np.linalg.norm(x))

    def one_level(level_cfg):
        r_near = min(level_cfg.r_near, 0.5 * rc)
        dirs, wS = angular_half_grid(f.N, level_cfg.sphere_order, level_cfg.angular_mode)
        m = len(dirs)
        vals = np.empty(m)
        bound = np.zeros(m)
        a_dir = kernel.direction_weight(dirs)
        for k in range(m):
            q = dirs[k]
            R = max(level_cfg.R_far, 4.0 * r_near)
            for h in (f, g, fg):
                if h.support_radius is not None and np.isfinite(h.support_radius):
                    R = max(R, h.support_radius + xnorm + 0.05 * (1.0 + xnorm))
                elif h.pair_tail_fn is not None:
                    R = max(R, h.tail_min_radius(x, q) * (1.0 + 1e-9))
            sp = _ray_specials(marks, x, q, R)
            r, w, r_core = direction_rule(r_near, R, sp, level_cfg)
            Pp = x[None, :] + r[:, None] * q[None, :]
            Pm = x[None, :] - r[:, None] * q[None, :]
            fp, fm = f(Pp) - f_x, f(Pm) - f_x
            gp, gm = g(Pp) - g_x, g(Pm) - g_x
            pair = fp * gp + fm * gm
            acc = float(np.sum(w * pair * r ** (-1.0 - 2.0 * s)))
            # quadratic core model calibrated at r_core
            pc = (f.value(x + r_core * q) - f_x) * (g.value(x + r_core * q) - g_x) + (
                f.value(x - r_core * q) - f_x
            ) * (g.value(x - r_core * q) - g_x)
            acc += pc * r_core ** (-2.0 * s) / (2.0 - 2.0 * s)
            # tail: expand (f - f_x)(g - g_x), close each pair-summed piece
            t_fg, e_fg = _pair_tail_of(fg, x, q, R, s)
            t_f, e_f = _pair_tail_of(f, x, q, R, s)
            t_g, e_g = _pair_tail_of(g, x, q, R, s)
            acc += t_fg - g_x * t_f - f_x * t_g + 2.0 * f_x * g_x * R ** (-2.0 * s) / (2.0 * s)
            bound[k] = e_fg + abs(g_x) * e_f + abs(f_x) * e_g
            vals[k] = acc
        value = 0.5 * float(np.sum(wS * a_dir * vals))
        return value, 0.5 * float(np.sum(wS * a_dir * bound))

    v_f, b_f = one_level(cfg)
    v_c, _ = one_level(cfg.coarsened())
    return EvalResult(value=v_f, error_estimate=abs(v_f - v_c) + b_f)


def c_constant(kernel, tau, cfg=DEFAULT_CONFIG):
    """The half-space constant: L_K applied to the extended power
    (y_N)_+^tau, evaluated at unit height above the flat boundary.

    Finite exactly for -1 < tau < 2s. Its zeros in tau locate the
    boundary blow-up exponent of the operator.
    """
    from .fields import _halfspace_pow_field
    from .geometry import HalfSpaceBox

    s = kernel.s
    if not (-1.0 < tau < 2.0 * s):
        raise ValueError(f"c_K(tau) requires -1 < tau < 2s, got tau={tau}, s={s}")
    hs = HalfSpaceBox.upper(kernel.N)
    u = _halfspace_pow_field(hs, tau)
    x = np.zeros(kernel.N)
    x[-1] = 1.0
    use = cfg
    if kernel.N == 3 and kernel.anisotropy.kind == "constant":
        # the integrand is axisymmetric about the height axis
        use = replace(cfg, angular_mode="zonal")
    return linear_op(kernel, u, x, use)
