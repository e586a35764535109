"""Radial-angular quadrature with grading toward power singularities.

The principal-value integrals are evaluated in polar form: an angular rule
over half the unit sphere (antipodal directions are folded into symmetric
second differences) times a per-direction radial rule. The radial rule uses

* dyadic shells toward r = 0 inside the twice-differentiable ball, where
  the symmetric difference removes the principal value analytically,
* geometric octaves out to the truncation radius,
* dyadic grading toward every radius where the ray crosses a declared
  singular surface of the integrand, and
* Gauss-Jacobi rules on the two segments touching a crossing whose power
  exponent is declared, so the leading (rho - r)^tau behavior is integrated
  exactly rather than resolved by subdivision.

All singularities in play are power type, so geometric subdivision with a
fixed-order rule per segment converges geometrically in the level counts.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

__all__ = ["QuadratureConfig", "angular_half_grid", "direction_rule"]


@dataclass(frozen=True)
class QuadratureConfig:
    """Resolution parameters for the principal-value quadrature.

    ``refined(k)`` walks the refinement ladder: the angular order and the
    per-octave subdivision double per step, the dyadic gradings deepen, and
    the truncation radius doubles (it only matters for fields without
    exact tails). Error estimates are differences between consecutive
    ladder positions.
    """

    r_near: float = 0.25
    R_far: float = 16.0
    near_levels: int = 10
    sphere_order: int = 24
    radial_order: int = 6
    far_per_octave: int = 2
    sing_levels: int = 8
    angular_mode: str = "full"  # "full" | "zonal" (axisymmetric N = 3 integrands)

    def __post_init__(self):
        if not (0.0 < self.r_near < self.R_far):
            raise ValueError("need 0 < r_near < R_far")
        if min(self.near_levels, self.sphere_order, self.radial_order,
               self.far_per_octave, self.sing_levels) < 1:
            raise ValueError("quadrature orders must be >= 1")

    def refined(self, k=1):
        if k == 0:
            return self
        f = 2.0**k
        return replace(
            self,
            R_far=max(self.R_far * f, 2.0 * self.r_near),
            near_levels=max(self.near_levels + 2 * k, 4),
            sphere_order=max(int(round(self.sphere_order * f)), 6),
            radial_order=max(self.radial_order + 2 * k, 3),
            far_per_octave=max(int(round(self.far_per_octave * f)), 1),
            sing_levels=max(self.sing_levels + 2 * k, 4),
        )

    def coarsened(self):
        return self.refined(-1)


@lru_cache(maxsize=64)
def _gauss01(order):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=256)
def _jacobi01(order, tau, side):
    """Rule on [0, 1] integrating f exactly for f = u^tau * poly (side='left',
    singular at 0) or f = (1-u)^tau * poly (side='right', singular at 1).

    Weights absorb the singular factor: sum w_i f(u_i) ~ int_0^1 f(u) du.
    """
    if side == "left":
        t, w = roots_jacobi(order, 0.0, tau)
        u = 0.5 * (t + 1.0)
        wt = 0.5 * w * (1.0 + t) ** (-tau)
    else:
        t, w = roots_jacobi(order, tau, 0.0)
        u = 0.5 * (t + 1.0)
        wt = 0.5 * w * (1.0 - t) ** (-tau)
    return u, wt


def angular_half_grid(N, order, mode="full"):
    """Directions and weights integrating over half of S^(N-1).

    Antipodal halves are folded by the caller (the radial integrand is the
    symmetric pair difference), so the half-sphere carries the full
    operator. Weights sum to half the sphere measure.
    """
    if N == 1:
        return np.array([[1.0]]), np.array([1.0])
    if N == 2:
        m = max(order, 2)
        th = np.pi * (np.arange(m) + 0.5) / m
        return np.column_stack([np.cos(th), np.sin(th)]), np.full(m, np.pi / m)
    if N == 3:
        n_t = max(order // 2, 3)
        t, wt = _gauss01(n_t)  # t = cos(theta) on the upper hemisphere
        if mode == "zonal":
            # integrand independent of phi: one azimuthal node, weight 2 pi
            dirs = np.column_stack([np.sqrt(1.0 - t**2), np.zeros(n_t), t])
            return dirs, 2.0 * np.pi * wt
        n_p = max(order, 4)
        ph = 2.0 * np.pi * (np.arange(n_p) + 0.5) / n_p
        T, P = np.meshgrid(t, ph, indexing="ij")
        R = np.sqrt(1.0 - T**2)
        dirs = np.column_stack(
            [(R * np.cos(P)).ravel(), (R * np.sin(P)).ravel(), T.ravel()]
        )
        w = np.repeat(wt, n_p) * (2.0 * np.pi / n_p)
        return dirs, w
    raise ValueError(f"unsupported dimension {N}")


def _geometric_breaks(a, b, per_octave):
    if b <= a * (1.0 + 1e-12):
        return np.array([a, b])
    n = max(int(np.ceil(np.log2(b / a) * per_octave)), 1)
    return a * (b / a) ** (np.linspace(0.0, 1.0, n + 1))


def _segment_rule(a, b, order, special):
    """Gauss rule on [a, b]; Jacobi-weighted if an endpoint is singular.

    ``special`` is None, or (rho, tau) with rho == a or rho == b marking a
    (|r - rho|)^tau factor of the integrand.
    """
    h = b - a
    if special is not None and special[1] is not None and special[1] > -1.0:
        rho, tau = special
        tau = round(float(tau), 12)
        if abs(rho - a) <= 1e-14 * b:
            u, w = _jacobi01(order, tau, "left")
            return a + h * u, h * w
        if abs(rho - b) <= 1e-14 * b:
            u, w = _jacobi01(order, tau, "right")
            return a + h * u, h * w
    u, w = _gauss01(order)
    return a + h * u, h * w


def direction_rule(r_lo, r_hi, specials, cfg, near_levels=None):
    """Radial nodes/weights on [r_lo 2^-near_levels, r_hi] for one direction.

    ``specials`` is a list of (rho, tau) crossings; tau may be None for a
    plain jump. The rule starts with dyadic shells below r_lo (where the
    symmetric difference is smooth), continues in geometric octaves, grades
    toward every crossing, and applies Jacobi endpoint weights on the two
    segments meeting a crossing with a declared exponent.

    Returns (r, w, r_core) where [0, r_core] is left for the analytic core.
    """
    if near_levels is None:
        near_levels = cfg.near_levels
    r_core = r_lo * 0.5**near_levels
    breaks = set(_geometric_breaks(r_lo, r_hi, cfg.far_per_octave))
    breaks.update(r_core * 2.0 ** np.arange(near_levels + 1))
    sp_raw = sorted((float(rho), tau) for rho, tau in specials if r_lo < rho < r_hi)
    sp = []
    for rho, tau in sp_raw:
        if sp and abs(rho - sp[-1][0]) <= 1e-12 * r_hi:
            # the same crossing seen from both rays of the pair: merge,
            # keeping the more singular exponent
            old = sp[-1][1]
            e = None if (old is None or tau is None) else min(old, tau)
            sp[-1] = (sp[-1][0], e)
        else:
            sp.append((rho, tau))
    for i, (rho, _tau) in enumerate(sp):
        gap = min(
            [rho - r_lo, r_hi - rho, 0.5 * rho]
            + [0.5 * abs(sp[j][0] - rho) for j in range(len(sp)) if j != i]
        )
        if gap <= 0:
            continue
        breaks.add(rho)
        for j in range(cfg.sing_levels + 1):
            w = gap * 0.5**j
            breaks.add(rho - w)
            breaks.add(rho + w)
    arr = np.array(sorted(b for b in breaks if r_core <= b <= r_hi))
    keep = np.concatenate([[True], np.diff(arr) > 1e-14 * r_hi])
    arr = arr[keep]
    if arr[-1] < r_hi:
        arr = np.concatenate([arr, [r_hi]])

    rho_map = {}
    for rho, tau in sp:
        k = int(np.argmin(np.abs(arr - rho)))
        if abs(arr[k] - rho) <= 1e-13 * r_hi:
            rho_map[k] = (arr[k], tau)

    rs, ws = [], []
    for i in range(len(arr) - 1):
        special = rho_map.get(i) or rho_map.get(i + 1)
        r, w = _segment_rule(arr[i], arr[i + 1], cfg.radial_order, special)
        rs.append(r)
        ws.append(w)
    return np.concatenate(rs), np.concatenate(ws), r_core
