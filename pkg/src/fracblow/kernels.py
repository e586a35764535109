"""Stable-like kernels a(z/|z|) |z|^(-(N+2s)) and their ellipticity class.

A kernel is determined by the order parameter s in (0,1), the dimension N,
and an even, bounded spherical anisotropy a. The class considered here is
the set of such kernels with gamma <= a <= Gamma; the extremal (Pucci)
operators and the Bellman-Isaacs operators in :mod:`fracblow.operators`
take suprema/infima over it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

__all__ = [
    "Anisotropy",
    "EllipticityBounds",
    "Kernel",
    "KernelFamily",
    "EllipticityReport",
    "kernel_value",
    "check_ellipticity",
    "normalizing_constant",
    "sphere_directions",
    "angular_second_moment",
    "load_anisotropy_table",
]

_SUPPORTED_DIMS = (1, 2, 3)


def _as_points(x, dim):
    """Coerce a point or batch of points to an (n, dim) float array."""
    a = np.asarray(x, dtype=float)
    if dim == 1 and a.ndim <= 1:
        a = a.reshape(-1, 1)
    else:
        a = np.atleast_2d(a)
    if a.shape[-1] != dim:
        raise ValueError(f"expected points in R^{dim}, got shape {np.shape(x)}")
    return a


def sphere_directions(dim, n):
    """Quasi-uniform unit directions on S^(dim-1).

    Used for sampled checks (ellipticity, evenness) and for spherical
    moments. Dimension 1 returns {+1, -1}; dimension 2 uses equally spaced
    angles; dimension 3 uses a Fibonacci spiral.
    """
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        th = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        return np.column_stack([np.cos(th), np.sin(th)])
    if dim == 3:
        k = np.arange(n) + 0.5
        phi = np.pi * (1.0 + np.sqrt(5.0)) * k
        z = 1.0 - 2.0 * k / n
        r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise ValueError(f"unsupported dimension {dim}")


class Anisotropy:
    """Even, nonnegative direction weight a on the unit sphere.

    Three representations are supported: a constant, a piecewise-constant
    function over a centrally symmetric spherical partition, and a sampled
    table with nearest-direction lookup. Evenness is structural: every
    representation evaluates through an antipodal fold, and tables that
    declare values on both q and -q are rejected if the pair disagrees.
    """

    def __init__(self, kind, data, dim=None):
        self.kind = kind
        self.data = data
        self.dim = dim

    @classmethod
    def constant(cls, value):
        value = float(value)
        if value < 0:
            raise ValueError("anisotropy must be nonnegative")
        return cls("constant", value)

    @classmethod
    def sectors(cls, edges, values):
        """Piecewise-constant anisotropy on half-circle sectors (N = 2).

        ``edges`` are increasing angles in [0, pi] delimiting sectors of the
        upper half-circle; each sector and its antipode share a value, so the
        partition is symmetric by construction.
        """
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=float)
        if edges.ndim != 1 or len(edges) != len(values) + 1:
            raise ValueError("need len(edges) == len(values) + 1")
        if edges[0] != 0.0 or abs(edges[-1] - np.pi) > 1e-12 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must increase from 0 to pi")
        if np.any(values < 0):
            raise ValueError("anisotropy must be nonnegative")
        return cls("sectors", (edges, values), dim=2)

    @classmethod
    def from_table(cls, directions, values, rtol=1e-8):
        """Sampled anisotropy with nearest-direction lookup.

        The table is symmetrized at construction: lookups fold q and -q
        together. If the input lists antipodal direction pairs whose values
        differ beyond ``rtol``, the table declares an uneven function and is
        rejected.
        """
        dirs = np.asarray(directions, dtype=float)
        vals = np.asarray(values, dtype=float)
        if dirs.ndim != 2 or len(dirs) != len(vals) or len(dirs) == 0:
            raise ValueError("need matching (n, dim) directions and n values")
        if np.any(vals < 0):
            raise ValueError("anisotropy must be nonnegative")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero direction in table")
        dirs = dirs / norms[:, None]
        # reject tables that explicitly assign different values to q and -q
        dots = dirs @ dirs.T
        anti = dots < -1.0 + 1e-10
        ii, jj = np.nonzero(anti)
        scale = max(np.max(np.abs(vals)), 1.0)
        for i, j in zip(ii, jj):
            if i < j and abs(vals[i] - vals[j]) > rtol * scale:
                raise ValueError(
                    "table is uneven: antipodal directions "
                    f"{dirs[i]} / {dirs[j]} carry values {vals[i]} != {vals[j]}"
                )
        return cls("table", (dirs, vals), dim=dirs.shape[1])

    def __call__(self, q):
        """Evaluate at unit directions q of shape (n, dim) or (dim,)."""
        if self.kind == "constant":
            q = np.atleast_2d(np.asarray(q, dtype=float))
            return np.full(len(q), self.data)
        q = np.atleast_2d(np.asarray(q, dtype=float))
        if self.kind == "sectors":
            edges, values = self.data
            th = np.arctan2(q[:, 1], q[:, 0])
            th = np.where(th < 0, th + np.pi, th)       # antipodal fold
            th = np.where(th >= np.pi, th - np.pi, th)  # guard th == pi
            idx = np.clip(np.searchsorted(edges, th, side="right") - 1, 0, len(values) - 1)
            return values[idx]
        if self.kind == "table":
            dirs, vals = self.data
            # fold: nearest among {q, -q} against the stored directions
            dots = np.abs(q @ dirs.T)
            return vals[np.argmax(dots, axis=1)]
        raise RuntimeError(f"unknown anisotropy kind {self.kind}")

    def bounds_estimate(self, dim, n_dirs=720):
        """(min, max) of a over sampled directions."""
        vals = self(sphere_directions(dim, n_dirs))
        return float(np.min(vals)), float(np.max(vals))


@dataclass(frozen=True)
class EllipticityBounds:
    """Ellipticity constants 0 < gamma <= Gamma."""

    gamma: float
    Gamma: float

    def __post_init__(self):
        if not (0.0 < self.gamma <= self.Gamma):
            raise ValueError(f"need 0 < gamma <= Gamma, got ({self.gamma}, {self.Gamma})")


@dataclass(frozen=True)
class Kernel:
    """Homogeneous kernel a(z/|z|) |z|^(-(N+2s)), optionally normalized.

    Immutable; all evaluation is pure. ``include_normalizer`` multiplies
    values by the constant that gives the isotropic kernel the Fourier
    symbol -|xi|^(2s) (see :func:`normalizing_constant`).
    """

    N: int
    s: float
    anisotropy: Anisotropy = field(default_factory=lambda: Anisotropy.constant(1.0))
    include_normalizer: bool = False

    def __post_init__(self):
        if self.N not in _SUPPORTED_DIMS:
            raise ValueError(f"dimension {self.N} not supported (use 1, 2 or 3)")
        if not (0.0 < self.s < 1.0):
            raise ValueError(f"order parameter s must lie in (0, 1), got {self.s}")
        if self.anisotropy.dim not in (None, self.N):
            raise ValueError("anisotropy dimension does not match kernel dimension")

    @property
    def normalizer(self):
        return normalizing_constant(self.N, self.s) if self.include_normalizer else 1.0

    def direction_weight(self, q):
        """a(q) at unit directions, including the normalizer if set."""
        return self.anisotropy(q) * self.normalizer

    def __call__(self, z):
        return kernel_value(self, z)


def kernel_value(kernel, z):
    """Evaluate K(z) = a(z/|z|) |z|^(-(N+2s)) at one point or a batch.

    Raises ValueError on the zero vector, where the kernel is undefined.
    """
    pts = _as_points(z, kernel.N)
    r = np.linalg.norm(pts, axis=1)
    if np.any(r == 0.0):
        raise ValueError("kernel undefined at z = 0")
    vals = kernel.direction_weight(pts / r[:, None]) * r ** (-(kernel.N + 2.0 * kernel.s))
    return float(vals[0]) if np.ndim(z) <= 1 and np.asarray(z).size == kernel.N else vals


@dataclass
class EllipticityReport:
    ok: bool
    worst_direction: np.ndarray
    worst_value: float
    bounds: EllipticityBounds


def check_ellipticity(kernel, bounds, n_dirs=512):
    """Sampled check that gamma <= a <= Gamma on the sphere.

    Returns an :class:`EllipticityReport`; ``worst_direction`` is the sample
    direction with the largest violation (or the tightest margin when ok).
    """
    if n_dirs < 1:
        raise ValueError("n_dirs must be >= 1")
    dirs = sphere_directions(kernel.N, n_dirs)
    vals = kernel.anisotropy(dirs)
    below = bounds.gamma - vals
    above = vals - bounds.Gamma
    violation = np.maximum(below, above)
    k = int(np.argmax(violation))
    return EllipticityReport(
        ok=bool(violation[k] <= 0.0),
        worst_direction=dirs[k],
        worst_value=float(vals[k]),
        bounds=bounds,
    )


@dataclass
class KernelFamily:
    """Finite two-index family {K_ij} sharing N, s and ellipticity bounds."""

    kernels: dict
    bounds: EllipticityBounds

    def __post_init__(self):
        if not self.kernels:
            raise ValueError("family must contain at least one kernel")
        ks = list(self.kernels.values())
        self.N = ks[0].N
        self.s = ks[0].s
        for key, k in self.kernels.items():
            if k.N != self.N or k.s != self.s:
                raise ValueError(f"member {key} does not share (N, s) with the family")
            rep = check_ellipticity(k, self.bounds)
            if not rep.ok:
                raise ValueError(
                    f"member {key} violates the family bounds at direction "
                    f"{rep.worst_direction} (a = {rep.worst_value})"
                )
        self.I = sorted({i for i, _ in self.kernels})
        self.J = sorted({j for _, j in self.kernels})
        for i in self.I:
            for j in self.J:
                if (i, j) not in self.kernels:
                    raise ValueError(f"family is missing member ({i}, {j})")

    @classmethod
    def from_grid(cls, members, bounds):
        """Build from a nested list: members[i][j] is a Kernel."""
        kernels = {
            (i, j): k for i, row in enumerate(members) for j, k in enumerate(row)
        }
        return cls(kernels, bounds)


def normalizing_constant(N, s):
    """The constant making the isotropic operator's Fourier symbol |xi|^(2s).

    Computed from the standard closed form
    ``4^s * s * Gamma(N/2 + s) / (pi^(N/2) * Gamma(1 - s))``; the test suite
    pins it against a direct quadrature of the principal-value integral
    applied to a cosine. Vanishes like (1 - s) as s -> 1.
    """
    if not (0.0 < s < 1.0):
        raise ValueError(f"order parameter s must lie in (0, 1), got {s}")
    if N < 1:
        raise ValueError("dimension must be >= 1")
    return float(
        4.0**s * s * gamma_fn(N / 2.0 + s) / (np.pi ** (N / 2.0) * gamma_fn(1.0 - s))
    )


def angular_second_moment(kernel, n_dirs=720):
    """Second angular moment Q = int_{S^(N-1)} q q^T a(q) dS(q).

    Q is the data the near-field stencil of the discrete operator must
    reproduce; it also yields the s -> 1 limit coefficients (its diagonal).
    Includes the normalizer if the kernel carries one.
    """
    N = kernel.N
    if N == 1:
        q = np.array([[1.0], [-1.0]])
        w = np.array([1.0, 1.0])
    elif N == 2:
        th = 2.0 * np.pi * (np.arange(n_dirs) + 0.5) / n_dirs
        q = np.column_stack([np.cos(th), np.sin(th)])
        w = np.full(n_dirs, 2.0 * np.pi / n_dirs)
    else:
        # product rule: Gauss-Legendre in cos(theta), uniform in phi
        m = max(int(np.sqrt(n_dirs)), 8)
        t, wt = np.polynomial.legendre.leggauss(m)
        ph = 2.0 * np.pi * (np.arange(2 * m) + 0.5) / (2 * m)
        T, P = np.meshgrid(t, ph, indexing="ij")
        R = np.sqrt(1.0 - T**2)
        q = np.column_stack([(R * np.cos(P)).ravel(), (R * np.sin(P)).ravel(), T.ravel()])
        w = np.repeat(wt, 2 * m) * (2.0 * np.pi / (2 * m))
    a = kernel.direction_weight(q)
    return np.einsum("m,mi,mj->ij", w * a, q, q)


def load_anisotropy_table(path, dim):
    """Read a plain-text anisotropy table: one ``angles value`` row per sample.

    N = 2 rows are ``theta a``; N = 3 rows are ``theta phi a`` with theta the
    polar angle from the last axis. Blank lines and '#' comments are skipped.
    """
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append([float(tok) for tok in line.split()])
    if not rows:
        raise ValueError(f"empty anisotropy table: {path}")
    arr = np.asarray(rows, dtype=float)
    if dim == 2:
        if arr.shape[1] != 2:
            raise ValueError("N = 2 table rows must be 'theta value'")
        dirs = np.column_stack([np.cos(arr[:, 0]), np.sin(arr[:, 0])])
        vals = arr[:, 1]
    elif dim == 3:
        if arr.shape[1] != 3:
            raise ValueError("N = 3 table rows must be 'theta phi value'")
        th, ph = arr[:, 0], arr[:, 1]
        dirs = np.column_stack(
            [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]
        )
        vals = arr[:, 2]
    else:
        raise ValueError("anisotropy tables are supported for N in {2, 3}")
    return Anisotropy.from_table(dirs, vals)
