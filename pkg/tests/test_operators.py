"""Principal-value operator evaluation against independent oracles."""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from fracblow.fields import (
    ScalarField,
    ball_profile_field,
    constant_field,
    coordinate_field,
    dist_pow_field,
    gaussian_field,
    halfspace_profile_field,
    indicator_field,
    remark62_field,
    windowed_quadratic_field,
)
from fracblow.geometry import Ball, HalfSpaceBox
from fracblow.kernels import Anisotropy, EllipticityBounds, Kernel, KernelFamily
from fracblow.operators import (
    DEFAULT_CONFIG,
    bilinear_form,
    c_constant,
    frac_laplacian,
    isaacs_op,
    linear_op,
    pucci_minus,
    pucci_plus,
)
from fracblow.quadrature import QuadratureConfig

BALL = Ball([0.0, 0.0], 1.0)
BOUNDS = EllipticityBounds(0.5, 2.0)


def c_tau_oracle_1d(s, tau):
    """c_K(tau) for the isotropic kernel on the line, by direct quadrature.

    The transverse coordinates integrate out for isotropic kernels, so the
    one-dimensional constant carries the zeros and signs in any dimension.
    """

    def head(t):
        return ((1 + t) ** tau + max(1 - t, 0.0) ** tau - 2.0) * t ** (-1 - 2 * s)

    a, _ = quad(head, 0, 0.5, limit=200)
    b, _ = quad(head, 0.5, 1.0, limit=200)  # integrable endpoint power at t = 1
    c, _ = quad(lambda t: ((1 + t) ** tau - 2.0) * t ** (-1 - 2 * s), 1.0, np.inf, limit=200)
    return a + b + c


def transverse_mass(N, s):
    """int over R^(N-1) of (1 + |v|^2)^(-(N+2s)/2): the dimension factor
    linking the 1-d constant to c_K(tau) in dimension N (isotropic)."""
    if N == 1:
        return 1.0
    if N == 2:
        return float(np.sqrt(np.pi) * gamma_fn(s + 0.5) / gamma_fn(1.0 + s))
    raise NotImplementedError


# ---------------------------------------------------------------- linear_op


def test_constant_field_maps_to_zero():
    k = Kernel(N=2, s=0.5)
    r = linear_op(k, constant_field(2, 4.2), [0.3, -0.1])
    assert abs(r.value) <= 1e-12


def test_affine_field_maps_to_zero():
    k = Kernel(N=2, s=0.75)
    r = linear_op(k, coordinate_field(2, 0), [0.2, 0.4])
    assert abs(r.value) <= 1e-12


def test_halfspace_profile_nearly_harmonic():
    # the flat blow-up profile d^(s-1) is annihilated by the isotropic
    # operator; values fall under refinement and stay inside the estimate
    hs = HalfSpaceBox.upper(2)
    for s in (0.3, 0.5, 0.7):
        u = halfspace_profile_field(hs, s)
        prev = None
        for lev in range(2):
            r = frac_laplacian(u, [0.2, 0.6], s, DEFAULT_CONFIG.refined(lev))
            assert abs(r.value) <= r.error_estimate
            if prev is not None:
                assert abs(r.value) < abs(prev.value)
            prev = r


def test_indicator_interior_sign_and_cap_oracle():
    chi = indicator_field(BALL)
    k = Kernel(N=2, s=0.5)
    for x in ([0.0, 0.0], [0.4, 0.3], [0.0, -0.7]):
        r = linear_op(k, chi, x)
        assert r.value < 0.0
        # oracle: minus the kernel mass of the exterior, computed by exact
        # radial integration over the exit ray in each direction
        x = np.asarray(x, dtype=float)

        def exterior_mass(th):
            q = np.array([np.cos(th), np.sin(th)])
            rad = BALL.ray_crossings(x, q, r_max=None)[-1]
            return rad ** (-1.0) / 1.0  # R^(-2s)/(2s) with 2s = 1

        ref, _ = quad(exterior_mass, 0.0, 2.0 * np.pi, limit=200)
        assert r.value == pytest.approx(-ref, rel=0.01)


def test_translation_invariance():
    rng = np.random.default_rng(31)
    s = 0.6
    for _ in range(3):
        v = rng.uniform(-1.0, 1.0, 2)
        u = ball_profile_field(BALL, s)
        u_shift = ball_profile_field(Ball(BALL.center + v, 1.0), s)
        k = Kernel(N=2, s=s, anisotropy=Anisotropy.sectors([0.0, 1.3, np.pi], [0.8, 1.6]))
        x = np.array([0.2, -0.3])
        a = linear_op(k, u, x)
        b = linear_op(k, u_shift, x + v)
        assert abs(a.value - b.value) <= 2.0 * (a.error_estimate + b.error_estimate) + 1e-10


def test_scaling_covariance():
    # u_lam(y) = u(lam y) has L u_lam(x) = lam^{2s} (L u)(lam x)
    s, lam = 0.45, 1.7
    base = gaussian_field(2, [0.1, 0.2], 0.9)
    scaled = ScalarField(
        fn=lambda p: base(lam * p),
        N=2,
        name="scaled",
        support_radius=base.support_radius / lam,
    )
    k = Kernel(N=2, s=s)
    x = np.array([0.3, -0.1])
    a = linear_op(k, scaled, x)
    b = linear_op(k, base, lam * x)
    assert a.value == pytest.approx(lam ** (2 * s) * b.value, rel=1e-6)


def test_refinement_changes_stay_within_estimate():
    k = Kernel(N=2, s=0.55)
    for u in (gaussian_field(2, [0.2, 0.0], 0.8), windowed_quadratic_field(2, None, 1.5)):
        x = [0.25, 0.1]
        r0 = linear_op(k, u, x, DEFAULT_CONFIG)
        r1 = linear_op(k, u, x, DEFAULT_CONFIG.refined(1))
        assert abs(r1.value - r0.value) <= r0.error_estimate


def test_pv_undefined_off_smooth_set():
    u = dist_pow_field(BALL, -0.5)
    with pytest.raises(ValueError, match="PV undefined"):
        linear_op(Kernel(N=2, s=0.5), u, [1.0, 0.0])


def test_untailed_growth_rejected():
    bad = ScalarField(fn=lambda p: p[:, 0] ** 1.2, N=2, name="bad", growth=(1.0, 1.2))
    with pytest.raises(ValueError, match="not integrable"):
        linear_op(Kernel(N=2, s=0.5), bad, [0.1, 0.1])


# ------------------------------------------------------------ frac_laplacian


def test_ball_profile_harmonic_with_refinement_decay():
    u = ball_profile_field(BALL, 0.5)
    for x in ([0.3, 0.0], [0.0, 0.9]):
        errs = []
        for lev in range(2):
            r = frac_laplacian(u, x, 0.5, DEFAULT_CONFIG.refined(lev))
            assert abs(r.value) <= r.error_estimate
            errs.append(r.error_estimate)
        assert errs[1] <= errs[0] / 2.0


def test_gaussian_matches_laplacian_near_s_one():
    u = gaussian_field(2, [0.2, -0.1], 0.8)
    x = np.array([0.5, 0.3])
    r = frac_laplacian(u, x, 0.99)
    h = 1e-4
    lap = sum(
        (u.value(x + h * e) + u.value(x - h * e) - 2.0 * u.value(x)) / h**2
        for e in np.eye(2)
    )
    assert r.value == pytest.approx(lap, rel=0.05)


def test_zero_field_is_zero():
    r = frac_laplacian(constant_field(2, 0.0), [0.1, 0.1], 0.5)
    assert r.value == 0.0


# ------------------------------------------------------------------- pucci


def test_extremal_sandwich_over_class_members():
    rng = np.random.default_rng(32)
    u = windowed_quadratic_field(2, [0.1, -0.2], 1.8)
    s = 0.5
    members = [
        Kernel(2, s, Anisotropy.constant(0.5)),
        Kernel(2, s, Anisotropy.constant(2.0)),
        Kernel(2, s, Anisotropy.sectors([0.0, 0.9, 2.1, np.pi], [0.6, 1.9, 1.1])),
    ]
    for _ in range(3):
        x = rng.uniform(-0.4, 0.4, 2)
        lo = pucci_minus(u, x, BOUNDS, s).value
        hi = pucci_plus(u, x, BOUNDS, s).value
        assert lo <= hi
        for k in members:
            mid = linear_op(k, u, x).value
            assert lo - 1e-9 <= mid <= hi + 1e-9


def test_degenerate_bounds_collapse_to_linear():
    u = windowed_quadratic_field(2, None, 1.5)
    x = [0.2, -0.1]
    bb = EllipticityBounds(0.9, 0.9)
    kk = Kernel(N=2, s=0.6, anisotropy=Anisotropy.constant(0.9))
    ll = linear_op(kk, u, x).value
    assert pucci_plus(u, x, bb, 0.6).value == pytest.approx(ll, abs=1e-10)
    assert pucci_minus(u, x, bb, 0.6).value == pytest.approx(ll, abs=1e-10)


def test_indicator_pucci_minus_negative_with_diameter_rate():
    chi = indicator_field(BALL)
    rng = np.random.default_rng(33)
    pts = BALL.sample_interior(rng, 12, d_min=BALL.inradius / 20.0)
    s = 0.5
    vals = np.array([pucci_minus(chi, p, BOUNDS, s).value for p in pts])
    assert np.all(vals < 0.0)
    c_fit = np.min(-vals) * BALL.diameter ** (2 * s)
    assert c_fit > 0.0


# ------------------------------------------------------------------- isaacs


def test_isaacs_singleton_equals_linear():
    u = gaussian_field(2, [0.0, 0.1], 0.7)
    k = Kernel(2, 0.5, Anisotropy.constant(1.3))
    fam = KernelFamily({(0, 0): k}, EllipticityBounds(1.3, 1.3))
    x = [0.2, 0.3]
    assert isaacs_op(fam, u, x).value == pytest.approx(linear_op(k, u, x).value, abs=1e-12)


def test_isaacs_matches_brute_force_on_scaled_family():
    u = windowed_quadratic_field(2, [0.2, 0.1], 1.6)
    s = 0.5
    scales = {(0, 0): 0.5, (0, 1): 2.0, (1, 0): 1.0, (1, 1): 0.8}
    fam = KernelFamily(
        {ij: Kernel(2, s, Anisotropy.constant(c)) for ij, c in scales.items()},
        EllipticityBounds(0.5, 2.0),
    )
    x = [0.3, -0.2]
    base = linear_op(Kernel(2, s), u, x).value
    brute = min(max(scales[(i, j)] * base for j in (0, 1)) for i in (0, 1))
    assert isaacs_op(fam, u, x).value == pytest.approx(brute, rel=1e-10)


def test_isaacs_between_extremal_operators():
    u = gaussian_field(2, [0.1, 0.1], 0.9)
    s = 0.5
    fam = KernelFamily(
        {
            (0, 0): Kernel(2, s, Anisotropy.constant(0.7)),
            (0, 1): Kernel(2, s, Anisotropy.sectors([0.0, 1.5, np.pi], [0.5, 2.0])),
            (1, 0): Kernel(2, s, Anisotropy.constant(1.8)),
            (1, 1): Kernel(2, s, Anisotropy.constant(1.0)),
        },
        BOUNDS,
    )
    for x in ([0.0, 0.0], [0.4, 0.2]):
        v = isaacs_op(fam, u, x).value
        assert pucci_minus(u, x, BOUNDS, s).value - 1e-9 <= v
        assert v <= pucci_plus(u, x, BOUNDS, s).value + 1e-9


# ----------------------------------------------------------------- bilinear


def test_bilinear_constant_factor_vanishes():
    k = Kernel(N=2, s=0.5)
    r = bilinear_form(k, constant_field(2, 2.0), gaussian_field(2, None, 1.0), [0.1, 0.0])
    assert abs(r.value) <= 1e-12


def test_bilinear_diagonal_nonnegative():
    k = Kernel(N=2, s=0.5)
    f = gaussian_field(2, [0.3, 0.0], 0.8)
    r = bilinear_form(k, f, f, [0.2, 0.1])
    assert r.value >= 0.0


def test_product_rule():
    # L(fg) = f Lg + g Lf + 2 B(f,g) for smooth compactly supported factors
    k = Kernel(N=2, s=0.6, anisotropy=Anisotropy.sectors([0.0, 1.0, np.pi], [0.8, 1.5]))
    f = gaussian_field(2, [0.1, 0.2], 0.7)
    g = windowed_quadratic_field(2, [-0.2, 0.1], 2.0)
    x = [0.15, -0.05]
    lfg = linear_op(k, f * g, x)
    lf = linear_op(k, f, x)
    lg = linear_op(k, g, x)
    b = bilinear_form(k, f, g, x)
    lhs = lfg.value
    rhs = f.value(x) * lg.value + g.value(x) * lf.value + 2.0 * b.value
    tol = lfg.error_estimate + lf.error_estimate + lg.error_estimate + 2.0 * b.error_estimate
    assert abs(lhs - rhs) <= tol + 1e-10


def test_remark_decomposition_vanishes():
    # (p'.x') x_N^(s-1): the inner tangential integral cancels by symmetry,
    # so both the direct evaluation and the bilinear route go to zero
    s = 0.5
    hs = HalfSpaceBox.upper(2)
    prof = halfspace_profile_field(hs, s)
    lin = coordinate_field(2, 0)
    u62 = remark62_field(hs, [1.0], s)
    k = Kernel(N=2, s=s, include_normalizer=True)
    x = [0.3, 0.4]
    b = bilinear_form(k, prof, lin, x, product=u62)
    d = frac_laplacian(u62, x, s)
    assert abs(d.value) <= d.error_estimate
    assert abs(2.0 * b.value - d.value) <= 2.0 * b.error_estimate + d.error_estimate


# --------------------------------------------------------------- c_constant


def test_c_zero_closed_form():
    # c(0) = -(kernel mass below the boundary plane) < 0
    for s in (0.25, 0.5, 0.75):
        r = c_constant(Kernel(N=1, s=s), 0.0)
        assert r.value == pytest.approx(-1.0 / (2.0 * s), rel=1e-4)
        r2 = c_constant(Kernel(N=2, s=s), 0.0)
        assert r2.value == pytest.approx(-transverse_mass(2, s) / (2.0 * s), rel=1e-3)


def test_c_matches_1d_reduction_oracle():
    for s, tau in [(0.5, 0.3), (0.5, -0.7), (0.75, 0.9), (0.25, 0.2)]:
        got = c_constant(Kernel(N=1, s=s), tau)
        ref = c_tau_oracle_1d(s, tau)
        assert got.value == pytest.approx(ref, rel=2e-3, abs=2.0 * got.error_estimate)


def test_c_dimension_factor():
    # isotropic kernels: c in dimension N is the 1-d constant times the
    # transverse kernel mass, so zeros are dimension independent
    s, tau = 0.5, 0.3
    c1 = c_constant(Kernel(N=1, s=s), tau).value
    c2 = c_constant(Kernel(N=2, s=s), tau).value
    assert c2 == pytest.approx(transverse_mass(2, s) * c1, rel=1e-3)


def test_c_zeros_at_blowup_exponents():
    # d^(s-1) and d^s are annihilated on the half-space: c vanishes there
    for s in (0.25, 0.5, 0.75):
        k = Kernel(N=1, s=s)
        scale = max(abs(c_constant(k, 0.0).value), abs(c_constant(k, 2 * s - 0.01).value))
        assert abs(c_constant(k, s - 1.0).value) <= 1e-3 * scale
        assert abs(c_constant(k, s).value) <= 1e-3 * scale


def test_c_sign_pattern():
    # negative strictly between the zeros s-1 and s, positive outside;
    # this is the sign the comparison argument uses (c(tau) < 0 for the
    # small positive exponents it perturbs with)
    s = 0.5
    k = Kernel(N=1, s=s)
    for tau in (-0.3, 0.0, 0.25, 0.45):
        assert c_constant(k, tau).value < 0.0
    for tau in (-0.9, -0.6, 0.55, 0.8):
        assert c_constant(k, tau).value > 0.0


def test_c_domain_errors():
    k = Kernel(N=1, s=0.5)
    with pytest.raises(ValueError):
        c_constant(k, -1.0)
    with pytest.raises(ValueError):
        c_constant(k, 1.0)


def test_c_zonal_3d_runs():
    r = c_constant(Kernel(N=3, s=0.5), 0.3, QuadratureConfig(sphere_order=16))
    c1 = c_constant(Kernel(N=1, s=0.5), 0.3).value
    # transverse mass for N=3: int over R^2 of (1+|v|^2)^(-(3+2s)/2) dv
    mass, _ = quad(lambda t: 2 * np.pi * t * (1 + t * t) ** (-(3 + 1.0) / 2), 0, np.inf)
    assert r.value == pytest.approx(mass * c1, rel=5e-3)
