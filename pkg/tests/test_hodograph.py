import numpy as np
import pytest

from gcflab.errors import FrameError
from gcflab.graph2d import pressure_state
from gcflab.hodograph import (AnalyticSource, SnapshotSource, SPoint,
                              analyze_patches, build_patch, coefficients,
                              ellipticity_check, holder_seminorm, local_frame,
                              patch_seminorms, pde_residual, s_distance)
from gcflab.params import derive_exponents


def analytic_source(func, t0=0.0, nt=5, span=0.2):
    return AnalyticSource(func, np.linspace(t0 - span, t0, nt))


def test_s_distance_examples():
    assert s_distance(SPoint(1, 0, 0), SPoint(4, 0, 0)) == pytest.approx(1.0)
    assert s_distance(SPoint(0, 0, 0), SPoint(0, 1, 1)) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        s_distance(SPoint(-1, 0, 0), SPoint(0, 0, 0))


def test_s_distance_metric_properties():
    rng = np.random.default_rng(5)
    pts = [SPoint(z, y, t) for z, y, t in
           np.column_stack([rng.random(30) * 2, rng.random(30) * 4 - 2,
                            rng.random(30)])]
    for a in pts[:10]:
        assert s_distance(a, a) == 0.0
        for b in pts[10:20]:
            assert s_distance(a, b) == pytest.approx(s_distance(b, a))
            for c in pts[20:]:
                assert s_distance(a, c) <= (s_distance(a, b)
                                            + s_distance(b, c) + 1e-12)


def test_identity_chart():
    # g = x - 0.5: h(z, y, t) = 0.5 + z exactly, but the chart is
    # degenerate (flat level lines, K_h = 0)
    p = derive_exponents(1.0)
    src = analytic_source(lambda x, y, t: x - 0.5)
    frame = local_frame(src, (0.5, 0.0), p, c_min=0.05)
    assert frame.angle == pytest.approx(0.0)
    patch = build_patch(src, frame, p, nz=9, ny=9)
    assert patch.valid.all()
    zz = np.broadcast_to(patch.z[None, :, None], patch.h.shape)
    np.testing.assert_allclose(patch.h, 0.5 + zz, atol=1e-11)
    co = coefficients(patch, p)
    assert np.all(co.degenerate[co.valid])
    rep = ellipticity_check(patch, p, co)
    assert not rep.passed
    assert rep.degenerate_nodes > 0


@pytest.mark.parametrize("theta_cfg", [1.0, 1.5])
def test_parabolic_chart_coefficients(theta_cfg):
    # g = x + y^2  =>  h = z - y^2: a11 = 2, a12 = 0, a22 = theta, K_h = 2 theta
    alpha = 1.0 if theta_cfg == 1.0 else 0.75
    p = derive_exponents(alpha)
    src = analytic_source(lambda x, y, t: x + y * y)
    frame = local_frame(src, (1e-9, 0.0), p) if False else None
    # interface {g=0} passes through the origin; probe at x0 = 0.5 instead
    src = analytic_source(lambda x, y, t: x - 0.5 + y * y)
    frame = local_frame(src, (0.5, 0.0), p, c_min=0.05)
    patch = build_patch(src, frame, p, nz=11, ny=11)
    co = coefficients(patch, p)
    sel = co.valid
    yy = np.broadcast_to(patch.y[None, None, :], patch.h.shape)
    zz = np.broadcast_to(patch.z[None, :, None], patch.h.shape)
    np.testing.assert_allclose(patch.h[sel], (0.5 + zz - yy ** 2)[sel],
                               atol=1e-10)
    np.testing.assert_allclose(co.a11[sel], 2.0, atol=1e-6)
    np.testing.assert_allclose(co.a12[sel], 0.0, atol=1e-6)
    np.testing.assert_allclose(co.a22[sel], p.theta, atol=1e-6)
    np.testing.assert_allclose(co.k_h[sel], 2.0 * p.theta, atol=1e-6)
    rep = ellipticity_check(patch, p, co)
    if alpha == 1.0:  # eigenvalues {2, theta=1}
        assert rep.lambda_min == pytest.approx(1.0, abs=1e-6)
        assert rep.lambda_max == pytest.approx(2.0, abs=1e-6)
    assert rep.passed


def test_concave_chart_fails_ellipticity():
    # g concave in y: a11 = -h_yy = -2 < 0
    p = derive_exponents(1.0)
    src = analytic_source(lambda x, y, t: x - 0.5 - y * y)
    frame = local_frame(src, (0.5, 0.0), p, c_min=0.05)
    patch = build_patch(src, frame, p, nz=9, ny=9)
    rep = ellipticity_check(patch, p)
    assert not rep.passed
    assert np.isnan(rep.lambda_min) or rep.lambda_min <= 0.0


def test_local_frame_rotations():
    p = derive_exponents(1.0)
    src = analytic_source(lambda x, y, t: np.hypot(x, y) - 1.0)
    f1 = local_frame(src, (1.0, 0.0), p, c_min=0.1)
    assert f1.angle == pytest.approx(0.0)
    f2 = local_frame(src, (0.0, 1.0), p, c_min=0.1)
    assert f2.angle == pytest.approx(np.pi / 2)
    assert f2.c_measured > 0.5
    # rotation maps the frame's first axis onto the interface direction
    gx, gy = f2.to_global(1.0, 0.0)
    assert (gx, gy) == pytest.approx((0.0, 1.0), abs=1e-12)


def test_local_frame_refusal():
    # gradient along e1 far below the required band: refuse
    p = derive_exponents(1.0)
    src = analytic_source(lambda x, y, t: 0.01 * (x - 0.5) + 0.5 * y * y + 0.2)
    with pytest.raises(FrameError):
        local_frame(src, (0.5, 0.0), p, c_min=0.2)
    with pytest.raises(FrameError):
        local_frame(src, (0.0, 0.0), p)  # origin has no direction


def test_chart_reproduces_interface_position():
    # moving interface: g = (x - 0.2 t) - 0.5 + y^2 has its zero level at
    # x = 0.5 + 0.2 t - y^2; h(0, y, t) must reproduce it
    p = derive_exponents(1.0)
    src = analytic_source(lambda x, y, t: x - 0.2 * t - 0.5 + y * y)
    frame = local_frame(src, (0.5, 0.0), p, c_min=0.05)
    patch = build_patch(src, frame, p, nz=9, ny=9)
    for kt, t in enumerate(patch.times):
        for jy, y in enumerate(patch.y):
            if patch.valid[kt, 0, jy]:
                assert patch.h[kt, 0, jy] == pytest.approx(
                    0.5 + 0.2 * t - y ** 2, abs=1e-10)


@pytest.mark.parametrize("alpha", [1.0, 0.75])
def test_manufactured_solution_residual(alpha):
    # h = x0 + a z - b y^2 + c t: linear/quadratic, so the patch stencils are
    # exact and the discrete residual must match the analytic source term
    params = derive_exponents(alpha)
    a, b, cdrift, x0 = 2.0, 0.5, -0.3, 1.0
    src = analytic_source(lambda x, y, t: (x - x0 + b * y * y - cdrift * t) / a)
    frame = local_frame(src, (x0, 0.0), params, c_min=0.05)
    patch = build_patch(src, frame, params, nz=25, ny=25)
    co = coefficients(patch, params)
    res, res_alt, valid = pde_residual(patch, params, co)
    q = (4 * alpha - 1) / 2
    zz = patch.z[None, :, None]
    yy = patch.y[None, None, :]
    kh = 2 * params.theta * a * b
    jfac = zz ** (2 * (params.beta - 1)) + a * a \
        + zz ** (2 * (params.beta - 1)) * 4 * b * b * yy * yy
    source = cdrift + kh ** alpha / jfac ** q
    assert np.max(np.abs((res - source)[valid])) <= 1e-8
    if alpha == 1.0:  # the two denominator groupings coincide at alpha = 1
        np.testing.assert_allclose(res_alt[valid], res[valid], rtol=1e-10)


def test_residual_flags_static_nonsolution():
    # static g with curved level sets: h_t = 0 but K_h > 0, so the residual
    # is strictly positive (the operator correctly rejects non-solutions)
    p = derive_exponents(1.0)
    src = analytic_source(lambda x, y, t: x - 0.5 + 0.5 * y * y)
    frame = local_frame(src, (0.5, 0.0), p, c_min=0.05)
    patch = build_patch(src, frame, p, nz=11, ny=11)
    res, _, valid = pde_residual(patch, p)
    assert valid.any()
    assert np.nanmin(res[valid]) > 0.0


def test_holder_seminorm_basics():
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.random(200), rng.random(200), rng.random(200)])
    const = np.ones(200)
    assert holder_seminorm(const, pts, 0.5) == 0.0
    with pytest.raises(ValueError):
        holder_seminorm(const, pts, 1.5)
    # u = sqrt(z) with gamma = 1/2: |u1-u2| / s^(1/2) finite on the sample,
    # equal to a direct evaluation over the same seeded pairs
    u = np.sqrt(pts[:, 0])
    v1 = holder_seminorm(u, pts, 0.5, n_pairs=500, seed=3)
    v2 = holder_seminorm(u, pts, 0.5, n_pairs=500, seed=3)
    assert v1 == v2 > 0.0
    assert np.isfinite(v1)


def test_patch_seminorms_fields_and_stability():
    p = derive_exponents(1.0)
    src = analytic_source(lambda x, y, t: (x - 1.0 + 0.4 * y * y - 0.2 * t) / 1.5)
    frame = local_frame(src, (1.0, 0.0), p, c_min=0.05)
    patch = build_patch(src, frame, p, nz=15, ny=15)
    sem1 = patch_seminorms(patch, p, gamma=0.5, n_pairs=2000, seed=1)
    sem2 = patch_seminorms(patch, p, gamma=0.5, n_pairs=4000, seed=1)
    assert set(sem1) == {"h_z", "h_y", "h_t", "z_h_zz", "z32_h_zy", "h_yy"}
    for name in sem1:
        assert np.isfinite(sem1[name])
        # pair-sample doubling keeps each meaningful seminorm within 20%
        # (fields at round-off scale on this linear chart are excluded)
        if sem1[name] > 1e-9:
            assert 0.8 * sem1[name] <= sem2[name] <= 1.2 * sem1[name]


def test_snapshot_source_roundtrip(bench2d):
    scen, traj = bench2d
    params = scen.params()
    pstates = traj.pressures()
    results = analyze_patches(pstates, params, n_targets=2)
    ok = [e for e in results if "frame_error" not in e]
    assert len(ok) == 2
    for e in ok:
        assert e["patch"].roundtrip_max <= 1e-10
        assert e["ellipticity"].passed
        assert e["ellipticity"].lambda_min > 0
        assert e["ellipticity"].b1t_min > 0
        assert np.isfinite(e["residual_sup"])
