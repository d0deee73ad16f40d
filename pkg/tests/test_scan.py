import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dropletbif import ContractError, MapModel, Variant, WavePotential, ns_threshold, symmetry_conjugate
from dropletbif.io import dumps_scan
from dropletbif.scan import (
    ScanConfig,
    ScanEvent,
    cell_setup,
    centerset_spread,
    detect_events,
    lyapunov_spectrum,
    ring_thickness,
    rotation_number,
    run_orbit,
    sigma_grid,
    verify_assumptions,
)

X_M = -1.7900573686880522585  # zero of Ψ in the left cell, mpmath
FAST = ScanConfig(n_transient=2000, n_keep=2000, generations=20, cap_points=30_000)


def test_run_orbit_bounded_and_escaping(gilet):
    d = run_orbit(gilet, [X_M + 0.05, 0.0], 500, 300, center=(X_M, 0.0))
    assert d.attractor_sample.shape == (300, 2) and not d.escaped
    (x0, x1), (y0, y1) = d.bounding_box
    assert x0 <= d.attractor_sample[:, 0].min() and x1 >= d.attractor_sample[:, 0].max()
    assert d.rotation_number is not None and d.radial_spread is not None
    # x = x̂ is invariant up to the rounding of Ψ′(x̂), which the saddle amplifies
    d = run_orbit(gilet, [-math.pi / 2, 5.0], 0, 20)
    assert np.allclose(d.attractor_sample[:, 0], -math.pi / 2, atol=1e-9, rtol=0)
    box = (np.array([-3.0, -1.0]), np.array([0.0, 1.0]))
    d = run_orbit(gilet, [-math.pi / 2, 5.0], 0, 100, bounds=box)
    assert d.escaped and len(d.attractor_sample) == 0
    with pytest.raises(ContractError):
        run_orbit(gilet, [0.0, 0.0, 0.0], 0, 10)
    with pytest.raises(ContractError):
        run_orbit(gilet, [0.0, 0.0], -1, 10)


def test_lyapunov_at_stable_focus():
    # below the Neimark-Sacker threshold the orbit settles on the focus, whose
    # complex pair has modulus √det, so both exponents equal ½ log det
    m = MapModel(Variant.GILET, 0.5, 0.3)
    d1 = float(m.potential.d1(X_M))
    expected = 0.5 * math.log(m.mu * (1 + m.sigma * d1 * d1))
    spec = lyapunov_spectrum(m, [X_M + 1e-3, 0.0], 20_000)
    assert spec == pytest.approx([expected, expected], abs=1e-4)


def test_lyapunov_saddle_line():
    # on x = x̂ the orbit converges to the saddle; exponents are log|λu|, log|λs|
    from dropletbif import enumerate_fixed_points
    m = MapModel(Variant.GILET, 0.5, 0.45)
    sad = enumerate_fixed_points(m, (-1.58, -1.56))[0]
    mods = sorted(abs(sad.eigenvalues), reverse=True)
    spec = lyapunov_spectrum(m, [-math.pi / 2, 0.3], 5000)
    assert spec == pytest.approx([math.log(mods[0]), math.log(mods[1])], abs=1e-6)


def test_lyapunov_three_d_diagonal_exponent():
    m = MapModel(Variant.DIAGONAL_3D, 0.5, 0.45)
    spec = lyapunov_spectrum(m, [X_M + 0.05, 0.0, 0.5], 5000)
    assert math.log(0.8) in [pytest.approx(v, abs=1e-9) for v in spec]


def test_lyapunov_escape_and_contract(gilet):
    from dropletbif.kernels import WavePotential as WP

    class Cubic(WP):
        def psi(self, x):
            return x ** 3

        def d1(self, x):
            return 3 * x ** 2

        def d2(self, x):
            return 6 * x
    m = MapModel(Variant.GILET, 0.5, 0.45, Cubic())
    assert lyapunov_spectrum(m, [3.0, 3.0], 2000) is None
    assert lyapunov_spectrum(m, [3.0, 3.0], 2000, return_logdet=True) == (None, None)
    with pytest.raises(ContractError):
        lyapunov_spectrum(gilet, [X_M, 0.1], 999)


@settings(max_examples=15)
@given(sigma=st.floats(0.3, 0.75), dx=st.floats(0.01, 0.2))
def test_lyapunov_sum_is_mean_log_det(sigma, dx):
    m = MapModel(Variant.GILET, 0.5, sigma)
    spec, logdet = lyapunov_spectrum(m, [X_M + dx, 0.0], 3000, return_logdet=True)
    assert sum(spec) == pytest.approx(logdet, abs=1e-9)


def test_rotation_number_of_rigid_rotation():
    k = np.arange(500)
    for w in (0.1, -0.1, 0.37):
        pts = np.column_stack([2 + np.cos(2 * math.pi * w * k), 3 + np.sin(2 * math.pi * w * k)])
        assert rotation_number(None, pts, (2.0, 3.0)) == pytest.approx(w if w < 0.5 else w - 1)
    # reflecting the plane reverses the sense of rotation
    pts = np.column_stack([-1.8 + 0.1 * np.cos(0.3 * k), 0.1 * np.sin(0.3 * k)])
    c = (-1.8, 0.0)
    w = rotation_number(None, pts, c)
    assert w == pytest.approx(0.3 / (2 * math.pi), abs=1e-9)
    assert rotation_number(None, symmetry_conjugate(pts), symmetry_conjugate(c)) == pytest.approx(-w, abs=1e-12)
    pts = pts - c
    with pytest.raises(ContractError):
        rotation_number(None, pts[:50], (0, 0))
    with pytest.raises(ContractError):
        rotation_number(None, np.vstack([pts, [[0.0, 0.0]]]), (0, 0))


def test_ring_measures():
    th = np.linspace(0, 2 * math.pi, 4000, endpoint=False)
    ellipse = np.column_stack([3 * np.cos(th), np.sin(th)])
    assert ring_thickness(ellipse, (0, 0)) < 1e-2
    assert centerset_spread(ellipse, (0, 0)) == pytest.approx(2.0)
    rng = np.random.default_rng(1)
    r = rng.uniform(1.0, 1.5, 4000)
    band = np.column_stack([r * np.cos(th), r * np.sin(th)])
    assert ring_thickness(band, (0, 0)) > 0.3
    assert ring_thickness(band[:1], (0, 0)) == 0.0


def test_ring_just_above_ns():
    m = MapModel(Variant.GILET, 0.5, 0.4)
    s_ns = ns_threshold(m, X_M)
    m = MapModel(Variant.GILET, 0.5, s_ns + 2e-3)
    d = run_orbit(m, [X_M + 1e-2, 0.0], 100_000, 20_000, center=(X_M, 0.0))
    r = np.hypot(*(d.attractor_sample - [X_M, 0.0]).T)
    assert r.min() > 0.01  # left the focus
    assert ring_thickness(d.attractor_sample, (X_M, 0.0)) < 1e-2 * 2 * r.max()
    assert abs(d.rotation_number) > 0


def test_sigma_grid():
    g = sigma_grid((0.3, 0.35), 1e-2)
    assert g == [0.3, 0.31, 0.32, 0.33, 0.34, 0.35]
    assert sigma_grid((0.3, 0.355), 1e-2)[-1] == 0.355
    for bad in [((0.0, 0.5), 1e-2), ((0.5, 0.4), 1e-2), ((0.3, 1.0), 1e-2), ((0.3, 0.4), 1e-6)]:
        with pytest.raises(ContractError):
            sigma_grid(*bad)


def test_config_and_event_validation():
    for kw in ({"n_keep": 10}, {"generations": 0}, {"nu": 0.0}, {"cap_points": 5},
               {"workers": 0}, {"cell": "middle"}, {"alpha": -1.0}):
        with pytest.raises(ContractError):
            ScanConfig(**kw)
    with pytest.raises(ContractError):
        ScanEvent("bogus", 0.1, 0.2)
    with pytest.raises(ContractError):
        ScanEvent("crisis", 0.2, 0.2)
    assert ScanEvent("crisis", 0.1, 0.2, {"unresolved": True}).unresolved


def test_cell_setup_geometry():
    g = cell_setup(Variant.GILET, 0.5)
    assert g.saddle_x == pytest.approx(-math.pi / 2, abs=1e-12)
    assert g.center[0] == pytest.approx(X_M, abs=1e-12)
    r = cell_setup(Variant.GILET, 0.5, config=ScanConfig(cell="right"))
    assert r.center[0] == pytest.approx(-math.pi - X_M, abs=1e-12)
    m = cell_setup(Variant.MODIFIED, 0.5)
    assert 0 < m.saddle_x < 0.4 and m.partner_x == -m.saddle_x and m.center == (0.0, 0.0)
    with pytest.raises(ContractError):
        cell_setup(Variant.COUPLED_3D, 0.5)


def test_verify_assumptions_saddle_checks():
    rep = verify_assumptions(Variant.GILET, 0.5, [0.3, 0.45, 0.6])
    s = rep["saddle"]
    assert s["gaps"] == [] and rep["containment"]["inside"]
    assert s["kappa_s"] == pytest.approx(0.5, abs=1e-12)  # stable multiplier on the line is μ
    assert s["kappa_u"] > 1
    rep = verify_assumptions(Variant.MODIFIED, 0.5, [0.1])
    assert rep["quadrant"]["first_quadrant"]
    with pytest.raises(ContractError):
        verify_assumptions(Variant.GILET, 0.5, [])


@pytest.fixture(scope="module")
def small_scan():
    return detect_events("gilet", 0.5, (0.35, 0.40), 1e-2, FAST, timestamp="T")


def test_small_scan_finds_ns(small_scan):
    ns = small_scan.events_of("neimark-sacker")
    assert len(ns) == 1
    closed = ns_threshold(MapModel(Variant.GILET, 0.5, 0.4), X_M)
    assert ns[0].sigma_low <= closed <= ns[0].sigma_high
    assert ns[0].sigma_high - ns[0].sigma_low <= 1e-6
    assert [d.sigma for d in small_scan.diagnostics] == list(small_scan.sigma_grid)
    assert not small_scan.unresolved


def test_ns_bracket_stable_under_grid_refinement(small_scan):
    fine = detect_events("gilet", 0.5, (0.35, 0.40), 5e-3, FAST, timestamp="T")
    a = small_scan.events_of("neimark-sacker")[0]
    b = fine.events_of("neimark-sacker")[0]
    assert max(a.sigma_low, b.sigma_low) <= min(a.sigma_high, b.sigma_high)


def test_scan_is_deterministic(small_scan):
    again = detect_events("gilet", 0.5, (0.35, 0.40), 1e-2, FAST, timestamp="T")
    assert dumps_scan(again) == dumps_scan(small_scan)


def test_scan_with_workers_matches_serial(small_scan):
    cfg = ScanConfig(n_transient=2000, n_keep=2000, generations=20, cap_points=30_000, workers=2)
    par = detect_events("gilet", 0.5, (0.35, 0.40), 1e-2, cfg, timestamp="T")
    assert dumps_scan(par) == dumps_scan(small_scan)


def test_mirror_cell_agrees_before_chaos():
    rng = (0.40, 0.48)
    left = detect_events("gilet", 0.5, rng, 2e-2, FAST, timestamp="T")
    right = detect_events("gilet", 0.5, rng, 2e-2, ScanConfig(
        n_transient=2000, n_keep=2000, generations=20, cap_points=30_000, cell="right"), timestamp="T")
    for a, b in zip(left.diagnostics, right.diagnostics):
        assert a.flip_count == b.flip_count
        assert a.lyapunov == pytest.approx(b.lyapunov, abs=1e-6)
        assert a.rotation_number == pytest.approx(-b.rotation_number, abs=1e-6)


def test_scan_rejects_bad_inputs():
    with pytest.raises(ContractError):
        detect_events("gilet", 1.2, (0.3, 0.4), 1e-2, FAST)
    with pytest.raises(ValueError):
        detect_events("not-a-map")


def test_circle_regime_rotation_sign_and_delta():
    cfg = ScanConfig(n_transient=10_000, n_keep=5000, generations=20, cap_points=30_000)
    r = detect_events("gilet", 0.5, (0.37, 0.44), 1e-2, cfg, timestamp="T")
    rot = r.assumption_report["rotation"]
    assert rot["constant_in_circle_regime"] and rot["circle_regime_sign"] in (-1, 1)
    circle = [d for d in r.diagnostics if d.center_modulus > 1 and abs(d.lyapunov[0]) <= 1e-3]
    assert len(circle) >= 5 and all(d.rotation_number != 0 for d in circle)
    delta = r.assumption_report["delta"]
    assert delta["nonincreasing"], delta["violations"]
