import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from dropletbif import (
    ContractError,
    MapModel,
    Variant,
    WavePotential,
    crossings_with_line,
    enumerate_fixed_points,
    eval_map,
    grow_unstable,
    seed_fundamental_domain,
    stable_line,
    symmetry_conjugate,
)
from dropletbif.fixedpoints import fixed_point_record
from dropletbif.manifold import NotASaddleError, excursion_count, trace_branch
from dropletbif.scan import run_orbit

from conftest import X_HAT

NU = 1e-4
H = 1e-3


def saddle_at(m, x=X_HAT):
    recs = enumerate_fixed_points(m, (x - 1e-3, x + 1e-3))
    return recs[0]


@pytest.fixture(scope="module")
def m45():
    return MapModel(Variant.GILET, 0.5, 0.45)


@pytest.fixture(scope="module")
def left45(m45):
    return trace_branch(m45, saddle_at(m45), "left", 60)


def test_seed_geometry(m45):
    sad = saddle_at(m45)
    lam = sad.unstable_eigenvalue()
    for branch in ("left", "right"):
        seed = seed_fundamental_domain(m45, sad, branch, NU, 16)
        pts = seed.points
        assert len(pts) == 16
        if branch == "left":
            assert np.all(pts[:, 0] < X_HAT)
        else:
            assert np.all(pts[:, 0] > X_HAT)
        first = pts[0] - sad.location
        assert np.linalg.norm(first) <= NU * (1 + 1e-12)
        v = sad.unstable_direction()
        assert abs(abs(first @ v) - np.linalg.norm(first)) < 1e-15
        assert seed.arclengths[0] == 0.0
        assert seed.arclengths[-1] <= NU * lam
        # the image of the last seed point continues the straight segment
        d = (pts[-1] - pts[0]) / np.linalg.norm(pts[-1] - pts[0])
        nxt = eval_map(m45, pts[-1]) - pts[0]
        assert abs(nxt[0] * d[1] - nxt[1] * d[0]) <= 10 * NU ** 2


def test_seed_rejects_non_saddles(m45):
    centre = [r for r in enumerate_fixed_points(m45, (-1.9, -1.7))][0]
    with pytest.raises(NotASaddleError):
        seed_fundamental_domain(m45, centre, "left")
    with pytest.raises(ContractError):
        seed_fundamental_domain(m45, saddle_at(m45), "left", n0=4)


def test_polyline_invariants(left45):
    p = left45
    assert np.all(np.diff(p.arclengths) > 0)
    assert p.max_spacing() <= H
    assert not p.truncated and not p.escaped
    assert p.generations == 60
    for n in range(p.generations + 1):
        g = p.points[: np.nonzero(p.generation_of == n)[0][-1] + 1]
        assert np.max(np.linalg.norm(np.diff(g, axis=0), axis=1)) <= H
    with pytest.raises(ValueError):
        p.points[0, 0] = 1.0


def test_endpoint_arclength_nondecreasing(left45):
    e = np.array(left45.endpoint_arclengths)
    assert np.all(np.diff(e) >= 0)
    assert e[-1] > 100 * e[0]


def test_generations_map_onto_each_other(m45, left45):
    tree = cKDTree(left45.points)
    for n in (0, 5, 20, 59):
        img = eval_map(m45, left45.generation(n))
        d, _ = tree.query(img)
        assert d.max() <= H


def test_branch_accumulates_on_attractor(m45, left45):
    sample = run_orbit(m45, [-1.79 + 1e-3, 0.0], 20_000, 5_000).attractor_sample
    late = left45.points[left45.generation_of >= 50]
    d1 = cKDTree(sample).query(late)[0].max()
    d2 = cKDTree(late).query(sample)[0].max()
    assert max(d1, d2) <= 2 * H


def test_branch_symmetry(m45, left45):
    right = trace_branch(m45, saddle_at(m45), "right", 30)
    left = left45.points[left45.generation_of <= 30]
    mirrored = symmetry_conjugate(left)
    d1 = cKDTree(right.points).query(mirrored)[0].max()
    d2 = cKDTree(mirrored).query(right.points)[0].max()
    assert max(d1, d2) <= 2 * H


def test_growth_resumes(m45):
    sad = saddle_at(m45)
    seed = seed_fundamental_domain(m45, sad, "left")
    once = grow_unstable(m45, seed, 20)
    twice = grow_unstable(m45, grow_unstable(m45, seed, 10), 20)
    assert np.array_equal(once.points, twice.points)


def test_truncation_and_escape(m45):
    sad = saddle_at(m45)
    p = trace_branch(m45.with_sigma(0.6), saddle_at(m45.with_sigma(0.6)), "left", 40, cap_points=3000)
    assert p.truncated and len(p) <= 3000 and p.generations < 40

    class Steep(WavePotential):
        def psi(self, x):
            return super().psi(x) + 50 * (x - X_HAT) ** 3

        def d1(self, x):
            return super().d1(x) + 150 * (x - X_HAT) ** 2

        def d2(self, x):
            return super().d2(x) + 300 * (x - X_HAT)
    m = MapModel(Variant.GILET, 0.5, 0.45, Steep())
    rec = fixed_point_record(m, sad.location, "critical")
    q = trace_branch(m, rec, "right", 40)
    assert q.escaped and np.all(np.isfinite(q.points))


def test_invariant_line_containment(m45):
    s = np.array([X_HAT, 0.7])
    for _ in range(200):
        s = eval_map(m45, s)
        assert abs(s[0] - X_HAT) <= 1e-12


def test_stable_line(m45):
    sad = saddle_at(m45)
    line = stable_line(m45, sad)
    assert line.x_hat == X_HAT
    other = MapModel(Variant.GILET, 0.5, 0.2)
    assert stable_line(other, saddle_at(other)).x_hat == line.x_hat
    delta, n = 1e-3, 20
    s = sad.location + [0.0, delta]
    for _ in range(n):
        s = eval_map(m45, s)
    ratio = np.linalg.norm(s - sad.location) / (m45.mu ** n * delta)
    assert abs(ratio - 1) < 0.05
    zero = fixed_point_record(m45, np.array([-1.7900573686880519, 0.0]), "zero")
    with pytest.raises(ContractError):
        stable_line(m45, zero)


def test_crossings_with_line(m45):
    assert crossings_with_line(np.array([[-2.0, 0.0], [-1.8, 0.1], [-1.6, 0.3]]), X_HAT) == []
    d = 1e-3
    out = crossings_with_line(np.array([[X_HAT - d, 0.2], [X_HAT + d, 0.2]]), X_HAT)
    assert len(out) == 1
    i, p, direction = out[0]
    assert i == 0 and direction == 1
    assert p == pytest.approx([X_HAT, 0.2])


def test_crossing_parity_changes_by_tangency():
    counts = []
    for s in (0.5037, 0.50376, 0.50378):
        m = MapModel(Variant.GILET, 0.5, s)
        p = trace_branch(m, saddle_at(m), "left", 40, cap_points=400_000)
        assert not p.truncated
        counts.append(len(crossings_with_line(p, X_HAT)))
    assert counts[0] == 0 and counts[1] > 0
    assert all((b - a) % 2 == 0 for a, b in zip(counts, counts[1:]))


def test_excursion_count():
    assert excursion_count([]) == 0
    assert excursion_count([False, False]) == 0
    assert excursion_count([True, True, False, True]) == 2
    assert excursion_count([False, True, True, True]) == 1
