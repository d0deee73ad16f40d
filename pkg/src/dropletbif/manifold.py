"""Unstable-manifold branches grown from a fundamental domain, and vertical stable lines."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import ContractError, MapModel, eval_map
from .fixedpoints import Classification, FixedPointRecord

__all__ = [
    "ManifoldPolyline",
    "StableLine",
    "NotASaddleError",
    "seed_fundamental_domain",
    "grow_unstable",
    "trace_branch",
    "stable_line",
    "crossings_with_line",
    "excursion_count",
    "DEFAULT_NU",
    "DEFAULT_SPACING",
    "DEFAULT_CAP",
]

DEFAULT_NU = 1e-4
DEFAULT_SPACING = 1e-3
DEFAULT_CAP = 2_000_000
MAX_INSERT_PER_GAP = 64
MAX_REFINE_PASSES = 60
ESCAPE_BOUND = 1e6


class NotASaddleError(ContractError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ManifoldPolyline:
    """Ordered points of one branch, generation by generation.

    ``generation_of[i]`` is how many times the seed segment was mapped to produce
    point i; ``endpoint_arclengths[n]`` is the arclength of the far end of
    generation n.
    """

    points: np.ndarray
    arclengths: np.ndarray
    branch: str
    generations: int
    saddle: FixedPointRecord
    generation_of: np.ndarray
    endpoint_arclengths: tuple = ()
    truncated: bool = False
    escaped: bool = False
    # raw generations (each starting with the previous one's last point) for resuming growth
    _gens: tuple = field(default=(), repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.points)

    def generation(self, n: int) -> np.ndarray:
        return self.points[self.generation_of == n]

    def max_spacing(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(np.max(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


@dataclass(frozen=True)
class StableLine:
    x_hat: float
    saddle: FixedPointRecord


def _assemble(gens: list[np.ndarray], saddle, branch, truncated, escaped) -> ManifoldPolyline:
    chunks, labels = [], []
    for n, g in enumerate(gens):
        g = g if n == 0 else g[1:]  # first point repeats the previous generation's last
        chunks.append(g)
        labels.append(np.full(len(g), n, dtype=np.int32))
    pts = np.concatenate(chunks)
    lab = np.concatenate(labels)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    keep = np.concatenate([[True], seg > 0])
    pts, lab = pts[keep], lab[keep]
    arc = np.concatenate([[0.0], np.cumsum(seg[seg > 0])])
    ends = []
    for n in range(len(gens)):
        idx = np.nonzero(lab == n)[0]
        ends.append(float(arc[idx[-1]]) if len(idx) else (ends[-1] if ends else 0.0))
    return ManifoldPolyline(
        _frozen(pts), _frozen(arc), branch, len(gens) - 1, saddle, _frozen(lab),
        tuple(ends), truncated, escaped, tuple(gens),
    )


def seed_fundamental_domain(model: MapModel, saddle: FixedPointRecord, branch: str,
                            nu: float = DEFAULT_NU, n0: int = 16) -> ManifoldPolyline:
    """Points on the segment from p + εvᵘ to F(p + εvᵘ), the branch's first fundamental domain."""
    if saddle.classification is not Classification.SADDLE:
        raise NotASaddleError(f"not a saddle: {saddle.classification.value}")
    if branch not in ("left", "right"):
        raise ContractError("branch must be 'left' or 'right'")
    if not nu > 0:
        raise ContractError("nu must be positive")
    if n0 < 8:
        raise ContractError("n0 must be at least 8")
    lam = saddle.unstable_eigenvalue()
    v = saddle.unstable_direction()
    if (v[0] < 0) != (branch == "left"):
        v = -v
    if v[0] == 0:
        raise ContractError("unstable direction is vertical; left/right undefined")
    eps = nu * min(1.0, 1.0 / (abs(lam) - 1.0))
    a = saddle.location + eps * v
    b = eval_map(model, a)
    t = np.linspace(0.0, 1.0, n0)[:, None]
    seg = a + t * (b - a)
    seg[-1] = b
    return _assemble([seg], saddle, branch, False, False)


def _refine(model: MapModel, prev: np.ndarray, img: np.ndarray, h: float, budget: int):
    """Insert preimage points until consecutive images are at most h apart.

    Returns (prev, img, ok); ok is False when the point budget ran out. The
    budget counts the new generation plus every point added to ``prev``.
    """
    n_prev = len(prev)
    for _ in range(MAX_REFINE_PASSES):
        gaps = np.linalg.norm(np.diff(img, axis=0), axis=1)
        bad = np.nonzero(gaps > h)[0]
        if len(bad) == 0:
            return prev, img, True
        k = np.minimum(np.ceil(gaps[bad] / h).astype(int), MAX_INSERT_PER_GAP)
        n_new = int(np.sum(k - 1))
        if len(img) + (len(prev) - n_prev) + 2 * n_new > budget:
            return prev, img, False
        # fractions 1/k, ..., (k-1)/k inside each bad segment
        seg_of = np.repeat(bad, k - 1)
        offs = np.concatenate([np.arange(1, kk) / kk for kk in k])
        new_prev = prev[seg_of] + offs[:, None] * (prev[seg_of + 1] - prev[seg_of])
        new_img = eval_map(model, new_prev)
        order = np.argsort(np.concatenate([np.arange(len(prev), dtype=float),
                                           seg_of + offs]), kind="stable")
        prev = np.concatenate([prev, new_prev])[order]
        img = np.concatenate([img, new_img])[order]
    gaps = np.linalg.norm(np.diff(img, axis=0), axis=1)
    return prev, img, bool(np.all(gaps <= h))


def grow_unstable(model: MapModel, poly: ManifoldPolyline, target_generations: int,
                  spacing_max: float = DEFAULT_SPACING,
                  cap_points: int = DEFAULT_CAP) -> ManifoldPolyline:
    """Map the branch forward until it has ``target_generations`` generations.

    Wherever two consecutive images are more than ``spacing_max`` apart, points
    are interpolated in the previous generation (already finely resolved) and
    mapped forward, so the new points follow the curve rather than the chord.
    """
    if not spacing_max > 0:
        raise ContractError("spacing_max must be positive")
    gens = list(poly._gens)
    total = sum(len(g) for g in gens)
    truncated = escaped = False
    while len(gens) - 1 < target_generations:
        prev = gens[-1]
        img = eval_map(model, prev)
        if not np.all(np.isfinite(img)) or np.any(np.abs(img) > ESCAPE_BOUND):
            escaped = True
            break
        if len(img) > cap_points - total:
            truncated = True
            break
        prev, img, ok = _refine(model, prev, img, spacing_max, cap_points - total)
        if not ok:
            truncated = True
            break
        if not np.all(np.isfinite(img)) or np.any(np.abs(img) > ESCAPE_BOUND):
            escaped = True
            break
        total += len(img) + len(prev) - len(gens[-1])
        gens[-1] = prev
        gens.append(img)
    return _assemble(gens, poly.saddle, poly.branch, truncated, escaped)


def trace_branch(model: MapModel, saddle: FixedPointRecord, branch: str, generations: int,
                 nu: float = DEFAULT_NU, n0: int = 16, spacing_max: float = DEFAULT_SPACING,
                 cap_points: int = DEFAULT_CAP) -> ManifoldPolyline:
    seed = seed_fundamental_domain(model, saddle, branch, nu, n0)
    return grow_unstable(model, seed, generations, spacing_max, cap_points)


def stable_line(model: MapModel, saddle: FixedPointRecord) -> StableLine:
    """The vertical stable manifold x = x̂ of a critical-point-type saddle."""
    x_hat = saddle.x
    if abs(float(model.potential.d1(x_hat))) > 1e-10:
        raise ContractError("no closed-form stable manifold: saddle is not of critical-point type")
    s = saddle.location.copy()
    s[1] += 0.1
    for _ in range(200):
        s = eval_map(model, s)
    if abs(s[0] - x_hat) > 1e-9 or np.linalg.norm(s - saddle.location) > 1e-6:
        raise ContractError("orbit on the candidate line does not converge to the saddle")
    return StableLine(float(x_hat), saddle)


def crossings_with_line(poly, line) -> list[tuple[int, np.ndarray, int]]:
    """Transverse crossings of x = x̂ by polyline segments: (segment index, point, direction)."""
    pts = poly.points if isinstance(poly, ManifoldPolyline) else np.asarray(poly, dtype=float)
    x_hat = line.x_hat if isinstance(line, StableLine) else float(line)
    if len(pts) < 2:
        return []
    d = pts[:, 0] - x_hat
    idx = np.nonzero(d[:-1] * d[1:] < 0)[0]
    out = []
    for i in idx:
        t = d[i] / (d[i] - d[i + 1])
        p = pts[i] + t * (pts[i + 1] - pts[i])
        p[0] = x_hat
        out.append((int(i), p, 1 if pts[i + 1, 0] > pts[i, 0] else -1))
    return out


def excursion_count(mask) -> int:
    """Number of maximal runs of True in a boolean sequence."""
    m = np.asarray(mask, dtype=bool)
    if m.size == 0:
        return 0
    return int(m[0]) + int(np.count_nonzero(m[1:] & ~m[:-1]))
