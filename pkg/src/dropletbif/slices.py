"""Orientation-flipping slice regions next to a vertical stable line.

A point q beside the line x = x̂ is in the slice when its image lands on the
other side of (or on) the line. The slice boundary is the zero set of the flip
functional x − σΨ′(x)y − x̂, i.e. the curve y = (x − x̂)/(σΨ′(x)), which
starts from a cusp at height 1/(σΨ″(x̂)) on the line itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .kernels import ContractError, MapModel, eval_map, jacobian_det
from .fixedpoints import find_critical_points

__all__ = [
    "SliceRegion",
    "PoleError",
    "DegenerateCuspError",
    "make_slice",
    "slice_boundary",
    "boundary_y",
    "cusp_height",
    "in_slice",
    "det_sign",
    "distance_to_slice",
    "boundary_points",
]

LINE_TOL = 1e-10
BOUNDARY_RESOLUTION = 1e-4


class PoleError(ContractError):
    pass


class DegenerateCuspError(ContractError):
    pass


@dataclass(frozen=True)
class SliceRegion:
    x_hat: float
    sigma: float
    side: str  # "left" or "right"
    cusp_y: float
    width: float
    above: bool  # slice opens upward from the cusp

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ContractError("side must be 'left' or 'right'")
        if not self.width > 0:
            raise ContractError("width must be positive")

    @property
    def sign(self) -> int:
        return -1 if self.side == "left" else 1


def _check_line(model: MapModel, x_hat: float):
    if abs(float(model.potential.d1(x_hat))) > LINE_TOL:
        raise ContractError(f"Ψ′({x_hat}) is not zero: x = {x_hat} is not a stable line")


def cusp_height(model: MapModel, x_hat: float) -> float:
    """Limit of (x − x̂)/(σΨ′(x)) as x → x̂, i.e. 1/(σΨ″(x̂))."""
    _check_line(model, x_hat)
    d2 = float(model.potential.d2(x_hat))
    if d2 == 0.0:
        raise DegenerateCuspError("Ψ″(x̂) = 0: degenerate cusp")
    return 1.0 / (model.sigma * d2)


def boundary_y(model: MapModel, x_hat: float, x):
    """Vectorised boundary curve without the range checks of :func:`slice_boundary`."""
    return (x - x_hat) / (model.sigma * model.potential.d1(x))


def _default_width(model: MapModel, x_hat: float, side: str) -> float:
    # nearest other critical point on that side is where the boundary has its pole
    span = 2 * math.pi
    window = (x_hat - span, x_hat - 1e-6) if side == "left" else (x_hat + 1e-6, x_hat + span)
    crit = [c for c in find_critical_points(model.potential, window) if abs(c - x_hat) > 1e-6]
    if not crit:
        raise ContractError("no neighbouring critical point found")
    return min(abs(c - x_hat) for c in crit)


def make_slice(model: MapModel, x_hat: float, side: str, width: float | None = None) -> SliceRegion:
    """Slice anchored on x = x̂ extending to one side; width defaults to the pole distance."""
    cusp = cusp_height(model, x_hat)
    w = _default_width(model, x_hat, side) if width is None else float(width)
    return SliceRegion(float(x_hat), model.sigma, side, cusp, w, cusp > 0)


def slice_boundary(model: MapModel, x_hat: float, side: str, width: float | None = None):
    """Return a sampler x ↦ (x − x̂)/(σΨ′(x)) valid strictly inside the width window."""
    _check_line(model, x_hat)
    w = _default_width(model, x_hat, side) if width is None else float(width)
    sgn = -1.0 if side == "left" else 1.0

    def sampler(x):
        xa = np.asarray(x, dtype=float)
        off = sgn * (xa - x_hat)
        if np.any(off <= 0) or np.any(off >= w):
            raise ContractError("x outside the slice width window")
        d1 = model.potential.d1(xa)
        if np.any(np.abs(d1) <= 1e-12):
            raise PoleError("Ψ′(x) = 0: boundary curve has a pole here")
        return boundary_y(model, x_hat, xa)

    return sampler


def _in_window(region: SliceRegion, x):
    off = region.sign * (x - region.x_hat)
    return (off > 0) & (off < region.width)


def in_slice(model: MapModel, region: SliceRegion, q):
    """Flip predicate; accepts one point or an (n, 2) array."""
    q = np.asarray(q, dtype=float)
    x = q[..., 0]
    fx = eval_map(model, q)[..., 0]
    flips = (fx - region.x_hat) * (x - region.x_hat) <= 0
    out = _in_window(region, x) & flips
    return bool(out) if out.ndim == 0 else out


def det_sign(model: MapModel, q):
    d = np.asarray(jacobian_det(model, q))
    out = np.where(np.abs(d) <= 1e-12, 0, np.sign(d)).astype(int)
    return int(out) if out.ndim == 0 else out


def boundary_points(model: MapModel, region: SliceRegion, y_extent: float,
                    resolution: float = BOUNDARY_RESOLUTION) -> np.ndarray:
    """Discretised slice boundary: the curve plus the line segment beyond the cusp.

    Both are clipped to |y − cusp_y| ≤ y_extent, so the closure of an unbounded
    slice is represented by a finite point set.
    """
    n = max(2, int(math.ceil(region.width / resolution)))
    off = np.linspace(0.0, region.width, n + 1)[1:-1]
    xs = region.x_hat + region.sign * off
    with np.errstate(divide="ignore", invalid="ignore"):
        ys = boundary_y(model, region.x_hat, xs)
    keep = np.isfinite(ys) & (np.abs(ys - region.cusp_y) <= y_extent)
    curve = np.column_stack([xs[keep], ys[keep]])
    direction = 1.0 if region.above else -1.0
    ly = region.cusp_y + direction * np.arange(0.0, y_extent + resolution, resolution)
    line = np.column_stack([np.full_like(ly, region.x_hat), ly])
    return np.vstack([line, curve])


def distance_to_slice(model: MapModel, sample, region: SliceRegion,
                      y_extent: float | None = None) -> float:
    """Min distance from ``sample`` to the slice; 0 if any point is inside it."""
    pts = np.atleast_2d(np.asarray(sample, dtype=float))
    if pts.shape[0] == 0:
        raise ContractError("sample must be nonempty")
    if np.any(in_slice(model, region, pts)):
        return 0.0
    if y_extent is None:
        y_extent = float(np.max(np.abs(pts[:, 1] - region.cusp_y))) + 1.0
    tree = cKDTree(boundary_points(model, region, y_extent))
    d, _ = tree.query(pts[:, :2])
    return float(np.min(d))
