"""Orbit engine, attractor diagnostics and one-parameter bifurcation scans.

The orbit and tangent-space iterations are vectorised across the σ grid, so a
whole scan advances every parameter value in lock step. Manifold tracing is
done per σ and may be spread over worker processes; results are merged in grid
order so the output never depends on scheduling.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Callable, Optional

import numpy as np

from .kernels import (
    ContractError,
    MapModel,
    Variant,
    WavePotential,
    jacobian_arrays,
    step_arrays,
)
from .fixedpoints import (
    Classification,
    eigen,
    find_critical_points,
    find_zeros,
    fixed_point_record,
    ns_threshold,
    refine_fixed_point,
)
from .manifold import (
    DEFAULT_NU,
    DEFAULT_SPACING,
    crossings_with_line,
    excursion_count,
    trace_branch,
)
from .slices import SliceRegion, distance_to_slice, in_slice, make_slice

__all__ = [
    "OrbitDiagnostics",
    "ScanConfig",
    "CellSetup",
    "SigmaDiagnostics",
    "ScanEvent",
    "ScanResult",
    "EVENT_KINDS",
    "run_orbit",
    "lyapunov_spectrum",
    "rotation_number",
    "centerset_spread",
    "ring_thickness",
    "cell_setup",
    "verify_assumptions",
    "detect_events",
    "DEFAULT_RANGES",
]

ESCAPE_BOUND = 1e6
CHAOS_THRESHOLD = 0.01
DELTA_NOISE = 1e-3
LOCK_TOL = 1e-3  # |λ1| below this: quasi-periodic circle
BOX_JUMP = 0.5
BOX_FLOOR_FRACTION = 0.1

EVENT_KINDS = (
    "neimark-sacker",
    "heteroclinic-first-tangency",
    "first-tangency",
    "interstitial-tangency",
    "heteroclinic-x-crossing",
    "x-crossing",
    "crisis",
)

# (μ, σ-range) per family; the σ windows bracket the whole event sequence at that μ
DEFAULT_RANGES = {
    Variant.GILET: (0.5, (0.30, 0.75)),
    Variant.MODIFIED: (0.5, (0.05, 0.16)),
}


# --- orbit engine ------------------------------------------------------------

@dataclass
class OrbitDiagnostics:
    attractor_sample: np.ndarray
    bounding_box: tuple
    escaped: bool
    lyapunov: Optional[list] = None
    rotation_number: Optional[float] = None
    radial_spread: Optional[float] = None


def _gram_schmidt(V: np.ndarray):
    """Batched modified Gram-Schmidt on the columns of V (..., d, d); returns Q and |diag R|."""
    d = V.shape[-1]
    Q = np.empty_like(V)
    norms = np.empty(V.shape[:-2] + (d,))
    for j in range(d):
        v = V[..., :, j].copy()
        for i in range(j):
            v -= np.sum(Q[..., :, i] * v, axis=-1, keepdims=True) * Q[..., :, i]
        r = np.sqrt(np.sum(v * v, axis=-1))
        norms[..., j] = r
        Q[..., :, j] = v / r[..., None]
    return Q, norms


@dataclass
class _BatchOrbit:
    samples: np.ndarray  # (n_keep, m, dim)
    n_recorded: np.ndarray  # (m,) samples before escape
    escaped: np.ndarray  # (m,)
    lyap: Optional[np.ndarray]  # (m, dim), NaN when escaped
    logdet: Optional[np.ndarray]  # (m,)


def _batch_orbit(variant: Variant, pot: WavePotential, mu: float, sigmas, s0,
                 n_transient: int, n_keep: int, bounds=None, lyap_steps: int = 0,
                 record: bool = True) -> _BatchOrbit:
    """Iterate one orbit per σ in lock step.

    ``bounds`` is an optional (lo, hi) pair of coordinate arrays; leaving the box
    (or exceeding 1e6 / going non-finite) counts as escape and freezes that orbit.
    Lyapunov sums accumulate over the last ``lyap_steps`` iterations.
    """
    sig = np.asarray(sigmas, dtype=float)
    m = sig.shape[0]
    dim = variant.dimension
    s = np.broadcast_to(np.asarray(s0, dtype=float), (m, dim)).copy()
    total = n_transient + n_keep
    samples = np.empty((n_keep if record else 0, m, dim))
    n_rec = np.zeros(m, dtype=np.int64)
    alive = np.ones(m, dtype=bool)
    lo, hi = (None, None) if bounds is None else (np.asarray(bounds[0]), np.asarray(bounds[1]))
    lyap_start = total - lyap_steps
    Q = np.broadcast_to(np.eye(dim), (m, dim, dim)).copy() if lyap_steps else None
    sums = np.zeros((m, dim))
    logdet = np.zeros(m)
    for k in range(total):
        if lyap_steps and k >= lyap_start:
            J = jacobian_arrays(variant, pot, mu, sig, s[:, 0], s[:, 1], s[:, 2] if dim == 3 else None)
            Q, r = _gram_schmidt(J @ Q)
            with np.errstate(divide="ignore", invalid="ignore"):
                sums += np.log(r)
                logdet += np.log(np.abs(np.linalg.det(J)))
        nx, ny, nz = step_arrays(variant, pot, mu, sig, s[:, 0], s[:, 1], s[:, 2] if dim == 3 else None)
        new = np.stack((nx, ny) if nz is None else (nx, ny, nz), axis=-1)
        ok = np.all(np.isfinite(new), axis=1) & np.all(np.abs(new) <= ESCAPE_BOUND, axis=1)
        if lo is not None:
            ok &= np.all((new >= lo) & (new <= hi), axis=1)
        alive &= ok
        s = np.where(alive[:, None], new, s)
        if record and k >= n_transient:
            samples[k - n_transient] = s
            n_rec += alive
    lyap = None
    ld = None
    if lyap_steps:
        lyap = np.where(alive[:, None], sums / lyap_steps, np.nan)
        lyap = -np.sort(-lyap, axis=1)
        ld = np.where(alive, logdet / lyap_steps, np.nan)
    return _BatchOrbit(samples, n_rec, ~alive, lyap, ld)


def _bbox(sample: np.ndarray) -> tuple:
    if len(sample) == 0:
        return ()
    return tuple((float(a), float(b)) for a, b in zip(sample.min(axis=0), sample.max(axis=0)))


def run_orbit(model: MapModel, s0, n_transient: int, n_keep: int, center=None,
              bounds=None) -> OrbitDiagnostics:
    """Discard ``n_transient`` iterates, then record ``n_keep`` states."""
    if n_transient < 0 or n_keep < 0:
        raise ContractError("orbit lengths must be nonnegative")
    s0 = np.asarray(s0, dtype=float)
    if s0.shape != (model.dimension,):
        raise ContractError(f"s0 must have {model.dimension} coordinates")
    b = _batch_orbit(model.variant, model.potential, model.mu, [model.sigma], s0,
                     n_transient, n_keep, bounds)
    sample = b.samples[: int(b.n_recorded[0]), 0]
    diag = OrbitDiagnostics(sample, _bbox(sample), bool(b.escaped[0]))
    if center is not None and len(sample) and model.dimension == 2:
        diag.radial_spread = centerset_spread(sample, center)
        try:
            diag.rotation_number = rotation_number(model, sample, center)
        except ContractError:
            pass
    return diag


def lyapunov_spectrum(model: MapModel, s0, n: int, return_logdet: bool = False):
    """Lyapunov exponents (descending, nats per iterate) by QR re-orthonormalisation.

    The first min(n/10, 10⁴) iterates are a transient. Returns None when the
    orbit escapes. With ``return_logdet`` the orbit mean of log|det F′| over the
    same steps is returned as well.
    """
    if n < 1000:
        raise ContractError("n must be at least 1000")
    transient = min(n // 10, 10_000)
    b = _batch_orbit(model.variant, model.potential, model.mu, [model.sigma], s0,
                     transient, n - transient, lyap_steps=n - transient, record=False)
    if b.escaped[0]:
        return (None, None) if return_logdet else None
    spec = [float(v) for v in b.lyap[0]]
    return (spec, float(b.logdet[0])) if return_logdet else spec


def _radii_angles(sample, center):
    d = np.asarray(sample, dtype=float)[:, :2] - np.asarray(center, dtype=float)[:2]
    return np.hypot(d[:, 0], d[:, 1]), np.arctan2(d[:, 1], d[:, 0])


def rotation_number(model: MapModel, sample, center) -> float:
    """Mean wrapped angular advance per iterate about ``center``, in revolutions."""
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 2 or sample.shape[1] != 2:
        raise ContractError("rotation number needs a planar sample")
    if len(sample) < 100:
        raise ContractError("rotation number needs at least 100 points")
    r, th = _radii_angles(sample, center)
    if np.any(r < 1e-9):
        raise ContractError("sample point within 1e-9 of the center: angle undefined")
    dth = np.diff(th)
    dth = (dth + math.pi) % (2 * math.pi) - math.pi
    return float(np.mean(dth) / (2 * math.pi))


def centerset_spread(sample, center) -> float:
    """max − min distance from ``center``."""
    r, _ = _radii_angles(sample, center)
    return float(r.max() - r.min()) if len(r) else 0.0


def ring_thickness(sample, center) -> float:
    """Largest radius jump between angularly adjacent sample points.

    A curve that winds once around the center gives a value that shrinks with the
    sample spacing, however eccentric the curve; a band gives roughly its width.
    """
    r, th = _radii_angles(sample, center)
    if len(r) < 2:
        return 0.0
    rs = r[np.argsort(th, kind="stable")]
    return float(np.max(np.abs(np.diff(np.append(rs, rs[0])))))


# --- scan configuration -------------------------------------------------------

@dataclass(frozen=True)
class ScanConfig:
    n_transient: int = 10_000
    n_keep: int = 10_000
    generations: int = 40
    nu: float = DEFAULT_NU
    spacing_max: float = DEFAULT_SPACING
    cap_points: int = 200_000
    alpha: float = 0.05
    beta_margin: float = 0.3
    ns_tol: float = 1e-6
    seed: int = 0
    seed_count: int = 1
    workers: int = 1
    cell: str = "left"  # which cell of a Gilet symmetric pair

    def __post_init__(self):
        for name in ("n_transient", "n_keep"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be nonnegative")
        if self.n_keep < 100:
            raise ContractError("n_keep must be at least 100")
        if self.generations < 1:
            raise ContractError("generations must be positive")
        if not self.nu > 0:
            raise ContractError("nu must be positive")
        if not self.spacing_max > 0:
            raise ContractError("spacing_max must be positive")
        if self.cap_points < 100:
            raise ContractError("cap_points must be at least 100")
        if self.alpha < 0 or self.beta_margin < 0:
            raise ContractError("window margins must be nonnegative")
        if self.seed_count < 1:
            raise ContractError("seed_count must be at least 1")
        if self.workers < 1:
            raise ContractError("workers must be at least 1")
        if self.cell not in ("left", "right"):
            raise ContractError("cell must be 'left' or 'right'")


@dataclass(frozen=True)
class CellSetup:
    """Where to look: saddle(s), their branches and slices, the center and the window."""

    variant: Variant
    mu: float
    potential: WavePotential
    saddle_x: float
    branch: str
    partner_x: Optional[float]
    center: tuple
    window: tuple  # (xmin, xmax, ymin, ymax)

    @property
    def saddle_y(self) -> float:
        return self.mu / (1 - self.mu) * float(self.potential.tilde(self.saddle_x)
                                               if self.variant is Variant.MODIFIED
                                               else self.potential.psi(self.saddle_x))

    @property
    def partner_branch(self) -> str:
        return "right" if self.branch == "left" else "left"

    def bounds(self):
        x0, x1, y0, y1 = self.window
        return np.array([x0, y0]), np.array([x1, y1])


def cell_setup(variant, mu: float, beta: float = math.pi / 3,
               config: ScanConfig = ScanConfig()) -> CellSetup:
    """Locate the saddle/center configuration the scan tracks.

    Gilet: the saddle on x = −π/2 and one of the two mirror cells beside it.
    Modified map: the saddle p in 0 < x < 0.4 with positive height and its odd
    image q = −p, around the central zero.
    """
    variant = Variant(variant)
    pot = WavePotential(beta)
    k = mu / (1 - mu)
    if variant is Variant.GILET:
        crit = find_critical_points(pot, (-math.pi - 0.5, 0.5))
        x_hat = min(crit, key=lambda c: abs(c + math.pi / 2))
        left = max(c for c in crit if c < x_hat - 1e-6)
        right = min(c for c in crit if c > x_hat + 1e-6)
        if config.cell == "left":
            center = [z for z in find_zeros(pot, (left, x_hat))][0]
        else:
            center = [z for z in find_zeros(pot, (x_hat, right))][0]
        y_hat = k * float(pot.psi(x_hat))
        h = abs(y_hat) + config.beta_margin
        window = (left - config.alpha, right + config.alpha, -h, h)
        return CellSetup(variant, mu, pot, x_hat, config.cell, None, (center, 0.0), window)
    if variant is Variant.MODIFIED:
        crit = [c for c in find_critical_points(pot, (1e-6, 0.4)) if pot.psi(c) > 0]
        if not crit:
            raise ContractError("no saddle with 0 < x < 0.4 and positive height for this beta")
        x_k = crit[0]
        y_hat = k * float(pot.psi(x_k))
        h = abs(y_hat) + config.beta_margin
        window = (-x_k - config.alpha, x_k + config.alpha, -h, h)
        return CellSetup(variant, mu, pot, x_k, "left", -x_k, (0.0, 0.0), window)
    raise ContractError(f"scans are defined for planar maps, not {variant.value}")


# --- per-σ work ---------------------------------------------------------------

@dataclass(frozen=True)
class SigmaDiagnostics:
    sigma: float
    lyapunov: Optional[tuple]
    rotation_number: Optional[float]
    radial_spread: Optional[float]
    delta: Optional[float]
    flip_count: Optional[int]
    escaped: bool
    bbox: tuple
    hetero_flip_count: Optional[int] = None
    line_crossings: Optional[int] = None
    center_modulus: Optional[float] = None
    branch_flips: Optional[tuple] = None  # (own, partner) flips per traced branch


def _saddle(setup: CellSetup, sigma: float, x: float):
    model = MapModel(setup.variant, setup.mu, sigma, setup.potential)
    y = setup.mu / (1 - setup.mu) * float(setup.potential.tilde(x) if setup.variant is Variant.MODIFIED
                                          else setup.potential.psi(x))
    s = refine_fixed_point(model, [x, y])
    if s is None:
        return model, None
    rec = fixed_point_record(model, s, "critical")
    return model, rec if rec.classification is Classification.SADDLE else None


def _slices(setup: CellSetup, model: MapModel) -> list[SliceRegion]:
    """Slice of the tracked saddle, then (modified map) the partner's slice."""
    if setup.variant is Variant.GILET:
        return [make_slice(model, setup.saddle_x, setup.branch)]
    width = abs(setup.saddle_x - setup.partner_x)
    own = make_slice(model, setup.saddle_x, "left", width)
    partner = make_slice(model, setup.partner_x, "right", width)
    return [own, partner]


def _manifold_job(args):
    """Trace branch(es) at one σ; returns (flips, hetero flips, line crossings, per-branch)."""
    setup, sigma, cfg = args
    model, rec = _saddle(setup, sigma, setup.saddle_x)
    if rec is None:
        return None, None, None, None
    slices = _slices(setup, model)
    poly = trace_branch(model, rec, setup.branch, cfg.generations, cfg.nu, 16,
                        cfg.spacing_max, cfg.cap_points)
    own = excursion_count(in_slice(model, slices[0], poly.points))
    crossings = len(crossings_with_line(poly, setup.saddle_x))
    if setup.partner_x is None:
        return own, None, crossings, (own,)
    het_p = excursion_count(in_slice(model, slices[1], poly.points))
    _, rec_q = _saddle(setup, sigma, setup.partner_x)
    if rec_q is None:
        return own, None, crossings, (own, het_p)
    poly_q = trace_branch(model, rec_q, setup.partner_branch, cfg.generations, cfg.nu, 16,
                          cfg.spacing_max, cfg.cap_points)
    own_q = excursion_count(in_slice(model, slices[1], poly_q.points))
    het_q = excursion_count(in_slice(model, slices[0], poly_q.points))
    return own + own_q, het_p + het_q, crossings, (own, het_p, own_q, het_q)


def _center_modulus(setup: CellSetup, sigmas: np.ndarray) -> np.ndarray:
    cx, cy = setup.center
    J = jacobian_arrays(setup.variant, setup.potential, setup.mu, sigmas,
                        np.full_like(sigmas, cx), np.full_like(sigmas, cy))
    return np.array([np.max(np.abs(eigen(j)[0])) for j in J])


def _initial_conditions(setup: CellSetup, cfg: ScanConfig) -> np.ndarray:
    # step toward the tracked saddle, so mirror cells start from mirror points
    step = 1e-3 if setup.saddle_x > setup.center[0] else -1e-3
    first = np.array(setup.center) + np.array([step, 0.0])
    if cfg.seed_count == 1:
        return first[None, :]
    rng = np.random.default_rng(cfg.seed)
    x0, x1, y0, y1 = setup.window
    rest = rng.uniform([x0, y0], [x1, y1], size=(cfg.seed_count - 1, 2))
    return np.vstack([first, rest])


def _orbit_diagnostics(setup: CellSetup, sigmas: np.ndarray, cfg: ScanConfig,
                       sample_sink: Optional[Callable] = None, chunk: int = 64):
    """Batched orbits and Lyapunov spectra for every σ."""
    out = []
    ics = _initial_conditions(setup, cfg)
    bounds = setup.bounds()
    lyap_steps = cfg.n_keep
    for start in range(0, len(sigmas), chunk):
        sig = sigmas[start:start + chunk]
        runs = [_batch_orbit(setup.variant, setup.potential, setup.mu, sig, ic,
                             cfg.n_transient, cfg.n_keep, bounds,
                             lyap_steps=lyap_steps if i == 0 else 0)
                for i, ic in enumerate(ics)]
        for j, sigma in enumerate(sig):
            parts = [r.samples[: int(r.n_recorded[j]), j] for r in runs]
            sample = np.concatenate(parts)
            escaped = any(bool(r.escaped[j]) for r in runs)
            lyap = runs[0].lyap[j]
            lyap_t = None if escaped or not np.all(np.isfinite(lyap)) else tuple(float(v) for v in lyap)
            if sample_sink is not None:
                sample_sink(float(sigma), sample)
            out.append((sample, escaped, lyap_t))
    return out


def _per_sigma(setup: CellSetup, sigma: float, sample: np.ndarray, escaped: bool, lyap,
               manifold, cmod: float) -> SigmaDiagnostics:
    model = MapModel(setup.variant, setup.mu, sigma, setup.potential)
    center = setup.center
    rot = spread = delta = None
    if len(sample):
        spread = centerset_spread(sample, center)
        try:
            rot = rotation_number(model, sample, center)
        except ContractError:
            rot = None
        slices = _slices(setup, model)
        y_ext = setup.window[3] - setup.window[2]
        delta = min(distance_to_slice(model, sample, sl, y_ext) for sl in slices)
    flips, het, crossings, branch = manifold
    return SigmaDiagnostics(
        sigma=float(sigma), lyapunov=lyap, rotation_number=rot, radial_spread=spread,
        delta=delta, flip_count=flips, escaped=escaped, bbox=_bbox(sample),
        hetero_flip_count=het, line_crossings=crossings, center_modulus=float(cmod),
        branch_flips=branch,
    )


# --- events ---------------------------------------------------------------------

@dataclass(frozen=True)
class ScanEvent:
    kind: str
    sigma_low: float
    sigma_high: float
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ContractError(f"unknown event kind {self.kind}")
        if not self.sigma_low < self.sigma_high:
            raise ContractError("event bracket must satisfy low < high")

    @property
    def unresolved(self) -> bool:
        return bool(self.evidence.get("unresolved", False))

    @property
    def sigma_bracket(self) -> tuple:
        return (self.sigma_low, self.sigma_high)


@dataclass(frozen=True)
class ScanResult:
    map: str
    mu: float
    beta: float
    sigma_grid: tuple
    diagnostics: tuple
    events: tuple
    assumption_report: dict
    seed: int
    timestamp: str = ""

    def events_of(self, kind: str) -> list:
        return [e for e in self.events if e.kind == kind]

    @property
    def unresolved(self) -> bool:
        return any(e.unresolved for e in self.events)


def _refine_ns(setup: CellSetup, lo: float, hi: float, tol: float) -> tuple[float, float]:
    f = lambda s: _center_modulus(setup, np.array([s]))[0] - 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _onset_events(counts, sigmas, kind_first, kind_cross):
    """First bracket where counts become positive, and the last after which they stay so."""
    ev = []
    pos = [c is not None and c > 0 for c in counts]
    i_first = next((i for i in range(len(pos) - 1) if not pos[i] and pos[i + 1]
                    and not any(pos[: i + 1])), None)
    if i_first is not None:
        ev.append(ScanEvent(kind_first, sigmas[i_first], sigmas[i_first + 1],
                            {"counts": [counts[i_first], counts[i_first + 1]]}))
    if pos[-1] and not all(pos):
        j = max(i for i in range(len(pos)) if not pos[i])
        ev.append(ScanEvent(kind_cross, sigmas[j], sigmas[j + 1],
                            {"counts": [counts[j], counts[j + 1]]}))
    return ev, i_first


def _crisis(diags, sigmas, start: int, setup: CellSetup, jumps: bool = True):
    x0, x1, y0, y1 = setup.window
    floor = BOX_FLOOR_FRACTION * math.hypot(x1 - x0, y1 - y0)

    def diag(d):
        if not d.bbox:
            return 0.0
        return math.hypot(*(b - a for a, b in d.bbox))

    for j in range(start, len(diags) - 1):
        a, b = diags[j], diags[j + 1]
        if b.escaped and not a.escaped:
            return ScanEvent("crisis", sigmas[j], sigmas[j + 1], {"reason": "escape"})
        if a.escaped or b.escaped or not jumps:
            continue
        da, db = diag(a), diag(b)
        if abs(db - da) > BOX_JUMP * max(da, floor):
            return ScanEvent("crisis", sigmas[j], sigmas[j + 1],
                             {"reason": "bbox-jump", "diagonals": [da, db]})
    return None


# pairs whose order is strict in theory; sharing a bracket means the grid cannot separate them
_STRICT_PAIRS = {
    ("neimark-sacker", "first-tangency"),
    ("neimark-sacker", "heteroclinic-first-tangency"),
    ("heteroclinic-first-tangency", "first-tangency"),
    ("heteroclinic-x-crossing", "first-tangency"),
}


def _flag_unresolved(events: list) -> list:
    out = []
    for e in events:
        clash = [o.kind for o in events if o is not e
                 and ((e.kind, o.kind) in _STRICT_PAIRS or (o.kind, e.kind) in _STRICT_PAIRS)
                 and o.sigma_low < e.sigma_high and e.sigma_low < o.sigma_high]
        if clash:
            e = replace(e, evidence={**e.evidence, "unresolved": True, "shares_bracket_with": clash})
        out.append(e)
    return out


def _find_events(setup: CellSetup, sigmas: list, diags: list, cfg: ScanConfig):
    events: list[ScanEvent] = []
    cmod = [d.center_modulus for d in diags]
    for i in range(len(sigmas) - 1):
        if cmod[i] < 1.0 <= cmod[i + 1]:
            lo, hi = _refine_ns(setup, sigmas[i], sigmas[i + 1], cfg.ns_tol)
            ev = {"grid_bracket": [sigmas[i], sigmas[i + 1]]}
            model = MapModel(setup.variant, setup.mu, 0.5, setup.potential)
            try:
                closed = ns_threshold(model, setup.center[0])
                ev["closed_form"] = closed
                ev["closed_form_inside"] = bool(lo - cfg.ns_tol <= closed <= hi + cfg.ns_tol)
            except ContractError:
                pass
            events.append(ScanEvent("neimark-sacker", lo, hi, ev))
            break

    counts = [d.flip_count for d in diags]
    homo, i_first = _onset_events(counts, sigmas, "first-tangency", "x-crossing")
    events += homo
    last_cross = max((e for e in homo if e.kind == "x-crossing"), default=None,
                     key=lambda e: e.sigma_low)
    if setup.partner_x is not None:
        both = [None if d.branch_flips is None or len(d.branch_flips) < 4
                else min(d.branch_flips[1], d.branch_flips[3]) for d in diags]
        het, _ = _onset_events(both, sigmas, "heteroclinic-first-tangency", "heteroclinic-x-crossing")
        events += het
        hx = [e for e in het if e.kind == "heteroclinic-x-crossing"]
        if hx and (last_cross is None or hx[0].sigma_low < last_cross.sigma_low):
            last_cross = hx[0]

    # without a crossing there is no tangle to blow up; a growing ring is not a crisis
    start = sigmas.index(last_cross.sigma_high) if last_cross is not None else 0
    crisis = _crisis(diags, sigmas, start, setup, jumps=last_cross is not None)
    if crisis is not None:
        events.append(crisis)

    if i_first is not None:
        stop = sigmas.index(crisis.sigma_low) if crisis is not None else len(sigmas) - 1
        for j in range(i_first + 1, stop):
            a, b = counts[j], counts[j + 1]
            if a is None or b is None:
                continue
            if (a > 0 and b == 0) or (a % 2 != b % 2):
                events.append(ScanEvent("interstitial-tangency", sigmas[j], sigmas[j + 1],
                                        {"counts": [a, b]}))

    b1 = None
    if last_cross is not None:
        j0 = sigmas.index(last_cross.sigma_high)
        collapse = next((j for j in range(j0, len(sigmas) - 1)
                         if counts[j] and counts[j + 1] == 0), None)
        cands = []
        if collapse is not None:
            cands.append((sigmas[collapse], sigmas[collapse + 1], "flip-count-collapse"))
        if crisis is not None:
            cands.append((crisis.sigma_low, crisis.sigma_high, "crisis"))
        if cands:
            lo, hi, src = min(cands)
            b1 = {"sigma_low": lo, "sigma_high": hi, "source": src, "label": "proxy"}

    order = {k: i for i, k in enumerate(EVENT_KINDS)}
    events.sort(key=lambda e: (e.sigma_low, order[e.kind]))
    return _flag_unresolved(events), b1


# --- assumption checks -------------------------------------------------------------

def verify_assumptions(variant, mu: float, sigma_grid, window=None, beta: float = math.pi / 3,
                       config: ScanConfig = ScanConfig(), diagnostics=None) -> dict:
    """Empirical hyperbolicity bounds, Δ monotonicity, rotation sign and saddle containment.

    Without ``diagnostics`` only the saddle-based checks are computed.
    """
    setup = cell_setup(variant, mu, beta, config)
    if window is not None:
        setup = replace(setup, window=tuple(window))
    grid = [float(s) for s in sigma_grid]
    if not grid:
        raise ContractError("sigma grid must be nonempty")
    lam_s, lam_u, gaps, outside = [], [], [], []
    x0, x1, y0, y1 = setup.window
    for s in grid:
        _, rec = _saddle(setup, s, setup.saddle_x)
        if rec is None:
            gaps.append(s)
            lam_s.append(None)
            lam_u.append(None)
            continue
        mods = np.sort(np.abs(rec.eigenvalues))
        lam_s.append(float(mods[0]))
        lam_u.append(float(mods[-1]))
        if not (x0 <= rec.x <= x1 and y0 <= rec.y <= y1):
            outside.append(s)
    valid_s = [v for v in lam_s if v is not None]
    valid_u = [v for v in lam_u if v is not None]
    report = {
        "saddle": {
            "x": setup.saddle_x,
            "y": setup.saddle_y,
            "lambda_s": lam_s,
            "lambda_u": lam_u,
            "kappa_s": max(valid_s) if valid_s else None,
            "kappa_u": min(valid_u) if valid_u else None,
            "gaps": gaps,
        },
        "containment": {"window": list(setup.window), "inside": not outside, "outside": outside},
    }
    if setup.partner_x is not None:
        # the tracked saddle should sit in the first quadrant relative to the center
        report["quadrant"] = {
            "relative": [setup.saddle_x - setup.center[0], setup.saddle_y - setup.center[1]],
            "first_quadrant": setup.saddle_x > setup.center[0] and setup.saddle_y > setup.center[1],
        }
    if diagnostics is not None:
        # pre-chaotic range: before the first flip and before any positive exponent
        pre = []
        for d in diagnostics:
            if (d.flip_count or 0) > 0 or (d.lyapunov and d.lyapunov[0] > CHAOS_THRESHOLD) or d.escaped:
                break
            pre.append(d)
        # Δ is a distance from the invariant circle; a phase-locked sample is a few
        # periodic points on it, so those σ are listed but left out of the check
        def on_circle(d):
            if d.center_modulus is not None and d.center_modulus < 1.0:
                return True
            return bool(d.lyapunov) and abs(d.lyapunov[0]) <= LOCK_TOL
        locked = [d.sigma for d in pre if not on_circle(d)]
        circle = [d for d in pre if on_circle(d)]
        viol = []
        for a, b in zip(circle, circle[1:]):
            if a.delta is not None and b.delta is not None and b.delta - a.delta > DELTA_NOISE:
                viol.append([a.sigma, b.sigma, b.delta - a.delta])
        report["delta"] = {
            "series": [d.delta for d in diagnostics],
            "prechaotic_until": pre[-1].sigma if pre else None,
            "tolerance": DELTA_NOISE,
            "excluded_locked": locked,
            "violations": viol,
            "nonincreasing": not viol,
        }
        signs = [None if d.rotation_number is None or abs(d.rotation_number) < 1e-12
                 else (1 if d.rotation_number > 0 else -1) for d in diagnostics]
        ring = [s for d, s in zip(pre, signs) if s is not None and (d.radial_spread or 0) > 0]
        report["rotation"] = {
            "signs": signs,
            "circle_regime_sign": ring[0] if ring and all(s == ring[0] for s in ring) else None,
            "constant_in_circle_regime": bool(ring) and all(s == ring[0] for s in ring),
        }
    return report


# --- the scan ------------------------------------------------------------------------

def sigma_grid(sigma_range, resolution: float) -> list[float]:
    lo, hi = float(sigma_range[0]), float(sigma_range[1])
    if not (0.0 < lo < hi < 1.0):
        raise ContractError("sigma range must satisfy 0 < low < high < 1")
    if resolution < 1e-5:
        raise ContractError("resolution must be at least 1e-5")
    n = int(round((hi - lo) / resolution))
    grid = [round(lo + i * resolution, 12) for i in range(n + 1)]
    if grid[-1] < hi - 1e-12:
        grid.append(hi)
    return grid


def detect_events(variant, mu: Optional[float] = None, sigma_range=None, resolution: float = 1e-3,
                  config: ScanConfig = ScanConfig(), beta: float = math.pi / 3,
                  sample_sink: Optional[Callable] = None, timestamp: Optional[str] = None,
                  progress: Optional[Callable] = None) -> ScanResult:
    """Scan σ and bracket the Neimark-Sacker, tangency, crossing and crisis events."""
    variant = Variant(variant)
    d_mu, d_range = DEFAULT_RANGES.get(variant, (None, None))
    mu = d_mu if mu is None else float(mu)
    sigma_range = d_range if sigma_range is None else sigma_range
    if mu is None or not 0.0 < mu < 1.0:
        raise ContractError("mu must lie in (0,1)")
    grid = sigma_grid(sigma_range, resolution)
    setup = cell_setup(variant, mu, beta, config)
    sig = np.array(grid)

    orbits = _orbit_diagnostics(setup, sig, config, sample_sink)
    cmod = _center_modulus(setup, sig)
    jobs = [(setup, s, config) for s in grid]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            manifolds = list(ex.map(_manifold_job, jobs))
    else:
        manifolds = []
        for k, job in enumerate(jobs):
            manifolds.append(_manifold_job(job))
            if progress is not None:
                progress(k + 1, len(jobs))
    diags = [_per_sigma(setup, s, o[0], o[1], o[2], mf, c)
             for s, o, mf, c in zip(grid, orbits, manifolds, cmod)]

    events, b1 = _find_events(setup, grid, diags, config)
    report = verify_assumptions(variant, mu, grid, setup.window, beta, config, diags)
    report["b1_proxy"] = b1
    report["cell"] = {"saddle_x": setup.saddle_x, "branch": setup.branch,
                      "partner_x": setup.partner_x, "center": list(setup.center)}
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return ScanResult(variant.value, mu, beta, tuple(grid), tuple(diags), tuple(events),
                      report, config.seed, timestamp)
