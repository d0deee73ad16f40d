"""Fixed points of the map family: location, refinement and linear classification."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .kernels import (
    ContractError,
    MapModel,
    NonSmoothPointError,
    Variant,
    WavePotential,
    eval_map,
    jacobian,
)

__all__ = [
    "Classification",
    "FixedPointRecord",
    "FixedPointList",
    "eig2",
    "eig3",
    "eigen",
    "classify",
    "classify_eigenvalues",
    "find_critical_points",
    "find_zeros",
    "enumerate_fixed_points",
    "refine_fixed_point",
    "fixed_point_record",
    "solve_z_fixed",
    "ns_threshold",
    "UndefinedThresholdError",
]

GRID_STEP = 1e-3
HYPERBOLIC_TOL = 1e-9
RESIDUAL_TOL = 1e-10
NEWTON_MAX_STEPS = 50


class UndefinedThresholdError(ContractError):
    pass


class Classification(str, Enum):
    SINK = "sink"
    SPIRAL_SINK = "spiral-sink"
    SADDLE = "saddle"
    SOURCE = "source"
    SPIRAL_SOURCE = "spiral-source"
    NONHYPERBOLIC = "nonhyperbolic"


@dataclass(frozen=True)
class FixedPointRecord:
    location: np.ndarray
    residual: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, unit norm
    classification: Classification
    family: str  # "critical", "zero", "3d-z" or "numeric"

    @property
    def x(self) -> float:
        return float(self.location[0])

    @property
    def y(self) -> float:
        return float(self.location[1])

    def unstable_direction(self) -> np.ndarray:
        """Real unit eigenvector of the single expanding eigenvalue of a saddle."""
        if self.classification is not Classification.SADDLE:
            raise ContractError(f"not a saddle: {self.classification.value}")
        mods = np.abs(self.eigenvalues)
        k = int(np.argmax(mods))
        if abs(self.eigenvalues[k].imag) > 0 or np.sum(mods > 1) != 1:
            raise ContractError("saddle must have exactly one real expanding eigenvalue")
        return np.real(self.eigenvectors[:, k])

    def unstable_eigenvalue(self) -> float:
        mods = np.abs(self.eigenvalues)
        return float(np.real(self.eigenvalues[int(np.argmax(mods))]))


class FixedPointList(list):
    """List of records; ``dropped`` counts seeds where Newton failed."""

    def __init__(self, items=(), dropped: int = 0):
        super().__init__(items)
        self.dropped = dropped


# --- eigen-decomposition from characteristic polynomials -------------------

def _null_vector(M: np.ndarray) -> np.ndarray:
    """Unit vector spanning the kernel of a singular 2×2 or 3×3 matrix."""
    n = M.shape[0]
    if n == 2:
        cands = [np.array([-M[0, 1], M[0, 0]]), np.array([-M[1, 1], M[1, 0]])]
    else:
        r = M
        cands = [np.cross(r[0], r[1]), np.cross(r[0], r[2]), np.cross(r[1], r[2])]
    v = max(cands, key=lambda c: np.linalg.norm(c))
    nv = np.linalg.norm(v)
    if nv == 0.0:
        # M is (numerically) zero: every vector is an eigenvector
        v = np.zeros(n, dtype=M.dtype)
        v[0] = 1.0
        return v
    return v / nv


def eig2(J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a real 2×2 matrix from its trace and determinant."""
    a, b, c, d = J[0, 0], J[0, 1], J[1, 0], J[1, 1]
    tr = a + d
    det = a * d - b * c
    disc = tr * tr / 4.0 - det
    if disc >= 0:
        r = math.sqrt(disc)
        # avoid cancellation: larger-magnitude root first, the other from the product
        l1 = tr / 2.0 + math.copysign(r, tr) if tr != 0 else r
        l2 = det / l1 if l1 != 0 else tr - l1
        lams = np.array([l1, l2], dtype=complex)
    else:
        r = math.sqrt(-disc)
        lams = np.array([complex(tr / 2.0, r), complex(tr / 2.0, -r)])
    vecs = np.column_stack([_null_vector(J.astype(complex) - lam * np.eye(2)) for lam in lams])
    if np.all(lams.imag == 0):
        vecs = vecs.real.astype(complex)
    order = np.argsort(-np.abs(lams), kind="stable")
    return lams[order], vecs[:, order]


def _real_cubic_root(c2: float, c1: float, c0: float) -> float:
    """One real root of λ³ + c2 λ² + c1 λ + c0 by bracketing then Newton."""
    f = lambda t: ((t + c2) * t + c1) * t + c0
    df = lambda t: (3 * t + 2 * c2) * t + c1
    bound = 1.0 + max(abs(c2), abs(c1), abs(c0))
    lo, hi = -bound, bound
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-13 * bound:
            break
    t = 0.5 * (lo + hi)
    for _ in range(5):
        d = df(t)
        if d == 0:
            break
        t -= f(t) / d
    return t


def eig3(J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a real 3×3 matrix: one real root of the cubic, then the quadratic.

    When the planar block does not see z (J[0,2] = J[1,2] = 0, true for both 3-D
    extensions) the real root is J[2,2] exactly and the rest is the 2×2 block.
    """
    if J[0, 2] == 0.0 and J[1, 2] == 0.0:
        planar, _ = eig2(J[:2, :2])
        lams = np.concatenate([[complex(J[2, 2])], planar])
        vecs = np.column_stack([_null_vector(J.astype(complex) - lam * np.eye(3)) for lam in lams])
        order = np.argsort(-np.abs(lams), kind="stable")
        return lams[order], vecs[:, order]
    tr = np.trace(J)
    m2 = (J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0] + J[0, 0] * J[2, 2]
          - J[0, 2] * J[2, 0] + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
    det = (
        J[0, 0] * (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
        - J[0, 1] * (J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
        + J[0, 2] * (J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0])
    )
    # char poly: λ³ − tr λ² + m2 λ − det
    r = _real_cubic_root(-tr, m2, -det)
    # deflate: λ³ − tr λ² + m2 λ − det = (λ − r)(λ² + p λ + q)
    p = r - tr
    q = m2 + r * p
    disc = p * p / 4.0 - q
    if disc >= 0:
        s = math.sqrt(disc)
        l1 = -p / 2.0 - math.copysign(s, p) if p != 0 else s
        l2 = q / l1 if l1 != 0 else -p - l1
        others = [complex(l1), complex(l2)]
    else:
        s = math.sqrt(-disc)
        others = [complex(-p / 2.0, s), complex(-p / 2.0, -s)]
    lams = np.array([complex(r)] + others)
    vecs = np.column_stack([_null_vector(J.astype(complex) - lam * np.eye(3)) for lam in lams])
    order = np.argsort(-np.abs(lams), kind="stable")
    return lams[order], vecs[:, order]


def eigen(J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    J = np.asarray(J, dtype=float)
    if J.shape == (2, 2):
        return eig2(J)
    if J.shape == (3, 3):
        return eig3(J)
    raise ContractError(f"unsupported Jacobian shape {J.shape}")


def classify_eigenvalues(eigenvalues, tol: float = HYPERBOLIC_TOL) -> Classification:
    lams = np.asarray(eigenvalues, dtype=complex)
    mods = np.abs(lams)
    if np.any(np.abs(mods - 1.0) < tol):
        return Classification.NONHYPERBOLIC
    spiral = bool(np.any(np.abs(lams.imag) > 0))
    n_out = int(np.sum(mods > 1.0))
    if n_out == 0:
        return Classification.SPIRAL_SINK if spiral else Classification.SINK
    if n_out == len(lams):
        return Classification.SPIRAL_SOURCE if spiral else Classification.SOURCE
    return Classification.SADDLE


def classify(record: FixedPointRecord) -> Classification:
    return classify_eigenvalues(record.eigenvalues)


# --- scalar root finding ----------------------------------------------------

def _bisect_newton(f: Callable, df: Callable, a: float, b: float, tol: float = 1e-12) -> float:
    fa = f(a)
    for _ in range(60):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0 or b - a < 1e-9:
            break
        if (fa < 0) == (fm < 0):
            a, fa = m, fm
        else:
            b = m
    x = 0.5 * (a + b)
    for _ in range(20):
        fx = f(x)
        if abs(fx) <= tol * 1e-2:
            break
        d = df(x)
        if d == 0:
            break
        x_new = x - fx / d
        if not (a - 1e-9 <= x_new <= b + 1e-9):
            break
        x = x_new
    return float(x)


def _roots_on_grid(f, df, window, tol=1e-12) -> list[float]:
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        return []
    n = int(math.ceil((hi - lo) / GRID_STEP)) + 1
    xs = np.linspace(lo, hi, n)
    vals = f(xs)
    roots = [float(x) for x, v in zip(xs, vals) if v == 0.0]
    sgn = np.sign(vals)
    idx = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    for i in idx:
        roots.append(_bisect_newton(f, df, xs[i], xs[i + 1], tol))
    roots.sort()
    out: list[float] = []
    for r in roots:
        if not out or abs(r - out[-1]) > 1e-9:
            out.append(r)
    return out


def find_critical_points(potential: WavePotential, window) -> list[float]:
    """Roots of Ψ′ in ``window`` (sign changes on a 1e-3 grid, then bisection + Newton)."""
    return _roots_on_grid(potential.d1, potential.d2, window)


def find_zeros(potential: WavePotential, window) -> list[float]:
    """Roots of Ψ in ``window``."""
    return _roots_on_grid(potential.psi, potential.d1, window)


def solve_z_fixed(potential: WavePotential, x_m: float) -> float:
    """Root in [0, 1/2] of 2z = sin²(z + Ψ′(x_m)); g is strictly increasing so it is unique."""
    shift = float(potential.d1(x_m))
    g = lambda z: 2.0 * z - math.sin(z + shift) ** 2
    a, b = 0.0, 0.5
    if g(a) >= 0.0:
        return 0.0
    while b - a > 1e-16 and abs(g(0.5 * (a + b))) > 1e-13:
        m = 0.5 * (a + b)
        if g(m) < 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def ns_threshold(model: MapModel, x_m: float) -> float:
    """σ at which the complex pair at the zero-type point (x_m, 0) reaches the unit circle.

    At y = 0 the Jacobian is [[1, −σΨ′], [μΨ′, μ]], whose determinant μ(1 + σΨ′²)
    is the squared modulus of the pair, giving σ_NS = (1 − μ)/(μΨ′²).
    """
    pot = model.potential
    if abs(float(pot.psi(x_m))) > 1e-10:
        raise ContractError(f"x_m={x_m} is not a zero of the potential")
    d = float(pot.d1(x_m))
    if d == 0.0:
        raise UndefinedThresholdError("Ψ′(x_m) = 0: no Neimark-Sacker threshold")
    mu = model.mu
    sigma_ns = (1.0 - mu) / (mu * d * d)
    tr = 1.0 + mu
    assert tr * tr - 4.0 * mu * (1.0 + sigma_ns * d * d) < 0.0
    return sigma_ns


# --- fixed points of the full map -----------------------------------------

def fixed_point_record(model: MapModel, s, family: str) -> FixedPointRecord:
    s = np.asarray(s, dtype=float)
    res = float(np.linalg.norm(eval_map(model, s) - s))
    lams, vecs = eigen(jacobian(model, s))
    return FixedPointRecord(s, res, lams, vecs, classify_eigenvalues(lams), family)


def refine_fixed_point(model: MapModel, s0) -> np.ndarray | None:
    """Damped Newton on F(s) − s; None when it fails to reach the residual tolerance."""
    s = np.array(s0, dtype=float)
    eye = np.eye(model.dimension)
    try:
        r = eval_map(model, s) - s
        rn = np.linalg.norm(r)
        for _ in range(NEWTON_MAX_STEPS):
            if rn <= 1e-14:
                break
            step = np.linalg.solve(jacobian(model, s) - eye, -r)
            t = 1.0
            for _ in range(30):
                cand = s + t * step
                rc = eval_map(model, cand) - cand
                if np.all(np.isfinite(rc)) and np.linalg.norm(rc) < rn:
                    break
                t *= 0.5
            else:
                break
            s, r, rn = cand, rc, np.linalg.norm(rc)
    except (np.linalg.LinAlgError, NonSmoothPointError):
        return None
    if not np.all(np.isfinite(s)) or rn > RESIDUAL_TOL:
        return None
    return s


def _analytic_seeds(model: MapModel, window) -> list[tuple[np.ndarray, str]]:
    pot = model.potential
    k = model.mu / (1.0 - model.mu)
    seeds = []
    for xc in find_critical_points(pot, window):
        y = k * float(pot.psi(xc))
        seeds.append(([xc, y], "critical"))
    for xz in find_zeros(pot, window):
        seeds.append(([xz, 0.0], "zero"))
    if model.variant is Variant.DIAGONAL_3D:
        seeds = [(s + [0.0], fam) for s, fam in seeds]
    elif model.variant is Variant.COUPLED_3D:
        seeds = [(s + [solve_z_fixed(pot, s[0])], "3d-z" if fam == "zero" else fam) for s, fam in seeds]
    elif model.variant is Variant.MODIFIED:
        seeds = [(s, fam) for s, fam in seeds if abs(s[0]) <= 0.4]
    return [(np.array(s, dtype=float), fam) for s, fam in seeds]


def _numeric_seeds(model: MapModel, window) -> list[tuple[np.ndarray, str]]:
    # |x| >= 0.6 is a continuum of non-isolated fixed points; only seed inside it
    lo, hi = max(window[0], -0.6), min(window[1], 0.6)
    if not hi > lo:
        return []
    k = model.mu / (1.0 - model.mu)
    xs = np.linspace(lo, hi, max(2, int(math.ceil((hi - lo) / 0.05)) + 1))
    seeds = []
    for x in xs:
        seeds.append((np.array([x, 0.0]), "numeric"))
        seeds.append((np.array([x, k * float(model.potential.tilde(x))]), "numeric"))
    return seeds


def enumerate_fixed_points(model: MapModel, window) -> FixedPointList:
    """Fixed points with x in ``window``, Newton-polished and classified, sorted by x."""
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        return FixedPointList()
    seeds = _analytic_seeds(model, (lo, hi))
    if model.variant is Variant.MODIFIED:
        seeds += _numeric_seeds(model, (lo, hi))
    found: list[FixedPointRecord] = []
    dropped = 0
    for s0, fam in seeds:
        s = refine_fixed_point(model, s0)
        if s is None or not (lo - 1e-9 <= s[0] <= hi + 1e-9):
            dropped += s is None
            continue
        if any(np.linalg.norm(s - r.location) < 1e-8 for r in found):
            continue
        try:
            found.append(fixed_point_record(model, s, fam))
        except NonSmoothPointError:
            dropped += 1
    found.sort(key=lambda r: tuple(r.location))
    return FixedPointList(found, dropped)
