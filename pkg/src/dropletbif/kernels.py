"""Wave potential, the Gilet map family and analytic Jacobians.

Every function here is pure and vectorised: states are arrays whose last axis
holds the coordinates, so a single point has shape ``(dim,)`` and a cloud of
points has shape ``(n, dim)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

__all__ = [
    "Variant",
    "WavePotential",
    "MapModel",
    "ContractError",
    "NonSmoothPointError",
    "as_state",
    "eval_map",
    "jacobian",
    "jacobian_det",
    "symmetry_conjugate",
    "SEAMS",
]

_SQRT_PI = math.sqrt(math.pi)

# x-values where the modified map switches branch
SEAMS = (-0.6, -0.4, 0.4, 0.6)
_INNER = 0.4
_OUTER = 0.6
_Z_DECAY = 0.8
_Z_COUPLING = 0.1


class ContractError(ValueError):
    """A caller broke a documented precondition."""


class NonSmoothPointError(ContractError):
    """Derivative requested exactly on a seam of the modified map."""


class Variant(str, Enum):
    GILET = "gilet"
    MODIFIED = "modified-gilet"
    DIAGONAL_3D = "3d-diagonal"
    COUPLED_3D = "3d-coupled"

    @property
    def dimension(self) -> int:
        return 2 if self in (Variant.GILET, Variant.MODIFIED) else 3


@dataclass(frozen=True)
class WavePotential:
    """Odd, 2π-periodic wave field Ψ(x) = (cos β sin 3x + sin β sin 5x)/√π."""

    beta: float = math.pi / 3

    @property
    def _a(self) -> float:
        return math.cos(self.beta) / _SQRT_PI

    @property
    def _b(self) -> float:
        return math.sin(self.beta) / _SQRT_PI

    def psi(self, x):
        return self._a * np.sin(3 * x) + self._b * np.sin(5 * x)

    def d1(self, x):
        return 3 * self._a * np.cos(3 * x) + 5 * self._b * np.cos(5 * x)

    def d2(self, x):
        return -9 * self._a * np.sin(3 * x) - 25 * self._b * np.sin(5 * x)

    def d3(self, x):
        return -27 * self._a * np.cos(3 * x) - 125 * self._b * np.cos(5 * x)

    def tilde(self, x):
        """Capped potential used by the modified map: Ψ inside |x| ≤ 0.4,
        linear ramps on the bands 0.4 < |x| < 0.6 and constant ±3Ψ(0.4) beyond."""
        x = np.asarray(x, dtype=float)
        p4 = float(self.psi(_INNER))
        ramp = (10 * x - 3 * np.sign(x)) * p4
        out = np.where(np.abs(x) <= _INNER, self.psi(x), ramp)
        out = np.where(np.abs(x) >= _OUTER, 3 * np.sign(x) * p4, out)
        return out[()] if out.ndim == 0 else out

    def tilde_d1(self, x):
        x = np.asarray(x, dtype=float)
        p4 = float(self.psi(_INNER))
        ax = np.abs(x)
        out = np.where(ax <= _INNER, self.d1(x), np.where(ax < _OUTER, 10 * p4, 0.0))
        return out[()] if out.ndim == 0 else out


def _taper(x):
    """Weight on the σΨ′(x)y kick of the modified map: 1 inside, ramping to 0 at |x|=0.6."""
    return np.clip(1.0 - 5.0 * (np.abs(x) - _INNER), 0.0, 1.0)


def _taper_d1(x):
    ax = np.abs(x)
    return np.where((ax > _INNER) & (ax < _OUTER), -5.0 * np.sign(x), 0.0)


@dataclass(frozen=True)
class MapModel:
    variant: Variant
    mu: float
    sigma: float
    potential: WavePotential = field(default_factory=WavePotential)

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not 0.0 < self.mu < 1.0:
            raise ContractError("mu must lie in (0,1)")
        if not 0.0 < self.sigma < 1.0:
            raise ContractError("sigma must lie in (0,1)")

    @property
    def dimension(self) -> int:
        return self.variant.dimension

    def with_sigma(self, sigma: float) -> "MapModel":
        return replace(self, sigma=float(sigma))

    def __call__(self, s):
        return eval_map(self, s)


def as_state(s, dim: int | None = None) -> np.ndarray:
    """Coerce to a float array of states, rejecting NaN/Inf and wrong widths."""
    arr = np.asarray(s, dtype=float)
    if arr.ndim == 0 or (dim is not None and arr.shape[-1] != dim):
        raise ContractError(f"state must have {dim} coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError("state has non-finite entries")
    return arr


def _check_dim(model: MapModel, s) -> np.ndarray:
    arr = np.asarray(s, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != model.dimension:
        raise ContractError(
            f"{model.variant.value} expects {model.dimension} coordinates, got shape {arr.shape}"
        )
    return arr


def step_arrays(variant: Variant, pot: WavePotential, mu, sigma, x, y, z=None):
    """One iterate on coordinate arrays; ``sigma`` may itself be an array.

    This is the broadcast kernel behind :func:`eval_map` and the batched scans.
    """
    if variant is Variant.MODIFIED:
        nx = x - _taper(x) * sigma * pot.d1(x) * y
        ny = mu * (y + pot.tilde(x))
        return nx, ny, None
    dpsi = pot.d1(x)
    nx = x - sigma * dpsi * y
    ny = mu * (y + pot.psi(x))
    if variant is Variant.GILET:
        return nx, ny, None
    if variant is Variant.DIAGONAL_3D:
        return nx, ny, _Z_DECAY * z
    return nx, ny, _Z_DECAY * z + _Z_COUPLING * np.sin(z + dpsi) ** 2


def eval_map(model: MapModel, s) -> np.ndarray:
    """Forward iterate of ``model`` applied to one state or an ``(n, dim)`` array."""
    arr = _check_dim(model, s)
    z = arr[..., 2] if model.dimension == 3 else None
    nx, ny, nz = step_arrays(model.variant, model.potential, model.mu, model.sigma,
                             arr[..., 0], arr[..., 1], z)
    cols = (nx, ny) if nz is None else (nx, ny, nz)
    return np.stack(cols, axis=-1)


def jacobian_arrays(variant: Variant, pot: WavePotential, mu, sigma, x, y, z=None) -> np.ndarray:
    """Analytic Jacobians stacked on the last two axes (no seam check)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d1 = pot.d1(x)
    d2 = pot.d2(x)
    if variant is Variant.MODIFIED:
        w = _taper(x)
        a = 1.0 - sigma * y * (_taper_d1(x) * d1 + w * d2)
        b = -w * sigma * d1
        c = mu * pot.tilde_d1(x)
    else:
        a = 1.0 - sigma * d2 * y
        b = -sigma * d1
        c = mu * d1
    a, b, c = np.broadcast_arrays(a, b, c)
    dmu = np.broadcast_to(np.asarray(mu, dtype=float), a.shape)
    if variant.dimension == 2:
        J = np.empty(a.shape + (2, 2))
        J[..., 0, 0], J[..., 0, 1] = a, b
        J[..., 1, 0], J[..., 1, 1] = c, dmu
        return J
    J = np.zeros(a.shape + (3, 3))
    J[..., 0, 0], J[..., 0, 1] = a, b
    J[..., 1, 0], J[..., 1, 1] = c, dmu
    if variant is Variant.DIAGONAL_3D:
        J[..., 2, 2] = _Z_DECAY
    else:
        s2 = np.sin(2.0 * (z + d1))
        J[..., 2, 0] = _Z_COUPLING * s2 * d2
        J[..., 2, 2] = _Z_DECAY + _Z_COUPLING * s2
    return J


def jacobian(model: MapModel, s) -> np.ndarray:
    """Analytic derivative of the map at ``s``.

    Raises NonSmoothPointError for the modified map on x ∈ {±0.4, ±0.6};
    offset the point by a small ε if a one-sided derivative is wanted.
    """
    arr = _check_dim(model, s)
    x = arr[..., 0]
    if model.variant is Variant.MODIFIED and np.any(np.isin(x, SEAMS)):
        raise NonSmoothPointError("modified map is not differentiable on |x| in {0.4, 0.6}")
    z = arr[..., 2] if model.dimension == 3 else None
    return jacobian_arrays(model.variant, model.potential, model.mu, model.sigma, x, arr[..., 1], z)


def jacobian_det(model: MapModel, s):
    """Closed-form det F′ for the planar Gilet map: μ[1 − σ(yΨ″ − Ψ′²)]."""
    arr = _check_dim(model, s)
    if model.variant is not Variant.GILET:
        return np.linalg.det(jacobian(model, arr))
    x, y = arr[..., 0], arr[..., 1]
    pot = model.potential
    return model.mu * (1.0 - model.sigma * (y * pot.d2(x) - pot.d1(x) ** 2))


def symmetry_conjugate(s) -> np.ndarray:
    """Reflection S(x, y) = (−π − x, y) about the invariant line x = −π/2."""
    arr = np.array(s, dtype=float)
    arr[..., 0] = -math.pi - arr[..., 0]
    return arr
