"""Command-line entry point: ``dropletbif <subcommand> [options]``.

Exit codes: 0 ok, 2 invalid configuration, 3 scan events left unresolved, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io as dio
from .fixedpoints import Classification, enumerate_fixed_points, find_zeros, solve_z_fixed
from .kernels import ContractError, MapModel, Variant, WavePotential
from .manifold import grow_unstable, seed_fundamental_domain
from .scan import DEFAULT_RANGES, ScanConfig, cell_setup, detect_events, lyapunov_spectrum, run_orbit
from .slices import boundary_points, make_slice
from .svg import Style, render_svg

EXIT_OK, EXIT_CONFIG, EXIT_UNRESOLVED, EXIT_IO = 0, 2, 3, 4
OUT_ENV = "DROPLETBIF_OUT"
SUBCOMMANDS = ("fixed-points", "orbit", "manifold", "slice", "lyapunov", "scan", "render")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    map: str = "gilet"
    mu: Optional[float] = None
    beta: float = math.pi / 3
    sigma: Optional[float] = None
    sigma_range: Optional[tuple] = None
    resolution: float = 1e-3
    window: Optional[tuple] = None
    alpha: float = 0.05
    beta_margin: float = 0.3
    x0: Optional[tuple] = None
    transient: int = 10_000
    keep: int = 10_000
    n: int = 20_000
    saddle_x: Optional[float] = None
    branch: str = "left"
    side: Optional[str] = None
    nu: float = 1e-4
    spacing_max: float = 1e-3
    generations: int = 40
    cap: Optional[int] = None
    workers: int = 1
    seed: int = 0
    seed_count: int = 1
    cell: str = "left"
    out: Optional[str] = None
    emit: tuple = ("json", "csv")
    spill_csv: bool = False
    samples: tuple = ()
    polylines: tuple = ()
    boundaries: tuple = ()
    stable_lines: tuple = ()
    name: str = "figure.svg"
    title: str = ""

    def validate(self, command: str) -> "RunConfig":
        try:
            variant = Variant(self.map)
        except ValueError:
            raise ConfigError(f"map must be one of {[v.value for v in Variant]}") from None
        if self.mu is not None and not 0.0 < self.mu < 1.0:
            raise ConfigError("mu must lie in (0,1)")
        if self.sigma is not None and not 0.0 < self.sigma < 1.0:
            raise ConfigError("sigma must lie in (0,1)")
        if self.sigma_range is not None:
            lo, hi = self.sigma_range
            if not 0.0 < lo < hi < 1.0:
                raise ConfigError("sigma_range must satisfy 0 < low < high < 1")
        if self.resolution < 1e-5:
            raise ConfigError("resolution must be at least 1e-5")
        for key in ("transient", "keep"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be nonnegative")
        if self.n < 1000:
            raise ConfigError("n must be at least 1000")
        for key in ("nu", "spacing_max"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive")
        if self.generations < 1:
            raise ConfigError("generations must be positive")
        if self.cap is not None and self.cap < 100:
            raise ConfigError("cap must be at least 100")
        if self.workers < 1 or self.seed_count < 1:
            raise ConfigError("workers and seed_count must be at least 1")
        if self.alpha < 0 or self.beta_margin < 0:
            raise ConfigError("alpha and beta_margin must be nonnegative")
        if self.branch not in ("left", "right") or self.cell not in ("left", "right"):
            raise ConfigError("branch and cell must be 'left' or 'right'")
        if self.side is not None and self.side not in ("left", "right"):
            raise ConfigError("side must be 'left' or 'right'")
        bad = [e for e in self.emit if e not in ("json", "csv", "svg")]
        if bad:
            raise ConfigError(f"emit accepts json, csv, svg (got {bad})")
        if self.x0 is not None and len(self.x0) != variant.dimension:
            raise ConfigError(f"x0 must have {variant.dimension} coordinates for {variant.value}")
        if "/" in self.name or "\\" in self.name or self.name in ("", ".", ".."):
            raise ConfigError("name must be a plain file name")
        needs_sigma = command in ("fixed-points", "orbit", "manifold", "slice", "lyapunov")
        if needs_sigma and self.sigma is None:
            raise ConfigError("sigma is required for this command")
        if command in ("manifold", "slice", "scan") and variant.dimension != 2:
            raise ConfigError(f"{command} supports planar maps only (map)")
        return self

    @property
    def variant(self) -> Variant:
        return Variant(self.map)

    @property
    def mu_value(self) -> float:
        if self.mu is not None:
            return self.mu
        return DEFAULT_RANGES.get(self.variant, (0.5,))[0]

    def model(self) -> MapModel:
        return MapModel(self.variant, self.mu_value, self.sigma, WavePotential(self.beta))

    def out_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUT_ENV, "."))


# --- parsing ------------------------------------------------------------------

def _pair(text: str) -> tuple:
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ValueError(f"expected a:b, got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _vector(text: str) -> tuple:
    return tuple(float(v) for v in str(text).split(","))


def _emit(text: str) -> tuple:
    return tuple(e.strip() for e in str(text).split(",") if e.strip())


def _paths(text: str) -> tuple:
    return tuple(p for p in str(text).split(",") if p)


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in str(text).split(",") if v)


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


_CONVERTERS = {
    "map": str, "mu": float, "beta": float, "sigma": float, "sigma_range": _pair,
    "resolution": float, "window": _pair, "alpha": float, "beta_margin": float, "x0": _vector,
    "transient": int, "keep": int, "n": int, "saddle_x": float, "branch": str, "side": str,
    "nu": float, "spacing_max": float, "generations": int, "cap": int, "workers": int,
    "seed": int, "seed_count": int, "cell": str, "out": str, "emit": _emit, "spill_csv": _bool,
    "samples": _paths, "polylines": _paths, "boundaries": _paths, "stable_lines": _floats,
    "name": str, "title": str,
}
assert set(_CONVERTERS) == {f.name for f in fields(RunConfig)}

# options that take a value which may itself start with '-' (e.g. --window -2:-1)
_VALUE_OPTS = {"--" + k.replace("_", "-") for k in _CONVERTERS if _CONVERTERS[k] is not _bool}


def read_config_file(path) -> dict:
    """key=value lines; '#' starts a comment; keys may use '-' or '_'."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _convert(key, value)
    return out


def _convert(key: str, value):
    try:
        return _CONVERTERS[key](value)
    except ValueError as exc:
        raise ConfigError(f"invalid value for {key}: {exc}") from None


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dropletbif", description="Bifurcation analysis of the Gilet map family.")
    sub = p.add_subparsers(dest="command", required=True)
    for cmd in SUBCOMMANDS:
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", help="key=value file; command-line flags take precedence")
        for key, conv in _CONVERTERS.items():
            flag = "--" + key.replace("_", "-")
            if conv is _bool:
                sp.add_argument(flag, dest=key, action="store_const", const="true", default=None)
            else:
                sp.add_argument(flag, dest=key, default=None)
    return p


def _join_negative_values(argv: Sequence[str]) -> list[str]:
    out, i = [], 0
    argv = list(argv)
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_OPTS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and not argv[i + 1].startswith("--"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def parse_config(argv: Sequence[str]) -> tuple[str, RunConfig]:
    ns = _build_parser().parse_args(_join_negative_values(argv))
    values = {}
    if ns.config:
        values.update(read_config_file(ns.config))
    for key in _CONVERTERS:
        v = getattr(ns, key)
        if v is not None:
            values[key] = _convert(key, v)
    cfg = RunConfig(**values)
    return ns.command, cfg.validate(ns.command)


# --- commands -------------------------------------------------------------------

def _default_start(cfg: RunConfig) -> np.ndarray:
    if cfg.x0 is not None:
        return np.array(cfg.x0, dtype=float)
    variant = cfg.variant
    if variant.dimension == 2:
        setup = cell_setup(variant, cfg.mu_value, cfg.beta, _scan_config(cfg))
        step = 1e-3 if setup.saddle_x > setup.center[0] else -1e-3
        return np.array(setup.center) + np.array([step, 0.0])
    pot = WavePotential(cfg.beta)
    xm = find_zeros(pot, (-math.pi / 2 - 0.5, -math.pi / 2))[-1]
    z = solve_z_fixed(pot, xm) if variant is Variant.COUPLED_3D else 0.0
    return np.array([xm + 1e-3, 0.0, z])


def _scan_config(cfg: RunConfig, scan: bool = False) -> ScanConfig:
    cap = cfg.cap if cfg.cap is not None else (ScanConfig.cap_points if scan else 2_000_000)
    return ScanConfig(
        n_transient=cfg.transient, n_keep=max(cfg.keep, 100), generations=cfg.generations, nu=cfg.nu,
        spacing_max=cfg.spacing_max, cap_points=cap, alpha=cfg.alpha, beta_margin=cfg.beta_margin,
        seed=cfg.seed, seed_count=cfg.seed_count, workers=cfg.workers, cell=cfg.cell,
    )


def _table(rows: list[list[str]]) -> str:
    if not rows:
        return ""
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows)


def cmd_fixed_points(cfg: RunConfig, out: Path) -> int:
    model = cfg.model()
    window = cfg.window if cfg.window is not None else (-math.pi, math.pi)
    recs = enumerate_fixed_points(model, window)
    dim = model.dimension
    dio.write_fixed_points(recs, out / "fixed_points.json" if "json" in cfg.emit else None,
                           out / "fixed_points.csv" if "csv" in cfg.emit else None, dim)
    header = ["x", "y", "z"][:dim] + ["type", "|lambda|"]
    rows = [header] + [[f"{v:.10f}" for v in r.location] + [r.classification.value,
                       ",".join(f"{abs(l):.6f}" for l in r.eigenvalues)] for r in recs]
    if recs:
        print(_table(rows))
    return EXIT_OK


def cmd_orbit(cfg: RunConfig, out: Path) -> int:
    model = cfg.model()
    diag = run_orbit(model, _default_start(cfg), cfg.transient, cfg.keep)
    if "csv" in cfg.emit:
        dio.write_orbit_csv(diag.attractor_sample, out / "orbit.csv")
    print(f"points={len(diag.attractor_sample)} escaped={diag.escaped}")
    for i, (a, b) in enumerate(diag.bounding_box):
        print(f"{'xyz'[i]}: [{a:.6f}, {b:.6f}]")
    return EXIT_OK


def _resolve_saddle(cfg: RunConfig, model: MapModel):
    if cfg.saddle_x is not None:
        x_hat = cfg.saddle_x
    else:
        x_hat = cell_setup(cfg.variant, cfg.mu_value, cfg.beta, _scan_config(cfg)).saddle_x
    recs = enumerate_fixed_points(model, (x_hat - 1e-3, x_hat + 1e-3))
    sad = [r for r in recs if r.classification is Classification.SADDLE]
    if not sad:
        raise ConfigError(f"saddle_x: no saddle near x = {x_hat}")
    return min(sad, key=lambda r: abs(r.x - x_hat))


def cmd_manifold(cfg: RunConfig, out: Path) -> int:
    model = cfg.model()
    saddle = _resolve_saddle(cfg, model)
    seed = seed_fundamental_domain(model, saddle, cfg.branch, cfg.nu)
    poly = grow_unstable(model, seed, cfg.generations, cfg.spacing_max,
                         cfg.cap if cfg.cap is not None else 2_000_000)
    if "csv" in cfg.emit:
        dio.write_manifold_csv(poly, out / "manifold.csv")
    print(f"saddle=({saddle.x:.10f}, {saddle.y:.10f}) points={len(poly)} generations={poly.generations} "
          f"truncated={poly.truncated} escaped={poly.escaped}")
    return EXIT_OK


def cmd_slice(cfg: RunConfig, out: Path) -> int:
    model = cfg.model()
    saddle = _resolve_saddle(cfg, model)
    side = cfg.side or cfg.branch
    region = make_slice(model, saddle.x, side)
    pts = boundary_points(model, region, 1.0)
    if "csv" in cfg.emit:
        dio.write_boundary_csv(pts, out / "slice_boundary.csv")
    print(f"x_hat={region.x_hat:.10f} side={region.side} cusp_y={region.cusp_y:.10f} "
          f"width={region.width:.10f} opens={'up' if region.above else 'down'}")
    return EXIT_OK


def cmd_lyapunov(cfg: RunConfig, out: Path) -> int:
    model = cfg.model()
    spec = lyapunov_spectrum(model, _default_start(cfg), cfg.n)
    if spec is None:
        print("orbit escaped: spectrum invalid")
    else:
        print(" ".join(f"{v:.8f}" for v in spec))
    return EXIT_OK


def cmd_scan(cfg: RunConfig, out: Path) -> int:
    variant = cfg.variant
    sc = _scan_config(cfg, scan=True)
    spill = None
    if cfg.spill_csv:
        spill = lambda s, sample: dio.write_orbit_csv(sample, out / dio.spill_name(s))
    result = detect_events(variant, cfg.mu, cfg.sigma_range, cfg.resolution, sc, cfg.beta, spill)
    if "json" in cfg.emit:
        dio.write_scan(result, out / "scan.json")
    if "svg" in cfg.emit:
        (out / "scan.svg").write_text(_scan_strip(result))
    rows = [["kind", "sigma_low", "sigma_high", "unresolved"]]
    rows += [[e.kind, f"{e.sigma_low:.7f}", f"{e.sigma_high:.7f}", str(e.unresolved)] for e in result.events]
    print(_table(rows))
    return EXIT_UNRESOLVED if result.unresolved else EXIT_OK


def _scan_strip(result) -> str:
    pts = [(d.sigma, d.lyapunov[0]) for d in result.diagnostics if d.lyapunov]
    marks = sorted({e.sigma_low for e in result.events if e.kind != "interstitial-tangency"})
    return render_svg(polylines=[pts] if pts else [], stable_lines=marks,
                      style=Style(title=f"largest Lyapunov exponent vs sigma ({result.map})"))


def cmd_render(cfg: RunConfig, out: Path) -> int:
    groups = {}
    for key in ("samples", "polylines", "boundaries"):
        arrs = []
        for p in getattr(cfg, key):
            if not Path(p).is_file():
                raise FileNotFoundError(f"missing input file: {p}")
            arrs.append(dio.read_points_csv(p))
        groups[key] = arrs
    svg = render_svg(groups["samples"], groups["polylines"], groups["boundaries"],
                     list(cfg.stable_lines), Style(title=cfg.title))
    (out / cfg.name).write_text(svg)
    print(f"wrote {out / cfg.name}")
    return EXIT_OK


_COMMANDS = {
    "fixed-points": cmd_fixed_points, "orbit": cmd_orbit, "manifold": cmd_manifold,
    "slice": cmd_slice, "lyapunov": cmd_lyapunov, "scan": cmd_scan, "render": cmd_render,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        command, cfg = parse_config(argv)
    except (ConfigError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SystemExit as exc:  # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    out = cfg.out_dir()
    try:
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[command](cfg, out)
    except (ConfigError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
