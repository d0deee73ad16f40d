"""Walk through the fixed-point structure of the Gilet map and its flip slices.

Run:  python3 demos/01_cells_and_slices.py [outdir]

Prints the saddle on x = -pi/2 and the two foci beside it, the Neimark-Sacker
threshold of each focus, and the cusp of the slice on either side of the
saddle's stable line. Writes cells.svg with a post-threshold orbit in each cell,
the slice boundaries and the stable line.
"""
import math
import sys
from pathlib import Path

import numpy as np

from dropletbif import MapModel, Variant, enumerate_fixed_points, make_slice, ns_threshold, run_orbit
from dropletbif.slices import boundary_points
from dropletbif.svg import Style, render_svg

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)

mu, sigma = 0.5, 0.42
model = MapModel(Variant.GILET, mu, sigma)

print(f"Fixed points of the Gilet map, mu={mu}, sigma={sigma}, x in [-2, -1.1]:")
recs = enumerate_fixed_points(model, (-2.0, -1.1))
for r in recs:
    mods = ", ".join(f"{abs(l):.4f}" for l in r.eigenvalues)
    print(f"  ({r.x:+.6f}, {r.y:+.6f})  {r.classification.value:<13} |lambda| = {mods}")

saddle = next(r for r in recs if r.classification.value == "saddle")
foci = [r for r in recs if r.family == "zero"]

# each focus loses stability where its complex pair reaches the unit circle
for f in foci:
    print(f"  focus at x={f.x:+.6f}: sigma_NS = {ns_threshold(model, f.x):.8f}")

# the stable line x = x_hat carries a slice on each side; points in a slice jump across
boundaries = []
for side in ("left", "right"):
    reg = make_slice(model, saddle.x, side)
    print(f"  {side} slice: cusp at y={reg.cusp_y:.6f}, width {reg.width:.4f}, "
          f"opens {'up' if reg.above else 'down'}")
    bp = boundary_points(model, reg, 0.6)
    curve = bp[bp[:, 0] != reg.x_hat]
    boundaries.append(curve[np.argsort(curve[:, 0])])

# past sigma_NS each focus is surrounded by an invariant circle; the two are mirror images
samples = []
for f in foci:
    d = run_orbit(model, [f.x + 0.01, 0.0], 20_000, 4000, center=(f.x, 0.0))
    samples.append(d.attractor_sample)
    print(f"  orbit around x={f.x:+.4f}: rotation number {d.rotation_number:+.5f}, "
          f"radial spread {d.radial_spread:.4f}")

svg = render_svg(samples, boundaries=boundaries, stable_lines=[saddle.x],
                 style=Style(title=f"Gilet cells, mu={mu}, sigma={sigma}"),
                 bounds=(-2.1, -1.05, -0.5, 0.5))
(out / "cells.svg").write_text(svg)
print(f"wrote {out / 'cells.svg'}")
