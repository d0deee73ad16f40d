"""Watch the left unstable branch of the saddle fold into its own slice.

Run:  python3 demos/02_tangency_onset.py [outdir]

For sigma just below and just above the first homoclinic tangency the branch is
traced for 40 generations. Below, no point of the branch lies in the slice and
the branch never meets x = -pi/2. Above, the fold pokes through: the number of
excursions into the slice jumps from zero and the crossings with the stable line
appear in pairs, as they must when a fold passes through a line.
"""
import math
import sys
from pathlib import Path

from dropletbif import MapModel, Variant, crossings_with_line, enumerate_fixed_points, in_slice, make_slice
from dropletbif.io import write_manifold_csv
from dropletbif.manifold import excursion_count, trace_branch
from dropletbif.svg import Style, render_svg

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)

x_hat = -math.pi / 2
polys = []
for sigma in (0.5030, 0.5037, 0.50376, 0.5038):
    model = MapModel(Variant.GILET, 0.5, sigma)
    saddle = enumerate_fixed_points(model, (x_hat - 1e-3, x_hat + 1e-3))[0]
    poly = trace_branch(model, saddle, "left", 40, cap_points=400_000)
    reg = make_slice(model, x_hat, "left")
    flips = excursion_count(in_slice(model, reg, poly.points))
    cross = len(crossings_with_line(poly, x_hat))
    print(f"sigma={sigma:.5f}: {len(poly):6d} points, arclength {poly.arclengths[-1]:8.2f}, "
          f"excursions {flips:3d}, line crossings {cross:4d}, truncated={poly.truncated}")
    polys.append((sigma, poly))

sigma, poly = polys[-1]
write_manifold_csv(poly, out / "branch.csv")
svg = render_svg(polylines=[poly.points], stable_lines=[x_hat],
                 style=Style(title=f"left unstable branch, sigma={sigma}"),
                 bounds=(-2.1, -1.0, -0.45, 0.45))
(out / "branch.svg").write_text(svg)
print(f"wrote {out / 'branch.csv'} and {out / 'branch.svg'}")
