"""
Minor loops under different parameters
======================================

The minor loop keeps its psi-span when sigma0 changes, but its thickness
depends strongly on sigma0 / g(0). Changing the dip depth umin2 changes
the span itself.
"""

import tempfile
from pathlib import Path

from lugreloops.lab import scenario
from lugreloops.loops import extract_minor_loop, loop_closed_form, trapezoid_area
from lugreloops.signal import build_bimodal, normalize

s = scenario("Example4")
cases = {"sigma0 = 6, umin2 = 0.5": (s.params, s.spec)}
cases.update({
    "sigma0 = 1, umin2 = 0.5": s.variants["sigma0_1"],
    "sigma0 = 1, umin2 = 0.2": s.variants["sigma0_1_umin2_0.2"],
})

out = Path(tempfile.mkdtemp(prefix="minor_loops_"))
for i, (name, (p, spec)) in enumerate(cases.items()):
    m = extract_minor_loop(loop_closed_form(p, normalize(build_bimodal(spec))))
    # two independent area sums over the same polyline
    print(f"{name}:  psi span {m.psi_span}  thickness {m.y.max() - m.y.min():.4f}  "
          f"area {m.area:+.6f} (trapezoid {trapezoid_area(m.psi, m.y):+.6f})  "
          f"closure gap {m.closure_gap:.4f}")
    m.to_csv(out / f"minor_loop_{i}.csv")

print("CSV files written to", out)
