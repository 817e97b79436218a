"""
From a bimodal input to its hysteresis loop
===========================================

A bimodal input rises to a first maximum, dips to a second minimum, climbs
to a higher maximum and returns. The slow-input loop only depends on the
extrema, so we start by reparametrizing the input by its total variation.
"""

import numpy as np

from lugreloops.lab import scenario
from lugreloops.loops import extract_minor_loop, loop_closed_form
from lugreloops.signal import normalize

# the worked bimodal example: extrema 0, 1, 0.2, 1.5 and Stribeck damping
s = scenario("Example3")
n = normalize(s.signal)
print("breakpoints rho1..rho4:", n.rho[1:])
print("rho5 (return to the first maximum):", n.rho5)

# the limit cycle in closed form; y at each breakpoint
curve = loop_closed_form(s.params, n)
for r, y in zip(n.rho, curve.y_breakpoints):
    print(f"  rho = {r:4.1f}   psi = {n(r):4.2f}   y = {y:+.6f}")

# the loop is traversed clockwise, so the dissipated energy is -area
print(f"major loop energy per cycle: {curve.energy():.6f}")

# the minor loop lives on [rho1, rho5]; it need not close exactly in y
m = extract_minor_loop(curve)
print("minor loop psi span:", m.psi_span, " rho span:", m.rho_span)
print(f"closure gap {m.closure_gap:.5f}, energy {-m.area:.6f}")

# sanity check against the slope law: dy/drho = sigma0 psi' - (sigma0/g0) y
r = np.linspace(0.05, 4.55, 10)
h = 1e-6
fd = (curve(r + h) - curve(r - h)) / (2 * h)
print("max slope-law residual:", float(np.max(np.abs(fd - curve.derivative(r)))))
