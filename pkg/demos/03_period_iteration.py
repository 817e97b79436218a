"""
How fast does the transient die out?
====================================

Starting from rest, the limit output y* is not yet periodic. Over one
period the map from y(0) to y(T) is affine with slope exp(-sigma0 V / g0),
V being the total variation per period, so the distance to the periodic
output y° shrinks by that factor every period.
"""

import math

from lugreloops.lab import period_iteration, scenario

s = scenario("Example3")
V = s.signal.total_variation
target = math.exp(-s.params.sigma0 * V / s.params.g0)
dist = period_iteration(s.params, s.signal, K=6)

print(f"expected ratio exp(-{s.params.sigma0 * V / s.params.g0:.2f}) = {target:.6f}")
prev = None
for k, d in dist:
    ratio = "" if prev is None else f"   ratio {d / prev:.6f}"
    print(f"  k = {k}   sup |y*_k - y°| = {d:.3e}{ratio}")
    prev = d
